// Small black boxes with known behaviour for estimator tests.
#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "freqrise/models.hpp"
#include "oracles.hpp"

namespace testing_support {

// Signal of length T whose one-sided bins all have magnitude in [1, 2].
inline std::vector<double> full_band_signal(std::size_t length, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> mag(1.0, 2.0), phase(0.0, 2.0 * std::numbers::pi);
  std::vector<oracle::cplx> half(length / 2 + 1);
  for (std::size_t k = 0; k < half.size(); ++k) {
    const bool real_only = k == 0 || (length % 2 == 0 && k == length / 2);
    half[k] = real_only ? oracle::cplx(mag(rng), 0.0) : std::polar(mag(rng), phase(rng));
  }
  return oracle::idft_onesided(half, length);
}

// Recovers which one-sided bins of a reference signal survived masking and
// returns a fixed random logit row per surviving-bin pattern.
class TableModel final : public freqrise::Model {
 public:
  TableModel(std::vector<double> reference, std::size_t classes, std::uint64_t seed)
      : reference_(oracle::dft_onesided(reference)), length_(reference.size()), classes_(classes) {
    for (std::size_t k = 0; k < reference_.size(); ++k)
      for (std::size_t t = 0; t < length_; ++t)
        twiddle_.push_back(std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>((k * t) % length_) /
                                               static_cast<double>(length_)));
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, 1.5);
    table_.resize((std::size_t{1} << reference_.size()) * classes_);
    for (double& v : table_) v = dist(rng);
  }

  std::size_t input_length() const override { return length_; }
  std::size_t num_classes() const override { return classes_; }

  std::size_t pattern(std::span<const double> x) const {
    std::size_t bits = 0;
    for (std::size_t k = 0; k < reference_.size(); ++k) {
      oracle::cplx c = 0;
      for (std::size_t t = 0; t < length_; ++t) c += x[t] * twiddle_[k * length_ + t];
      if (std::abs(c) > 0.5 * std::abs(reference_[k])) bits |= std::size_t{1} << k;
    }
    return bits;
  }

  std::vector<double> row(std::size_t bits) const {
    return {table_.begin() + static_cast<std::ptrdiff_t>(bits * classes_),
            table_.begin() + static_cast<std::ptrdiff_t>((bits + 1) * classes_)};
  }

  std::vector<double> logits(const freqrise::SignalBatch& batch) const override {
    check_length(batch);
    std::vector<double> out;
    for (std::size_t i = 0; i < batch.rows; ++i) {
      const auto r = row(pattern(batch.row(i)));
      out.insert(out.end(), r.begin(), r.end());
    }
    return out;
  }

  // E[softmax(table[M])_c | M(l) = 1] under i.i.d. Bernoulli(p) bins.
  std::vector<double> conditional_expectation(std::size_t c, double p) const {
    const std::size_t d = reference_.size();
    std::vector<double> r(d, 0.0);
    for (std::size_t bits = 0; bits < (std::size_t{1} << d); ++bits) {
      double prob = 1.0;
      for (std::size_t k = 0; k < d; ++k) prob *= (bits >> k) & 1U ? p : 1.0 - p;
      const double y = oracle::softmax(row(bits))[c];
      for (std::size_t k = 0; k < d; ++k)
        if ((bits >> k) & 1U) r[k] += y * prob;
    }
    for (double& v : r) v /= p;
    return r;
  }

 private:
  std::vector<oracle::cplx> reference_;
  std::size_t length_;
  std::size_t classes_;
  std::vector<double> table_;
  std::vector<oracle::cplx> twiddle_;
};

// Ignores its input.
class ConstantModel final : public freqrise::Model {
 public:
  explicit ConstantModel(std::vector<double> logits) : logits_(std::move(logits)) {}
  std::size_t input_length() const override { return 0; }
  std::size_t num_classes() const override { return logits_.size(); }
  std::vector<double> logits(const freqrise::SignalBatch& batch) const override {
    std::vector<double> out;
    for (std::size_t i = 0; i < batch.rows; ++i) out.insert(out.end(), logits_.begin(), logits_.end());
    return out;
  }

 private:
  std::vector<double> logits_;
};

}  // namespace testing_support
