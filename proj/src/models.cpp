#include "freqrise/models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "freqrise/error.hpp"

namespace freqrise {

std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) return {};
  const double peak = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - peak);
    total += out[i];
  }
  for (double& v : out) v /= total;
  return out;
}

void Model::check_length(const SignalBatch& batch) const {
  if (batch.data.size() != batch.rows * batch.length) throw ShapeError("signal batch data size mismatch");
  const std::size_t expected = input_length();
  if (expected != 0 && batch.length != expected)
    throw ShapeError("model expects signals of length " + std::to_string(expected) + ", got " +
                     std::to_string(batch.length));
}

std::vector<ModelOutput> Model::predict(const SignalBatch& batch) const {
  auto z = logits(batch);
  if (batch.rows == 0) return {};
  const std::size_t classes = z.size() / batch.rows;
  std::vector<ModelOutput> out(batch.rows);
  for (std::size_t i = 0; i < batch.rows; ++i) {
    out[i].logits.assign(z.begin() + i * classes, z.begin() + (i + 1) * classes);
    out[i].probabilities = softmax(out[i].logits);
  }
  return out;
}

ModelOutput Model::predict(const TimeSeries& x) const {
  return predict(SignalBatch{x.samples, 1, x.size()}).front();
}

OracleModel::OracleModel(std::size_t length, std::vector<std::size_t> target_bins)
    : OracleModel(length, std::move(target_bins), static_cast<double>(length) / 4.0,
                  static_cast<double>(length) / 8.0) {}

OracleModel::OracleModel(std::size_t length, std::vector<std::size_t> target_bins, double threshold, double scale)
    : length_(length), targets_(std::move(target_bins)), threshold_(threshold), scale_(scale) {
  if (length_ < 2) throw InvalidArgument("oracle signal length must be at least 2");
  if (targets_.empty() || targets_.size() > 16) throw InvalidArgument("oracle needs 1..16 target bins");
  if (!(scale_ > 0.0)) throw InvalidArgument("oracle scale must be positive");
  auto sorted = targets_;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw InvalidArgument("oracle target bins must be distinct");
  if (sorted.back() >= onesided_bins(length_)) throw InvalidArgument("oracle target bin beyond the one-sided range");

  cos_table_.resize(targets_.size() * length_);
  sin_table_.resize(targets_.size() * length_);
  for (std::size_t j = 0; j < targets_.size(); ++j) {
    for (std::size_t t = 0; t < length_; ++t) {
      const std::size_t phase = (targets_[j] * t) % length_;
      const double angle = 2.0 * std::numbers::pi * static_cast<double>(phase) / static_cast<double>(length_);
      cos_table_[j * length_ + t] = std::cos(angle);
      sin_table_[j * length_ + t] = std::sin(angle);
    }
  }
}

std::vector<double> OracleModel::evidence(std::span<const double> x) const {
  if (x.size() != length_) throw ShapeError("oracle expects signals of length " + std::to_string(length_));
  std::vector<double> e(targets_.size());
  for (std::size_t j = 0; j < targets_.size(); ++j) {
    const double* c = cos_table_.data() + j * length_;
    const double* s = sin_table_.data() + j * length_;
    double re = 0.0;
    double im = 0.0;
    for (std::size_t t = 0; t < length_; ++t) {
      re += x[t] * c[t];
      im += x[t] * s[t];
    }
    e[j] = (std::hypot(re, im) - threshold_) / scale_;
  }
  return e;
}

std::vector<double> OracleModel::logits(const SignalBatch& batch) const {
  check_length(batch);
  const std::size_t classes = num_classes();
  std::vector<double> out(batch.rows * classes);
  for (std::size_t i = 0; i < batch.rows; ++i) {
    const auto e = evidence(batch.row(i));
    for (std::size_t c = 0; c < classes; ++c) {
      double z = 0.0;
      for (std::size_t j = 0; j < e.size(); ++j) z += ((c >> j) & 1U) ? e[j] : -e[j];
      out[i * classes + c] = z;
    }
  }
  return out;
}

}  // namespace freqrise
