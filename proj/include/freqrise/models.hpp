#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "freqrise/transforms.hpp"

namespace freqrise {

struct ModelOutput {
  std::vector<double> logits;
  std::vector<double> probabilities;
};

// Numerically stable softmax (max-shifted).
std::vector<double> softmax(std::span<const double> logits);

// Row-major batch of equal-length signals.
struct SignalBatch {
  std::span<const double> data;
  std::size_t rows = 0;
  std::size_t length = 0;

  std::span<const double> row(std::size_t i) const { return data.subspan(i * length, length); }
};

// A classifier queried only through its outputs.
class Model {
 public:
  virtual ~Model() = default;

  // Required signal length, or 0 when any length is accepted.
  virtual std::size_t input_length() const = 0;
  // Number of classes, or 0 while still unknown (external endpoints).
  virtual std::size_t num_classes() const = 0;
  // Whether logits() may be called from several threads at once.
  virtual bool concurrent_safe() const { return true; }

  // rows x C logits, row-major.
  virtual std::vector<double> logits(const SignalBatch& batch) const = 0;

  std::vector<ModelOutput> predict(const SignalBatch& batch) const;
  ModelOutput predict(const TimeSeries& x) const;

 protected:
  void check_length(const SignalBatch& batch) const;
};

// Analytic detector for the synthetic frequency task. Evidence for target bin
// k is e_k = (|X_k| - threshold) / scale; the logit of class c sums +e_k over
// the targets in c and -e_k over the rest. Class bits follow target order.
class OracleModel final : public Model {
 public:
  // Defaults: threshold T/4, scale T/8.
  OracleModel(std::size_t length, std::vector<std::size_t> target_bins);
  OracleModel(std::size_t length, std::vector<std::size_t> target_bins, double threshold, double scale);

  std::size_t input_length() const override { return length_; }
  std::size_t num_classes() const override { return std::size_t{1} << targets_.size(); }
  std::vector<double> logits(const SignalBatch& batch) const override;

  const std::vector<std::size_t>& target_bins() const noexcept { return targets_; }
  double threshold() const noexcept { return threshold_; }
  double scale() const noexcept { return scale_; }

  // Per-target evidence e_k for one signal.
  std::vector<double> evidence(std::span<const double> x) const;

 private:
  std::size_t length_;
  std::vector<std::size_t> targets_;
  double threshold_;
  double scale_;
  std::vector<double> cos_table_;  // targets x length
  std::vector<double> sin_table_;
};

}  // namespace freqrise
