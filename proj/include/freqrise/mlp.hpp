#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "freqrise/models.hpp"

namespace freqrise {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct DenseLayer {
  RowMatrix weights;  // outputs x inputs
  Eigen::VectorXd bias;
};

// Fully connected ReLU network. Each input row is standardized to zero mean
// and unit variance before the first layer; the last layer emits logits.
class MlpModel final : public Model {
 public:
  explicit MlpModel(std::vector<DenseLayer> layers);

  // widths = {input, hidden..., classes}; uniform(+-1/sqrt(fan_in)) init.
  static MlpModel initialized(const std::vector<std::size_t>& widths, std::uint64_t seed);

  std::size_t input_length() const override { return static_cast<std::size_t>(layers_.front().weights.cols()); }
  std::size_t num_classes() const override { return static_cast<std::size_t>(layers_.back().weights.rows()); }
  std::vector<double> logits(const SignalBatch& batch) const override;

  std::vector<std::size_t> widths() const;
  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
  std::vector<DenseLayer>& layers() noexcept { return layers_; }

  // Flattened parameters, layer by layer: weights (row-major) then bias.
  std::size_t parameter_count() const;
  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> values);

  void save(const std::filesystem::path& path) const;
  static MlpModel load(const std::filesystem::path& path);

 private:
  std::vector<DenseLayer> layers_;
};

// Per-row standardization used by the MLP input stage.
RowMatrix standardize_rows(const SignalBatch& batch);

struct LabeledBatch {
  SignalBatch signals;
  std::span<const std::uint16_t> labels;
};

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 128;
  std::size_t epochs = 20;
  std::uint64_t seed = 0;
  std::vector<std::size_t> hidden = {64, 64, 64};
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

void validate(const TrainConfig& cfg);

struct TrainResult {
  MlpModel model;
  std::vector<double> epoch_loss;
  double train_accuracy = 0.0;
  std::optional<double> test_accuracy;
};

// Adam on mean cross-entropy with seed-controlled shuffling. Throws
// TrainingDiverged when the loss becomes non-finite.
TrainResult train_mlp(const LabeledBatch& train, std::size_t classes, const TrainConfig& cfg,
                      const LabeledBatch* test = nullptr);

struct LossAndGradient {
  double loss = 0.0;
  std::vector<double> gradient;  // same layout as MlpModel::parameters()
};

// Mean cross-entropy over the batch and its gradient by backpropagation.
LossAndGradient loss_and_gradient(const MlpModel& model, const LabeledBatch& batch);

// Fraction of rows whose argmax logit equals the label.
double accuracy(const Model& model, const LabeledBatch& batch, std::size_t chunk = 1024);

}  // namespace freqrise
