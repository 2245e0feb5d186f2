#include "freqrise/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <string>

#include "binary_io.hpp"
#include "freqrise/error.hpp"
#include "freqrise/rng.hpp"

namespace freqrise {
namespace {

constexpr char kModelMagic[8] = {'F', 'R', 'Q', 'M', 'L', 'P', '\0', '\0'};
constexpr std::uint32_t kModelVersion = 1;
constexpr double kStdFloor = 1e-12;

struct Activations {
  std::vector<RowMatrix> inputs;  // input of every layer (post-activation of the previous)
  std::vector<RowMatrix> pre;     // pre-activation of every layer
};

Activations forward_cached(const std::vector<DenseLayer>& layers, RowMatrix x) {
  Activations acts;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    RowMatrix z = x * layers[l].weights.transpose();
    z.rowwise() += layers[l].bias.transpose();
    acts.inputs.push_back(std::move(x));
    if (l + 1 < layers.size()) {
      x = z.cwiseMax(0.0);
    }
    acts.pre.push_back(std::move(z));
  }
  return acts;
}

RowMatrix forward(const std::vector<DenseLayer>& layers, RowMatrix x) {
  for (std::size_t l = 0; l < layers.size(); ++l) {
    RowMatrix z = x * layers[l].weights.transpose();
    z.rowwise() += layers[l].bias.transpose();
    x = l + 1 < layers.size() ? RowMatrix(z.cwiseMax(0.0)) : std::move(z);
  }
  return x;
}

// Softmax rows minus one-hot labels, and the summed cross-entropy.
double softmax_residual(RowMatrix& logits, std::span<const std::uint16_t> labels) {
  double loss = 0.0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    auto row = logits.row(i);
    const double peak = row.maxCoeff();
    row.array() -= peak;
    const double log_total = std::log(row.array().exp().sum());
    loss -= row(labels[static_cast<std::size_t>(i)]) - log_total;
    row = (row.array() - log_total).exp().matrix();
    row(labels[static_cast<std::size_t>(i)]) -= 1.0;
  }
  return loss;
}

// Gradients of the summed loss w.r.t. each layer, given the softmax residual.
std::vector<DenseLayer> backward(const std::vector<DenseLayer>& layers, const Activations& acts, RowMatrix delta) {
  std::vector<DenseLayer> grads(layers.size());
  for (std::size_t l = layers.size(); l-- > 0;) {
    grads[l].weights = delta.transpose() * acts.inputs[l];
    grads[l].bias = delta.colwise().sum().transpose();
    if (l > 0) {
      RowMatrix prev = delta * layers[l].weights;
      delta = prev.cwiseProduct((acts.pre[l - 1].array() > 0.0).cast<double>().matrix());
    }
  }
  return grads;
}

void check_labels(const LabeledBatch& batch, std::size_t classes) {
  if (batch.labels.size() != batch.signals.rows) throw ShapeError("label count does not match signal count");
  for (auto label : batch.labels)
    if (label >= classes) throw InvalidArgument("label " + std::to_string(label) + " out of range");
}

RowMatrix gather_rows(const SignalBatch& batch, std::span<const std::size_t> rows) {
  std::vector<double> data(rows.size() * batch.length);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto src = batch.row(rows[i]);
    std::copy(src.begin(), src.end(), data.begin() + static_cast<std::ptrdiff_t>(i * batch.length));
  }
  return standardize_rows(SignalBatch{data, rows.size(), batch.length});
}

}  // namespace

RowMatrix standardize_rows(const SignalBatch& batch) {
  RowMatrix x = Eigen::Map<const RowMatrix>(batch.data.data(), static_cast<Eigen::Index>(batch.rows),
                                            static_cast<Eigen::Index>(batch.length));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    auto row = x.row(i);
    const double mean = row.mean();
    row.array() -= mean;
    const double sd = std::sqrt(row.squaredNorm() / static_cast<double>(row.size()));
    row /= std::max(sd, kStdFloor);
  }
  return x;
}

MlpModel::MlpModel(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw InvalidArgument("MLP needs at least one layer");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    if (layer.bias.size() != layer.weights.rows()) throw ShapeError("bias length does not match layer outputs");
    if (l > 0 && layer.weights.cols() != layers_[l - 1].weights.rows())
      throw ShapeError("layer " + std::to_string(l) + " input width does not match the previous layer");
    if (!layer.weights.allFinite() || !layer.bias.allFinite()) throw InvalidArgument("non-finite MLP parameter");
  }
  if (num_classes() < 2) throw InvalidArgument("MLP needs at least two classes");
}

MlpModel MlpModel::initialized(const std::vector<std::size_t>& widths, std::uint64_t seed) {
  if (widths.size() < 2) throw InvalidArgument("MLP widths need an input and an output");
  for (auto w : widths)
    if (w == 0) throw InvalidArgument("MLP widths must be positive");
  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    auto engine = keyed_engine(derive_seed(seed, "mlp-init"), l);
    const double bound = 1.0 / std::sqrt(static_cast<double>(widths[l]));
    std::uniform_real_distribution<double> dist(-bound, bound);
    DenseLayer layer{RowMatrix(widths[l + 1], widths[l]), Eigen::VectorXd(widths[l + 1])};
    for (Eigen::Index i = 0; i < layer.weights.size(); ++i) layer.weights.data()[i] = dist(engine);
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias[i] = dist(engine);
    layers.push_back(std::move(layer));
  }
  return MlpModel(std::move(layers));
}

std::vector<double> MlpModel::logits(const SignalBatch& batch) const {
  check_length(batch);
  RowMatrix out = forward(layers_, standardize_rows(batch));
  return {out.data(), out.data() + out.size()};
}

std::vector<std::size_t> MlpModel::widths() const {
  std::vector<std::size_t> w{input_length()};
  for (const auto& layer : layers_) w.push_back(static_cast<std::size_t>(layer.weights.rows()));
  return w;
}

std::size_t MlpModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) n += static_cast<std::size_t>(layer.weights.size() + layer.bias.size());
  return n;
}

std::vector<double> MlpModel::parameters() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  for (const auto& layer : layers_) {
    out.insert(out.end(), layer.weights.data(), layer.weights.data() + layer.weights.size());
    out.insert(out.end(), layer.bias.data(), layer.bias.data() + layer.bias.size());
  }
  return out;
}

void MlpModel::set_parameters(std::span<const double> values) {
  if (values.size() != parameter_count()) throw ShapeError("parameter vector length mismatch");
  std::size_t pos = 0;
  for (auto& layer : layers_) {
    std::copy_n(values.data() + pos, layer.weights.size(), layer.weights.data());
    pos += static_cast<std::size_t>(layer.weights.size());
    std::copy_n(values.data() + pos, layer.bias.size(), layer.bias.data());
    pos += static_cast<std::size_t>(layer.bias.size());
  }
}

void MlpModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out.write(kModelMagic, sizeof(kModelMagic));
  io::write<std::uint32_t>(out, kModelVersion);
  io::write<std::uint32_t>(out, static_cast<std::uint32_t>(layers_.size()));
  for (const auto& layer : layers_) {
    io::write<std::uint64_t>(out, static_cast<std::uint64_t>(layer.weights.cols()));
    io::write<std::uint64_t>(out, static_cast<std::uint64_t>(layer.weights.rows()));
  }
  for (const auto& layer : layers_) {
    io::write_array<double>(out, {layer.weights.data(), static_cast<std::size_t>(layer.weights.size())});
    io::write_array<double>(out, {layer.bias.data(), static_cast<std::size_t>(layer.bias.size())});
  }
  if (!out) throw Error("failed writing model file '" + path.string() + "'");
}

MlpModel MlpModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open model file '" + path.string() + "'");
  char magic[sizeof(kModelMagic)];
  in.read(magic, sizeof(magic));
  if (!in || !std::equal(std::begin(magic), std::end(magic), std::begin(kModelMagic)))
    throw FormatError("'" + path.string() + "' is not a model file");
  const auto version = io::read<std::uint32_t>(in, "model version");
  if (version != kModelVersion) throw FormatError("unsupported model file version " + std::to_string(version));
  const auto count = io::read<std::uint32_t>(in, "layer count");
  if (count == 0 || count > 64) throw FormatError("implausible layer count");
  std::vector<DenseLayer> layers(count);
  for (auto& layer : layers) {
    const auto inputs = io::read<std::uint64_t>(in, "layer shape");
    const auto outputs = io::read<std::uint64_t>(in, "layer shape");
    if (inputs == 0 || outputs == 0 || inputs > (1u << 24) || outputs > (1u << 24))
      throw FormatError("implausible layer shape");
    layer.weights.resize(static_cast<Eigen::Index>(outputs), static_cast<Eigen::Index>(inputs));
    layer.bias.resize(static_cast<Eigen::Index>(outputs));
  }
  for (auto& layer : layers) {
    io::read_array<double>(in, {layer.weights.data(), static_cast<std::size_t>(layer.weights.size())}, "weights");
    io::read_array<double>(in, {layer.bias.data(), static_cast<std::size_t>(layer.bias.size())}, "bias");
  }
  return MlpModel(std::move(layers));
}

void validate(const TrainConfig& cfg) {
  if (!(cfg.learning_rate > 0.0)) throw InvalidArgument("learning rate must be positive");
  if (cfg.batch_size == 0) throw InvalidArgument("batch size must be positive");
  if (!(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0) || !(cfg.beta2 >= 0.0 && cfg.beta2 < 1.0))
    throw InvalidArgument("Adam betas must lie in [0, 1)");
  if (!(cfg.epsilon > 0.0)) throw InvalidArgument("Adam epsilon must be positive");
  for (auto h : cfg.hidden)
    if (h == 0) throw InvalidArgument("hidden widths must be positive");
}

LossAndGradient loss_and_gradient(const MlpModel& model, const LabeledBatch& batch) {
  check_labels(batch, model.num_classes());
  if (batch.signals.length != model.input_length()) throw ShapeError("signal length does not match the MLP input");
  const auto& layers = model.layers();
  auto acts = forward_cached(layers, standardize_rows(batch.signals));
  RowMatrix delta = acts.pre.back();
  const double n = static_cast<double>(batch.signals.rows);
  const double loss = softmax_residual(delta, batch.labels) / n;
  delta /= n;
  auto grads = backward(layers, acts, std::move(delta));
  LossAndGradient out{loss, {}};
  out.gradient.reserve(model.parameter_count());
  for (const auto& g : grads) {
    out.gradient.insert(out.gradient.end(), g.weights.data(), g.weights.data() + g.weights.size());
    out.gradient.insert(out.gradient.end(), g.bias.data(), g.bias.data() + g.bias.size());
  }
  return out;
}

double accuracy(const Model& model, const LabeledBatch& batch, std::size_t chunk) {
  if (batch.signals.rows == 0) return 0.0;
  if (batch.labels.size() != batch.signals.rows) throw ShapeError("label count does not match signal count");
  std::size_t correct = 0;
  for (std::size_t start = 0; start < batch.signals.rows; start += chunk) {
    const std::size_t rows = std::min(chunk, batch.signals.rows - start);
    SignalBatch part{batch.signals.data.subspan(start * batch.signals.length, rows * batch.signals.length), rows,
                     batch.signals.length};
    const auto z = model.logits(part);
    const std::size_t classes = z.size() / rows;
    for (std::size_t i = 0; i < rows; ++i) {
      auto first = z.begin() + static_cast<std::ptrdiff_t>(i * classes);
      auto best = static_cast<std::size_t>(std::max_element(first, first + static_cast<std::ptrdiff_t>(classes)) - first);
      if (best == batch.labels[start + i]) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(batch.signals.rows);
}

TrainResult train_mlp(const LabeledBatch& train, std::size_t classes, const TrainConfig& cfg,
                      const LabeledBatch* test) {
  validate(cfg);
  if (classes < 2) throw InvalidArgument("training needs at least two classes");
  if (train.signals.rows == 0) throw InvalidArgument("training set is empty");
  check_labels(train, classes);
  if (test) check_labels(*test, classes);

  std::vector<std::size_t> widths{train.signals.length};
  widths.insert(widths.end(), cfg.hidden.begin(), cfg.hidden.end());
  widths.push_back(classes);
  TrainResult result{MlpModel::initialized(widths, cfg.seed), {}, 0.0, std::nullopt};
  auto& layers = result.model.layers();

  std::vector<DenseLayer> m1, m2;
  for (const auto& layer : layers) {
    m1.push_back({RowMatrix::Zero(layer.weights.rows(), layer.weights.cols()), Eigen::VectorXd::Zero(layer.bias.size())});
    m2.push_back(m1.back());
  }

  std::vector<std::size_t> order(train.signals.rows);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::uint64_t step = 0;
  const auto shuffle_seed = derive_seed(cfg.seed, "mlp-shuffle");

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    auto engine = keyed_engine(shuffle_seed, epoch);
    std::shuffle(order.begin(), order.end(), engine);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t rows = std::min(cfg.batch_size, order.size() - start);
      std::span<const std::size_t> idx(order.data() + start, rows);
      std::vector<std::uint16_t> labels(rows);
      for (std::size_t i = 0; i < rows; ++i) labels[i] = train.labels[idx[i]];

      auto acts = forward_cached(layers, gather_rows(train.signals, idx));
      RowMatrix delta = acts.pre.back();
      const double batch_loss = softmax_residual(delta, labels);
      if (!std::isfinite(batch_loss))
        throw TrainingDiverged(epoch, "training loss became non-finite in epoch " + std::to_string(epoch));
      epoch_loss += batch_loss;
      delta /= static_cast<double>(rows);
      auto grads = backward(layers, acts, std::move(delta));

      ++step;
      const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
      const double rate = cfg.learning_rate * std::sqrt(c2) / c1;
      const double eps = cfg.epsilon * std::sqrt(c2);
      for (std::size_t l = 0; l < layers.size(); ++l) {
        auto update = [&](auto& param, auto& mean, auto& var, const auto& grad) {
          mean = cfg.beta1 * mean + (1.0 - cfg.beta1) * grad;
          var = cfg.beta2 * var + (1.0 - cfg.beta2) * grad.cwiseAbs2();
          param.array() -= rate * mean.array() / (var.array().sqrt() + eps);
        };
        update(layers[l].weights, m1[l].weights, m2[l].weights, grads[l].weights);
        update(layers[l].bias, m1[l].bias, m2[l].bias, grads[l].bias);
      }
    }
    epoch_loss /= static_cast<double>(order.size());
    if (!std::isfinite(epoch_loss))
      throw TrainingDiverged(epoch, "training loss became non-finite in epoch " + std::to_string(epoch));
    result.epoch_loss.push_back(epoch_loss);
  }

  result.train_accuracy = accuracy(result.model, train);
  if (test) result.test_accuracy = accuracy(result.model, *test);
  return result;
}

}  // namespace freqrise
