#include <pybind11/complex.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <memory>
#include <optional>
#include <string>

#include "freqrise/audio.hpp"
#include "freqrise/datasets.hpp"
#include "freqrise/error.hpp"
#include "freqrise/explain.hpp"
#include "freqrise/external_model.hpp"
#include "freqrise/metrics.hpp"
#include "freqrise/mlp.hpp"
#include "freqrise/models.hpp"
#include "freqrise/transforms.hpp"

namespace py = pybind11;
using namespace freqrise;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using ComplexArray = py::array_t<Complex, py::array::c_style | py::array::forcecast>;

std::vector<double> to_vector(const DoubleArray& a) { return {a.data(), a.data() + a.size()}; }

TimeSeries to_series(const DoubleArray& a, double rate) {
  if (a.ndim() != 1) throw InvalidArgument("expected a 1-D signal");
  return {to_vector(a), rate};
}

py::array as_array(const std::vector<double>& v, const DomainShape& shape, bool flat) {
  if (flat) return DoubleArray(static_cast<py::ssize_t>(v.size()), v.data());
  return DoubleArray({static_cast<py::ssize_t>(shape.rows), static_cast<py::ssize_t>(shape.cols)}, v.data());
}

// Adapts a Python callable (rows x T array -> rows x C logits) to the Model
// interface. Calls are serialized under the GIL.
class CallableModel final : public Model {
 public:
  CallableModel(py::function fn, std::size_t length, std::size_t classes)
      : fn_(std::move(fn)), length_(length), classes_(classes) {}

  std::size_t input_length() const override { return length_; }
  std::size_t num_classes() const override { return classes_; }
  bool concurrent_safe() const override { return false; }

  std::vector<double> logits(const SignalBatch& batch) const override {
    check_length(batch);
    py::gil_scoped_acquire gil;
    DoubleArray in({static_cast<py::ssize_t>(batch.rows), static_cast<py::ssize_t>(batch.length)},
                   batch.data.data());
    DoubleArray out = fn_(in);
    if (out.ndim() != 2 || static_cast<std::size_t>(out.shape(0)) != batch.rows)
      throw ShapeError("model callable must return a (rows, classes) array");
    if (classes_ == 0) classes_ = static_cast<std::size_t>(out.shape(1));
    if (static_cast<std::size_t>(out.shape(1)) != classes_) throw ShapeError("model callable changed class count");
    return to_vector(out);
  }

 private:
  py::function fn_;
  std::size_t length_;
  mutable std::size_t classes_;
};

std::shared_ptr<Model> as_model(py::object obj, std::size_t length) {
  if (py::isinstance<Model>(obj)) return obj.cast<std::shared_ptr<Model>>();
  if (py::isinstance<py::function>(obj)) return std::make_shared<CallableModel>(obj.cast<py::function>(), length, 0);
  throw InvalidArgument("model must be a freqrise model or a callable");
}

std::optional<WindowSpec> window_arg(const std::optional<std::string>& text) {
  if (!text) return std::nullopt;
  return parse_window(*text);
}

py::dict curve_dict(const DeletionCurve& c) {
  py::dict d;
  d["fractions"] = c.fractions;
  d["scores"] = c.scores;
  d["unmodified_score"] = c.unmodified_score;
  d["auc"] = c.auc;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Frequency-domain randomized input sampling explanations";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", base);
  py::register_exception<InvalidSignal>(m, "InvalidSignal", base);
  py::register_exception<ShapeError>(m, "ShapeError", base);
  py::register_exception<InvalidWindow>(m, "InvalidWindow", base);
  py::register_exception<InvalidGrid>(m, "InvalidGrid", base);
  py::register_exception<UndefinedMetric>(m, "UndefinedMetric", base);
  py::register_exception<EndpointError>(m, "EndpointError", base);
  py::register_exception<FormatError>(m, "FormatError", base);
  py::register_exception<ExplainFailed>(m, "ExplainFailed", base);

  m.def(
      "dft",
      [](const DoubleArray& x) {
        const auto s = dft_onesided(to_series(x, 1.0));
        return ComplexArray(static_cast<py::ssize_t>(s.coeffs.size()), s.coeffs.data());
      },
      py::arg("x"), "One-sided DFT (unnormalized).");
  m.def(
      "idft",
      [](const ComplexArray& coeffs, std::size_t length) {
        SpectralView s;
        s.shape = {1, onesided_bins(length)};
        s.origin_length = length;
        if (static_cast<std::size_t>(coeffs.size()) != s.shape.size())
          throw ShapeError("expected " + std::to_string(s.shape.size()) + " coefficients");
        s.coeffs.assign(coeffs.data(), coeffs.data() + coeffs.size());
        const auto x = idft_onesided(s);
        return DoubleArray(static_cast<py::ssize_t>(x.size()), x.samples.data());
      },
      py::arg("coeffs"), py::arg("length"));
  m.def(
      "stdft",
      [](const DoubleArray& x, const std::string& window) {
        const auto s = stdft(to_series(x, 1.0), parse_window(window));
        return ComplexArray({static_cast<py::ssize_t>(s.shape.rows), static_cast<py::ssize_t>(s.shape.cols)},
                            s.coeffs.data());
      },
      py::arg("x"), py::arg("window") = "hann:455:420", "Frames x one-sided bins.");
  m.def(
      "istdft",
      [](const ComplexArray& coeffs, std::size_t length, const std::string& window) {
        SpectralView s;
        s.domain = Domain::TimeFrequency;
        s.window = parse_window(window);
        s.origin_length = length;
        s.shape = {stdft_frames(length, *s.window), onesided_bins(s.window->length)};
        if (static_cast<std::size_t>(coeffs.size()) != s.shape.size()) throw ShapeError("coefficient shape mismatch");
        s.coeffs.assign(coeffs.data(), coeffs.data() + coeffs.size());
        const auto x = istdft(s);
        return DoubleArray(static_cast<py::ssize_t>(x.size()), x.samples.data());
      },
      py::arg("coeffs"), py::arg("length"), py::arg("window") = "hann:455:420");

  m.def(
      "gen_synthetic",
      [](std::size_t n, std::uint64_t seed, double sigma, std::size_t length) {
        SyntheticConfig cfg;
        cfg.sigma = sigma;
        cfg.length = length;
        const auto data = make_synthetic_dataset(cfg, n, seed);
        DoubleArray signals({static_cast<py::ssize_t>(n), static_cast<py::ssize_t>(length)}, data.signals.data());
        std::vector<std::size_t> labels(data.labels.begin(), data.labels.end());
        std::vector<std::vector<std::size_t>> truth;
        for (std::size_t i = 0; i < n; ++i) truth.push_back(gen_synthetic_sample(cfg, seed, i).ground_truth_bins);
        return py::make_tuple(signals, labels, truth);
      },
      py::arg("n"), py::arg("seed") = 0, py::arg("sigma") = 0.0, py::arg("length") = 2560,
      "Returns (signals, labels, ground_truth_bins).");
  m.def(
      "load_audio",
      [](const std::filesystem::path& path) {
        const auto x = preprocess_audio(load_wav(path));
        return DoubleArray(static_cast<py::ssize_t>(x.size()), x.samples.data());
      },
      py::arg("path"), "Reads a WAV file and returns 8000 samples at 8 kHz.");

  py::class_<Model, std::shared_ptr<Model>>(m, "Model")
      .def_property_readonly("input_length", &Model::input_length)
      .def_property_readonly("num_classes", &Model::num_classes)
      .def("logits", [](const Model& model, const DoubleArray& batch) {
        if (batch.ndim() != 2) throw ShapeError("expected a (rows, length) array");
        const SignalBatch b{{batch.data(), static_cast<std::size_t>(batch.size())},
                            static_cast<std::size_t>(batch.shape(0)), static_cast<std::size_t>(batch.shape(1))};
        std::vector<double> out;
        {
          py::gil_scoped_release release;
          out = model.logits(b);
        }
        const auto classes = out.size() / b.rows;
        return DoubleArray({static_cast<py::ssize_t>(b.rows), static_cast<py::ssize_t>(classes)}, out.data());
      });
  py::class_<OracleModel, Model, std::shared_ptr<OracleModel>>(m, "OracleModel")
      .def(py::init<std::size_t, std::vector<std::size_t>>(), py::arg("length") = 2560,
           py::arg("target_bins") = std::vector<std::size_t>{5, 16, 32, 53});
  py::class_<MlpModel, Model, std::shared_ptr<MlpModel>>(m, "MlpModel")
      .def_static("load", [](const std::filesystem::path& p) { return std::make_shared<MlpModel>(MlpModel::load(p)); })
      .def("save", &MlpModel::save)
      .def_property_readonly("widths", &MlpModel::widths);
  py::class_<ExternalModel, Model, std::shared_ptr<ExternalModel>>(m, "ExternalModel")
      .def(py::init([](std::string command) { return std::make_shared<ExternalModel>(std::move(command)); }),
           py::arg("command"));

  py::class_<RelevanceMap>(m, "RelevanceMap")
      .def_property_readonly("values",
                             [](const RelevanceMap& r) { return as_array(r.values, r.shape, r.shape.rows == 1); })
      .def_property_readonly("domain", [](const RelevanceMap& r) { return std::string(to_string(r.domain)); })
      .def_property_readonly("shape", [](const RelevanceMap& r) { return py::make_tuple(r.shape.rows, r.shape.cols); })
      .def_readonly("class_index", &RelevanceMap::class_index)
      .def_readonly("n_masks", &RelevanceMap::n_masks)
      .def_readonly("p", &RelevanceMap::p)
      .def_readonly("seed", &RelevanceMap::seed);

  m.def(
      "explain",
      [](py::object model, const DoubleArray& x, std::size_t class_index, const std::string& domain,
         std::size_t n_masks, double p, std::optional<std::string> grid, std::optional<std::string> window, bool shift,
         const std::string& output, std::uint64_t seed, std::size_t batch_size, std::size_t threads) {
        ExplainConfig cfg;
        cfg.domain = parse_domain(domain);
        cfg.n_masks = n_masks;
        cfg.p = p;
        if (grid) cfg.grid = parse_grid(*grid);
        cfg.window = window_arg(window);
        if (cfg.domain == Domain::TimeFrequency && !cfg.window) cfg.window = parse_window("hann:455:420");
        cfg.shift = shift;
        cfg.output = parse_output_kind(output);
        cfg.seed = seed;
        cfg.batch_size = batch_size;
        cfg.threads = threads;
        const auto series = to_series(x, 1.0);
        const auto m = as_model(model, series.size());
        py::gil_scoped_release release;
        return explain(*m, series, class_index, cfg);
      },
      py::arg("model"), py::arg("x"), py::arg("class_index"), py::arg("domain") = "frequency",
      py::arg("n_masks") = 3000, py::arg("p") = 0.5, py::arg("grid") = py::none(), py::arg("window") = py::none(),
      py::arg("shift") = false, py::arg("output") = "logit", py::arg("seed") = 0, py::arg("batch_size") = 64,
      py::arg("threads") = 1);
  m.def(
      "postprocess",
      [](const RelevanceMap& r, double quantile) { return postprocess_quantile(r, {quantile}); }, py::arg("map"),
      py::arg("quantile"));

  m.def(
      "rank_accuracy",
      [](const DoubleArray& values, const std::vector<std::size_t>& gt) {
        const auto v = to_vector(values);
        return relevance_rank_accuracy(v, gt);
      },
      py::arg("values"), py::arg("ground_truth"));
  m.def(
      "entropy",
      [](const DoubleArray& values) {
        const auto v = to_vector(values);
        return complexity_entropy(v);
      },
      py::arg("values"));
  m.def(
      "deletion_curve",
      [](py::object model, const DoubleArray& x, std::size_t true_class, const RelevanceMap& r,
         std::optional<std::vector<double>> schedule) {
        const auto series = to_series(x, 1.0);
        const auto m = as_model(model, series.size());
        const auto phis = schedule.value_or(default_deletion_schedule());
        DeletionCurve c;
        {
          py::gil_scoped_release release;
          c = deletion_curve(*m, series, true_class, r, phis);
        }
        return curve_dict(c);
      },
      py::arg("model"), py::arg("x"), py::arg("true_class"), py::arg("map"), py::arg("schedule") = py::none());
  m.def(
      "amplitude_map",
      [](const DoubleArray& x, const std::string& domain, std::optional<std::string> window) {
        return baseline_amplitude_map(to_series(x, 1.0), parse_domain(domain), window_arg(window));
      },
      py::arg("x"), py::arg("domain") = "frequency", py::arg("window") = py::none());
  m.def(
      "random_map",
      [](std::size_t length, const std::string& domain, std::optional<std::string> window, std::uint64_t seed) {
        return baseline_random_map(length, parse_domain(domain), window_arg(window), seed);
      },
      py::arg("length"), py::arg("domain") = "frequency", py::arg("window") = py::none(), py::arg("seed") = 0);
}
