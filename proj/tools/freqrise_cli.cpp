// freqrise: generate data, train, explain and evaluate from the command line.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "freqrise/audio.hpp"
#include "freqrise/datasets.hpp"
#include "freqrise/error.hpp"
#include "freqrise/explain.hpp"
#include "freqrise/external_model.hpp"
#include "freqrise/metrics.hpp"
#include "freqrise/mlp.hpp"
#include "freqrise/models.hpp"
#include "freqrise/parallel.hpp"
#include "freqrise/rng.hpp"
#include "freqrise/run_config.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace freqrise;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <class F>
auto as_usage(F&& f) {
  try {
    return f();
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  } catch (const InvalidWindow& e) {
    throw UsageError(e.what());
  } catch (const InvalidGrid& e) {
    throw UsageError(e.what());
  }
}

void check_writable(const fs::path& path, bool force) {
  if (fs::exists(path) && !force)
    throw Error("'" + path.string() + "' exists; pass --force to overwrite");
}

void ensure_parent(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

void write_json(const json& j, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << j.dump(2) << "\n";
}

std::vector<std::size_t> parse_indices(const std::string& text) {
  std::vector<std::size_t> out;
  try {
    if (auto colon = text.find(':'); colon != std::string::npos) {
      const auto lo = std::stoull(text.substr(0, colon));
      const auto hi = std::stoull(text.substr(colon + 1));
      if (hi <= lo) throw UsageError("empty index range '" + text + "'");
      for (auto i = lo; i < hi; ++i) out.push_back(i);
    } else {
      std::stringstream ss(text);
      for (std::string item; std::getline(ss, item, ',');) out.push_back(std::stoull(item));
    }
  } catch (const std::logic_error&) {
    throw UsageError("invalid index list '" + text + "'");
  }
  return out;
}

std::vector<double> resolve_schedule(const std::string& name) {
  if (name == "default" || name.empty()) return default_deletion_schedule();
  if (name == "short") return short_deletion_schedule();
  return as_usage([&] { return parse_schedule(name); });
}

// "oracle", "external:<command>" or a model file.
std::unique_ptr<Model> load_model(const std::string& ref, const SyntheticConfig& synthetic, std::size_t length) {
  if (ref == "oracle") return std::make_unique<OracleModel>(length, synthetic.k_star);
  if (ref.starts_with("external:")) {
    ExternalModelOptions opts;
    opts.input_length = length;
    return std::make_unique<ExternalModel>(ref.substr(9), opts);
  }
  return std::make_unique<MlpModel>(MlpModel::load(ref));
}

std::vector<std::size_t> ground_truth_positions(const RelevanceMap& r, const Dataset& data, std::size_t index) {
  if (r.domain != Domain::Frequency) return {};
  return subset_of(data.labels.at(index), data.config.k_star);
}

// Maps written by `explain`, sorted by file name.
struct LoadedMap {
  fs::path path;
  RelevanceMap map;
  json sidecar;
};

std::vector<LoadedMap> load_maps(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error("map directory '" + dir.string() + "' does not exist");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".csv" &&
        entry.path().filename().string().starts_with("map_"))
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error("no relevance maps in '" + dir.string() + "'");
  std::vector<LoadedMap> maps;
  for (const auto& f : files) {
    LoadedMap m{f, {}, {}};
    m.map = read_relevance_map(f, &m.sidecar);
    if (!m.sidecar.contains("sample_index"))
      throw FormatError("'" + f.string() + "' has no sample_index in its sidecar");
    maps.push_back(std::move(m));
  }
  return maps;
}

std::vector<EvalSample> eval_samples(const std::vector<LoadedMap>& maps, const Dataset& data,
                                     const PostprocessConfig* post) {
  std::vector<EvalSample> samples;
  samples.reserve(maps.size());
  for (const auto& m : maps) {
    const auto index = m.sidecar["sample_index"].get<std::size_t>();
    if (index >= data.size()) throw Error("map '" + m.path.string() + "' refers to a sample outside the dataset");
    EvalSample s;
    s.signal = data.sample(index);
    s.true_class = data.labels[index];
    s.map = post ? postprocess_quantile(m.map, *post) : m.map;
    s.ground_truth = ground_truth_positions(m.map, data, index);
    samples.push_back(std::move(s));
  }
  return samples;
}

std::vector<EvalSample> baseline_samples(const std::vector<EvalSample>& base, bool amplitude, std::uint64_t seed) {
  std::vector<EvalSample> out = base;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto& ref = base[i].map;
    out[i].map = amplitude ? baseline_amplitude_map(out[i].signal, ref.domain, ref.window)
                           : baseline_random_map(ref.origin_length, ref.domain, ref.window,
                                                 hash_combine(derive_seed(seed, "random-baseline"), i));
  }
  return out;
}

struct Common {
  std::optional<std::string> config_path;
  std::optional<std::uint64_t> seed;
  bool force = false;
};

RunConfig base_config(const Common& common) {
  RunConfig cfg = common.config_path ? load_run_config(*common.config_path) : RunConfig{};
  if (common.seed) cfg.seed = *common.seed;
  return cfg;
}

// gen-data ------------------------------------------------------------------

struct GenDataArgs {
  std::string out;
  std::size_t n = 1000;
  std::optional<double> sigma;
  std::optional<std::size_t> length;
};

int cmd_gen_data(const Common& common, const GenDataArgs& args) {
  RunConfig cfg = base_config(common);
  if (args.sigma) cfg.synthetic.sigma = *args.sigma;
  if (args.length) cfg.synthetic.length = *args.length;
  as_usage([&] { validate(cfg.synthetic); });
  if (args.n == 0) throw UsageError("--n must be at least 1");
  const fs::path out = args.out;
  check_writable(out, common.force);
  ensure_parent(out);
  const auto hash = config_hash(cfg);
  const auto data = make_synthetic_dataset(cfg.synthetic, args.n, cfg.seed);
  write_dataset(data, out, json{{"config_hash", hash}, {"run_config", to_json(cfg)}});
  std::cout << "wrote " << data.size() << " samples (T=" << data.length << ", C=" << data.classes << ") to "
            << out.string() << "\n";
  return 0;
}

// train -----------------------------------------------------------------------

struct TrainArgs {
  std::string data;
  std::optional<std::string> test;
  std::string out;
  std::optional<std::size_t> epochs;
  std::optional<double> lr;
  std::optional<std::size_t> batch_size;
  std::size_t test_size = 200;
};

int cmd_train(const Common& common, const TrainArgs& args) {
  RunConfig cfg = base_config(common);
  if (args.epochs) cfg.train.epochs = *args.epochs;
  if (args.lr) cfg.train.learning_rate = *args.lr;
  if (args.batch_size) cfg.train.batch_size = *args.batch_size;
  cfg.train.seed = derive_seed(cfg.seed, "train");
  as_usage([&] { validate(cfg.train); });
  const fs::path out = args.out;
  const fs::path report_path = fs::path(out.string() + ".json");
  check_writable(out, common.force);
  check_writable(report_path, common.force);

  const auto train = read_dataset(args.data);
  cfg.synthetic = train.config;
  Dataset test;
  std::string test_source;
  if (args.test) {
    test = read_dataset(*args.test);
    test_source = *args.test;
  } else {
    SyntheticConfig clean = train.config;
    clean.sigma = 0.0;
    test = make_synthetic_dataset(clean, args.test_size, derive_seed(cfg.seed, "test-set"));
    test_source = "generated:noiseless:" + std::to_string(args.test_size);
  }
  if (test.length != train.length) throw ShapeError("train and test signal lengths differ");

  const auto hash = config_hash(cfg);
  const auto test_batch = test.labeled();
  const auto result = train_mlp(train.labeled(), train.classes, cfg.train, &test_batch);
  ensure_parent(out);
  result.model.save(out);

  json report{{"config_hash", hash},
              {"run_config", to_json(cfg)},
              {"train_data", args.data},
              {"test_data", test_source},
              {"train_samples", train.size()},
              {"test_samples", test.size()},
              {"train_accuracy", result.train_accuracy},
              {"test_accuracy", result.test_accuracy.value_or(0.0)},
              {"epoch_loss", result.epoch_loss},
              {"parameters", result.model.parameter_count()}};
  write_json(report, report_path);
  std::cout << "train accuracy " << result.train_accuracy << ", test accuracy " << result.test_accuracy.value_or(0.0)
            << "\nwrote " << out.string() << "\n";
  return 0;
}

// explain ---------------------------------------------------------------------

struct ExplainArgs {
  std::string model = "oracle";
  std::optional<std::string> data;
  std::optional<std::string> wav;
  std::string indices = "0";
  bool require_gt = false;
  std::optional<std::size_t> class_index;
  bool predicted = false;
  std::optional<std::string> domain;
  std::optional<std::size_t> n_masks;
  std::optional<double> p;
  std::optional<std::string> grid;
  std::optional<std::string> window;
  bool shift = false;
  std::optional<std::string> output;
  std::optional<std::size_t> batch_size;
  std::string out_dir = "maps";
};

ExplainConfig explain_config(RunConfig& cfg, const ExplainArgs& args) {
  auto& e = cfg.explain;
  return as_usage([&] {
    if (args.domain) e.domain = parse_domain(*args.domain);
    if (args.n_masks) e.n_masks = *args.n_masks;
    if (args.p) e.p = *args.p;
    if (args.grid) e.grid = parse_grid(*args.grid);
    if (args.window) e.window = parse_window(*args.window);
    if (args.shift) e.shift = true;
    if (args.output) e.output = parse_output_kind(*args.output);
    if (args.batch_size) e.batch_size = *args.batch_size;
    if (e.domain == Domain::TimeFrequency && !e.window) e.window = WindowSpec{};
    if (e.domain != Domain::TimeFrequency) e.window.reset();
    e.seed = derive_seed(cfg.seed, "explain");
    e.threads = 0;
    validate(e);
    return e;
  });
}

std::size_t argmax(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

int cmd_explain(const Common& common, const ExplainArgs& args) {
  RunConfig cfg = base_config(common);
  if (args.data.has_value() == args.wav.has_value()) throw UsageError("pass exactly one of --data or --wav");
  const ExplainConfig base = explain_config(cfg, args);
  cfg.output_dir = args.out_dir;
  const fs::path out_dir = args.out_dir;
  fs::create_directories(out_dir);

  if (args.wav) {
    const auto x = preprocess_audio(load_wav(*args.wav));
    const auto model = load_model(args.model, cfg.synthetic, x.size());
    const auto hash = config_hash(cfg);
    const auto c = args.class_index ? *args.class_index : argmax(model->predict(x).probabilities);
    const fs::path path = out_dir / ("map_" + fs::path(*args.wav).stem().string() + ".csv");
    check_writable(path, common.force);
    const auto r = explain(*model, x, c, base);
    write_relevance_map(r, path, json{{"config_hash", hash}, {"model", args.model}, {"wav", *args.wav}});
    std::cout << "wrote " << path.string() << "\n";
    return 0;
  }

  const auto data = read_dataset(*args.data);
  cfg.synthetic = data.config;
  const auto hash = config_hash(cfg);
  const auto model = load_model(args.model, data.config, data.length);
  std::size_t written = 0;
  for (auto index : parse_indices(args.indices)) {
    if (index >= data.size()) throw Error("sample index " + std::to_string(index) + " outside the dataset");
    const auto x = data.sample(index);
    const std::size_t label = data.labels[index];
    if (args.require_gt && label == 0) continue;
    std::size_t c = label;
    if (args.class_index) c = *args.class_index;
    else if (args.predicted) c = argmax(model->predict(x).probabilities);
    ExplainConfig e = base;
    e.seed = hash_combine(base.seed, index);
    char name[32];
    std::snprintf(name, sizeof(name), "map_%06zu.csv", index);
    const fs::path path = out_dir / name;
    check_writable(path, common.force);
    const auto r = explain(*model, x, c, e);
    json extra{{"config_hash", hash},
               {"model", args.model},
               {"dataset", *args.data},
               {"sample_index", index},
               {"true_class", label}};
    if (r.domain == Domain::Frequency) extra["ground_truth"] = subset_of(label, data.config.k_star);
    write_relevance_map(r, path, extra);
    ++written;
  }
  std::cout << "wrote " << written << " relevance map(s) to " << out_dir.string() << "\n";
  return 0;
}

// evaluate --------------------------------------------------------------------

struct EvaluateArgs {
  std::string maps;
  std::string model = "oracle";
  std::string data;
  std::string schedule = "default";
  bool with_baselines = false;
  std::optional<double> postprocess;
  std::string out_dir = "report";
};

int cmd_evaluate(const Common& common, const EvaluateArgs& args) {
  RunConfig cfg = base_config(common);
  cfg.schedule = resolve_schedule(args.schedule);
  if (args.postprocess) {
    cfg.postprocess.quantile = *args.postprocess;
    if (!(cfg.postprocess.quantile >= 0.0 && cfg.postprocess.quantile < 1.0))
      throw UsageError("--postprocess must lie in [0, 1)");
  }
  cfg.output_dir = args.out_dir;
  const fs::path out_dir = args.out_dir;
  const std::vector<fs::path> outputs = {out_dir / "report.json", out_dir / "report.csv", out_dir / "curves.csv",
                                         out_dir / "curves.svg"};
  for (const auto& p : outputs) check_writable(p, common.force);

  const auto maps = load_maps(args.maps);
  const auto data = read_dataset(args.data);
  cfg.synthetic = data.config;
  const auto hash = config_hash(cfg);
  const auto model = load_model(args.model, data.config, data.length);
  const auto threads = default_thread_count();

  std::vector<EvalReport> reports;
  const auto samples = eval_samples(maps, data, nullptr);
  reports.push_back(evaluate("FreqRISE", *model, samples, cfg.schedule, threads));
  if (args.postprocess) {
    const auto post = eval_samples(maps, data, &cfg.postprocess);
    char name[48];
    std::snprintf(name, sizeof(name), "FreqRISE-p%g", *args.postprocess);
    reports.push_back(evaluate(name, *model, post, cfg.schedule, threads));
  }
  if (args.with_baselines) {
    reports.push_back(evaluate("Random", *model, baseline_samples(samples, false, cfg.seed), cfg.schedule, threads));
    reports.push_back(evaluate("Amplitude", *model, baseline_samples(samples, true, cfg.seed), cfg.schedule, threads));
  }
  for (auto& r : reports) {
    r.dataset = args.data;
    r.model = args.model;
    r.config_hash = hash;
  }

  fs::create_directories(out_dir);
  write_reports_json(reports, outputs[0]);
  write_reports_csv(reports, outputs[1]);
  write_curves_csv(reports, outputs[2]);
  write_curves_svg(reports, outputs[3], "Deletion curves (config " + hash + ")");
  for (const auto& r : reports) {
    std::cout << r.method << " [" << r.domain << "]";
    if (r.localization) std::cout << " localization=" << *r.localization;
    std::cout << " faithfulness_auc=" << r.faithfulness_auc << " complexity=" << r.complexity << "\n";
  }
  return 0;
}

// sweep-postprocess -----------------------------------------------------------

struct SweepArgs {
  std::string maps;
  std::string model = "oracle";
  std::string data;
  std::string levels = "0,0.5,0.8,0.997";
  std::string schedule = "default";
  std::string out = "sweep.csv";
};

int cmd_sweep(const Common& common, const SweepArgs& args) {
  RunConfig cfg = base_config(common);
  cfg.schedule = resolve_schedule(args.schedule);
  std::vector<double> levels;
  {
    std::stringstream ss(args.levels);
    std::set<double> seen;
    for (std::string item; std::getline(ss, item, ',');) {
      double q = 0;
      try {
        q = std::stod(item);
      } catch (const std::logic_error&) {
        throw UsageError("invalid quantile '" + item + "'");
      }
      if (!(q >= 0.0 && q < 1.0)) throw UsageError("quantiles must lie in [0, 1)");
      if (!seen.insert(q).second) {
        std::cerr << "warning: duplicate quantile " << item << " ignored\n";
        continue;
      }
      levels.push_back(q);
    }
  }
  if (levels.empty()) throw UsageError("no quantiles given");
  const fs::path out = args.out;
  check_writable(out, common.force);

  const auto maps = load_maps(args.maps);
  const auto data = read_dataset(args.data);
  cfg.synthetic = data.config;
  const auto hash = config_hash(cfg);
  const auto model = load_model(args.model, data.config, data.length);
  const auto threads = default_thread_count();

  ensure_parent(out);
  std::ofstream csv(out);
  if (!csv) throw Error("cannot open '" + out.string() + "' for writing");
  csv << "p,faithfulness_auc,complexity,localization,config_hash\n";
  for (double q : levels) {
    const PostprocessConfig post{q};
    const auto report = evaluate("FreqRISE", *model, eval_samples(maps, data, &post), cfg.schedule, threads);
    char line[160];
    std::snprintf(line, sizeof(line), "%g,%.10g,%.10g,", q, report.faithfulness_auc, report.complexity);
    csv << line;
    if (report.localization) {
      std::snprintf(line, sizeof(line), "%.10g", *report.localization);
      csv << line;
    }
    csv << "," << hash << "\n";
  }
  std::cout << "wrote " << levels.size() << " rows to " << out.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Frequency-domain RISE explanations for time-series classifiers"};
  app.require_subcommand(1);
  Common common;
  app.add_option("--config", common.config_path, "JSON run configuration; flags override it");
  app.add_option("--seed", common.seed, "Global seed");
  app.add_flag("--force", common.force, "Overwrite existing outputs");

  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate the synthetic sum-of-sinusoids dataset");
  gen_cmd->add_option("--out", gen.out, "Output container path")->required();
  gen_cmd->add_option("--n", gen.n, "Number of samples");
  gen_cmd->add_option("--sigma", gen.sigma, "Noise standard deviation")->check(CLI::NonNegativeNumber);
  gen_cmd->add_option("--length", gen.length, "Signal length T");

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train the MLP classifier");
  train_cmd->add_option("--data", train.data, "Training dataset")->required();
  train_cmd->add_option("--test", train.test, "Test dataset (default: 200 noiseless samples)");
  train_cmd->add_option("--out", train.out, "Model file")->required();
  train_cmd->add_option("--epochs", train.epochs, "Training epochs");
  train_cmd->add_option("--lr", train.lr, "Adam step size")->check(CLI::PositiveNumber);
  train_cmd->add_option("--batch-size", train.batch_size, "Minibatch size")->check(CLI::PositiveNumber);
  train_cmd->add_option("--test-size", train.test_size, "Size of the generated test set")->check(CLI::PositiveNumber);

  ExplainArgs ex;
  auto* explain_cmd = app.add_subcommand("explain", "Compute relevance maps");
  explain_cmd->add_option("--model", ex.model, "oracle | <model file> | external:<command>");
  explain_cmd->add_option("--data", ex.data, "Dataset container");
  explain_cmd->add_option("--wav", ex.wav, "WAV file (resampled to 8 kHz, padded to 8000 samples)");
  explain_cmd->add_option("--indices", ex.indices, "Sample indices: 'a:b' or a comma list");
  explain_cmd->add_flag("--require-gt", ex.require_gt, "Skip samples with an empty target subset");
  explain_cmd->add_option("--class", ex.class_index, "Class to explain (default: true label)");
  explain_cmd->add_flag("--predicted", ex.predicted, "Explain the predicted class");
  explain_cmd->add_option("--domain", ex.domain, "time | frequency | timefreq");
  explain_cmd->add_option("--n-masks", ex.n_masks, "Number of masks");
  explain_cmd->add_option("--p", ex.p, "Mask keep probability");
  explain_cmd->add_option("--grid", ex.grid, "Coarse mask grid, e.g. 200 or 25x25");
  explain_cmd->add_option("--window", ex.window, "STDFT window kind:length:overlap, e.g. hann:455:420");
  explain_cmd->add_flag("--shift", ex.shift, "Random sub-cell shift of grid masks");
  explain_cmd->add_option("--output", ex.output, "logit | probability");
  explain_cmd->add_option("--batch-size", ex.batch_size, "Masks per model call");
  explain_cmd->add_option("--out-dir", ex.out_dir, "Directory for map CSV files");

  EvaluateArgs ev;
  auto* eval_cmd = app.add_subcommand("evaluate", "Score relevance maps");
  eval_cmd->add_option("--maps", ev.maps, "Directory written by explain")->required();
  eval_cmd->add_option("--model", ev.model, "oracle | <model file> | external:<command>");
  eval_cmd->add_option("--data", ev.data, "Dataset container the maps refer to")->required();
  eval_cmd->add_option("--schedule", ev.schedule, "default | short | start:stop:step | comma list");
  eval_cmd->add_flag("--with-baselines", ev.with_baselines, "Also score random and amplitude deletion");
  eval_cmd->add_option("--postprocess", ev.postprocess, "Quantile for an additional post-processed row");
  eval_cmd->add_option("--out-dir", ev.out_dir, "Report directory");

  SweepArgs sw;
  auto* sweep_cmd = app.add_subcommand("sweep-postprocess", "Metrics across post-processing quantiles");
  sweep_cmd->add_option("--maps", sw.maps, "Directory written by explain")->required();
  sweep_cmd->add_option("--model", sw.model, "oracle | <model file> | external:<command>");
  sweep_cmd->add_option("--data", sw.data, "Dataset container the maps refer to")->required();
  sweep_cmd->add_option("--p", sw.levels, "Comma-separated quantiles");
  sweep_cmd->add_option("--schedule", sw.schedule, "default | short | start:stop:step | comma list");
  sweep_cmd->add_option("--out", sw.out, "Output CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen_cmd->parsed()) return cmd_gen_data(common, gen);
    if (train_cmd->parsed()) return cmd_train(common, train);
    if (explain_cmd->parsed()) return cmd_explain(common, ex);
    if (eval_cmd->parsed()) return cmd_evaluate(common, ev);
    if (sweep_cmd->parsed()) return cmd_sweep(common, sw);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
