#include "freqrise/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include "binary_io.hpp"
#include "freqrise/error.hpp"
#include "freqrise/parallel.hpp"
#include "freqrise/rng.hpp"

namespace freqrise {
namespace {

using json = nlohmann::json;

constexpr char kDatasetMagic[8] = {'F', 'R', 'Q', 'D', 'A', 'T', 'A', '\0'};
constexpr std::uint32_t kDatasetVersion = 1;

bool contains(std::span<const std::size_t> values, std::size_t v) {
  return std::find(values.begin(), values.end(), v) != values.end();
}

std::vector<std::size_t> distractor_pool(const SyntheticConfig& cfg) {
  std::vector<std::size_t> pool;
  for (int k = cfg.distractor_range.lo; k <= cfg.distractor_range.hi; ++k)
    if (!contains(cfg.k_star, static_cast<std::size_t>(k))) pool.push_back(static_cast<std::size_t>(k));
  return pool;
}

}  // namespace

void validate(const SyntheticConfig& cfg) {
  if (cfg.k_star.empty() || cfg.k_star.size() > 15) throw InvalidArgument("k_star needs 1..15 target bins");
  if (cfg.j_range.lo < 0 || cfg.j_range.lo > cfg.j_range.hi) throw InvalidArgument("invalid J range");
  if (cfg.distractor_range.lo < 1 || cfg.distractor_range.lo > cfg.distractor_range.hi)
    throw InvalidArgument("invalid distractor range");
  if (!(cfg.sigma >= 0.0) || !std::isfinite(cfg.sigma)) throw InvalidArgument("sigma must be a finite value >= 0");
  if (!std::isfinite(cfg.amplitude)) throw InvalidArgument("amplitude must be finite");
  auto sorted = cfg.k_star;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw InvalidArgument("k_star entries must be distinct");
  for (auto k : cfg.k_star)
    if (k < static_cast<std::size_t>(cfg.distractor_range.lo) || k > static_cast<std::size_t>(cfg.distractor_range.hi))
      throw InvalidArgument("k_star must lie inside the distractor range");
  if (cfg.length <= 2 * static_cast<std::size_t>(cfg.distractor_range.hi))
    throw InvalidArgument("signal length must exceed twice the largest frequency bin");
  if (distractor_pool(cfg).empty() && cfg.j_range.hi > static_cast<int>(cfg.k_star.size()))
    throw InvalidArgument("distractor range leaves no non-target bins");
  if (cfg.forced_subset)
    for (auto k : *cfg.forced_subset)
      if (!contains(cfg.k_star, k)) throw InvalidSubset("forced subset contains a non-target bin");
}

json to_json(const SyntheticConfig& cfg) {
  json j{{"length", cfg.length},
         {"sigma", cfg.sigma},
         {"k_star", cfg.k_star},
         {"j_range", {cfg.j_range.lo, cfg.j_range.hi}},
         {"distractor_range", {cfg.distractor_range.lo, cfg.distractor_range.hi}},
         {"amplitude", cfg.amplitude}};
  j["forced_subset"] = cfg.forced_subset ? json(*cfg.forced_subset) : json(nullptr);
  return j;
}

SyntheticConfig synthetic_config_from_json(const json& j) {
  SyntheticConfig cfg;
  cfg.length = j.value("length", cfg.length);
  cfg.sigma = j.value("sigma", cfg.sigma);
  cfg.k_star = j.value("k_star", cfg.k_star);
  cfg.amplitude = j.value("amplitude", cfg.amplitude);
  if (j.contains("j_range")) cfg.j_range = {j["j_range"].at(0).get<int>(), j["j_range"].at(1).get<int>()};
  if (j.contains("distractor_range"))
    cfg.distractor_range = {j["distractor_range"].at(0).get<int>(), j["distractor_range"].at(1).get<int>()};
  if (j.contains("forced_subset") && !j["forced_subset"].is_null())
    cfg.forced_subset = j["forced_subset"].get<std::vector<std::size_t>>();
  return cfg;
}

std::size_t num_classes(const SyntheticConfig& cfg) { return std::size_t{1} << cfg.k_star.size(); }

std::size_t label_of(std::span<const std::size_t> subset, std::span<const std::size_t> k_star) {
  std::size_t label = 0;
  for (auto k : subset) {
    auto it = std::find(k_star.begin(), k_star.end(), k);
    if (it == k_star.end()) throw InvalidSubset("frequency " + std::to_string(k) + " is not a target frequency");
    label |= std::size_t{1} << static_cast<std::size_t>(it - k_star.begin());
  }
  return label;
}

std::vector<std::size_t> subset_of(std::size_t label, std::span<const std::size_t> k_star) {
  if (label >= (std::size_t{1} << k_star.size())) throw InvalidSubset("label out of range");
  std::vector<std::size_t> subset;
  for (std::size_t i = 0; i < k_star.size(); ++i)
    if ((label >> i) & 1U) subset.push_back(k_star[i]);
  return subset;
}

LabeledSample gen_synthetic_sample(const SyntheticConfig& cfg, std::uint64_t seed, std::size_t index) {
  auto engine = keyed_engine(derive_seed(seed, "synthetic"), index);
  const std::size_t classes = num_classes(cfg);

  LabeledSample s;
  if (cfg.forced_subset) {
    s.label = label_of(*cfg.forced_subset, cfg.k_star);
  } else {
    s.label = std::uniform_int_distribution<std::size_t>(0, classes - 1)(engine);
  }
  s.subset = subset_of(s.label, cfg.k_star);
  s.ground_truth_bins = s.subset;

  const auto j = static_cast<std::size_t>(std::uniform_int_distribution<int>(cfg.j_range.lo, cfg.j_range.hi)(engine));
  std::vector<std::size_t> components = s.subset;
  const auto pool = distractor_pool(cfg);
  if (j > components.size()) {
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    for (std::size_t d = s.subset.size(); d < j; ++d) components.push_back(pool[pick(engine)]);
  }

  const std::size_t n = cfg.length;
  s.signal.sample_rate_hz = static_cast<double>(n);
  s.signal.samples.assign(n, 0.0);
  // sin(2 pi (k t mod T) / T + psi) = S[kt mod T] cos(psi) + C[kt mod T] sin(psi).
  std::vector<double> sin_table(n), cos_table(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
    sin_table[i] = std::sin(a);
    cos_table[i] = std::cos(a);
  }
  std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * std::numbers::pi);
  for (auto k : components) {
    const double phase = phase_dist(engine);
    const double cs = cfg.amplitude * std::cos(phase), sn = cfg.amplitude * std::sin(phase);
    std::size_t idx = 0;
    const std::size_t step = k % n;
    for (std::size_t t = 0; t < n; ++t) {
      s.signal.samples[t] += sin_table[idx] * cs + cos_table[idx] * sn;
      idx += step;
      if (idx >= n) idx -= n;
    }
  }
  if (cfg.sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, cfg.sigma);
    for (double& v : s.signal.samples) v += noise(engine);
  }
  return s;
}

std::vector<LabeledSample> gen_synthetic(const SyntheticConfig& cfg, std::size_t n, std::uint64_t seed) {
  validate(cfg);
  if (n == 0) throw InvalidArgument("sample count must be at least 1");
  std::vector<LabeledSample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(gen_synthetic_sample(cfg, seed, i));
  return out;
}

TimeSeries Dataset::sample(std::size_t i) const {
  if (i >= size()) throw InvalidArgument("sample index " + std::to_string(i) + " out of range");
  auto r = row(i);
  return {std::vector<double>(r.begin(), r.end()), static_cast<double>(length)};
}

Dataset make_synthetic_dataset(const SyntheticConfig& cfg, std::size_t n, std::uint64_t seed) {
  validate(cfg);
  if (n == 0) throw InvalidArgument("sample count must be at least 1");
  Dataset data;
  data.length = cfg.length;
  data.classes = num_classes(cfg);
  data.seed = seed;
  data.config = cfg;
  data.signals.resize(n * cfg.length);
  data.labels.resize(n);
  parallel_for(n, default_thread_count(), [&](std::size_t i) {
    auto s = gen_synthetic_sample(cfg, seed, i);
    std::copy(s.signal.samples.begin(), s.signal.samples.end(),
              data.signals.begin() + static_cast<std::ptrdiff_t>(i * cfg.length));
    data.labels[i] = static_cast<std::uint16_t>(s.label);
  });
  return data;
}

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
  auto p = path;
  p += ".json";
  return p;
}

void write_dataset(const Dataset& data, const std::filesystem::path& path, const json& extra) {
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    out.write(kDatasetMagic, sizeof(kDatasetMagic));
    io::write<std::uint32_t>(out, kDatasetVersion);
    io::write<std::uint64_t>(out, data.length);
    io::write<std::uint64_t>(out, data.size());
    io::write<std::uint32_t>(out, static_cast<std::uint32_t>(data.classes));
    io::write<std::uint64_t>(out, data.seed);
    io::write<double>(out, data.config.sigma);
    io::write_array<double>(out, data.signals);
    io::write_array<std::uint16_t>(out, data.labels);
    if (!out) throw Error("failed writing dataset '" + path.string() + "'");
  }
  json side = extra;
  side["format"] = "freqrise-dataset";
  side["version"] = kDatasetVersion;
  side["n"] = data.size();
  side["classes"] = data.classes;
  side["seed"] = data.seed;
  side["synthetic"] = to_json(data.config);
  std::ofstream meta(sidecar_path(path));
  meta << side.dump(2) << "\n";
  if (!meta) throw Error("failed writing dataset sidecar for '" + path.string() + "'");
}

Dataset read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open dataset '" + path.string() + "'");
  char magic[sizeof(kDatasetMagic)];
  in.read(magic, sizeof(magic));
  if (!in || !std::equal(std::begin(magic), std::end(magic), std::begin(kDatasetMagic)))
    throw FormatError("'" + path.string() + "' is not a dataset container");
  const auto version = io::read<std::uint32_t>(in, "version");
  if (version != kDatasetVersion) throw FormatError("unsupported dataset version " + std::to_string(version));

  Dataset data;
  data.length = io::read<std::uint64_t>(in, "length");
  const auto n = io::read<std::uint64_t>(in, "count");
  data.classes = io::read<std::uint32_t>(in, "classes");
  data.seed = io::read<std::uint64_t>(in, "seed");
  const double sigma = io::read<double>(in, "sigma");
  if (data.length < 2 || n == 0 || data.length > (1u << 26) || n > (1u << 26)) throw FormatError("implausible header");
  data.signals.resize(n * data.length);
  data.labels.resize(n);
  io::read_array<double>(in, data.signals, "signals");
  io::read_array<std::uint16_t>(in, data.labels, "labels");
  for (auto label : data.labels)
    if (label >= data.classes) throw FormatError("label out of range in dataset");

  if (std::ifstream meta(sidecar_path(path)); meta) {
    try {
      auto side = json::parse(meta);
      if (side.contains("synthetic")) data.config = synthetic_config_from_json(side["synthetic"]);
    } catch (const json::exception& e) {
      throw FormatError("dataset sidecar is not valid JSON: " + std::string(e.what()));
    }
  }
  data.config.length = data.length;
  data.config.sigma = sigma;
  return data;
}

}  // namespace freqrise
