#include "freqrise/explain.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "freqrise/datasets.hpp"
#include "freqrise/error.hpp"
#include "freqrise/parallel.hpp"

namespace freqrise {
namespace {

using json = nlohmann::json;

constexpr double kMaskSumFloor = 1e-12;

// Class score of every row of a logit block.
void score_rows(const std::vector<double>& logits, std::size_t rows, std::size_t class_index, OutputKind kind,
                std::span<double> out) {
  const std::size_t classes = logits.size() / rows;
  if (classes * rows != logits.size() || class_index >= classes)
    throw ShapeError("model returned an unexpected number of logits");
  for (std::size_t i = 0; i < rows; ++i) {
    std::span<const double> row(logits.data() + i * classes, classes);
    out[i] = kind == OutputKind::Logit ? row[class_index] : softmax(row)[class_index];
  }
}

std::size_t probe_classes(const Model& model, const TimeSeries& x) {
  auto z = model.logits(SignalBatch{x.samples, 1, x.size()});
  if (z.size() < 2) throw ShapeError("model must produce at least two logits");
  return z.size();
}

RelevanceMap make_map(const SpectralView& view, std::size_t class_index, OutputKind kind) {
  RelevanceMap r;
  r.domain = view.domain;
  r.shape = view.shape;
  r.class_index = class_index;
  r.output_kind = kind;
  r.window = view.window;
  r.origin_length = view.origin_length;
  return r;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string_view to_string(OutputKind k) { return k == OutputKind::Logit ? "logit" : "probability"; }

OutputKind parse_output_kind(std::string_view text) {
  if (text == "logit" || text == "logits") return OutputKind::Logit;
  if (text == "probability" || text == "prob" || text == "probabilities") return OutputKind::Probability;
  throw InvalidArgument("unknown output kind '" + std::string(text) + "'");
}

void validate(const ExplainConfig& cfg) {
  if (cfg.n_masks == 0) throw InvalidArgument("number of masks must be at least 1");
  if (!(cfg.p > 0.0 && cfg.p < 1.0)) throw InvalidArgument("Bernoulli probability must lie strictly inside (0, 1)");
  if (cfg.batch_size == 0) throw InvalidArgument("batch size must be at least 1");
  if (cfg.domain == Domain::TimeFrequency && !cfg.window)
    throw InvalidWindow("time-frequency explanations need a window");
  if (cfg.window) validate(*cfg.window);
}

RelevanceMap explain(const Model& model, const TimeSeries& x, std::size_t class_index, const ExplainConfig& cfg) {
  validate(cfg);
  validate(x);
  const auto view = forward_transform(x, cfg.domain, cfg.window);
  const MaskedInverse inverse(view);
  const MaskSampler sampler({view.shape, cfg.p, cfg.grid, cfg.shift, cfg.seed});

  const std::size_t classes = probe_classes(model, x);
  if (class_index >= classes)
    throw InvalidArgument("class " + std::to_string(class_index) + " out of range for a " + std::to_string(classes) +
                          "-class model");

  const std::size_t d = view.shape.size();
  const std::size_t t = x.size();
  const std::size_t batch = cfg.batch_size;
  const std::size_t workers = cfg.threads == 0 ? default_thread_count() : cfg.threads;
  const std::size_t chunks_per_round = std::max<std::size_t>(1, workers);
  const std::size_t round_size = chunks_per_round * batch;

  std::vector<double> masks(round_size * d);
  std::vector<double> signals(round_size * t);
  std::vector<double> scores(round_size);
  // Running weighted mean of y per element; equals sum(y M) / sum(M) but is
  // exact when the scores are constant.
  std::vector<double> mean(d, 0.0);
  std::vector<double> coverage(d, 0.0);

  for (std::size_t round = 0; round < cfg.n_masks; round += round_size) {
    const std::size_t in_round = std::min(round_size, cfg.n_masks - round);
    const std::size_t chunks = (in_round + batch - 1) / batch;

    auto chunk_rows = [&](std::size_t c) { return std::min(batch, in_round - c * batch); };
    auto query = [&](std::size_t c) {
      const std::size_t rows = chunk_rows(c);
      const std::size_t first = c * batch;
      try {
        auto z = model.logits(SignalBatch{std::span(signals).subspan(first * t, rows * t), rows, t});
        score_rows(z, rows, class_index, cfg.output, std::span(scores).subspan(first, rows));
      } catch (const ExplainFailed&) {
        throw;
      } catch (const std::exception& e) {
        throw ExplainFailed(round + first, "model query failed at mask " + std::to_string(round + first) + ": " + e.what());
      }
    };

    parallel_for(chunks, workers, [&](std::size_t c) {
      const std::size_t rows = chunk_rows(c);
      for (std::size_t i = c * batch; i < c * batch + rows; ++i) {
        auto mask = std::span(masks).subspan(i * d, d);
        sampler.generate(round + i, mask);
        inverse.apply(mask, std::span(signals).subspan(i * t, t));
      }
      if (model.concurrent_safe()) query(c);
    });
    if (!model.concurrent_safe())
      for (std::size_t c = 0; c < chunks; ++c) query(c);

    for (std::size_t i = 0; i < in_round; ++i) {
      const double y = scores[i];
      if (!std::isfinite(y))
        throw ExplainFailed(round + i, "model returned a non-finite score for mask " + std::to_string(round + i));
      const double* m = masks.data() + i * d;
      for (std::size_t e = 0; e < d; ++e) {
        if (m[e] == 0.0) continue;
        coverage[e] += m[e];
        mean[e] += (m[e] / coverage[e]) * (y - mean[e]);
      }
    }
  }

  RelevanceMap r = make_map(view, class_index, cfg.output);
  r.n_masks = cfg.n_masks;
  r.seed = cfg.seed;
  r.p = cfg.p;
  r.grid = cfg.grid;
  r.values.resize(d);
  for (std::size_t e = 0; e < d; ++e) {
    const double v = coverage[e] < kMaskSumFloor ? mean[e] * coverage[e] / kMaskSumFloor : mean[e];
    r.values[e] = std::max(0.0, v);
  }
  return r;
}

RelevanceMap exact_relevance(const Model& model, const TimeSeries& x, std::size_t class_index, Domain domain,
                             double p, OutputKind output, const std::optional<WindowSpec>& window) {
  if (!(p > 0.0 && p < 1.0)) throw InvalidArgument("Bernoulli probability must lie strictly inside (0, 1)");
  validate(x);
  const auto view = forward_transform(x, domain, window);
  const std::size_t d = view.shape.size();
  if (d > kMaxEnumerableElements)
    throw TooLargeToEnumerate("domain has " + std::to_string(d) + " elements; enumeration is limited to " +
                              std::to_string(kMaxEnumerableElements));
  const MaskedInverse inverse(view);
  const std::size_t classes = probe_classes(model, x);
  if (class_index >= classes) throw InvalidArgument("class index out of range");

  const std::size_t total = std::size_t{1} << d;
  const std::size_t t = x.size();
  constexpr std::size_t kChunk = 256;
  std::vector<double> mask(d);
  std::vector<double> signals(kChunk * t);
  std::vector<double> scores(kChunk);
  std::vector<double> relevance(d, 0.0);

  for (std::size_t start = 0; start < total; start += kChunk) {
    const std::size_t rows = std::min(kChunk, total - start);
    for (std::size_t i = 0; i < rows; ++i) {
      const std::size_t bits = start + i;
      for (std::size_t e = 0; e < d; ++e) mask[e] = (bits >> e) & 1U ? 1.0 : 0.0;
      inverse.apply(mask, std::span(signals).subspan(i * t, t));
    }
    auto z = model.logits(SignalBatch{std::span(signals).subspan(0, rows * t), rows, t});
    score_rows(z, rows, class_index, output, scores);
    for (std::size_t i = 0; i < rows; ++i) {
      const std::size_t bits = start + i;
      const auto ones = static_cast<double>(std::popcount(bits));
      const double prob = std::pow(p, ones) * std::pow(1.0 - p, static_cast<double>(d) - ones);
      for (std::size_t e = 0; e < d; ++e)
        if ((bits >> e) & 1U) relevance[e] += scores[i] * prob;
    }
  }

  RelevanceMap r = make_map(view, class_index, output);
  r.n_masks = total;
  r.p = p;
  r.values.resize(d);
  for (std::size_t e = 0; e < d; ++e) r.values[e] = std::max(0.0, relevance[e] / p);
  return r;
}

double nearest_rank_quantile(std::span<const double> values, double level) {
  if (values.empty()) throw InvalidArgument("quantile of an empty map");
  if (!(level >= 0.0 && level < 1.0)) throw InvalidArgument("quantile level must lie in [0, 1)");
  std::vector<double> sorted(values.begin(), values.end());
  const auto n = sorted.size();
  // The 1e-9 guards against level * n landing just below an integer.
  auto index = static_cast<std::size_t>(std::floor(level * static_cast<double>(n) + 1e-9));
  index = std::min(index, n - 1);
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(index), sorted.end());
  return sorted[index];
}

RelevanceMap postprocess_quantile(const RelevanceMap& r, const PostprocessConfig& cfg) {
  const double q = nearest_rank_quantile(r.values, cfg.quantile);
  RelevanceMap out = r;
  for (double& v : out.values)
    if (v < q) v = 0.0;
  return out;
}

json metadata(const RelevanceMap& r) {
  json j{{"domain", to_string(r.domain)},
         {"class", r.class_index},
         {"N", r.n_masks},
         {"p", r.p},
         {"seed", r.seed},
         {"output_kind", to_string(r.output_kind)},
         {"shape", {r.shape.rows, r.shape.cols}},
         {"origin_length", r.origin_length}};
  j["grid"] = r.grid ? json(to_string(*r.grid)) : json(nullptr);
  j["window"] = r.window ? json(to_string(*r.window)) : json(nullptr);
  return j;
}

void write_relevance_map(const RelevanceMap& r, const std::filesystem::path& path, const json& extra) {
  if (r.values.size() != r.shape.size()) throw ShapeError("relevance values do not match the map shape");
  {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    for (std::size_t row = 0; row < r.shape.rows; ++row) {
      if (r.shape.rows == 1) {
        for (std::size_t c = 0; c < r.shape.cols; ++c) out << format_double(r.values[c]) << "\n";
      } else {
        for (std::size_t c = 0; c < r.shape.cols; ++c) {
          if (c) out << ",";
          out << format_double(r.values[row * r.shape.cols + c]);
        }
        out << "\n";
      }
    }
    if (!out) throw Error("failed writing '" + path.string() + "'");
  }
  json side = metadata(r);
  for (auto it = extra.begin(); it != extra.end(); ++it) side[it.key()] = it.value();
  std::ofstream meta(sidecar_path(path));
  meta << side.dump(2) << "\n";
  if (!meta) throw Error("failed writing map sidecar for '" + path.string() + "'");
}

RelevanceMap read_relevance_map(const std::filesystem::path& path, json* sidecar) {
  std::ifstream meta(sidecar_path(path));
  if (!meta) throw Error("missing sidecar for relevance map '" + path.string() + "'");
  json side;
  try {
    side = json::parse(meta);
  } catch (const json::exception& e) {
    throw FormatError("map sidecar is not valid JSON: " + std::string(e.what()));
  }

  RelevanceMap r;
  try {
    r.domain = parse_domain(side.at("domain").get<std::string>());
    r.class_index = side.at("class").get<std::size_t>();
    r.n_masks = side.at("N").get<std::size_t>();
    r.p = side.at("p").get<double>();
    r.seed = side.at("seed").get<std::uint64_t>();
    r.output_kind = parse_output_kind(side.at("output_kind").get<std::string>());
    r.shape = {side.at("shape").at(0).get<std::size_t>(), side.at("shape").at(1).get<std::size_t>()};
    r.origin_length = side.at("origin_length").get<std::size_t>();
    if (side.contains("grid") && !side["grid"].is_null()) r.grid = parse_grid(side["grid"].get<std::string>());
    if (side.contains("window") && !side["window"].is_null())
      r.window = parse_window(side["window"].get<std::string>());
  } catch (const json::exception& e) {
    throw FormatError("map sidecar is missing fields: " + std::string(e.what()));
  }

  std::ifstream in(path);
  if (!in) throw Error("cannot open relevance map '" + path.string() + "'");
  std::string line;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      if (cell.empty()) continue;
      try {
        r.values.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw FormatError("non-numeric value '" + cell + "' in relevance map");
      }
    }
  }
  if (r.values.size() != r.shape.size()) throw FormatError("relevance map CSV does not match its declared shape");
  if (sidecar) *sidecar = std::move(side);
  return r;
}

}  // namespace freqrise
