#include "freqrise/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "freqrise/error.hpp"
#include "freqrise/parallel.hpp"
#include "freqrise/rng.hpp"

namespace freqrise {
namespace {

using json = nlohmann::json;

double parse_double(std::string_view text) {
  std::string s(text);
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw InvalidArgument("invalid number '" + s + "' in schedule");
  return v;
}

void check_schedule(std::span<const double> schedule) {
  if (schedule.empty()) throw InvalidArgument("deletion schedule is empty");
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (!(schedule[i] >= 0.0 && schedule[i] <= 1.0)) throw InvalidArgument("deletion fractions must lie in [0, 1]");
    if (i > 0 && !(schedule[i] > schedule[i - 1]))
      throw InvalidArgument("deletion fractions must be strictly increasing");
  }
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::vector<std::size_t> rank_order(std::span<const double> relevance) {
  std::vector<std::size_t> order(relevance.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return relevance[a] > relevance[b]; });
  return order;
}

double relevance_rank_accuracy(std::span<const double> relevance, std::span<const std::size_t> ground_truth) {
  if (ground_truth.empty()) throw UndefinedMetric("relevance rank accuracy needs a non-empty ground truth");
  if (ground_truth.size() > relevance.size()) throw InvalidArgument("ground truth larger than the map");
  for (auto g : ground_truth)
    if (g >= relevance.size()) throw InvalidArgument("ground-truth position outside the map");
  const auto order = rank_order(relevance);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < ground_truth.size(); ++i)
    if (std::find(ground_truth.begin(), ground_truth.end(), order[i]) != ground_truth.end()) ++hits;
  return static_cast<double>(hits) / static_cast<double>(ground_truth.size());
}

std::vector<double> default_deletion_schedule() {
  std::vector<double> s;
  for (int i = 1; i <= 19; ++i) s.push_back(i / 20.0);
  return s;
}

std::vector<double> short_deletion_schedule() {
  std::vector<double> s;
  for (int i = 1; i <= 10; ++i) s.push_back(i / 20.0);
  return s;
}

std::vector<double> parse_schedule(std::string_view text) {
  std::vector<double> out;
  if (text.find(':') != std::string_view::npos) {
    auto a = text.find(':');
    auto b = text.find(':', a + 1);
    if (b == std::string_view::npos) throw InvalidArgument("range schedule must be start:stop:step");
    const double start = parse_double(text.substr(0, a));
    const double stop = parse_double(text.substr(a + 1, b - a - 1));
    const double step = parse_double(text.substr(b + 1));
    if (!(step > 0.0)) throw InvalidArgument("schedule step must be positive");
    for (std::size_t i = 0;; ++i) {
      const double v = start + static_cast<double>(i) * step;
      if (v > stop + 1e-9) break;
      out.push_back(std::round(v * 1e9) / 1e9);
    }
  } else {
    std::size_t pos = 0;
    while (pos <= text.size()) {
      auto next = text.find(',', pos);
      out.push_back(parse_double(text.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos)));
      if (next == std::string_view::npos) break;
      pos = next + 1;
    }
  }
  check_schedule(out);
  return out;
}

double faithfulness_auc(const DeletionCurve& curve) {
  if (curve.fractions.size() != curve.scores.size()) throw ShapeError("curve fractions and scores differ in length");
  std::vector<double> xs, ys;
  if (curve.fractions.empty() || curve.fractions.front() > 0.0) {
    xs.push_back(0.0);
    ys.push_back(curve.unmodified_score);
  }
  xs.insert(xs.end(), curve.fractions.begin(), curve.fractions.end());
  ys.insert(ys.end(), curve.scores.begin(), curve.scores.end());
  const double span = xs.back();
  if (span <= 0.0) return ys.front();
  double area = 0.0;
  for (std::size_t i = 1; i < xs.size(); ++i) area += 0.5 * (ys[i] + ys[i - 1]) * (xs[i] - xs[i - 1]);
  return area / span;
}

DeletionCurve deletion_curve(const Model& model, const TimeSeries& x, std::size_t true_class, const RelevanceMap& r,
                             std::span<const double> schedule) {
  check_schedule(schedule);
  const auto view = forward_transform(x, r.domain, r.window);
  if (view.shape != r.shape) throw ShapeError("relevance map shape does not match the signal in its domain");
  const MaskedInverse inverse(view);
  const auto order = rank_order(r.values);
  const std::size_t d = r.values.size();
  const std::size_t t = x.size();

  std::vector<double> signals(schedule.size() * t);
  std::vector<double> mask(d);
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    std::fill(mask.begin(), mask.end(), 1.0);
    const auto count = std::min(d, static_cast<std::size_t>(std::ceil(schedule[i] * static_cast<double>(d) - 1e-9)));
    for (std::size_t j = 0; j < count; ++j) mask[order[j]] = 0.0;
    inverse.apply(mask, std::span(signals).subspan(i * t, t));
  }

  DeletionCurve curve;
  curve.fractions.assign(schedule.begin(), schedule.end());
  const auto base = model.predict(x);
  if (true_class >= base.probabilities.size()) throw InvalidArgument("true class out of range");
  curve.unmodified_score = base.probabilities[true_class];
  for (const auto& out : model.predict(SignalBatch{signals, schedule.size(), t}))
    curve.scores.push_back(out.probabilities[true_class]);
  curve.auc = faithfulness_auc(curve);
  return curve;
}

DeletionCurve mean_curve(std::span<const DeletionCurve> curves) {
  if (curves.empty()) throw InvalidArgument("cannot average zero curves");
  DeletionCurve mean;
  mean.fractions = curves.front().fractions;
  mean.scores.assign(mean.fractions.size(), 0.0);
  for (const auto& c : curves) {
    if (c.fractions != mean.fractions) throw ShapeError("curves use different schedules");
    mean.unmodified_score += c.unmodified_score;
    for (std::size_t i = 0; i < c.scores.size(); ++i) mean.scores[i] += c.scores[i];
  }
  const auto n = static_cast<double>(curves.size());
  mean.unmodified_score /= n;
  for (double& s : mean.scores) s /= n;
  mean.auc = faithfulness_auc(mean);
  return mean;
}

double complexity_entropy(std::span<const double> relevance) {
  double total = 0.0;
  for (double v : relevance) {
    if (v < 0.0 || !std::isfinite(v)) throw InvalidArgument("entropy needs finite non-negative relevance");
    total += v;
  }
  if (!(total > 0.0)) throw UndefinedMetric("entropy of an all-zero relevance map is undefined");
  double h = 0.0;
  for (double v : relevance) {
    if (v <= 0.0) continue;
    const double q = v / total;
    h -= q * std::log(q);
  }
  return std::max(0.0, h);
}

RelevanceMap baseline_amplitude_map(const TimeSeries& x, Domain domain, const std::optional<WindowSpec>& window) {
  const auto view = forward_transform(x, domain, window);
  RelevanceMap r;
  r.domain = domain;
  r.shape = view.shape;
  r.window = view.window;
  r.origin_length = view.origin_length;
  r.values.reserve(view.coeffs.size());
  for (const auto& c : view.coeffs) r.values.push_back(std::abs(c));
  return r;
}

RelevanceMap baseline_random_map(const DomainShape& shape, std::uint64_t seed) {
  RelevanceMap r;
  r.shape = shape;
  r.seed = seed;
  r.values.resize(shape.size());
  const auto key = derive_seed(seed, "random-baseline");
  for (std::size_t e = 0; e < r.values.size(); ++e) r.values[e] = to_unit(hash_combine(key, e));
  return r;
}

RelevanceMap baseline_random_map(std::size_t length, Domain domain, const std::optional<WindowSpec>& window,
                                 std::uint64_t seed) {
  RelevanceMap r = baseline_random_map(domain_shape(length, domain, window), seed);
  r.domain = domain;
  r.window = domain == Domain::TimeFrequency ? window : std::nullopt;
  r.origin_length = length;
  return r;
}

EvalReport evaluate(std::string method, const Model& model, std::span<const EvalSample> samples,
                    std::span<const double> schedule, std::size_t threads) {
  if (samples.empty()) throw InvalidArgument("evaluation needs at least one sample");
  check_schedule(schedule);
  std::vector<DeletionCurve> curves(samples.size());
  parallel_for(samples.size(), model.concurrent_safe() ? threads : 1, [&](std::size_t i) {
    curves[i] = deletion_curve(model, samples[i].signal, samples[i].true_class, samples[i].map, schedule);
  });

  EvalReport report;
  report.method = std::move(method);
  report.domain = std::string(to_string(samples.front().map.domain));
  report.samples = samples.size();
  report.curve = mean_curve(curves);
  report.faithfulness_auc = report.curve.auc;

  double loc = 0.0;
  double entropy = 0.0;
  std::size_t entropy_count = 0;
  for (const auto& s : samples) {
    if (!s.ground_truth.empty()) {
      loc += relevance_rank_accuracy(s.map.values, s.ground_truth);
      ++report.localized_samples;
    }
    try {
      entropy += complexity_entropy(s.map.values);
      ++entropy_count;
    } catch (const UndefinedMetric&) {
    }
  }
  if (report.localized_samples > 0) report.localization = loc / static_cast<double>(report.localized_samples);
  report.complexity = entropy_count > 0 ? entropy / static_cast<double>(entropy_count) : 0.0;
  return report;
}

json to_json(const DeletionCurve& curve) {
  return json{{"fractions", curve.fractions},
              {"scores", curve.scores},
              {"unmodified_score", curve.unmodified_score},
              {"auc", curve.auc}};
}

json to_json(const EvalReport& report) {
  json j{{"method", report.method},
         {"domain", report.domain},
         {"faithfulness_auc", report.faithfulness_auc},
         {"complexity", report.complexity},
         {"curve", to_json(report.curve)},
         {"samples", report.samples},
         {"localized_samples", report.localized_samples},
         {"dataset", report.dataset},
         {"model", report.model},
         {"config_hash", report.config_hash}};
  j["localization"] = report.localization ? json(*report.localization) : json(nullptr);
  return j;
}

void write_reports_json(std::span<const EvalReport> reports, const std::filesystem::path& path) {
  json j = json::array();
  for (const auto& r : reports) j.push_back(to_json(r));
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << json{{"reports", j}}.dump(2) << "\n";
}

void write_reports_csv(std::span<const EvalReport> reports, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << "method,domain,metric,value,samples,config_hash\n";
  for (const auto& r : reports) {
    auto row = [&](const char* metric, double v) {
      out << csv_field(r.method) << "," << r.domain << "," << metric << "," << fmt(v) << "," << r.samples << ","
          << r.config_hash << "\n";
    };
    if (r.localization) row("localization", *r.localization);
    row("faithfulness_auc", r.faithfulness_auc);
    row("complexity", r.complexity);
  }
}

void write_curves_csv(std::span<const EvalReport> reports, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << "method,domain,fraction,score\n";
  for (const auto& r : reports) {
    out << csv_field(r.method) << "," << r.domain << ",0," << fmt(r.curve.unmodified_score) << "\n";
    for (std::size_t i = 0; i < r.curve.fractions.size(); ++i)
      out << csv_field(r.method) << "," << r.domain << "," << fmt(r.curve.fractions[i]) << ","
          << fmt(r.curve.scores[i]) << "\n";
  }
}

void write_curves_svg(std::span<const EvalReport> reports, const std::filesystem::path& path, std::string_view title) {
  constexpr double kWidth = 640, kHeight = 400, kLeft = 60, kRight = 160, kTop = 40, kBottom = 50;
  constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2"};
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  double max_x = 0.0;
  for (const auto& r : reports)
    if (!r.curve.fractions.empty()) max_x = std::max(max_x, r.curve.fractions.back());
  if (max_x <= 0.0) max_x = 1.0;
  auto px = [&](double f) { return kLeft + plot_w * f / max_x; };
  auto py = [&](double s) { return kTop + plot_h * (1.0 - std::clamp(s, 0.0, 1.0)); };

  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kLeft << "\" y=\"24\" font-size=\"14\">" << xml_escape(title) << "</text>\n";
  out << "<line x1=\"" << kLeft << "\" y1=\"" << py(0) << "\" x2=\"" << px(max_x) << "\" y2=\"" << py(0)
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << kLeft << "\" y1=\"" << py(0) << "\" x2=\"" << kLeft << "\" y2=\"" << py(1)
      << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double v = i / 4.0;
    out << "<text x=\"" << kLeft - 8 << "\" y=\"" << py(v) + 4 << "\" text-anchor=\"end\">" << fmt(v) << "</text>\n";
    out << "<text x=\"" << px(v * max_x) << "\" y=\"" << py(0) + 18 << "\" text-anchor=\"middle\">"
        << fmt(v * max_x) << "</text>\n";
  }
  out << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 10
      << "\" text-anchor=\"middle\">fraction deleted</text>\n";
  out << "<text x=\"16\" y=\"" << kTop + plot_h / 2 << "\" transform=\"rotate(-90 16 " << kTop + plot_h / 2
      << ")\" text-anchor=\"middle\">mean true-class probability</text>\n";
  for (std::size_t k = 0; k < reports.size(); ++k) {
    const auto& r = reports[k];
    const char* color = kColors[k % std::size(kColors)];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"" << px(0) << ","
        << py(r.curve.unmodified_score);
    for (std::size_t i = 0; i < r.curve.fractions.size(); ++i)
      out << " " << px(r.curve.fractions[i]) << "," << py(r.curve.scores[i]);
    out << "\"/>\n";
    const double ly = kTop + 16.0 * static_cast<double>(k);
    out << "<line x1=\"" << kWidth - kRight + 10 << "\" y1=\"" << ly << "\" x2=\"" << kWidth - kRight + 30
        << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << kWidth - kRight + 36 << "\" y=\"" << ly + 4 << "\">"
        << xml_escape(r.method + " (" + r.domain + ")") << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace freqrise
