#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "freqrise/explain.hpp"
#include "freqrise/models.hpp"

namespace freqrise {

// Element indices by descending relevance, ties by ascending index.
std::vector<std::size_t> rank_order(std::span<const double> relevance);

// |top-K ∩ GT| / |GT| with K = |GT|. Throws UndefinedMetric for an empty GT.
double relevance_rank_accuracy(std::span<const double> relevance, std::span<const std::size_t> ground_truth);

// 0.05, 0.10, ..., 0.95 and the shorter 0.05 ... 0.50 variant.
std::vector<double> default_deletion_schedule();
std::vector<double> short_deletion_schedule();
// "start:stop:step" or a comma-separated list; must be strictly increasing in [0, 1].
std::vector<double> parse_schedule(std::string_view text);

struct DeletionCurve {
  std::vector<double> fractions;
  std::vector<double> scores;   // true-class probability after each deletion
  double unmodified_score = 0;  // at fraction 0
  double auc = 0;
};

// Trapezoidal area over (0, unmodified) followed by the schedule, divided by
// the largest fraction: the mean height of the curve, in [0, 1].
double faithfulness_auc(const DeletionCurve& curve);

// Zeroes the ceil(f * D) most relevant elements of g(x) in the map's domain,
// inverse-transforms, and records the softmax probability of `true_class`.
DeletionCurve deletion_curve(const Model& model, const TimeSeries& x, std::size_t true_class, const RelevanceMap& r,
                             std::span<const double> schedule);

// Pointwise mean of curves on a shared schedule; AUC recomputed.
DeletionCurve mean_curve(std::span<const DeletionCurve> curves);

// Shannon entropy (nats) of r / sum(r). Throws UndefinedMetric for an
// all-zero map and InvalidArgument for negative entries.
double complexity_entropy(std::span<const double> relevance);

// |g(x)| elementwise.
RelevanceMap baseline_amplitude_map(const TimeSeries& x, Domain domain,
                                    const std::optional<WindowSpec>& window = std::nullopt);
// i.i.d. U(0, 1) relevance over a shape.
RelevanceMap baseline_random_map(const DomainShape& shape, std::uint64_t seed);
// Same, carrying the domain metadata needed for deletion curves.
RelevanceMap baseline_random_map(std::size_t length, Domain domain, const std::optional<WindowSpec>& window,
                                 std::uint64_t seed);

// One explained sample of a dataset-level evaluation.
struct EvalSample {
  TimeSeries signal;
  std::size_t true_class = 0;
  std::vector<std::size_t> ground_truth;  // element positions; empty when unknown
  RelevanceMap map;
};

struct EvalReport {
  std::string method;
  std::string domain;
  std::optional<double> localization;  // mean rank accuracy over samples with ground truth
  double faithfulness_auc = 0;
  double complexity = 0;
  DeletionCurve curve;
  std::size_t samples = 0;
  std::size_t localized_samples = 0;
  std::string dataset;
  std::string model;
  std::string config_hash;
};

EvalReport evaluate(std::string method, const Model& model, std::span<const EvalSample> samples,
                    std::span<const double> schedule, std::size_t threads = 1);

nlohmann::json to_json(const DeletionCurve& curve);
nlohmann::json to_json(const EvalReport& report);

// JSON holds the full reports; CSV one row per method x domain x metric.
void write_reports_json(std::span<const EvalReport> reports, const std::filesystem::path& path);
void write_reports_csv(std::span<const EvalReport> reports, const std::filesystem::path& path);
// Long format: method, domain, fraction, score (fraction 0 = unmodified).
void write_curves_csv(std::span<const EvalReport> reports, const std::filesystem::path& path);
// Minimal line plot of the deletion curves.
void write_curves_svg(std::span<const EvalReport> reports, const std::filesystem::path& path,
                      std::string_view title = "Deletion curves");

}  // namespace freqrise
