#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "freqrise/masks.hpp"
#include "freqrise/models.hpp"
#include "freqrise/transforms.hpp"

namespace freqrise {

// Which model output is averaged over the masks.
enum class OutputKind { Logit, Probability };

std::string_view to_string(OutputKind k);
OutputKind parse_output_kind(std::string_view text);  // "logit" | "probability"

struct ExplainConfig {
  Domain domain = Domain::Frequency;
  std::optional<WindowSpec> window;  // required for TimeFrequency
  std::size_t n_masks = 3000;
  double p = 0.5;
  std::optional<GridSpec> grid;
  bool shift = false;
  OutputKind output = OutputKind::Logit;
  std::uint64_t seed = 0;
  std::size_t batch_size = 64;
  std::size_t threads = 1;  // 0: default_thread_count()
};

void validate(const ExplainConfig& cfg);

// Non-negative relevance of every element of an explanation domain for one
// class, plus what is needed to reproduce or re-apply it.
struct RelevanceMap {
  Domain domain = Domain::Frequency;
  DomainShape shape;
  std::vector<double> values;
  std::size_t class_index = 0;
  std::size_t n_masks = 0;
  OutputKind output_kind = OutputKind::Logit;
  std::uint64_t seed = 0;
  double p = 0.5;
  std::optional<GridSpec> grid;
  std::optional<WindowSpec> window;
  std::size_t origin_length = 0;
};

// Monte-Carlo relevance: each mask M_n is applied in the explanation domain,
// the masked signal g^-1(g(x) .* M_n) is scored by the model, and
//   R(l) = sum_n y_c(M_n) M_n(l) / max(sum_n M_n(l), 1e-12),
// clamped at zero. Aggregation runs in mask order, so the result does not
// depend on the thread count.
RelevanceMap explain(const Model& model, const TimeSeries& x, std::size_t class_index, const ExplainConfig& cfg);

// Conditional expectation E[y_c(M) | M(l) = 1] by enumerating all 2^D binary
// masks of an i.i.d. Bernoulli(p) distribution. D must not exceed
// kMaxEnumerableElements.
inline constexpr std::size_t kMaxEnumerableElements = 20;

RelevanceMap exact_relevance(const Model& model, const TimeSeries& x, std::size_t class_index, Domain domain,
                             double p = 0.5, OutputKind output = OutputKind::Probability,
                             const std::optional<WindowSpec>& window = std::nullopt);

struct PostprocessConfig {
  double quantile = 0.0;  // in [0, 1)
};

// Nearest-rank quantile: the element at sorted index floor(level * n).
double nearest_rank_quantile(std::span<const double> values, double level);

// Zeroes every entry below the nearest-rank quantile; the rest is kept as is.
RelevanceMap postprocess_quantile(const RelevanceMap& r, const PostprocessConfig& cfg);

nlohmann::json metadata(const RelevanceMap& r);

// CSV: one value per line for 1-D maps, one row per frame for 2-D maps.
// Metadata (merged with `extra`) goes to `<path>.json`.
void write_relevance_map(const RelevanceMap& r, const std::filesystem::path& path,
                         const nlohmann::json& extra = nlohmann::json::object());
RelevanceMap read_relevance_map(const std::filesystem::path& path, nlohmann::json* sidecar = nullptr);

}  // namespace freqrise
