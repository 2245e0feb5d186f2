#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "freqrise/mlp.hpp"
#include "freqrise/transforms.hpp"

namespace freqrise {

struct IntRange {
  int lo = 0;
  int hi = 0;  // inclusive

  bool operator==(const IntRange&) const = default;
};

// Sum-of-sinusoids benchmark whose class is the subset of target
// frequencies present in the signal.
struct SyntheticConfig {
  std::size_t length = 2560;
  double sigma = 0.0;
  std::vector<std::size_t> k_star = {5, 16, 32, 53};
  IntRange j_range = {10, 50};
  IntRange distractor_range = {1, 59};
  double amplitude = 1.0;
  // Forces every sample's subset (used for controlled examples).
  std::optional<std::vector<std::size_t>> forced_subset;

  bool operator==(const SyntheticConfig&) const = default;
};

void validate(const SyntheticConfig& cfg);
nlohmann::json to_json(const SyntheticConfig& cfg);
SyntheticConfig synthetic_config_from_json(const nlohmann::json& j);

std::size_t num_classes(const SyntheticConfig& cfg);

// Bit i of the label is set when k_star[i] is in the subset.
std::size_t label_of(std::span<const std::size_t> subset, std::span<const std::size_t> k_star);
std::vector<std::size_t> subset_of(std::size_t label, std::span<const std::size_t> k_star);

struct LabeledSample {
  TimeSeries signal;
  std::size_t label = 0;
  std::vector<std::size_t> subset;
  std::vector<std::size_t> ground_truth_bins;
};

// Sample i depends only on (cfg, seed, i).
LabeledSample gen_synthetic_sample(const SyntheticConfig& cfg, std::uint64_t seed, std::size_t index);
std::vector<LabeledSample> gen_synthetic(const SyntheticConfig& cfg, std::size_t n, std::uint64_t seed);

// Contiguous storage of equal-length labeled signals.
struct Dataset {
  std::size_t length = 0;
  std::size_t classes = 0;
  std::vector<double> signals;  // rows x length
  std::vector<std::uint16_t> labels;
  std::uint64_t seed = 0;
  SyntheticConfig config;

  std::size_t size() const noexcept { return labels.size(); }
  std::span<const double> row(std::size_t i) const {
    return std::span(signals).subspan(i * length, length);
  }
  TimeSeries sample(std::size_t i) const;
  SignalBatch batch() const { return {signals, size(), length}; }
  LabeledBatch labeled() const { return {batch(), labels}; }
};

Dataset make_synthetic_dataset(const SyntheticConfig& cfg, std::size_t n, std::uint64_t seed);

// Binary container: magic, version, header {T, n, C, seed, sigma}, row-major
// float64 signals, uint16 labels. The sidecar `<path>.json` holds the full
// generator configuration. `extra` is merged into the sidecar.
void write_dataset(const Dataset& data, const std::filesystem::path& path,
                   const nlohmann::json& extra = nlohmann::json::object());
Dataset read_dataset(const std::filesystem::path& path);

std::filesystem::path sidecar_path(const std::filesystem::path& path);

}  // namespace freqrise
