#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "freqrise/datasets.hpp"
#include "freqrise/explain.hpp"
#include "freqrise/mlp.hpp"

namespace freqrise {

// Everything a CLI run depends on, serialized as one JSON document.
struct RunConfig {
  SyntheticConfig synthetic;
  TrainConfig train;
  ExplainConfig explain;
  PostprocessConfig postprocess;
  std::vector<double> schedule;  // empty: default deletion schedule
  std::filesystem::path output_dir = ".";
  std::uint64_t seed = 0;
};

nlohmann::json to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

nlohmann::json to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExplainConfig& cfg);
ExplainConfig explain_config_from_json(const nlohmann::json& j);

// 16 hex digits of FNV-1a over the compact dump of `j` (keys sorted).
std::string content_hash(const nlohmann::json& j);
inline std::string config_hash(const RunConfig& cfg) { return content_hash(to_json(cfg)); }

}  // namespace freqrise
