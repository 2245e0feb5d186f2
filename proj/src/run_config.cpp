#include "freqrise/run_config.hpp"

#include <cstdio>
#include <fstream>

#include "freqrise/error.hpp"
#include "freqrise/rng.hpp"

namespace freqrise {

using json = nlohmann::json;

json to_json(const TrainConfig& cfg) {
  return json{{"learning_rate", cfg.learning_rate}, {"batch_size", cfg.batch_size}, {"epochs", cfg.epochs},
              {"seed", cfg.seed},                   {"hidden", cfg.hidden},         {"beta1", cfg.beta1},
              {"beta2", cfg.beta2},                 {"epsilon", cfg.epsilon}};
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig cfg;
  cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
  cfg.batch_size = j.value("batch_size", cfg.batch_size);
  cfg.epochs = j.value("epochs", cfg.epochs);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.hidden = j.value("hidden", cfg.hidden);
  cfg.beta1 = j.value("beta1", cfg.beta1);
  cfg.beta2 = j.value("beta2", cfg.beta2);
  cfg.epsilon = j.value("epsilon", cfg.epsilon);
  return cfg;
}

json to_json(const ExplainConfig& cfg) {
  json j{{"domain", std::string(to_string(cfg.domain))},
         {"n_masks", cfg.n_masks},
         {"p", cfg.p},
         {"shift", cfg.shift},
         {"output", std::string(to_string(cfg.output))},
         {"seed", cfg.seed},
         {"batch_size", cfg.batch_size},
         {"threads", cfg.threads}};
  j["window"] = cfg.window ? json(to_string(*cfg.window)) : json(nullptr);
  j["grid"] = cfg.grid ? json(to_string(*cfg.grid)) : json(nullptr);
  return j;
}

ExplainConfig explain_config_from_json(const json& j) {
  ExplainConfig cfg;
  if (j.contains("domain")) cfg.domain = parse_domain(j["domain"].get<std::string>());
  cfg.n_masks = j.value("n_masks", cfg.n_masks);
  cfg.p = j.value("p", cfg.p);
  cfg.shift = j.value("shift", cfg.shift);
  if (j.contains("output")) cfg.output = parse_output_kind(j["output"].get<std::string>());
  cfg.seed = j.value("seed", cfg.seed);
  cfg.batch_size = j.value("batch_size", cfg.batch_size);
  cfg.threads = j.value("threads", cfg.threads);
  if (j.contains("window") && !j["window"].is_null()) cfg.window = parse_window(j["window"].get<std::string>());
  if (j.contains("grid") && !j["grid"].is_null()) cfg.grid = parse_grid(j["grid"].get<std::string>());
  return cfg;
}

json to_json(const RunConfig& cfg) {
  return json{{"synthetic", to_json(cfg.synthetic)},
              {"train", to_json(cfg.train)},
              {"explain", to_json(cfg.explain)},
              {"postprocess", {{"quantile", cfg.postprocess.quantile}}},
              {"schedule", cfg.schedule},
              {"output_dir", cfg.output_dir.generic_string()},
              {"seed", cfg.seed}};
}

RunConfig run_config_from_json(const json& j) {
  if (!j.is_object()) throw FormatError("run config must be a JSON object");
  try {
    RunConfig cfg;
    if (j.contains("synthetic")) cfg.synthetic = synthetic_config_from_json(j["synthetic"]);
    if (j.contains("train")) cfg.train = train_config_from_json(j["train"]);
    if (j.contains("explain")) cfg.explain = explain_config_from_json(j["explain"]);
    if (j.contains("postprocess")) cfg.postprocess.quantile = j["postprocess"].value("quantile", 0.0);
    cfg.schedule = j.value("schedule", cfg.schedule);
    if (j.contains("output_dir")) cfg.output_dir = j["output_dir"].get<std::string>();
    cfg.seed = j.value("seed", cfg.seed);
    return cfg;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed run config: ") + e.what());
  }
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return run_config_from_json(j);
}

std::string content_hash(const json& j) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(tag_hash(j.dump())));
  return buf;
}

}  // namespace freqrise
