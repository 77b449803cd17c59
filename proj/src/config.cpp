#include "kesa/config.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace kesa {

using json = nlohmann::ordered_json;

namespace {

const std::set<std::string> kKnownKeys = {
    "lexicon", "train", "valid", "test", "output_dir",
    "gamma", "mode", "tasks", "k_negatives", "learning_rate",
    "batch_size", "epochs", "seeds", "dim", "max_len",
    "min_freq", "dropout", "adam_beta1", "adam_beta2", "adam_eps",
};

template <typename T>
T field(const json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("bad value for '" + key + "'");
  }
}

void require_file(const std::string& path, const std::string& key) {
  if (path.empty()) throw ConfigError("missing required path '" + key + "'");
  if (!std::filesystem::exists(path))
    throw ConfigError("'" + key + "' does not exist: " + path);
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, value] : j.items())
    if (!kKnownKeys.count(key)) throw ConfigError("unknown config key '" + key + "'");

  RunConfig cfg;
  cfg.lexicon_path = field<std::string>(j, "lexicon", "");
  cfg.train_path = field<std::string>(j, "train", "");
  cfg.valid_path = field<std::string>(j, "valid", "");
  cfg.test_path = field<std::string>(j, "test", "");
  cfg.output_dir = field<std::string>(j, "output_dir", "");

  TrainingConfig& t = cfg.training;
  t.gamma = field<double>(j, "gamma", t.gamma);
  t.k_negatives = field<std::size_t>(j, "k_negatives", t.k_negatives);
  t.learning_rate = field<double>(j, "learning_rate", t.learning_rate);
  t.batch_size = field<std::size_t>(j, "batch_size", t.batch_size);
  t.epochs = field<std::size_t>(j, "epochs", t.epochs);
  t.seeds = field<std::vector<std::uint64_t>>(j, "seeds", t.seeds);
  t.dim = field<std::size_t>(j, "dim", t.dim);
  t.max_len = field<std::size_t>(j, "max_len", t.max_len);
  t.min_freq = field<std::size_t>(j, "min_freq", t.min_freq);
  t.dropout = field<double>(j, "dropout", t.dropout);
  t.adam_beta1 = field<double>(j, "adam_beta1", t.adam_beta1);
  t.adam_beta2 = field<double>(j, "adam_beta2", t.adam_beta2);
  t.adam_eps = field<double>(j, "adam_eps", t.adam_eps);

  const std::string mode = field<std::string>(j, "mode", "conditional");
  if (mode == "joint")
    t.mode = CombinationMode::joint;
  else if (mode == "conditional")
    t.mode = CombinationMode::conditional;
  else
    throw ConfigError("mode must be 'joint' or 'conditional'");

  if (j.contains("tasks")) {
    t.use_swc = false;
    t.use_csp = false;
    const auto tasks = field<std::vector<std::string>>(j, "tasks", {});
    for (const std::string& task : tasks) {
      if (task == "SWC")
        t.use_swc = true;
      else if (task == "CSP")
        t.use_csp = true;
      else
        throw ConfigError("unknown task '" + task + "' (want SWC or CSP)");
    }
  }

  t.validate();
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  RunConfig cfg = parse_run_config(buf.str());

  require_file(cfg.lexicon_path, "lexicon");
  require_file(cfg.train_path, "train");
  require_file(cfg.valid_path, "valid");
  require_file(cfg.test_path, "test");
  if (cfg.output_dir.empty()) throw ConfigError("missing required path 'output_dir'");
  return cfg;
}

std::string run_config_to_json(const RunConfig& cfg) {
  const TrainingConfig& t = cfg.training;
  json j;
  j["lexicon"] = cfg.lexicon_path;
  j["train"] = cfg.train_path;
  j["valid"] = cfg.valid_path;
  j["test"] = cfg.test_path;
  j["output_dir"] = cfg.output_dir;
  j["gamma"] = t.gamma;
  j["mode"] = t.mode == CombinationMode::joint ? "joint" : "conditional";
  json tasks = json::array();
  if (t.use_swc) tasks.push_back("SWC");
  if (t.use_csp) tasks.push_back("CSP");
  j["tasks"] = tasks;
  j["k_negatives"] = t.k_negatives;
  j["learning_rate"] = t.learning_rate;
  j["batch_size"] = t.batch_size;
  j["epochs"] = t.epochs;
  j["seeds"] = t.seeds;
  j["dim"] = t.dim;
  j["max_len"] = t.max_len;
  j["min_freq"] = t.min_freq;
  j["dropout"] = t.dropout;
  j["adam_beta1"] = t.adam_beta1;
  j["adam_beta2"] = t.adam_beta2;
  j["adam_eps"] = t.adam_eps;
  return j.dump(2);
}

}  // namespace kesa
