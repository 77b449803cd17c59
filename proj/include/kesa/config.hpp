#pragma once

#include <string>

#include "kesa/trainer.hpp"

namespace kesa {

// JSON run configuration: TrainingConfig fields plus the file paths.
// Unknown keys are rejected; paths are validated before any compute.
struct RunConfig {
  TrainingConfig training;
  std::string lexicon_path;
  std::string train_path;
  std::string valid_path;
  std::string test_path;
  std::string output_dir;
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);

std::string run_config_to_json(const RunConfig& cfg);

}  // namespace kesa
