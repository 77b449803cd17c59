#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "kesa/config.hpp"
#include "kesa/synth.hpp"

namespace kesa::cli {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;       // bad flags, config, or input data
inline constexpr int kExitDivergence = 3;  // training produced a non-finite loss

struct LexiconBuildArgs {
  std::string input;
  std::string output;
  bool strict = false;
};

struct TrainArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed_override;
  std::string dump_instances_path;  // optional JSONL debug dump
};

struct EvalArgs {
  std::string checkpoint;
  std::string data;
  std::string output = "eval.json";
};

struct SweepArgs {
  std::string config_path;
  std::vector<std::string> gammas = {"0.01", "0.1", "0.5", "1.0"};
};

struct SynthArgs {
  std::string out_dir;
  std::string lexicon;
  SynthConfig synth;
};

void run_lexicon_build(const LexiconBuildArgs& args, std::ostream& out);
void run_train(const TrainArgs& args, std::ostream& out);
void run_eval(const EvalArgs& args, std::ostream& out);
// Returns the number of failed sub-runs (the sweep itself keeps going).
std::size_t run_sweep(const SweepArgs& args, std::ostream& out);
void run_synth(const SynthArgs& args, std::ostream& out);

}  // namespace kesa::cli
