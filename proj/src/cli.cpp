#include "kesa/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "kesa/checkpoint.hpp"
#include "kesa/trainer.hpp"

namespace kesa::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

void run_lexicon_build(const LexiconBuildArgs& args, std::ostream& out) {
  std::ifstream in(args.input);
  if (!in) throw ConfigError("cannot open input: " + args.input);
  const ParsedSenses parsed =
      parse_sentiwordnet(in, args.strict ? ParseMode::strict : ParseMode::lenient);

  SentimentLexicon::BuildCounts counts;
  const SentimentLexicon lex = SentimentLexicon::build(parsed.entries, &counts);

  std::ofstream os(args.output);
  if (!os) throw ConfigError("cannot write output: " + args.output);
  lex.export_tsv(os);
  out << "lexicon: kept " << counts.kept << " dropped_neutral " << counts.dropped_neutral
      << " skipped_lines " << parsed.skipped_lines << '\n';
}

namespace {

struct LoadedRun {
  RunConfig cfg;
  SentimentLexicon lexicon;
  DatasetSplits splits;
  Vocabulary vocab;
};

LoadedRun load_run_inputs(const RunConfig& cfg) {
  LoadedRun r;
  r.cfg = cfg;
  r.lexicon = load_lexicon_file(cfg.lexicon_path, ParseMode::lenient);
  r.splits = load_dataset(cfg.train_path, cfg.valid_path, cfg.test_path);
  r.vocab = Vocabulary::build(r.splits.train, cfg.training.min_freq);
  return r;
}

void execute_train(const LoadedRun& run, const TrainArgs& args, std::ostream& out) {
  fs::create_directories(run.cfg.output_dir);

  std::ofstream dump;
  TrainHooks hooks;
  hooks.log = &out;
  if (!args.dump_instances_path.empty()) {
    dump.open(args.dump_instances_path);
    if (!dump) throw ConfigError("cannot write instance dump: " + args.dump_instances_path);
    hooks.instance_dump = &dump;
  }

  const TrainResult result =
      train(run.cfg.training, run.splits, run.lexicon, run.vocab, hooks);

  const fs::path out_dir(run.cfg.output_dir);
  {
    std::ofstream metrics(out_dir / "metrics.jsonl");
    if (!metrics) throw ConfigError("cannot write metrics.jsonl");
    write_metrics_jsonl(metrics, result);
  }
  for (const SeedRunResult& r : result.runs) {
    const fs::path ckpt = out_dir / ("ckpt_seed" + std::to_string(r.seed) + ".bin");
    save_checkpoint(ckpt.string(), r.best_params, run.vocab);
  }
  out << "train: mean_test_accuracy " << std::fixed << std::setprecision(4)
      << result.mean_test_accuracy << " stddev " << result.stddev_test_accuracy
      << std::defaultfloat << " over " << result.runs.size() << " seeds\n";
}

}  // namespace

void run_train(const TrainArgs& args, std::ostream& out) {
  RunConfig cfg = load_run_config(args.config_path);
  if (args.seed_override) cfg.training.seeds = {*args.seed_override};
  execute_train(load_run_inputs(cfg), args, out);
}

void run_eval(const EvalArgs& args, std::ostream& out) {
  const Checkpoint ck = load_checkpoint(args.checkpoint);
  const auto split = load_split(args.data, ck.cfg.class_count);
  const double acc = evaluate(ck.params, split, ck.vocab, ck.cfg.max_len);

  std::ostringstream formatted;
  formatted << std::fixed << std::setprecision(4) << acc;
  out << "accuracy " << formatted.str() << '\n';

  json record;
  record["checkpoint"] = args.checkpoint;
  record["data"] = args.data;
  record["examples"] = split.size();
  record["accuracy"] = acc;
  std::ofstream os(args.output);
  if (!os) throw ConfigError("cannot write eval record: " + args.output);
  os << record.dump() << '\n';
}

std::size_t run_sweep(const SweepArgs& args, std::ostream& out) {
  const RunConfig base = load_run_config(args.config_path);
  if (args.gammas.empty()) throw ConfigError("sweep: empty gamma list");

  struct Row {
    std::string gamma;
    bool ok = false;
    double mean = 0, stddev = 0;
    std::string error;
  };
  std::vector<Row> rows;

  for (const std::string& gamma_str : args.gammas) {
    Row row;
    row.gamma = gamma_str;
    try {
      RunConfig cfg = base;
      try {
        cfg.training.gamma = std::stod(gamma_str);
      } catch (const std::exception&) {
        throw ConfigError("bad gamma '" + gamma_str + "'");
      }
      cfg.training.validate();
      cfg.output_dir = (fs::path(base.output_dir) / ("gamma_" + gamma_str)).string();
      const LoadedRun run = load_run_inputs(cfg);
      execute_train(run, TrainArgs{}, out);

      std::ifstream metrics(fs::path(cfg.output_dir) / "metrics.jsonl");
      std::string line, last;
      while (std::getline(metrics, line))
        if (!line.empty()) last = line;
      const json summary = json::parse(last);
      row.mean = summary.at("mean_test_accuracy").get<double>();
      row.stddev = summary.at("stddev_test_accuracy").get<double>();
      row.ok = true;
    } catch (const std::exception& e) {
      row.error = e.what();
      out << "sweep: gamma " << gamma_str << " failed: " << e.what() << '\n';
    }
    rows.push_back(std::move(row));
  }

  fs::create_directories(base.output_dir);
  std::ofstream summary_os(fs::path(base.output_dir) / "sweep_summary.jsonl");
  out << "gamma\tmean_test_accuracy\tstddev\n";
  std::size_t failures = 0;
  for (const Row& r : rows) {
    json j;
    j["gamma"] = r.gamma;
    if (r.ok) {
      j["mean_test_accuracy"] = r.mean;
      j["stddev_test_accuracy"] = r.stddev;
      out << r.gamma << '\t' << std::fixed << std::setprecision(4) << r.mean << '\t' << r.stddev
          << std::defaultfloat << '\n';
    } else {
      j["error"] = r.error;
      out << r.gamma << "\tFAILED\t-\n";
      ++failures;
    }
    summary_os << j.dump() << '\n';
  }
  return failures;
}

void run_synth(const SynthArgs& args, std::ostream& out) {
  if (args.lexicon.empty()) throw ConfigError("synth: --lexicon is required");
  const SentimentLexicon lex = load_lexicon_file(args.lexicon, ParseMode::lenient);
  if (lex.size() == 0) throw ConfigError("synth: lexicon is empty");

  const DatasetSplits splits = write_synthetic_corpus(lex, args.synth, args.out_dir);
  std::size_t positive = 0;
  for (const LabeledSentence& s : splits.train) positive += s.label == 1;
  out << "synth: train " << splits.train.size() << " valid " << splits.valid.size() << " test "
      << splits.test.size() << " train_positive_share "
      << static_cast<double>(positive) / static_cast<double>(splits.train.size()) << '\n';
}

}  // namespace kesa::cli
