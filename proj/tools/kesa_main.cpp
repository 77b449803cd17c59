#include <functional>
#include <iostream>

#include <CLI11.hpp>

#include "kesa/cli.hpp"

namespace {

int dispatch(const std::function<void()>& body) {
  using namespace kesa;
  try {
    body();
    return cli::kExitOk;
  } catch (const DivergenceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::kExitDivergence;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::kExitUsage;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  using namespace kesa::cli;

  CLI::App app{"sentiment classification with sentiment-word auxiliary objectives"};
  app.require_subcommand(1);

  // lexicon build
  auto* lexicon_cmd = app.add_subcommand("lexicon", "lexicon utilities");
  lexicon_cmd->require_subcommand(1);
  LexiconBuildArgs lex_args;
  auto* build_cmd = lexicon_cmd->add_subcommand("build", "compile a word/polarity lexicon");
  build_cmd->add_option("--input", lex_args.input, "scored senses file")->required();
  build_cmd->add_option("--output", lex_args.output, "compiled lexicon TSV")->required();
  build_cmd->add_flag("--strict", lex_args.strict, "abort on the first malformed line");

  // train
  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "run the training protocol");
  train_cmd->add_option("--config", train_args.config_path, "run config JSON")->required();
  std::uint64_t seed_override = 0;
  auto* seed_opt = train_cmd->add_option("--seed-override", seed_override,
                                         "replace the config seed list with one seed");
  train_cmd->add_option("--dump-instances", train_args.dump_instances_path,
                        "write constructed auxiliary instances as JSONL");

  // eval
  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  eval_cmd->add_option("--checkpoint", eval_args.checkpoint, "checkpoint file")->required();
  eval_cmd->add_option("--data", eval_args.data, "TSV dataset file")->required();
  eval_cmd->add_option("--output", eval_args.output, "JSON record path (default eval.json)");

  // sweep
  SweepArgs sweep_args;
  auto* sweep_cmd = app.add_subcommand("sweep", "train across a gamma grid");
  sweep_cmd->add_option("--config", sweep_args.config_path, "run config JSON")->required();
  std::string gammas_csv;
  sweep_cmd->add_option("--gammas", gammas_csv, "comma-separated gamma list (default 0.01,0.1,0.5,1.0)");

  // synth
  SynthArgs synth_args;
  auto* synth_cmd = app.add_subcommand("synth", "generate a planted-lexicon corpus");
  synth_cmd->add_option("--out", synth_args.out_dir, "output directory")->required();
  synth_cmd->add_option("--lexicon", synth_args.lexicon, "compiled lexicon TSV")->required();
  synth_cmd->add_option("--train", synth_args.synth.train_count, "training examples");
  synth_cmd->add_option("--valid", synth_args.synth.valid_count, "validation examples");
  synth_cmd->add_option("--test", synth_args.synth.test_count, "test examples");
  synth_cmd->add_option("--noise", synth_args.synth.noise, "label flip probability");
  synth_cmd->add_option("--seed", synth_args.synth.seed, "generator seed");
  synth_cmd->add_option("--filler-vocab", synth_args.synth.filler_vocab, "filler token count");
  synth_cmd->add_option("--min-len", synth_args.synth.min_len, "shortest sentence length");
  synth_cmd->add_option("--max-len", synth_args.synth.max_len, "longest sentence length");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints help or the message
    return e.get_exit_code() == 0 ? 0 : kExitUsage;
  }

  if (build_cmd->parsed())
    return dispatch([&] { run_lexicon_build(lex_args, std::cout); });
  if (train_cmd->parsed()) {
    if (seed_opt->count()) train_args.seed_override = seed_override;
    return dispatch([&] { run_train(train_args, std::cout); });
  }
  if (eval_cmd->parsed())
    return dispatch([&] { run_eval(eval_args, std::cout); });
  if (sweep_cmd->parsed()) {
    if (!gammas_csv.empty()) {
      sweep_args.gammas.clear();
      std::string cur;
      for (char c : gammas_csv) {
        if (c == ',') {
          if (!cur.empty()) sweep_args.gammas.push_back(cur);
          cur.clear();
        } else {
          cur.push_back(c);
        }
      }
      if (!cur.empty()) sweep_args.gammas.push_back(cur);
    }
    return dispatch([&] {
      if (run_sweep(sweep_args, std::cout) == sweep_args.gammas.size())
        throw kesa::ConfigError("every sweep sub-run failed");
    });
  }
  if (synth_cmd->parsed())
    return dispatch([&] { run_synth(synth_args, std::cout); });

  return kExitUsage;
}
