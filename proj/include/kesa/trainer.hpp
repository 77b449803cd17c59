#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "kesa/model.hpp"
#include "kesa/tasks.hpp"

namespace kesa {

struct TrainingConfig {
  double gamma = 0.1;  // auxiliary loss weight; 0 is a test hook, 1.0 is the grid edge
  CombinationMode mode = CombinationMode::conditional;
  bool use_swc = true;
  bool use_csp = true;
  std::size_t k_negatives = 1;
  double learning_rate = 1e-3;
  std::size_t batch_size = 32;
  std::size_t epochs = 3;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4};
  std::size_t dim = 64;
  std::size_t max_len = 50;
  std::size_t min_freq = 1;
  double dropout = 0.0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  bool any_aux() const { return use_swc || use_csp; }
  void validate() const;  // throws ConfigError
};

// Fine-tuning rates from the usual pretrained-backbone recipes, kept as
// presets for encoder swaps; the from-scratch default above is 1e-3.
inline constexpr double kPresetLrRoberta = 2e-5;
inline constexpr double kPresetLrBert = 5e-5;

// -log p(target) with p clamped at 1e-12 (clamp events counted).
real_t main_loss(std::span<const real_t> probs, std::size_t target, std::size_t* clamp_events = nullptr);

// Eq-style combiner: per class c, mix the two extracted conditional
// distributions with the 2-weight mixer and renormalize,
//   combined = softmax(w0*qA + w1*qB + b4),
// then cross-entropy against the sentence label. With one input absent the
// other channel is zero and only one mixer weight is active.
Tape::NodeId aux_combined_loss(Tape& tape, const BoundParams& p,
                               std::optional<Tape::NodeId> swc_true_logits,
                               std::optional<Tape::NodeId> csp_logits,
                               std::optional<Polarity> csp_prior, std::size_t sentence_label,
                               std::size_t class_count);

struct AdamHyper {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class AdamOptimizer {
 public:
  AdamOptimizer(std::vector<Variable*> params, AdamHyper hyper);
  // One update from the gradients currently in Variable::grad.
  void step();
  std::size_t steps_taken() const { return t_; }

 private:
  std::vector<Variable*> params_;
  std::vector<Tensor> m_, v_;
  AdamHyper hyper_;
  std::size_t t_ = 0;
};

struct EpochMetrics {
  std::size_t epoch = 0;       // 1-based
  double train_accuracy = 0;
  double train_main_loss = 0;  // mean over training batches
  double train_aux_loss = 0;   // mean pre-gamma aux over contributing samples
  std::size_t aux_samples = 0;
  double dev_accuracy = 0;
  double dev_main_loss = 0;
};

struct SeedRunResult {
  std::uint64_t seed = 0;
  std::vector<EpochMetrics> epochs;
  std::size_t best_epoch = 0;  // 1-based
  double best_dev_accuracy = 0;
  double test_accuracy = 0;
  ModelParams best_params;
  std::size_t clamp_events = 0;
};

struct TrainResult {
  std::vector<SeedRunResult> runs;
  double mean_test_accuracy = 0;
  double stddev_test_accuracy = 0;
};

struct TrainHooks {
  // Receives one JSON line per constructed auxiliary instance; forces
  // single-threaded execution.
  std::ostream* instance_dump = nullptr;
  // Progress lines (wall times live here, never in data files).
  std::ostream* log = nullptr;
};

// Per-sample loss parts assembled on the caller's tape:
//   total = main + gamma * (sum of enabled task losses [+ combined when
//   both tasks produced instances]).
struct SampleLoss {
  Tape::NodeId total;
  real_t main_value = 0;
  real_t aux_value = 0;  // pre-gamma
  bool has_aux = false;
};

SampleLoss build_sample_loss(Tape& tape, const BoundParams& bound, const EncodedSentence& enc,
                             std::size_t label, std::span<const SwcInstance> swc,
                             const std::optional<CspInstance>& csp, const TrainingConfig& cfg,
                             std::size_t class_count, const Tensor* dropout_mask);

// Full protocol: per seed, init / epoch-shuffled minibatch Adam / dev
// selection; returns per-seed test accuracy from the best-dev parameters
// and the cross-seed mean. Seeds run in parallel up to KESA_THREADS.
TrainResult train(const TrainingConfig& cfg, const DatasetSplits& splits,
                  const SentimentLexicon& lexicon, const Vocabulary& vocab,
                  const TrainHooks& hooks = {});

double evaluate(const ModelParams& params, std::span<const LabeledSentence> split,
                const Vocabulary& vocab, std::size_t max_len);

// Metrics JSONL: one record per (seed, epoch, split), per-seed test
// records, then a cross-seed summary record. Deterministic content only.
void write_metrics_jsonl(std::ostream& os, const TrainResult& result);

std::size_t env_thread_cap();  // KESA_THREADS, default 1

}  // namespace kesa
