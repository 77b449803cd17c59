#include "kesa/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ostream>
#include <thread>

#include <json.hpp>

namespace kesa {

using json = nlohmann::ordered_json;

void TrainingConfig::validate() const {
  if (gamma < 0.0 || gamma > 1.0) throw ConfigError("gamma must be in [0, 1]");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (seeds.empty()) throw ConfigError("at least one seed required");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (k_negatives < 1) throw ConfigError("k_negatives must be >= 1");
  if (learning_rate <= 0) throw ConfigError("learning_rate must be positive");
  if (dim < 1) throw ConfigError("dim must be >= 1");
  if (max_len < 1) throw ConfigError("max_len must be >= 1");
  if (dropout < 0 || dropout >= 1) throw ConfigError("dropout must be in [0, 1)");
}

real_t main_loss(std::span<const real_t> probs, std::size_t target, std::size_t* clamp_events) {
  if (target >= probs.size()) throw UsageError("main_loss: target out of range");
  real_t p = probs[target];
  if (p < real_t(1e-12)) {
    p = real_t(1e-12);
    if (clamp_events) ++*clamp_events;
  }
  return -std::log(p);
}

Tape::NodeId aux_combined_loss(Tape& tape, const BoundParams& p,
                               std::optional<Tape::NodeId> swc_true_logits,
                               std::optional<Tape::NodeId> csp_logits,
                               std::optional<Polarity> csp_prior, std::size_t sentence_label,
                               std::size_t class_count) {
  if (!swc_true_logits && !csp_logits)
    throw UsageError("aux_combined_loss: needs at least one task's logits");
  if (csp_logits && !csp_prior) throw UsageError("aux_combined_loss: CSP prior missing");

  // q_A: sentence-label distribution extracted at ascription=1 from the
  // ground-truth candidate; q_B: extracted at the word's polarity.
  std::optional<Tape::NodeId> q_a, q_b;
  if (swc_true_logits) {
    JointLayout layout = swc_layout(class_count);
    layout.prior_axis = 1;  // condition on the ascription axis
    q_a = tape.softmax(tape.masked_slice(*swc_true_logits, slice_indices(layout, 1)));
  }
  if (csp_logits) {
    const JointLayout layout = csp_layout(class_count);
    q_b = tape.softmax(tape.masked_slice(
        *csp_logits, slice_indices(layout, static_cast<std::size_t>(*csp_prior))));
  }

  // Per class: z_c = W4^T (qA_c, qB_c) + b4, a missing channel pinned to 0.
  std::optional<Tape::NodeId> zeros;
  if (!q_a || !q_b) zeros = tape.constant(Tensor({1}));
  std::optional<Tape::NodeId> combined_logits;
  for (std::size_t c = 0; c < class_count; ++c) {
    const auto a_c = q_a ? tape.masked_slice(*q_a, {c}) : *zeros;
    const auto b_c = q_b ? tape.masked_slice(*q_b, {c}) : *zeros;
    const auto z_c = tape.affine(p.W4, tape.concat(a_c, b_c), p.b4);
    combined_logits = combined_logits ? tape.concat(*combined_logits, z_c) : z_c;
  }
  return tape.cross_entropy(tape.softmax(*combined_logits), sentence_label);
}

AdamOptimizer::AdamOptimizer(std::vector<Variable*> params, AdamHyper hyper)
    : params_(std::move(params)), hyper_(hyper) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const Variable* p : params_) {
    m_.emplace_back(p->value.shape());
    v_.emplace_back(p->value.shape());
  }
}

void AdamOptimizer::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(hyper_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(hyper_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Tensor& w = params_[k]->value;
    const Tensor& g = params_[k]->grad;
    Tensor& m = m_[k];
    Tensor& v = v_[k];
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = static_cast<real_t>(hyper_.beta1 * m[i] + (1.0 - hyper_.beta1) * g[i]);
      v[i] = static_cast<real_t>(hyper_.beta2 * v[i] + (1.0 - hyper_.beta2) * g[i] * g[i]);
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      w[i] -= static_cast<real_t>(hyper_.lr * mhat / (std::sqrt(vhat) + hyper_.eps));
    }
  }
}

SampleLoss build_sample_loss(Tape& tape, const BoundParams& bound, const EncodedSentence& enc,
                             std::size_t label, std::span<const SwcInstance> swc,
                             const std::optional<CspInstance>& csp, const TrainingConfig& cfg,
                             std::size_t class_count, const Tensor* dropout_mask) {
  const auto h = encode_sentence(tape, bound, enc, dropout_mask);
  const auto main_ce = tape.cross_entropy(main_head(tape, bound, h), label);

  SampleLoss out{main_ce};
  out.main_value = tape.value(main_ce)[0];

  std::optional<Tape::NodeId> aux_sum;
  auto accumulate = [&](Tape::NodeId term) {
    aux_sum = aux_sum ? tape.add(*aux_sum, term) : term;
  };

  std::optional<Tape::NodeId> swc_true_logits;
  if (cfg.use_swc && !swc.empty()) {
    std::vector<Tape::NodeId> logits;
    logits.reserve(swc.size());
    for (const SwcInstance& inst : swc) {
      logits.push_back(swc_head(tape, bound, h, inst.word_id, inst.word_polarity));
      if (inst.ascription == 1) swc_true_logits = logits.back();
    }
    accumulate(swc_task_loss(tape, logits, swc, cfg.mode, class_count));
  }

  std::optional<Tape::NodeId> csp_logits;
  if (cfg.use_csp && csp) {
    csp_logits = csp_head(tape, bound, h, csp->word_id, csp->word_polarity);
    accumulate(csp_task_loss(tape, *csp_logits, *csp, cfg.mode, class_count));
  }

  if (cfg.use_swc && cfg.use_csp && swc_true_logits && csp_logits)
    accumulate(aux_combined_loss(tape, bound, swc_true_logits, csp_logits, csp->word_polarity,
                                 label, class_count));

  if (aux_sum) {
    out.aux_value = tape.value(*aux_sum)[0];
    out.has_aux = true;
    out.total = tape.add(main_ce, tape.scalar_mul(*aux_sum, static_cast<real_t>(cfg.gamma)));
  }
  return out;
}

double evaluate(const ModelParams& params, std::span<const LabeledSentence> split,
                const Vocabulary& vocab, std::size_t max_len) {
  if (split.empty()) throw UsageError("evaluate: empty split");
  std::size_t correct = 0;
  for (const LabeledSentence& s : split) {
    const auto probs = forward_main_probs(params, encode(s.tokens, vocab, max_len));
    const std::size_t pred =
        std::max_element(probs.begin(), probs.end()) - probs.begin();
    correct += pred == s.label;
  }
  return static_cast<double>(correct) / static_cast<double>(split.size());
}

namespace {

double mean_main_loss(const ModelParams& params, std::span<const LabeledSentence> split,
                      const Vocabulary& vocab, std::size_t max_len, std::size_t* clamp_events) {
  double sum = 0;
  for (const LabeledSentence& s : split) {
    const auto probs = forward_main_probs(params, encode(s.tokens, vocab, max_len));
    sum += main_loss(probs, s.label, clamp_events);
  }
  return sum / static_cast<double>(split.size());
}

void dump_instances(std::ostream& os, std::uint64_t seed, std::size_t epoch,
                    std::size_t sample_index, std::span<const SwcInstance> swc,
                    const std::optional<CspInstance>& csp) {
  for (const SwcInstance& i : swc) {
    json j;
    j["seed"] = seed;
    j["epoch"] = epoch;
    j["sample"] = sample_index;
    j["task"] = "swc";
    j["word"] = i.word;
    j["word_polarity"] = to_string(i.word_polarity);
    j["ascription"] = static_cast<int>(i.ascription);
    j["sentence_label"] = i.sentence_label;
    os << j.dump() << '\n';
  }
  if (csp) {
    json j;
    j["seed"] = seed;
    j["epoch"] = epoch;
    j["sample"] = sample_index;
    j["task"] = "csp";
    j["word"] = csp->word;
    j["word_polarity"] = to_string(csp->word_polarity);
    j["sentence_label"] = csp->sentence_label;
    os << j.dump() << '\n';
  }
}

SeedRunResult run_one_seed(std::uint64_t seed, const TrainingConfig& cfg,
                           const DatasetSplits& splits, const SentimentLexicon& lexicon,
                           const Vocabulary& vocab, const TrainHooks& hooks) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t C = splits.class_count;
  const ModelConfig mc{vocab.size(), cfg.dim, C, cfg.max_len};

  rng::Stream root(seed);
  rng::Stream init_stream = root.derive("init");
  ModelParams params = ModelParams::init(mc, init_stream);
  AdamOptimizer opt(params.all(), {cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps});

  // Encode once; token windows are fixed, only instances are resampled.
  std::vector<EncodedSentence> encoded;
  encoded.reserve(splits.train.size());
  for (const LabeledSentence& s : splits.train) encoded.push_back(encode(s.tokens, vocab, cfg.max_len));

  SeedRunResult result;
  result.seed = seed;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng::Stream shuffle_rng = root.derive("shuffle", epoch);
    rng::Stream pos_rng = root.derive("swc-pos", epoch);
    rng::Stream neg_rng = root.derive("swc-neg", epoch);
    rng::Stream csp_rng = root.derive("csp", epoch);
    rng::Stream drop_rng = root.derive("dropout", epoch);

    std::vector<std::size_t> order(splits.train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    shuffle_rng.shuffle(order);

    double main_sum = 0;
    std::size_t batches = 0;
    double aux_sum = 0;
    std::size_t aux_samples = 0;

    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      Tape tape;
      const BoundParams bound = bind(tape, params);

      std::optional<Tape::NodeId> batch_loss;
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t i = order[k];
        const LabeledSentence& sample = splits.train[i];

        std::vector<SwcInstance> swc;
        if (cfg.use_swc)
          swc = build_swc_instances(sample, lexicon, vocab, cfg.max_len, cfg.k_negatives,
                                    pos_rng, neg_rng);
        std::optional<CspInstance> csp;
        if (cfg.use_csp)
          csp = build_csp_instance(sample, lexicon, vocab, cfg.max_len, csp_rng);
        if (hooks.instance_dump) dump_instances(*hooks.instance_dump, seed, epoch, i, swc, csp);

        Tensor mask;
        const Tensor* mask_ptr = nullptr;
        if (cfg.dropout > 0) {
          mask = Tensor({cfg.dim});
          const real_t keep_scale = static_cast<real_t>(1.0 / (1.0 - cfg.dropout));
          for (std::size_t j = 0; j < cfg.dim; ++j)
            mask[j] = drop_rng.bernoulli(cfg.dropout) ? real_t(0) : keep_scale;
          mask_ptr = &mask;
        }

        const SampleLoss sl = build_sample_loss(tape, bound, encoded[i], sample.label, swc, csp,
                                                cfg, C, mask_ptr);
        main_sum += sl.main_value;
        if (sl.has_aux) {
          aux_sum += sl.aux_value;
          ++aux_samples;
        }
        batch_loss = batch_loss ? tape.add(*batch_loss, sl.total) : sl.total;
      }

      const auto mean_loss =
          tape.scalar_mul(*batch_loss, real_t(1) / static_cast<real_t>(end - start));
      const real_t loss_value = tape.value(mean_loss)[0];
      if (!std::isfinite(loss_value))
        throw DivergenceError("non-finite loss at seed " + std::to_string(seed) + ", epoch " +
                              std::to_string(epoch));

      tape.backward(mean_loss);
      opt.step();
      params.zero_grads();
      for (std::size_t j = 0; j < cfg.dim; ++j) params.E.value.at(Vocabulary::kPad, j) = 0;
      result.clamp_events += tape.clamp_events();
      ++batches;
    }

    EpochMetrics em;
    em.epoch = epoch;
    em.train_main_loss = main_sum / static_cast<double>(order.size());
    em.train_aux_loss = aux_samples ? aux_sum / static_cast<double>(aux_samples) : 0.0;
    em.aux_samples = aux_samples;
    em.train_accuracy = evaluate(params, splits.train, vocab, cfg.max_len);
    em.dev_accuracy = evaluate(params, splits.valid, vocab, cfg.max_len);
    em.dev_main_loss = mean_main_loss(params, splits.valid, vocab, cfg.max_len, &result.clamp_events);
    result.epochs.push_back(em);

    if (result.best_epoch == 0 || em.dev_accuracy > result.best_dev_accuracy) {
      result.best_epoch = epoch;
      result.best_dev_accuracy = em.dev_accuracy;
      result.best_params = params;
    }
    if (hooks.log) {
      const auto dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0);
      *hooks.log << "seed " << seed << " epoch " << epoch << " train_main "
                 << em.train_main_loss << " train_aux " << em.train_aux_loss << " dev_acc "
                 << em.dev_accuracy << " elapsed " << dt.count() << "s\n";
    }
  }

  result.test_accuracy = evaluate(result.best_params, splits.test, vocab, cfg.max_len);
  return result;
}

}  // namespace

std::size_t env_thread_cap() {
  const char* env = std::getenv("KESA_THREADS");
  if (!env) return 1;
  const long n = std::strtol(env, nullptr, 10);
  return n > 0 ? static_cast<std::size_t>(n) : 1;
}

TrainResult train(const TrainingConfig& cfg, const DatasetSplits& splits,
                  const SentimentLexicon& lexicon, const Vocabulary& vocab,
                  const TrainHooks& hooks) {
  cfg.validate();
  if (splits.train.empty() || splits.valid.empty() || splits.test.empty())
    throw UsageError("train: all three splits must be nonempty");

  TrainResult result;
  result.runs.resize(cfg.seeds.size());

  std::size_t workers = std::min(env_thread_cap(), cfg.seeds.size());
  if (hooks.instance_dump) workers = 1;  // keep the dump stream ordered

  if (workers <= 1) {
    for (std::size_t i = 0; i < cfg.seeds.size(); ++i)
      result.runs[i] = run_one_seed(cfg.seeds[i], cfg, splits, lexicon, vocab, hooks);
  } else {
    // Seeds are independent runs; logs are dropped in parallel mode so the
    // outputs stay deterministic.
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(cfg.seeds.size());
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= cfg.seeds.size()) return;
          try {
            result.runs[i] = run_one_seed(cfg.seeds[i], cfg, splits, lexicon, vocab, {});
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    for (const auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  double sum = 0;
  for (const SeedRunResult& r : result.runs) sum += r.test_accuracy;
  result.mean_test_accuracy = sum / static_cast<double>(result.runs.size());
  double var = 0;
  for (const SeedRunResult& r : result.runs) {
    const double d = r.test_accuracy - result.mean_test_accuracy;
    var += d * d;
  }
  result.stddev_test_accuracy = std::sqrt(var / static_cast<double>(result.runs.size()));
  return result;
}

void write_metrics_jsonl(std::ostream& os, const TrainResult& result) {
  for (const SeedRunResult& run : result.runs) {
    for (const EpochMetrics& em : run.epochs) {
      json tr;
      tr["seed"] = run.seed;
      tr["epoch"] = em.epoch;
      tr["split"] = "train";
      tr["accuracy"] = em.train_accuracy;
      tr["main_loss"] = em.train_main_loss;
      tr["aux_loss"] = em.train_aux_loss;
      tr["aux_samples"] = em.aux_samples;
      os << tr.dump() << '\n';

      json dv;
      dv["seed"] = run.seed;
      dv["epoch"] = em.epoch;
      dv["split"] = "dev";
      dv["accuracy"] = em.dev_accuracy;
      dv["main_loss"] = em.dev_main_loss;
      os << dv.dump() << '\n';
    }
    json te;
    te["seed"] = run.seed;
    te["split"] = "test";
    te["accuracy"] = run.test_accuracy;
    te["best_epoch"] = run.best_epoch;
    te["best_dev_accuracy"] = run.best_dev_accuracy;
    os << te.dump() << '\n';
  }
  json summary;
  summary["summary"] = true;
  summary["seeds"] = json::array();
  for (const SeedRunResult& run : result.runs) summary["seeds"].push_back(run.seed);
  summary["mean_test_accuracy"] = result.mean_test_accuracy;
  summary["stddev_test_accuracy"] = result.stddev_test_accuracy;
  os << summary.dump() << '\n';
}

}  // namespace kesa
