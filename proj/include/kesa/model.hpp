#pragma once

#include <vector>

#include "kesa/corpus.hpp"
#include "kesa/graph.hpp"
#include "kesa/lexicon.hpp"
#include "kesa/rng.hpp"

namespace kesa {

struct ModelConfig {
  std::size_t vocab_size = 0;
  std::size_t dim = 64;
  std::size_t class_count = 2;
  std::size_t max_len = 50;
};

// All trainable tensors. Head shapes:
//   W1 (d, C)          sentence-label head
//   W2 (2d, C*|Y|)     cloze head over concat(h, e+e')
//   W3 (d, |Z|*C)      conditional head over h+e+e'
//   W4 (2, 1), b4 (1)  per-class mixer of the two extracted distributions
struct ModelParams {
  ModelConfig cfg;
  Variable E;     // word embeddings (V, d); row 0 is padding, held at zero
  Variable Ep;    // polarity embeddings (|Z|, d)
  Variable Wenc, benc;
  Variable W1, b1;
  Variable W2, b2;
  Variable W3, b3;
  Variable W4, b4;

  // Weights uniform in [-0.1, 0.1], biases zero, deterministic in the
  // stream state.
  static ModelParams init(const ModelConfig& cfg, rng::Stream& stream);

  std::vector<Variable*> all();
  std::vector<Variable*> main_path();  // everything inference touches
  std::vector<Variable*> aux();        // auxiliary-head parameters only
  void zero_grads();
};

// Per-tape leaf bindings so each Variable becomes one node per tape.
struct BoundParams {
  Tape::NodeId E, Ep, Wenc, benc, W1, b1, W2, b2, W3, b3, W4, b4;
};

BoundParams bind(Tape& tape, ModelParams& params);

// Sentence state h = tanh(Wenc^T mean(E[ids]) + benc); optional inverted
// dropout mask is applied to h during training.
Tape::NodeId encode_sentence(Tape& tape, const BoundParams& p, const EncodedSentence& sent,
                             const Tensor* dropout_mask = nullptr);

// p(label | h): softmax(W1^T h + b1).
Tape::NodeId main_head(Tape& tape, const BoundParams& p, Tape::NodeId h);

// Raw logits of length C*|Y| from concat(h, E[w] + Ep[pol]).
Tape::NodeId swc_head(Tape& tape, const BoundParams& p, Tape::NodeId h, std::uint32_t word_id,
                      Polarity word_polarity);

// Raw logits of length |Z|*C from h + E[w] + Ep[pol].
Tape::NodeId csp_head(Tape& tape, const BoundParams& p, Tape::NodeId h, std::uint32_t word_id,
                      Polarity word_polarity);

// Tape-free forward of the main head for inference; depends only on
// (E, Wenc, benc, W1, b1).
std::vector<real_t> forward_main_probs(const ModelParams& params, const EncodedSentence& sent);

}  // namespace kesa
