#include "kesa/model.hpp"

#include <cmath>

namespace kesa {

namespace {
Tensor uniform_init(std::vector<std::size_t> shape, rng::Stream& stream) {
  Tensor t{std::move(shape)};
  for (std::size_t i = 0; i < t.size(); ++i)
    t[i] = static_cast<real_t>(stream.uniform_real(-0.1, 0.1));
  return t;
}
}  // namespace

ModelParams ModelParams::init(const ModelConfig& cfg, rng::Stream& stream) {
  if (cfg.vocab_size < 2 || cfg.dim == 0 || cfg.class_count < 2)
    throw UsageError("ModelParams::init: invalid config");
  const std::size_t d = cfg.dim, C = cfg.class_count, V = cfg.vocab_size;

  ModelParams p;
  p.cfg = cfg;
  p.E = Variable("E", uniform_init({V, d}, stream));
  for (std::size_t j = 0; j < d; ++j) p.E.value.at(Vocabulary::kPad, j) = 0;
  p.Ep = Variable("Ep", uniform_init({kPolarityArity, d}, stream));
  p.Wenc = Variable("Wenc", uniform_init({d, d}, stream));
  p.benc = Variable("benc", Tensor({d}));
  p.W1 = Variable("W1", uniform_init({d, C}, stream));
  p.b1 = Variable("b1", Tensor({C}));
  p.W2 = Variable("W2", uniform_init({2 * d, C * kAscriptionArity}, stream));
  p.b2 = Variable("b2", Tensor({C * kAscriptionArity}));
  p.W3 = Variable("W3", uniform_init({d, kPolarityArity * C}, stream));
  p.b3 = Variable("b3", Tensor({kPolarityArity * C}));
  p.W4 = Variable("W4", uniform_init({2, 1}, stream));
  p.b4 = Variable("b4", Tensor({1}));
  return p;
}

std::vector<Variable*> ModelParams::all() {
  return {&E, &Ep, &Wenc, &benc, &W1, &b1, &W2, &b2, &W3, &b3, &W4, &b4};
}

std::vector<Variable*> ModelParams::main_path() { return {&E, &Wenc, &benc, &W1, &b1}; }

std::vector<Variable*> ModelParams::aux() { return {&Ep, &W2, &b2, &W3, &b3, &W4, &b4}; }

void ModelParams::zero_grads() {
  for (Variable* v : all()) v->zero_grad();
}

BoundParams bind(Tape& tape, ModelParams& p) {
  BoundParams b;
  b.E = tape.param(p.E);
  b.Ep = tape.param(p.Ep);
  b.Wenc = tape.param(p.Wenc);
  b.benc = tape.param(p.benc);
  b.W1 = tape.param(p.W1);
  b.b1 = tape.param(p.b1);
  b.W2 = tape.param(p.W2);
  b.b2 = tape.param(p.b2);
  b.W3 = tape.param(p.W3);
  b.b3 = tape.param(p.b3);
  b.W4 = tape.param(p.W4);
  b.b4 = tape.param(p.b4);
  return b;
}

Tape::NodeId encode_sentence(Tape& tape, const BoundParams& p, const EncodedSentence& sent,
                             const Tensor* dropout_mask) {
  if (sent.true_len == 0) throw UsageError("encode_sentence: all-padding input");
  const auto emb = tape.embed_gather(p.E, sent.ids);
  const auto pooled = tape.mean_pool(emb, sent.true_len);
  auto h = tape.tanh_fn(tape.affine(p.Wenc, pooled, p.benc));
  if (dropout_mask) h = tape.elem_mul(h, *dropout_mask);
  return h;
}

Tape::NodeId main_head(Tape& tape, const BoundParams& p, Tape::NodeId h) {
  return tape.softmax(tape.affine(p.W1, h, p.b1));
}

namespace {
// d-vector lookup of one row: single-id gather pooled over its one row.
Tape::NodeId embedding_vector(Tape& tape, Tape::NodeId table, std::uint32_t id) {
  return tape.mean_pool(tape.embed_gather(table, {id}), 1);
}

Tape::NodeId fused_word_channel(Tape& tape, const BoundParams& p, std::uint32_t word_id,
                                Polarity pol) {
  const auto e = embedding_vector(tape, p.E, word_id);
  const auto ep = embedding_vector(tape, p.Ep, static_cast<std::uint32_t>(pol));
  return tape.add(e, ep);
}
}  // namespace

Tape::NodeId swc_head(Tape& tape, const BoundParams& p, Tape::NodeId h, std::uint32_t word_id,
                      Polarity word_polarity) {
  const auto channel = fused_word_channel(tape, p, word_id, word_polarity);
  return tape.affine(p.W2, tape.concat(h, channel), p.b2);
}

Tape::NodeId csp_head(Tape& tape, const BoundParams& p, Tape::NodeId h, std::uint32_t word_id,
                      Polarity word_polarity) {
  const auto channel = fused_word_channel(tape, p, word_id, word_polarity);
  return tape.affine(p.W3, tape.add(h, channel), p.b3);
}

std::vector<real_t> forward_main_probs(const ModelParams& params, const EncodedSentence& sent) {
  if (sent.true_len == 0) throw UsageError("forward_main_probs: all-padding input");
  const std::size_t d = params.cfg.dim, C = params.cfg.class_count;

  std::vector<real_t> pooled(d, 0);
  for (std::size_t r = 0; r < sent.true_len; ++r)
    for (std::size_t j = 0; j < d; ++j) pooled[j] += params.E.value.at(sent.ids[r], j);
  for (real_t& v : pooled) v /= static_cast<real_t>(sent.true_len);

  std::vector<real_t> h(d);
  for (std::size_t j = 0; j < d; ++j) {
    real_t acc = params.benc.value[j];
    for (std::size_t i = 0; i < d; ++i) acc += params.Wenc.value.at(i, j) * pooled[i];
    h[j] = std::tanh(acc);
  }

  std::vector<real_t> probs(C);
  for (std::size_t j = 0; j < C; ++j) {
    real_t acc = params.b1.value[j];
    for (std::size_t i = 0; i < d; ++i) acc += params.W1.value.at(i, j) * h[i];
    probs[j] = acc;
  }
  math::softmax_inplace(probs);
  return probs;
}

}  // namespace kesa
