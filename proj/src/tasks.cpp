#include "kesa/tasks.hpp"

#include <algorithm>
#include <unordered_set>

namespace kesa {

std::size_t joint_index(std::size_t a, std::size_t b, std::size_t extent_b) {
  if (extent_b == 0 || b >= extent_b) throw UsageError("joint_index: label out of range");
  return a * extent_b + b;
}

std::pair<std::size_t, std::size_t> joint_unindex(std::size_t flat, std::size_t extent_b) {
  if (extent_b == 0) throw UsageError("joint_unindex: zero extent");
  return {flat / extent_b, flat % extent_b};
}

std::vector<std::size_t> slice_indices(const JointLayout& layout, std::size_t prior_label) {
  if (layout.prior_axis > 1) throw UsageError("slice_indices: prior_axis must be 0 or 1");
  const std::size_t prior_extent = layout.prior_axis == 0 ? layout.extent0 : layout.extent1;
  if (prior_label >= prior_extent) throw UsageError("slice_indices: prior label out of range");

  std::vector<std::size_t> idx;
  if (layout.prior_axis == 0) {
    idx.reserve(layout.extent1);
    for (std::size_t b = 0; b < layout.extent1; ++b)
      idx.push_back(prior_label * layout.extent1 + b);
  } else {
    idx.reserve(layout.extent0);
    for (std::size_t a = 0; a < layout.extent0; ++a)
      idx.push_back(a * layout.extent1 + prior_label);
  }
  return idx;
}

std::vector<real_t> conditional_slice(std::span<const real_t> logits, std::size_t prior_label,
                                      const JointLayout& layout) {
  if (logits.size() != layout.flat_size())
    throw UsageError("conditional_slice: logit length does not match layout");
  std::vector<real_t> sliced;
  for (std::size_t i : slice_indices(layout, prior_label)) sliced.push_back(logits[i]);
  math::softmax_inplace(sliced);
  return sliced;
}

namespace {
// Distinct recognized words, first occurrence order.
std::vector<RecognizedWord> distinct_recognized(const LabeledSentence& sample,
                                                const SentimentLexicon& lexicon,
                                                std::size_t max_len) {
  const std::size_t window = std::min(sample.tokens.size(), max_len);
  const auto hits = lexicon.recognize(std::span(sample.tokens).first(window));
  std::vector<RecognizedWord> distinct;
  std::unordered_set<std::string> seen;
  for (const RecognizedWord& h : hits)
    if (seen.insert(h.word).second) distinct.push_back(h);
  return distinct;
}
}  // namespace

std::vector<SwcInstance> build_swc_instances(const LabeledSentence& sample,
                                             const SentimentLexicon& lexicon,
                                             const Vocabulary& vocab, std::size_t max_len,
                                             std::size_t k_negatives, rng::Stream& pos_rng,
                                             rng::Stream& neg_rng) {
  if (k_negatives < 1) throw UsageError("build_swc_instances: K must be >= 1");
  const auto candidates = distinct_recognized(sample, lexicon, max_len);
  if (candidates.empty()) return {};

  const RecognizedWord& chosen =
      candidates[static_cast<std::size_t>(pos_rng.uniform_int(candidates.size()))];

  // Negatives must be absent from the whole window so their ascription
  // label is truthful; draws are without replacement.
  const std::size_t window = std::min(sample.tokens.size(), max_len);
  std::unordered_set<std::string> excluded(sample.tokens.begin(),
                                           sample.tokens.begin() + window);
  std::vector<SwcInstance> out;
  out.push_back({chosen.word, vocab.id_of(chosen.word), chosen.polarity, 1, sample.label});
  for (std::size_t k = 0; k < k_negatives; ++k) {
    try {
      auto [word, pol] = lexicon.sample_negative(excluded, neg_rng);
      out.push_back({word, vocab.id_of(word), pol, 0, sample.label});
      excluded.insert(std::move(word));
    } catch (const UsageError&) {
      return {};
    }
  }
  return out;
}

std::optional<CspInstance> build_csp_instance(const LabeledSentence& sample,
                                              const SentimentLexicon& lexicon,
                                              const Vocabulary& vocab, std::size_t max_len,
                                              rng::Stream& rng) {
  const auto candidates = distinct_recognized(sample, lexicon, max_len);
  if (candidates.empty()) return std::nullopt;
  const RecognizedWord& chosen =
      candidates[static_cast<std::size_t>(rng.uniform_int(candidates.size()))];
  return CspInstance{chosen.word, vocab.id_of(chosen.word), chosen.polarity, sample.label};
}

JointLayout swc_layout(std::size_t class_count) {
  return {class_count, kAscriptionArity, /*prior_axis=*/0};
}

JointLayout csp_layout(std::size_t class_count) {
  return {kPolarityArity, class_count, /*prior_axis=*/0};
}

Tape::NodeId swc_instance_loss(Tape& tape, Tape::NodeId logits, const SwcInstance& inst,
                               CombinationMode mode, std::size_t class_count) {
  const JointLayout layout = swc_layout(class_count);
  if (mode == CombinationMode::joint) {
    const std::size_t target = joint_index(inst.sentence_label, inst.ascription, layout.extent1);
    return tape.cross_entropy(tape.softmax(logits), target);
  }
  const auto sliced = tape.masked_slice(logits, slice_indices(layout, inst.sentence_label));
  return tape.cross_entropy(tape.softmax(sliced), inst.ascription);
}

Tape::NodeId swc_task_loss(Tape& tape, std::span<const Tape::NodeId> logits,
                           std::span<const SwcInstance> instances, CombinationMode mode,
                           std::size_t class_count) {
  if (logits.size() != instances.size() || instances.empty())
    throw UsageError("swc_task_loss: instance/logit mismatch");
  Tape::NodeId acc = swc_instance_loss(tape, logits[0], instances[0], mode, class_count);
  for (std::size_t i = 1; i < instances.size(); ++i)
    acc = tape.add(acc, swc_instance_loss(tape, logits[i], instances[i], mode, class_count));
  return tape.scalar_mul(acc, real_t(1) / static_cast<real_t>(instances.size()));
}

Tape::NodeId csp_task_loss(Tape& tape, Tape::NodeId logits, const CspInstance& inst,
                           CombinationMode mode, std::size_t class_count) {
  const JointLayout layout = csp_layout(class_count);
  const std::size_t prior = static_cast<std::size_t>(inst.word_polarity);
  if (mode == CombinationMode::joint) {
    const std::size_t target = joint_index(prior, inst.sentence_label, layout.extent1);
    return tape.cross_entropy(tape.softmax(logits), target);
  }
  const auto sliced = tape.masked_slice(logits, slice_indices(layout, prior));
  return tape.cross_entropy(tape.softmax(sliced), inst.sentence_label);
}

}  // namespace kesa
