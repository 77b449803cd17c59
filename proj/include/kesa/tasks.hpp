#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "kesa/corpus.hpp"
#include "kesa/graph.hpp"
#include "kesa/lexicon.hpp"
#include "kesa/rng.hpp"

namespace kesa {

enum class CombinationMode { joint, conditional };

// One cloze candidate: ascription = 1 for the word actually in the
// sentence, 0 for a sampled impostor.
struct SwcInstance {
  std::string word;
  std::uint32_t word_id;
  Polarity word_polarity;
  std::uint8_t ascription;
  std::size_t sentence_label;
};

struct CspInstance {
  std::string word;
  std::uint32_t word_id;
  Polarity word_polarity;
  std::size_t sentence_label;
};

// Row-major pairing of two label alphabets into one class index.
std::size_t joint_index(std::size_t a, std::size_t b, std::size_t extent_b);
std::pair<std::size_t, std::size_t> joint_unindex(std::size_t flat, std::size_t extent_b);

// Logit vector laid out row-major over (axis0, axis1); prior_axis states
// which axis carries the known label when conditioning.
struct JointLayout {
  std::size_t extent0;
  std::size_t extent1;
  std::size_t prior_axis;  // 0 or 1

  std::size_t flat_size() const { return extent0 * extent1; }
  std::size_t predicted_extent() const { return prior_axis == 0 ? extent1 : extent0; }
};

// Flat positions of the slice whose prior-axis coordinate is prior_label,
// strictly increasing.
std::vector<std::size_t> slice_indices(const JointLayout& layout, std::size_t prior_label);

// softmax over the selected logits: the conditional distribution of the
// predicted axis given the prior label.
std::vector<real_t> conditional_slice(std::span<const real_t> logits, std::size_t prior_label,
                                      const JointLayout& layout);

// K+1 cloze candidates for one sample: a uniformly chosen recognized word
// (ascription 1) plus K lexicon words absent from the sentence window
// (ascription 0). Empty when the sample has no recognized sentiment word
// or the lexicon cannot supply K distinct negatives.
std::vector<SwcInstance> build_swc_instances(const LabeledSentence& sample,
                                             const SentimentLexicon& lexicon,
                                             const Vocabulary& vocab, std::size_t max_len,
                                             std::size_t k_negatives, rng::Stream& pos_rng,
                                             rng::Stream& neg_rng);

// A uniformly chosen recognized word with its lexicon polarity; nullopt
// when the sample contains no sentiment word.
std::optional<CspInstance> build_csp_instance(const LabeledSentence& sample,
                                              const SentimentLexicon& lexicon,
                                              const Vocabulary& vocab, std::size_t max_len,
                                              rng::Stream& rng);

// SWC layout is (sentence label, ascription), CSP layout is
// (word polarity, sentence label).
JointLayout swc_layout(std::size_t class_count);
JointLayout csp_layout(std::size_t class_count);

// Loss of one cloze candidate. joint: cross-entropy over the full product
// alphabet; conditional: cross-entropy of the ascription given the
// sentence label.
Tape::NodeId swc_instance_loss(Tape& tape, Tape::NodeId logits, const SwcInstance& inst,
                               CombinationMode mode, std::size_t class_count);

// Mean over the K+1 candidates.
Tape::NodeId swc_task_loss(Tape& tape, std::span<const Tape::NodeId> logits,
                           std::span<const SwcInstance> instances, CombinationMode mode,
                           std::size_t class_count);

// joint: cross-entropy over the product; conditional: cross-entropy of the
// sentence label given the word polarity.
Tape::NodeId csp_task_loss(Tape& tape, Tape::NodeId logits, const CspInstance& inst,
                           CombinationMode mode, std::size_t class_count);

}  // namespace kesa
