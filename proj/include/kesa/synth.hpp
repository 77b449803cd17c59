#pragma once

#include <string>
#include <vector>

#include "kesa/corpus.hpp"
#include "kesa/lexicon.hpp"

namespace kesa {

struct SynthConfig {
  std::size_t train_count = 2000;
  std::size_t valid_count = 500;
  std::size_t test_count = 500;
  double noise = 0.1;  // label flip probability
  std::uint64_t seed = 7;
  std::size_t filler_vocab = 100;
  std::size_t min_len = 5;
  std::size_t max_len = 10;
};

// Sentences mixing 1..3 planted lexicon words with filler tokens; the
// label is the planted words' majority polarity (ties avoided by
// construction), flipped with the noise probability. Labels: negative=0,
// positive=1.
std::vector<LabeledSentence> generate_synthetic_split(const SentimentLexicon& lexicon,
                                                      std::size_t count, const SynthConfig& cfg,
                                                      rng::Stream& stream);

// Writes train.tsv / valid.tsv / test.tsv under out_dir in the dataset
// format; returns the generated splits.
DatasetSplits write_synthetic_corpus(const SentimentLexicon& lexicon, const SynthConfig& cfg,
                                     const std::string& out_dir);

}  // namespace kesa
