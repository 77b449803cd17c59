#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "kesa/common.hpp"

namespace kesa {

struct LabeledSentence {
  std::vector<std::string> tokens;  // lowercase
  std::size_t label;                // in [0, class_count)
};

struct DatasetSplits {
  std::vector<LabeledSentence> train;
  std::vector<LabeledSentence> valid;
  std::vector<LabeledSentence> test;
  std::size_t class_count = 0;
};

// Lowercase, split on whitespace, punctuation .,!?;:'"() detached as its
// own token.
std::vector<std::string> tokenize(const std::string& text);

// One split from a `label \t text` TSV file. expected_class_count, when
// set, rejects out-of-range labels (eval against a fixed checkpoint).
std::vector<LabeledSentence> load_split(const std::string& path,
                                        std::optional<std::size_t> expected_class_count = std::nullopt);

// Three conforming TSV files. class_count is max label + 1 over all
// splits; a gap in the union of labels is a load error.
DatasetSplits load_dataset(const std::string& train_path, const std::string& valid_path,
                           const std::string& test_path);

// token -> id map with reserved pad=0 and unk=1; built from the training
// split only, ordered by frequency then lexicographically.
class Vocabulary {
 public:
  static constexpr std::uint32_t kPad = 0;
  static constexpr std::uint32_t kUnk = 1;

  static Vocabulary build(std::span<const LabeledSentence> train, std::size_t min_freq);

  std::size_t size() const { return tokens_.size(); }
  std::uint32_t id_of(const std::string& token) const;
  const std::string& token_of(std::uint32_t id) const { return tokens_.at(id); }
  std::span<const std::string> tokens() const { return tokens_; }

  // Rebuild from an ordered token list (checkpoint load).
  static Vocabulary from_tokens(std::vector<std::string> tokens);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

struct EncodedSentence {
  std::vector<std::uint32_t> ids;  // length max_len, right-padded with 0
  std::size_t true_len;            // tokens kept after truncation
};

EncodedSentence encode(std::span<const std::string> tokens, const Vocabulary& vocab,
                       std::size_t max_len);

std::vector<std::string> decode(std::span<const std::uint32_t> ids, const Vocabulary& vocab);

}  // namespace kesa
