#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "kesa/common.hpp"
#include "kesa/rng.hpp"

namespace kesa {

enum class Polarity : std::uint8_t { negative = 0, positive = 1 };

const char* to_string(Polarity p);

// One scored sense of a word, as read from a SentiWordNet-3.0-format file.
struct SenseEntry {
  char pos_tag;            // a, n, v, r
  std::string word;        // lowercase; multiword terms keep their underscores
  std::uint32_t sense_rank;  // 1 = most common usage
  double pos_score;
  double neg_score;
};

struct ParsedSenses {
  std::vector<SenseEntry> entries;
  std::size_t skipped_lines = 0;  // lenient mode only
};

enum class ParseMode { strict, lenient };

// Lines are `POS \t ID \t PosScore \t NegScore \t SynsetTerms \t Gloss`;
// `#` starts a comment, SynsetTerms is space-separated `word#rank` items.
// Strict mode throws ParseError with the offending line number; lenient
// mode skips bad lines and counts them.
ParsedSenses parse_sentiwordnet(std::istream& in, ParseMode mode);

void serialize_sense_line(std::ostream& out, std::span<const SenseEntry> senses_of_line,
                          const std::string& id, const std::string& gloss);

// Dominant-score polarity of one word: the sense with the largest
// |pos-neg| wins, ties broken by the more common usage (smaller rank).
// nullopt when every sense scores zero.
std::optional<Polarity> resolve_polarity(std::span<const SenseEntry> senses);

struct RecognizedWord {
  std::size_t position;
  std::string word;
  Polarity polarity;
};

// Immutable word -> polarity map; lexicographic order throughout so that
// sampling is reproducible.
class SentimentLexicon {
 public:
  struct BuildCounts {
    std::size_t kept = 0;
    std::size_t dropped_neutral = 0;
  };

  static SentimentLexicon build(std::span<const SenseEntry> entries, BuildCounts* counts = nullptr);

  std::size_t size() const { return words_.size(); }
  bool contains(const std::string& word) const { return index_.count(word) != 0; }
  std::optional<Polarity> polarity_of(const std::string& word) const;

  const std::string& word_at(std::size_t i) const { return words_[i].first; }
  Polarity polarity_at(std::size_t i) const { return words_[i].second; }

  // All positions whose token is a lexicon key, left to right.
  std::vector<RecognizedWord> recognize(std::span<const std::string> tokens) const;

  // Uniform draw over lexicon words not in `excluded`. Throws UsageError
  // when the exclusions exhaust the lexicon.
  std::pair<std::string, Polarity> sample_negative(const std::unordered_set<std::string>& excluded,
                                                   rng::Stream& rng) const;

  // `word \t polarity` lines, UTF-8, sorted; bit-exact for diffing.
  void export_tsv(std::ostream& out) const;
  static SentimentLexicon load_tsv(std::istream& in);

 private:
  std::vector<std::pair<std::string, Polarity>> words_;  // sorted by word
  std::unordered_map<std::string, std::size_t> index_;
};

// Reads either a raw SentiWordNet file or a compiled `word \t polarity`
// export, detected from the first data line.
SentimentLexicon load_lexicon_file(const std::string& path, ParseMode mode,
                                   SentimentLexicon::BuildCounts* counts = nullptr,
                                   std::size_t* skipped = nullptr);

}  // namespace kesa
