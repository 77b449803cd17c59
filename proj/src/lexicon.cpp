#include "kesa/lexicon.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

namespace kesa {

const char* to_string(Polarity p) { return p == Polarity::positive ? "positive" : "negative"; }

namespace {

std::string lowercase(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

bool parse_double(std::string_view s, double& out) {
  const char* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && p == end;
}

bool parse_rank(std::string_view s, std::uint32_t& out) {
  const char* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && p == end && out >= 1;
}

// First five fields split on tab; the gloss keeps any further tabs.
bool split_fields(const std::string& line, std::array<std::string_view, 6>& out) {
  std::string_view rest = line;
  for (int i = 0; i < 5; ++i) {
    const std::size_t tab = rest.find('\t');
    if (tab == std::string_view::npos) return false;
    out[i] = rest.substr(0, tab);
    rest.remove_prefix(tab + 1);
  }
  out[5] = rest;
  return true;
}

void parse_line(const std::string& line, std::size_t line_no, std::vector<SenseEntry>& out) {
  std::array<std::string_view, 6> f;
  if (!split_fields(line, f)) throw ParseError("expected 6 tab-separated fields", line_no);
  if (f[0].size() != 1 || std::string_view("anvr").find(f[0][0]) == std::string_view::npos)
    throw ParseError("bad POS tag '" + std::string(f[0]) + "'", line_no);

  double pos_score, neg_score;
  if (!parse_double(f[2], pos_score) || !parse_double(f[3], neg_score))
    throw ParseError("unparsable score", line_no);
  if (pos_score < 0 || pos_score > 1 || neg_score < 0 || neg_score > 1 ||
      pos_score + neg_score > 1 + 1e-9)
    throw ParseError("scores out of range", line_no);

  std::string_view terms = f[4];
  std::size_t added = 0;
  while (!terms.empty()) {
    const std::size_t sp = terms.find(' ');
    std::string_view item = terms.substr(0, sp);
    terms = (sp == std::string_view::npos) ? std::string_view{} : terms.substr(sp + 1);
    if (item.empty()) continue;
    const std::size_t hash = item.rfind('#');
    if (hash == std::string_view::npos || hash == 0)
      throw ParseError("synset term '" + std::string(item) + "' lacks a rank", line_no);
    std::uint32_t rank;
    if (!parse_rank(item.substr(hash + 1), rank))
      throw ParseError("bad sense rank in '" + std::string(item) + "'", line_no);
    SenseEntry e;
    e.pos_tag = f[0][0];
    e.word = lowercase(std::string(item.substr(0, hash)));
    e.sense_rank = rank;
    e.pos_score = pos_score;
    e.neg_score = neg_score;
    out.push_back(std::move(e));
    ++added;
  }
  if (added == 0) throw ParseError("empty synset term list", line_no);
}

std::string format_score(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

ParsedSenses parse_sentiwordnet(std::istream& in, ParseMode mode) {
  ParsedSenses result;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      parse_line(line, line_no, result.entries);
    } catch (const ParseError&) {
      if (mode == ParseMode::strict) throw;
      ++result.skipped_lines;
    }
  }
  return result;
}

void serialize_sense_line(std::ostream& out, std::span<const SenseEntry> senses_of_line,
                          const std::string& id, const std::string& gloss) {
  if (senses_of_line.empty()) throw UsageError("serialize_sense_line: no senses");
  const SenseEntry& first = senses_of_line.front();
  out << first.pos_tag << '\t' << id << '\t' << format_score(first.pos_score) << '\t'
      << format_score(first.neg_score) << '\t';
  for (std::size_t i = 0; i < senses_of_line.size(); ++i)
    out << (i ? " " : "") << senses_of_line[i].word << '#' << senses_of_line[i].sense_rank;
  out << '\t' << gloss;
}

std::optional<Polarity> resolve_polarity(std::span<const SenseEntry> senses) {
  if (senses.empty()) throw UsageError("resolve_polarity: empty sense list");
  bool found = false;
  double best_mag = -1;
  std::uint32_t best_rank = 0;
  char best_pos = 0;
  double best_signed = 0;
  for (const SenseEntry& e : senses) {
    const double s = e.pos_score - e.neg_score;
    const double mag = std::abs(s);
    if (mag == 0) continue;
    // order: larger |score|, then smaller rank, then POS tag for a total order
    const bool wins = !found || mag > best_mag ||
                      (mag == best_mag && (e.sense_rank < best_rank ||
                                           (e.sense_rank == best_rank && e.pos_tag < best_pos)));
    if (wins) {
      found = true;
      best_mag = mag;
      best_rank = e.sense_rank;
      best_pos = e.pos_tag;
      best_signed = s;
    }
  }
  if (!found) return std::nullopt;
  return best_signed > 0 ? Polarity::positive : Polarity::negative;
}

SentimentLexicon SentimentLexicon::build(std::span<const SenseEntry> entries, BuildCounts* counts) {
  std::map<std::string, std::vector<SenseEntry>> by_word;
  for (const SenseEntry& e : entries) by_word[e.word].push_back(e);

  SentimentLexicon lex;
  BuildCounts c;
  for (auto& [word, senses] : by_word) {
    const auto polarity = resolve_polarity(senses);
    if (!polarity) {
      ++c.dropped_neutral;
      continue;
    }
    lex.index_.emplace(word, lex.words_.size());
    lex.words_.emplace_back(word, *polarity);
    ++c.kept;
  }
  if (counts) *counts = c;
  return lex;
}

std::optional<Polarity> SentimentLexicon::polarity_of(const std::string& word) const {
  const auto it = index_.find(word);
  if (it == index_.end()) return std::nullopt;
  return words_[it->second].second;
}

std::vector<RecognizedWord> SentimentLexicon::recognize(std::span<const std::string> tokens) const {
  std::vector<RecognizedWord> hits;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto it = index_.find(tokens[i]);
    if (it != index_.end()) hits.push_back({i, tokens[i], words_[it->second].second});
  }
  return hits;
}

std::pair<std::string, Polarity> SentimentLexicon::sample_negative(
    const std::unordered_set<std::string>& excluded, rng::Stream& rng) const {
  std::size_t blocked = 0;
  for (const std::string& w : excluded)
    if (index_.count(w)) ++blocked;
  if (blocked >= words_.size())
    throw UsageError("sample_negative: exclusions exhaust the lexicon");

  for (;;) {
    const std::size_t i = static_cast<std::size_t>(rng.uniform_int(words_.size()));
    if (!excluded.count(words_[i].first)) return words_[i];
  }
}

void SentimentLexicon::export_tsv(std::ostream& out) const {
  for (const auto& [word, pol] : words_) out << word << '\t' << to_string(pol) << '\n';
}

SentimentLexicon SentimentLexicon::load_tsv(std::istream& in) {
  SentimentLexicon lex;
  std::string line;
  std::size_t line_no = 0;
  std::map<std::string, Polarity> sorted;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) throw ParseError("expected `word \\t polarity`", line_no);
    const std::string word = line.substr(0, tab);
    const std::string pol = line.substr(tab + 1);
    if (pol == "positive")
      sorted[word] = Polarity::positive;
    else if (pol == "negative")
      sorted[word] = Polarity::negative;
    else
      throw ParseError("unknown polarity '" + pol + "'", line_no);
  }
  for (const auto& [word, pol] : sorted) {
    lex.index_.emplace(word, lex.words_.size());
    lex.words_.emplace_back(word, pol);
  }
  return lex;
}

SentimentLexicon load_lexicon_file(const std::string& path, ParseMode mode,
                                   SentimentLexicon::BuildCounts* counts, std::size_t* skipped) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open lexicon file: " + path);

  // sniff the first data line: 2 fields = compiled export, 6 = raw senses
  std::string line;
  bool compiled = false;
  bool decided = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    compiled = std::count(line.begin(), line.end(), '\t') == 1;
    decided = true;
    break;
  }
  in.clear();
  in.seekg(0);
  if (!decided) return SentimentLexicon();  // empty file -> empty lexicon

  if (compiled) {
    if (counts) *counts = {};
    if (skipped) *skipped = 0;
    return SentimentLexicon::load_tsv(in);
  }
  ParsedSenses parsed = parse_sentiwordnet(in, mode);
  if (skipped) *skipped = parsed.skipped_lines;
  return SentimentLexicon::build(parsed.entries, counts);
}

}  // namespace kesa
