#include "kesa/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <set>

namespace kesa {

namespace {
bool is_detached_punct(char c) {
  switch (c) {
    case '.': case ',': case '!': case '?': case ';': case ':':
    case '\'': case '"': case '(': case ')':
      return true;
    default:
      return false;
  }
}
}  // namespace

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) {
      tokens.push_back(cur);
      cur.clear();
    }
  };
  for (char raw : text) {
    const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(raw)));
    if (std::isspace(static_cast<unsigned char>(c))) {
      flush();
    } else if (is_detached_punct(c)) {
      flush();
      tokens.emplace_back(1, c);
    } else {
      cur.push_back(c);
    }
  }
  flush();
  return tokens;
}

std::vector<LabeledSentence> load_split(const std::string& path,
                                        std::optional<std::size_t> expected_class_count) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open dataset file: " + path);

  std::vector<LabeledSentence> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos)
      throw ParseError(path + ": expected `label \\t text`", line_no);

    const std::string_view label_str(line.data(), tab);
    std::size_t label;
    auto [p, ec] = std::from_chars(label_str.data(), label_str.data() + label_str.size(), label);
    if (ec != std::errc() || p != label_str.data() + label_str.size())
      throw ParseError(path + ": non-integer label '" + std::string(label_str) + "'", line_no);
    if (expected_class_count && label >= *expected_class_count)
      throw ParseError(path + ": label out of range", line_no);

    LabeledSentence s;
    s.label = label;
    s.tokens = tokenize(line.substr(tab + 1));
    if (s.tokens.empty()) throw ParseError(path + ": empty text", line_no);
    out.push_back(std::move(s));
  }
  if (out.empty()) throw ParseError(path + ": empty dataset file");
  return out;
}

DatasetSplits load_dataset(const std::string& train_path, const std::string& valid_path,
                           const std::string& test_path) {
  DatasetSplits splits;
  splits.train = load_split(train_path);
  splits.valid = load_split(valid_path);
  splits.test = load_split(test_path);

  std::set<std::size_t> seen;
  for (const auto* split : {&splits.train, &splits.valid, &splits.test})
    for (const LabeledSentence& s : *split) seen.insert(s.label);
  const std::size_t max_label = *seen.rbegin();
  for (std::size_t l = 0; l <= max_label; ++l)
    if (!seen.count(l))
      throw ParseError("label gap: class " + std::to_string(l) + " absent from all splits");
  splits.class_count = max_label + 1;
  return splits;
}

Vocabulary Vocabulary::build(std::span<const LabeledSentence> train, std::size_t min_freq) {
  if (min_freq < 1) throw UsageError("build_vocab: min_freq must be >= 1");
  std::map<std::string, std::size_t> freq;
  for (const LabeledSentence& s : train)
    for (const std::string& t : s.tokens) ++freq[t];

  std::vector<std::pair<std::string, std::size_t>> kept;
  for (const auto& [tok, f] : freq)
    if (f >= min_freq) kept.emplace_back(tok, f);
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  Vocabulary v;
  v.tokens_ = {"<pad>", "<unk>"};
  for (auto& [tok, f] : kept) v.tokens_.push_back(std::move(tok));
  for (std::uint32_t i = 0; i < v.tokens_.size(); ++i) v.index_.emplace(v.tokens_[i], i);
  return v;
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  if (tokens.size() < 2 || tokens[0] != "<pad>" || tokens[1] != "<unk>")
    throw ParseError("vocabulary must start with <pad>, <unk>");
  Vocabulary v;
  v.tokens_ = std::move(tokens);
  for (std::uint32_t i = 0; i < v.tokens_.size(); ++i) v.index_.emplace(v.tokens_[i], i);
  if (v.index_.size() != v.tokens_.size()) throw ParseError("duplicate token in vocabulary");
  return v;
}

std::uint32_t Vocabulary::id_of(const std::string& token) const {
  const auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

EncodedSentence encode(std::span<const std::string> tokens, const Vocabulary& vocab,
                       std::size_t max_len) {
  if (max_len < 1) throw UsageError("encode: max_len must be >= 1");
  EncodedSentence e;
  e.true_len = std::min(tokens.size(), max_len);
  e.ids.assign(max_len, Vocabulary::kPad);
  for (std::size_t i = 0; i < e.true_len; ++i) e.ids[i] = vocab.id_of(tokens[i]);
  return e;
}

std::vector<std::string> decode(std::span<const std::uint32_t> ids, const Vocabulary& vocab) {
  std::vector<std::string> tokens;
  for (std::uint32_t id : ids) {
    if (id == Vocabulary::kPad) break;
    tokens.push_back(vocab.token_of(id));
  }
  return tokens;
}

}  // namespace kesa
