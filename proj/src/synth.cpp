#include "kesa/synth.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

namespace kesa {

namespace {

// Lexicon words usable as corpus tokens (multiword entries would never
// tokenize back to a single token).
std::vector<std::pair<std::string, Polarity>> plantable_words(const SentimentLexicon& lex) {
  std::vector<std::pair<std::string, Polarity>> out;
  for (std::size_t i = 0; i < lex.size(); ++i)
    if (lex.word_at(i).find('_') == std::string::npos)
      out.emplace_back(lex.word_at(i), lex.polarity_at(i));
  return out;
}

std::string filler_token(std::size_t i) {
  // two lowercase letters + digits, disjoint from any real word by the "fx" prefix
  return "fx" + std::to_string(i);
}

}  // namespace

std::vector<LabeledSentence> generate_synthetic_split(const SentimentLexicon& lexicon,
                                                      std::size_t count, const SynthConfig& cfg,
                                                      rng::Stream& stream) {
  const auto words = plantable_words(lexicon);
  std::vector<std::string> pos_words, neg_words;
  for (const auto& [w, p] : words)
    (p == Polarity::positive ? pos_words : neg_words).push_back(w);
  if (pos_words.empty() || neg_words.empty())
    throw UsageError("synthetic corpus needs both polarities in the lexicon");

  std::vector<LabeledSentence> out;
  out.reserve(count);
  for (std::size_t n = 0; n < count; ++n) {
    const bool positive = stream.bernoulli(0.5);
    const std::size_t k = 1 + static_cast<std::size_t>(stream.uniform_int(3));
    // majority polarity equals the drawn one: (1,0), (2,0) or (2,1)
    const std::size_t majority = k == 3 ? 2 : k;
    const std::size_t minority = k - majority;

    auto& maj_pool = positive ? pos_words : neg_words;
    auto& min_pool = positive ? neg_words : pos_words;
    std::vector<std::string> planted;
    for (std::size_t i = 0; i < majority; ++i)
      planted.push_back(maj_pool[stream.uniform_int(maj_pool.size())]);
    for (std::size_t i = 0; i < minority; ++i)
      planted.push_back(min_pool[stream.uniform_int(min_pool.size())]);

    const std::size_t len =
        cfg.min_len + static_cast<std::size_t>(stream.uniform_int(cfg.max_len - cfg.min_len + 1));
    LabeledSentence s;
    s.tokens.reserve(len);
    for (std::size_t i = 0; i < len; ++i)
      s.tokens.push_back(filler_token(stream.uniform_int(cfg.filler_vocab)));

    // distinct slots so no planted word erases another
    std::vector<std::size_t> slots(len);
    for (std::size_t i = 0; i < len; ++i) slots[i] = i;
    stream.shuffle(slots);
    for (std::size_t i = 0; i < planted.size(); ++i) s.tokens[slots[i]] = planted[i];

    bool label_positive = positive;
    if (cfg.noise > 0 && stream.bernoulli(cfg.noise)) label_positive = !label_positive;
    s.label = label_positive ? 1 : 0;
    out.push_back(std::move(s));
  }
  return out;
}

DatasetSplits write_synthetic_corpus(const SentimentLexicon& lexicon, const SynthConfig& cfg,
                                     const std::string& out_dir) {
  if (cfg.min_len < 4 || cfg.max_len < cfg.min_len)
    throw ConfigError("synth: need 4 <= min_len <= max_len");
  std::filesystem::create_directories(out_dir);

  rng::Stream root(cfg.seed);
  DatasetSplits splits;
  rng::Stream tr = root.derive("train");
  rng::Stream va = root.derive("valid");
  rng::Stream te = root.derive("test");
  splits.train = generate_synthetic_split(lexicon, cfg.train_count, cfg, tr);
  splits.valid = generate_synthetic_split(lexicon, cfg.valid_count, cfg, va);
  splits.test = generate_synthetic_split(lexicon, cfg.test_count, cfg, te);
  splits.class_count = 2;

  const std::pair<const char*, const std::vector<LabeledSentence>*> files[] = {
      {"train.tsv", &splits.train}, {"valid.tsv", &splits.valid}, {"test.tsv", &splits.test}};
  for (const auto& [name, data] : files) {
    const auto path = std::filesystem::path(out_dir) / name;
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write " + path.string());
    for (const LabeledSentence& s : *data) {
      os << s.label << '\t';
      for (std::size_t i = 0; i < s.tokens.size(); ++i) os << (i ? " " : "") << s.tokens[i];
      os << '\n';
    }
  }
  return splits;
}

}  // namespace kesa
