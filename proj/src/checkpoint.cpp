#include "kesa/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "kesa/rng.hpp"

namespace kesa {

namespace {

constexpr char kMagic[8] = {'K', 'E', 'S', 'A', 'C', 'K', 'P', '1'};

void put_u32(std::ostream& os, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 4);
}

void put_u64(std::ostream& os, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 8);
}

void put_f64(std::ostream& os, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(os, bits);
}

void put_string(std::ostream& os, const std::string& s) {
  put_u32(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw ParseError("checkpoint truncated");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t(b[i]) << (8 * i);
  return v;
}

std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) throw ParseError("checkpoint truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t(b[i]) << (8 * i);
  return v;
}

double get_f64(std::istream& is) {
  const std::uint64_t bits = get_u64(is);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

std::string get_string(std::istream& is) {
  const std::uint32_t len = get_u32(is);
  if (len > (1u << 20)) throw ParseError("checkpoint string too long");
  std::string s(len, '\0');
  if (len && !is.read(s.data(), len)) throw ParseError("checkpoint truncated");
  return s;
}

void put_tensor(std::ostream& os, const std::string& name, const Tensor& t) {
  put_string(os, name);
  put_u32(os, static_cast<std::uint32_t>(t.ndim()));
  for (std::size_t e : t.shape()) put_u64(os, e);
  for (std::size_t i = 0; i < t.size(); ++i) put_f64(os, static_cast<double>(t[i]));
}

Tensor get_tensor(std::istream& is, const std::string& expect_name,
                  const std::vector<std::size_t>& expect_shape) {
  const std::string name = get_string(is);
  if (name != expect_name) throw ParseError("checkpoint tensor order: expected " + expect_name);
  const std::uint32_t ndim = get_u32(is);
  std::vector<std::size_t> shape(ndim);
  for (auto& e : shape) e = static_cast<std::size_t>(get_u64(is));
  if (shape != expect_shape)
    throw ParseError("checkpoint shape mismatch for " + expect_name);
  Tensor t{shape};
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<real_t>(get_f64(is));
  return t;
}

}  // namespace

std::uint64_t config_fingerprint(const ModelConfig& cfg, const Vocabulary& vocab) {
  std::uint64_t h = rng::fnv1a64("kesa-ckpt");
  auto mix = [&h](std::uint64_t v) { h = rng::splitmix64(h ^ v); };
  mix(cfg.vocab_size);
  mix(cfg.dim);
  mix(cfg.class_count);
  mix(cfg.max_len);
  for (const std::string& t : vocab.tokens()) mix(rng::fnv1a64(t));
  return h;
}

void save_checkpoint(const std::string& path, const ModelParams& params, const Vocabulary& vocab) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot write checkpoint: " + path);
  os.write(kMagic, 8);
  put_u64(os, config_fingerprint(params.cfg, vocab));
  put_u32(os, static_cast<std::uint32_t>(params.cfg.vocab_size));
  put_u32(os, static_cast<std::uint32_t>(params.cfg.dim));
  put_u32(os, static_cast<std::uint32_t>(params.cfg.class_count));
  put_u32(os, static_cast<std::uint32_t>(params.cfg.max_len));
  for (const std::string& t : vocab.tokens()) put_string(os, t);

  ModelParams& p = const_cast<ModelParams&>(params);
  const auto vars = p.all();
  put_u32(os, static_cast<std::uint32_t>(vars.size()));
  for (const Variable* v : vars) put_tensor(os, v->name, v->value);
  if (!os) throw ConfigError("write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open checkpoint: " + path);
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
    throw ParseError("not a checkpoint file: " + path);

  const std::uint64_t stored_fp = get_u64(is);
  Checkpoint ck;
  ck.cfg.vocab_size = get_u32(is);
  ck.cfg.dim = get_u32(is);
  ck.cfg.class_count = get_u32(is);
  ck.cfg.max_len = get_u32(is);

  std::vector<std::string> tokens(ck.cfg.vocab_size);
  for (auto& t : tokens) t = get_string(is);
  ck.vocab = Vocabulary::from_tokens(std::move(tokens));

  if (config_fingerprint(ck.cfg, ck.vocab) != stored_fp)
    throw ParseError("checkpoint fingerprint mismatch: " + path);

  // Rebuild with the stored shapes, then overwrite every tensor.
  rng::Stream dummy(0);
  ck.params = ModelParams::init(ck.cfg, dummy);
  const auto vars = ck.params.all();
  const std::uint32_t count = get_u32(is);
  if (count != vars.size()) throw ParseError("checkpoint tensor count mismatch");
  for (Variable* v : vars) v->value = get_tensor(is, v->name, v->value.shape());
  return ck;
}

}  // namespace kesa
