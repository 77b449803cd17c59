#pragma once

#include <string>

#include "kesa/corpus.hpp"
#include "kesa/model.hpp"

namespace kesa {

// Binary checkpoint: magic, fingerprint, model config, the vocabulary, and
// every parameter tensor with a shape header and 64-bit little-endian
// values. Loading verifies the fingerprint and all shapes.
struct Checkpoint {
  ModelConfig cfg;
  Vocabulary vocab;
  ModelParams params;
};

std::uint64_t config_fingerprint(const ModelConfig& cfg, const Vocabulary& vocab);

void save_checkpoint(const std::string& path, const ModelParams& params, const Vocabulary& vocab);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace kesa
