#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace kesa {

// Scalar type for all tensors. Tests assume the 64-bit default; building
// with -DKESA_REAL32 trades precision for speed and loosens tolerances.
#ifdef KESA_REAL32
using real_t = float;
#else
using real_t = double;
#endif

// Fixed label alphabets: word ascription Y in {0,1} and word polarity
// Z = {negative, positive}.
inline constexpr std::size_t kAscriptionArity = 2;
inline constexpr std::size_t kPolarityArity = 2;

// Caller violated a documented precondition (empty input, repeated
// backward, index out of range, ...).
class UsageError : public std::logic_error {
 public:
  explicit UsageError(const std::string& what) : std::logic_error(what) {}
};

// Recoverable input-data error; carries a 1-based line number when the
// source is a line-oriented file (0 when not applicable).
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Invalid run configuration (bad field value, unknown key, missing path).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Training produced a non-finite loss.
class DivergenceError : public std::runtime_error {
 public:
  explicit DivergenceError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace kesa
