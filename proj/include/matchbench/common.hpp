#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace matchbench {

inline constexpr std::string_view kToolName = "matchbench";
inline constexpr std::string_view kVersion = MATCHBENCH_VERSION;

/// "matchbench <version>", stamped into every JSON output.
std::string tool_version_string();

enum class ErrorKind {
  kInvalidInput,
  kDegenerateTranslation,
  kDegenerateConfiguration,
  kInsufficientData,
  kEstimationFailed,
  kAmbiguousDecomposition,
  kParse,
  kNotFound,
  kIo,
  kEmptySequence,
  kUsage,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Parse failure; `line` is 1-based, 0 when the failure is not line-bound.
class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what);

  const std::string& source() const noexcept { return source_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string source_;
  std::size_t line_;
};

/// Counter-based generator: output n is splitmix64(key + n * golden_gamma).
/// Streams with different keys are independent, and the sequence for a key
/// is identical on every platform (no std distributions involved).
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : key_(mix(seed)) {}

  std::uint64_t next() { return mix(key_ + (++counter_) * kGamma); }

  /// Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound);

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller (one value per call; no caching).
  double normal();

  static std::uint64_t mix(std::uint64_t z);

 private:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// 64-bit FNV-1a digest rendered as 16 lowercase hex digits.
std::string digest_hex(std::string_view bytes);

/// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);

/// Reads a whole file; throws Error(kIo) on failure.
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view contents);

}  // namespace matchbench
