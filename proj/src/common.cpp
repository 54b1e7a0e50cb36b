#include "matchbench/common.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace matchbench {

std::string tool_version_string() {
  return std::string(kToolName) + " " + std::string(kVersion);
}

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidInput: return "invalid-input";
    case ErrorKind::kDegenerateTranslation: return "degenerate-translation";
    case ErrorKind::kDegenerateConfiguration: return "degenerate-configuration";
    case ErrorKind::kInsufficientData: return "insufficient-data";
    case ErrorKind::kEstimationFailed: return "estimation-failed";
    case ErrorKind::kAmbiguousDecomposition: return "ambiguous-decomposition";
    case ErrorKind::kParse: return "parse-error";
    case ErrorKind::kNotFound: return "not-found";
    case ErrorKind::kIo: return "io-error";
    case ErrorKind::kEmptySequence: return "empty-sequence";
    case ErrorKind::kUsage: return "usage-error";
  }
  return "unknown";
}

namespace {

std::string parse_message(const std::string& source, std::size_t line,
                          const std::string& what) {
  std::ostringstream os;
  os << source;
  if (line > 0) os << ":" << line;
  os << ": " << what;
  return os.str();
}

}  // namespace

ParseError::ParseError(const std::string& source, std::size_t line,
                       const std::string& what)
    : Error(ErrorKind::kParse, parse_message(source, line, what)),
      source_(source),
      line_(line) {}

std::uint64_t CounterRng::mix(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t CounterRng::below(std::uint64_t bound) {
  if (bound == 0) throw Error(ErrorKind::kInvalidInput, "CounterRng::below(0)");
  // Lemire's multiply-shift with rejection keeps the draw unbiased.
  std::uint64_t x = next();
  __uint128_t m = static_cast<__uint128_t>(x) * bound;
  auto low = static_cast<std::uint64_t>(m);
  if (low < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      x = next();
      m = static_cast<__uint128_t>(x) * bound;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

double CounterRng::normal() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::string digest_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kHex[h & 0xF];
    h >>= 4;
  }
  return out;
}

std::string format_double(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw Error(ErrorKind::kInvalidInput, "unformattable double");
  return std::string(buf, end);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot open '" + path + "' for writing");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw Error(ErrorKind::kIo, "write failed for '" + path + "'");
}

}  // namespace matchbench
