#include <charconv>
#include <cmath>
#include <filesystem>
#include <mutex>

#include "matchbench/matching.hpp"
#include "text_util.hpp"

namespace matchbench {

namespace {

constexpr std::string_view kMagic = "matchbench-corr";
constexpr std::string_view kFormatVersion = "1";

std::string format_timing(double ms) { return ms < 0.0 ? "-" : format_double(ms); }

double parse_timing(std::string_view token, const std::string& source, std::size_t line) {
  if (token == "-") return kUnknownTiming;
  const double v = detail::parse_finite(token, source, line);
  if (v < 0.0) throw ParseError(source, line, "negative timing '" + std::string(token) + "'");
  return v;
}

}  // namespace

std::string format_correspondences(const CorrespondenceSet& set) {
  std::string out;
  out.reserve(32 + set.correspondences.size() * 48);
  out += kMagic;
  out += ' ';
  out += kFormatVersion;
  out += "\ntimes ";
  out += format_timing(set.detect_ms) + ' ' + format_timing(set.match_ms) + ' ' +
         format_timing(set.select_ms) + '\n';
  for (const Correspondence& c : set.correspondences) {
    out += format_double(c.x1) + ' ' + format_double(c.y1) + ' ' + format_double(c.x2) + ' ' +
           format_double(c.y2) + '\n';
  }
  return out;
}

CorrespondenceSet parse_correspondences(std::string_view text, std::int64_t pair_id,
                                        const std::string& source) {
  CorrespondenceSet set;
  set.pair_id = pair_id;
  std::size_t line_no = 0;
  bool saw_magic = false, saw_times = false;

  for (std::string_view line : detail::split_lines(text)) {
    ++line_no;
    const std::vector<std::string_view> tokens = detail::split_ws(line);
    if (!saw_magic) {
      if (tokens.size() != 2 || tokens[0] != kMagic) {
        throw ParseError(source, line_no, "expected 'matchbench-corr 1' header");
      }
      if (tokens[1] != kFormatVersion) {
        throw ParseError(source, line_no, "unsupported format version '" + std::string(tokens[1]) + "'");
      }
      saw_magic = true;
      continue;
    }
    if (!saw_times) {
      if (tokens.size() != 4 || tokens[0] != "times") {
        throw ParseError(source, line_no, "expected 'times <detect> <match> <select>'");
      }
      set.detect_ms = parse_timing(tokens[1], source, line_no);
      set.match_ms = parse_timing(tokens[2], source, line_no);
      set.select_ms = parse_timing(tokens[3], source, line_no);
      saw_times = true;
      continue;
    }
    if (tokens.empty()) continue;
    if (tokens.size() != 4) {
      throw ParseError(source, line_no,
                       "expected 4 coordinates, got " + std::to_string(tokens.size()));
    }
    set.correspondences.push_back({detail::parse_finite(tokens[0], source, line_no),
                                   detail::parse_finite(tokens[1], source, line_no),
                                   detail::parse_finite(tokens[2], source, line_no),
                                   detail::parse_finite(tokens[3], source, line_no)});
  }
  if (!saw_magic) throw ParseError(source, 1, "empty correspondence file");
  if (!saw_times) throw ParseError(source, 2, "missing 'times' line");
  return set;
}

std::string correspondence_filename(std::int64_t pair_id) {
  return std::to_string(pair_id) + ".corr";
}

std::string write_correspondences(const std::string& dir, const CorrespondenceSet& set) {
  std::filesystem::create_directories(dir);
  const std::string path = (std::filesystem::path(dir) / correspondence_filename(set.pair_id)).string();
  write_text_file(path, format_correspondences(set));
  return path;
}

CorrespondenceSet load_correspondences(const std::string& dir, std::int64_t pair_id) {
  const std::filesystem::path path = std::filesystem::path(dir) / correspondence_filename(pair_id);
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) {
    throw Error(ErrorKind::kNotFound, "no correspondence file for pair " +
                                          std::to_string(pair_id) + " (" + path.string() + ")");
  }
  return parse_correspondences(read_text_file(path.string()), pair_id, path.string());
}

CorrespondenceSet DirectoryCorrespondenceSource::load(std::int64_t pair_id) const {
  return load_correspondences(dir_, pair_id);
}

void MemoryCorrespondenceSource::add(CorrespondenceSet set) {
  const std::int64_t id = set.pair_id;
  sets_[id] = std::move(set);
}

CorrespondenceSet MemoryCorrespondenceSource::load(std::int64_t pair_id) const {
  const auto it = sets_.find(pair_id);
  if (it == sets_.end()) {
    throw Error(ErrorKind::kNotFound, "no correspondences for pair " + std::to_string(pair_id));
  }
  return it->second;
}

}  // namespace matchbench
