#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "matchbench/geometry.hpp"
#include "matchbench/image.hpp"

namespace matchbench {

struct Keypoint {
  double x = 0.0;
  double y = 0.0;
  double response = 0.0;
  double scale = 1.0;
};

/// 256-bit string of pairwise intensity comparisons.
struct BinaryDescriptor {
  std::array<std::uint64_t, 4> bits{};

  bool bit(std::size_t i) const { return (bits[i / 64] >> (i % 64)) & 1U; }
  void set_bit(std::size_t i) { bits[i / 64] |= std::uint64_t{1} << (i % 64); }

  friend bool operator==(const BinaryDescriptor&, const BinaryDescriptor&) = default;
};

int hamming_distance(const BinaryDescriptor& a, const BinaryDescriptor& b);

inline constexpr double kUnknownTiming = -1.0;

/// Matcher output for one image pair. Timings are milliseconds or kUnknownTiming.
struct CorrespondenceSet {
  std::int64_t pair_id = 0;
  std::vector<Correspondence> correspondences;
  double detect_ms = kUnknownTiming;
  double match_ms = kUnknownTiming;
  double select_ms = kUnknownTiming;

  friend bool operator==(const CorrespondenceSet&, const CorrespondenceSet&) = default;
};

/// Nearest and second-nearest neighbour of descriptor `index_a` among set b.
struct TentativeMatch {
  std::size_t index_a = 0;
  std::size_t index_b = 0;
  double distance = 0.0;
  double second_distance = 0.0;

  friend bool operator==(const TentativeMatch&, const TentativeMatch&) = default;
};

/// second_distance when set b has fewer than two descriptors.
inline constexpr double kNoSecondNeighbor = std::numeric_limits<double>::infinity();

struct HarrisConfig {
  double k = 0.04;
  // Keep responses above quality_level * (strongest response).
  double quality_level = 0.01;
};

/// Harris corners with 3x3 non-maximum suppression and parabolic sub-pixel
/// refinement, sorted by response (descending), truncated to max_features.
std::vector<Keypoint> detect_corners(const GrayImage& image, std::size_t max_features,
                                     const HarrisConfig& cfg = {});

struct DescribedKeypoints {
  std::vector<Keypoint> keypoints;  // survivors, parallel to descriptors
  std::vector<BinaryDescriptor> descriptors;
  std::size_t dropped = 0;  // keypoints closer than 16 px to the border
};

/// BRIEF-style descriptors on a 5x5 box-filtered image.
DescribedKeypoints compute_descriptors(const GrayImage& image, std::span<const Keypoint> keypoints);

/// Exhaustive Hamming search; ties resolve to the lower index in b.
std::vector<TentativeMatch> match_nn(std::span<const BinaryDescriptor> desc_a,
                                     std::span<const BinaryDescriptor> desc_b);

/// Exhaustive Euclidean search over real-valued descriptors (equal lengths).
std::vector<TentativeMatch> match_nn(std::span<const std::vector<float>> desc_a,
                                     std::span<const std::vector<float>> desc_b);

/// Keeps matches with distance < threshold * second_distance.
std::vector<TentativeMatch> ratio_test(std::span<const TentativeMatch> matches,
                                       double threshold = 0.8);

struct BuiltinMatcherConfig {
  std::size_t max_features = 2000;
  double ratio = 0.8;
  HarrisConfig harris;
};

/// detect -> describe -> match_nn -> ratio_test, timed per stage.
CorrespondenceSet run_builtin_matcher(const GrayImage& image_a, const GrayImage& image_b,
                                      const BuiltinMatcherConfig& cfg = {},
                                      std::int64_t pair_id = 0);

// ---- correspondence files -------------------------------------------------

std::string format_correspondences(const CorrespondenceSet& set);
CorrespondenceSet parse_correspondences(std::string_view text, std::int64_t pair_id,
                                        const std::string& source = "<memory>");

std::string correspondence_filename(std::int64_t pair_id);
/// Writes `<dir>/<pair_id>.corr`; returns the path.
std::string write_correspondences(const std::string& dir, const CorrespondenceSet& set);
/// Reads `<dir>/<pair_id>.corr`; kNotFound if absent.
CorrespondenceSet load_correspondences(const std::string& dir, std::int64_t pair_id);

/// Where the evaluator obtains a pair's correspondences. Implementations
/// must be safe to call concurrently.
class CorrespondenceSource {
 public:
  virtual ~CorrespondenceSource() = default;
  virtual CorrespondenceSet load(std::int64_t pair_id) const = 0;
};

class DirectoryCorrespondenceSource : public CorrespondenceSource {
 public:
  explicit DirectoryCorrespondenceSource(std::string dir) : dir_(std::move(dir)) {}
  CorrespondenceSet load(std::int64_t pair_id) const override;

 private:
  std::string dir_;
};

class MemoryCorrespondenceSource : public CorrespondenceSource {
 public:
  void add(CorrespondenceSet set);
  CorrespondenceSet load(std::int64_t pair_id) const override;

 private:
  std::map<std::int64_t, CorrespondenceSet> sets_;
};

}  // namespace matchbench
