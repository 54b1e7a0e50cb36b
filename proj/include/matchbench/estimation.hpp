#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "matchbench/geometry.hpp"

namespace matchbench {

struct RansacConfig {
  double inlier_threshold = 1.0;  // pixels; a correspondence is an inlier if Sampson < threshold^2
  double confidence = 0.999;
  int max_iterations = 10000;
  int min_iterations = 100;
  std::uint64_t seed = 0;
  // Uniform subsample cap applied before sampling; 0 disables it.
  std::size_t max_correspondences = 0;

  void validate() const;

  /// Copy whose seed is `seed ^ pair_id`, giving every pair its own stream.
  RansacConfig for_pair(std::int64_t pair_id) const;

  friend bool operator==(const RansacConfig&, const RansacConfig&) = default;
};

struct NormalizedPoints {
  Mat3 transform = Mat3::Identity();
  std::vector<Vec2> points;
};

/// Similarity moving the centroid to the origin with mean distance sqrt(2).
NormalizedPoints normalize_points(std::span<const Vec2> points);

/// Normalized 8-point estimate with rank-2 enforcement. The result has unit
/// Frobenius norm and a positive largest-magnitude entry.
FundamentalMatrix eight_point_fundamental(std::span<const Correspondence> correspondences);

struct RansacResult {
  FundamentalMatrix fundamental;
  std::vector<std::uint8_t> inlier_mask;
  int num_iterations = 0;

  std::size_t inlier_count() const;
};

RansacResult ransac_fundamental(std::span<const Correspondence> correspondences,
                                const RansacConfig& cfg);

struct PoseEstimate {
  Pose pose;  // camera2-from-camera1, unit translation
  FundamentalMatrix fundamental;
  std::vector<std::uint8_t> inlier_mask;
  int num_iterations = 0;
  double mean_inlier_sampson = 0.0;

  std::size_t inlier_count() const;
};

/// RANSAC fundamental fit, conversion to E, and cheirality-checked decomposition.
PoseEstimate estimate_relative_pose(std::span<const Correspondence> correspondences,
                                    const Calibration& K1, const Calibration& K2,
                                    const RansacConfig& cfg);

}  // namespace matchbench
