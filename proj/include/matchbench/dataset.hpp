#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "matchbench/geometry.hpp"

namespace matchbench {

inline constexpr std::string_view kPoseConvention = "world_from_camera;x_j=Rx_i+t";

struct ImageEntry {
  std::string path;  // relative paths resolve against the manifest's directory
  double timestamp = 0.0;
  Calibration calibration;
  Pose pose;  // world-from-camera; translation is the camera center
  bool has_pose = false;
};

/// Canonical sequence description every importer converges on.
struct SequenceManifest {
  std::string name;
  double fps = 0.0;  // 0 for unordered collections
  std::vector<ImageEntry> images;

  std::size_t size() const { return images.size(); }
  std::size_t pose_count() const;
  /// Throws kInvalidInput on decreasing timestamps (ordered sequences),
  /// invalid intrinsics or a non-rotation pose.
  void validate() const;
};

// ---- manifest file ----------------------------------------------------------

std::string format_manifest(const SequenceManifest& manifest);
SequenceManifest parse_manifest(std::string_view text, const std::string& source = "<memory>");
void write_manifest(const SequenceManifest& manifest, const std::string& path);
SequenceManifest read_manifest(const std::string& path);

/// `image_path` if absolute, otherwise joined to the manifest's directory.
std::string resolve_image_path(const std::string& manifest_path, const std::string& image_path);

// ---- importers --------------------------------------------------------------

struct TumImportOptions {
  std::string image_list = "rgb.txt";
  std::string trajectory = "groundtruth.txt";
  // Optional "fx fy cx cy [skew]" file; absent means the TUM default intrinsics.
  std::string calibration = "calibration.txt";
  double max_time_difference = 0.02;
  double fps = 30.0;
};

/// TUM RGB-D layout: `timestamp path` image index plus a
/// `timestamp tx ty tz qx qy qz qw` trajectory; '#' lines are comments.
SequenceManifest import_tum(const std::string& dir, const TumImportOptions& options = {});

struct KittiImportOptions {
  std::string camera = "P0";
  std::string image_subdir = "image_0";
  double fps = 10.0;
};

/// KITTI odometry layout: poses/<seq>.txt (row-major 3x4 world-from-camera per
/// line), sequences/<seq>/calib.txt and optional sequences/<seq>/times.txt.
SequenceManifest import_kitti(const std::string& dir, const std::string& sequence_id,
                              const KittiImportOptions& options = {});

/// One `<image>.camera` file per image: K (3x3), optional distortion triple,
/// R (3x3, world-from-camera), camera center (3), width height.
SequenceManifest import_strecha(const std::string& dir);

/// KITTI poses-file rendering of every image pose (has_pose entries only).
std::string format_kitti_poses(const SequenceManifest& manifest);
std::string format_strecha_camera(const ImageEntry& image, int width, int height);
/// Writes rgb.txt, groundtruth.txt and calibration.txt (from the first image).
void export_tum(const SequenceManifest& manifest, const std::string& dir);

// ---- pair generation --------------------------------------------------------

/// One evaluation unit. gt_relative is camera_query-from-camera_ref.
struct PairTask {
  std::int64_t pair_id = 0;
  std::size_t ref_index = 0;
  std::size_t query_index = 0;
  Pose gt_relative;
  Calibration ref_calibration;
  Calibration query_calibration;
};

struct DroppedPair {
  std::int64_t pair_id = 0;
  std::size_t ref_index = 0;
  std::size_t query_index = 0;
  std::string reason;

  friend bool operator==(const DroppedPair&, const DroppedPair&) = default;
};

struct PairSet {
  std::vector<PairTask> pairs;
  std::vector<DroppedPair> dropped;
};

enum class PairMode { kShortFragment, kWideExhaustive, kWideWindow };

struct PairGenConfig {
  PairMode mode = PairMode::kShortFragment;
  std::size_t k = 15;
  std::size_t window = 9;

  void validate() const;
};

// Index-only constructions; pair ids count up from 0 in (ref, query) order.
std::vector<PairTask> short_baseline_index_pairs(std::size_t n, std::size_t k);
std::vector<PairTask> wide_exhaustive_index_pairs(std::size_t n);
std::vector<PairTask> wide_window_index_pairs(std::size_t n, std::size_t window);

/// Fills gt_relative and calibrations; pairs with a pose-less endpoint are dropped.
PairSet attach_ground_truth(std::span<const PairTask> pairs, const SequenceManifest& manifest);

/// Fragments of k frames; frame 0 of each is matched against the rest.
PairSet generate_short_baseline_pairs(const SequenceManifest& manifest, std::size_t k);
PairSet generate_wide_exhaustive(const SequenceManifest& manifest);
PairSet generate_wide_window_pairs(const SequenceManifest& manifest, std::size_t window = 9);
PairSet generate_pairs(const SequenceManifest& manifest, const PairGenConfig& cfg);

/// Keeps images 0, k, 2k, ...; the result is ordered at fps / k.
SequenceManifest subsample_fragments(const SequenceManifest& manifest, std::size_t k = 15);

// ---- pair list file ---------------------------------------------------------

std::string format_pair_list(std::span<const PairTask> pairs);
/// Index-only tasks; call attach_ground_truth to complete them.
std::vector<PairTask> parse_pair_list(std::string_view text, const std::string& source = "<memory>");
void write_pair_list(std::span<const PairTask> pairs, const std::string& path);
std::vector<PairTask> read_pair_list(const std::string& path);

/// Digest of the canonical pair-list text.
std::string pair_list_digest(std::span<const PairTask> pairs);

}  // namespace matchbench
