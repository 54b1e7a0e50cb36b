#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "matchbench/geometry.hpp"
#include "matchbench/image.hpp"

namespace matchbench {

/// Axis-aligned textured rectangle in world coordinates. `axis` is the
/// constant coordinate (0 = x, 1 = y, 2 = z); the other two are bounded.
struct TexturedQuad {
  int axis = 2;
  double offset = 0.0;
  double lo[2] = {-1e9, -1e9};
  double hi[2] = {1e9, 1e9};
  std::uint64_t texture_seed = 0;
};

/// A box-shaped room (walls, floor, ceiling) with a free-standing crate.
/// World y points down, z forward from the first camera.
struct SyntheticScene {
  std::vector<TexturedQuad> quads;

  static SyntheticScene room(std::uint64_t seed = 7);
};

/// Procedural texture in [0, 255]: random-intensity blocks over value noise.
double texture_intensity(std::uint64_t seed, double u, double v);

/// Nearest hit distance along a ray, or +inf.
double ray_hit(const SyntheticScene& scene, const Vec3& origin, const Vec3& dir, double* intensity);

/// Renders with `samples`² supersampling per pixel. `pose` is world-from-camera.
GrayImage render_view(const SyntheticScene& scene, const Calibration& k, const Pose& pose, int width,
                      int height, int samples = 3);

struct SyntheticSequenceConfig {
  std::string name = "synthetic30";
  int frames = 30;
  int width = 640;
  int height = 480;
  Calibration calibration{525.0, 525.0, 319.5, 239.5, 0.0};
  double fps = 30.0;
  double step = 0.06;       // meters per frame along x
  double yaw_step = 0.25;   // degrees per frame about y
  std::uint64_t seed = 7;
};

/// World-from-camera poses of the sequence: a slow sideways dolly with yaw.
std::vector<Pose> synthetic_trajectory(const SyntheticSequenceConfig& cfg);

/// Writes a TUM-style directory: rgb/*.png, rgb.txt, groundtruth.txt,
/// calibration.txt.
void write_synthetic_tum(const std::string& dir, const SyntheticSequenceConfig& cfg);

}  // namespace matchbench
