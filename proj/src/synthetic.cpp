#include "matchbench/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <numbers>

#include "matchbench/common.hpp"
#include "matchbench/dataset.hpp"

namespace matchbench {

namespace fs = std::filesystem;

namespace {

double hash01(std::uint64_t seed, std::int64_t i, std::int64_t j) {
  const std::uint64_t h = CounterRng::mix(CounterRng::mix(seed + static_cast<std::uint64_t>(i)) +
                                          static_cast<std::uint64_t>(j));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double smooth(double t) { return t * t * (3.0 - 2.0 * t); }

double value_noise(std::uint64_t seed, double u, double v) {
  const double fu = std::floor(u);
  const double fv = std::floor(v);
  const auto i = static_cast<std::int64_t>(fu);
  const auto j = static_cast<std::int64_t>(fv);
  const double a = smooth(u - fu);
  const double b = smooth(v - fv);
  const double v00 = hash01(seed, i, j);
  const double v10 = hash01(seed, i + 1, j);
  const double v01 = hash01(seed, i, j + 1);
  const double v11 = hash01(seed, i + 1, j + 1);
  return (v00 * (1 - a) + v10 * a) * (1 - b) + (v01 * (1 - a) + v11 * a) * b;
}

TexturedQuad quad(int axis, double offset, double lo0, double hi0, double lo1, double hi1, std::uint64_t seed) {
  TexturedQuad q;
  q.axis = axis;
  q.offset = offset;
  q.lo[0] = lo0;
  q.hi[0] = hi0;
  q.lo[1] = lo1;
  q.hi[1] = hi1;
  q.texture_seed = seed;
  return q;
}

}  // namespace

SyntheticScene SyntheticScene::room(std::uint64_t seed) {
  SyntheticScene s;
  std::uint64_t k = seed * 1000;
  // Room shell: x in [-4, 4], y in [-2.5, 1.5], z in [-2, 7].
  s.quads.push_back(quad(2, 7.0, -4.0, 4.0, -2.5, 1.5, ++k));
  s.quads.push_back(quad(0, -4.0, -2.5, 1.5, -2.0, 7.0, ++k));
  s.quads.push_back(quad(0, 4.0, -2.5, 1.5, -2.0, 7.0, ++k));
  s.quads.push_back(quad(1, 1.5, -4.0, 4.0, -2.0, 7.0, ++k));
  s.quads.push_back(quad(1, -2.5, -4.0, 4.0, -2.0, 7.0, ++k));
  // Crate standing on the floor.
  s.quads.push_back(quad(2, 3.5, -1.0, 0.2, 0.3, 1.5, ++k));
  s.quads.push_back(quad(0, -1.0, 0.3, 1.5, 3.5, 4.5, ++k));
  s.quads.push_back(quad(0, 0.2, 0.3, 1.5, 3.5, 4.5, ++k));
  s.quads.push_back(quad(1, 0.3, -1.0, 0.2, 3.5, 4.5, ++k));
  // Hanging panel.
  s.quads.push_back(quad(2, 5.0, 0.8, 2.2, -1.2, 0.0, ++k));
  return s;
}

double texture_intensity(std::uint64_t seed, double u, double v) {
  constexpr double kBlock = 0.15;
  const auto bi = static_cast<std::int64_t>(std::floor(u / kBlock));
  const auto bj = static_cast<std::int64_t>(std::floor(v / kBlock));
  const double block = hash01(seed ^ 0x5bd1e995ULL, bi, bj);
  const double fine = value_noise(seed, u / 0.04, v / 0.04);
  const double coarse = value_noise(seed + 17, u / 0.6, v / 0.6);
  return std::clamp(25.0 + 120.0 * block + 60.0 * fine + 40.0 * coarse, 0.0, 255.0);
}

double ray_hit(const SyntheticScene& scene, const Vec3& origin, const Vec3& dir, double* intensity) {
  double best = std::numeric_limits<double>::infinity();
  for (const TexturedQuad& q : scene.quads) {
    const double d = dir[q.axis];
    if (std::abs(d) < 1e-12) continue;
    const double t = (q.offset - origin[q.axis]) / d;
    if (!(t > 1e-6) || t >= best) continue;
    const Vec3 p = origin + t * dir;
    const int a0 = q.axis == 0 ? 1 : 0;
    const int a1 = q.axis == 2 ? 1 : 2;
    const double u = p[a0];
    const double v = p[a1];
    if (u < q.lo[0] || u > q.hi[0] || v < q.lo[1] || v > q.hi[1]) continue;
    best = t;
    if (intensity) *intensity = texture_intensity(q.texture_seed, u, v);
  }
  return best;
}

GrayImage render_view(const SyntheticScene& scene, const Calibration& k, const Pose& pose, int width,
                      int height, int samples) {
  if (width <= 0 || height <= 0 || samples <= 0) {
    throw Error(ErrorKind::kInvalidInput, "render_view: bad image size or sample count");
  }
  const Mat3 kinv = k.inverse_matrix();
  const Mat3 r = pose.rotation * kinv;
  GrayImage img(width, height);
  const double inv = 1.0 / samples;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double sum = 0.0;
      for (int sy = 0; sy < samples; ++sy) {
        for (int sx = 0; sx < samples; ++sx) {
          const double px = x - 0.5 + (sx + 0.5) * inv;
          const double py = y - 0.5 + (sy + 0.5) * inv;
          const Vec3 dir = r * Vec3(px, py, 1.0);
          double value = 0.0;
          ray_hit(scene, pose.translation, dir, &value);
          sum += value;
        }
      }
      const double mean = sum / (samples * samples);
      img.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::lround(mean), 0L, 255L));
    }
  }
  return img;
}

std::vector<Pose> synthetic_trajectory(const SyntheticSequenceConfig& cfg) {
  std::vector<Pose> poses;
  poses.reserve(static_cast<std::size_t>(std::max(cfg.frames, 0)));
  for (int i = 0; i < cfg.frames; ++i) {
    const double yaw = -cfg.yaw_step * i * std::numbers::pi / 180.0;
    Pose p;
    p.rotation = axis_angle_rotation(Vec3(0.0, 1.0, 0.0), yaw);
    p.translation = Vec3(cfg.step * i - 0.9, 0.02 * std::sin(0.4 * i), 0.015 * i);
    poses.push_back(p);
  }
  return poses;
}

void write_synthetic_tum(const std::string& dir, const SyntheticSequenceConfig& cfg) {
  cfg.calibration.validate();
  const SyntheticScene scene = SyntheticScene::room(cfg.seed);
  const std::vector<Pose> poses = synthetic_trajectory(cfg);
  fs::create_directories(fs::path(dir) / "rgb");

  SequenceManifest m;
  m.name = cfg.name;
  m.fps = cfg.fps;
  for (int i = 0; i < cfg.frames; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "rgb/%06d.png", i);
    ImageEntry e;
    e.path = name;
    e.timestamp = i / cfg.fps;
    e.calibration = cfg.calibration;
    e.pose = poses[static_cast<std::size_t>(i)];
    e.has_pose = true;
    m.images.push_back(e);
    write_image(render_view(scene, cfg.calibration, e.pose, cfg.width, cfg.height),
                (fs::path(dir) / name).string());
  }
  export_tum(m, dir);
}

}  // namespace matchbench
