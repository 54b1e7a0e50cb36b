#include <cmath>
#include <cstdlib>

#include <gtest/gtest.h>

#include "matchbench/dataset.hpp"
#include "matchbench/synthetic.hpp"

using namespace matchbench;

namespace {

const std::string kDir = MATCHBENCH_DATA_DIR "/synthetic30";

}  // namespace

TEST(Synthetic, CommittedSequenceMatchesTheGenerator) {
  const SequenceManifest m = import_tum(kDir);
  const SyntheticSequenceConfig cfg;
  ASSERT_EQ(m.size(), static_cast<std::size_t>(cfg.frames));
  const std::vector<Pose> poses = synthetic_trajectory(cfg);
  for (std::size_t i = 0; i < m.size(); ++i) {
    ASSERT_TRUE(m.images[i].has_pose);
    EXPECT_LT((m.images[i].pose.translation - poses[i].translation).norm(), 1e-12);
    EXPECT_LT((m.images[i].pose.rotation - poses[i].rotation).norm(), 1e-12);
    EXPECT_EQ(m.images[i].calibration.fx, 525.0);
  }
}

TEST(Synthetic, ReRenderedFramesMatchCommittedPngs) {
  const SequenceManifest m = import_tum(kDir);
  const SyntheticSequenceConfig cfg;
  const SyntheticScene scene = SyntheticScene::room(cfg.seed);
  for (std::size_t i : {std::size_t{0}, std::size_t{17}}) {
    const GrayImage committed = read_image(m.images[i].path);
    const GrayImage rendered = render_view(scene, cfg.calibration, m.images[i].pose, cfg.width, cfg.height);
    ASSERT_EQ(committed.width, rendered.width);
    ASSERT_EQ(committed.height, rendered.height);
    int worst = 0;
    for (std::size_t p = 0; p < committed.pixels.size(); ++p) {
      worst = std::max(worst, std::abs(int(committed.pixels[p]) - int(rendered.pixels[p])));
    }
    EXPECT_LE(worst, 1) << "frame " << i;
  }
}

TEST(Synthetic, RayHitsTheNearestSurface) {
  const SyntheticScene scene = SyntheticScene::room();
  double intensity = -1;
  const double d = ray_hit(scene, Vec3(0, 0, 0), Vec3(0, 0, 1), &intensity);
  EXPECT_TRUE(std::isfinite(d));
  EXPECT_GT(d, 0.0);
  EXPECT_GE(intensity, 0.0);
  EXPECT_LE(intensity, 255.0);
  // A point moved along the ray by less than the hit distance sees the same surface.
  double again = -1;
  EXPECT_NEAR(ray_hit(scene, Vec3(0, 0, d / 2), Vec3(0, 0, 1), &again), d / 2, 1e-9);
  EXPECT_EQ(again, intensity);
}

TEST(Synthetic, TextureIsDeterministicAndBounded) {
  for (double u = -3; u < 3; u += 0.37) {
    for (double v = -3; v < 3; v += 0.41) {
      const double a = texture_intensity(11, u, v);
      EXPECT_EQ(a, texture_intensity(11, u, v));
      EXPECT_GE(a, 0.0);
      EXPECT_LE(a, 255.0);
    }
  }
}
