#include <cmath>
#include <limits>
#include <numbers>

#include <gtest/gtest.h>

#include "matchbench/geometry.hpp"
#include "oracles.hpp"

using namespace matchbench;

namespace {

constexpr double kPi = std::numbers::pi;

Mat3 rot_x(double deg) { return oracle::rodrigues(Vec3::UnitX(), deg * kPi / 180.0); }

Pose random_pose(CounterRng& rng) {
  Pose p;
  p.rotation = oracle::random_rotation(rng);
  p.translation = Vec3(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5));
  return p;
}

double max_abs(const Mat3& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST(Quaternion, IdentityQuaternion) {
  EXPECT_LT(max_abs(quat_to_rotation({1, 0, 0, 0}) - Mat3::Identity()), 1e-15);
}

TEST(Quaternion, QuarterTurnAboutX) {
  const double h = std::sqrt(0.5);
  Mat3 expected;
  expected << 1, 0, 0, 0, 0, -1, 0, 1, 0;
  EXPECT_LT(max_abs(quat_to_rotation({h, h, 0, 0}) - expected), 1e-12);
}

TEST(Quaternion, MatchesAxisAngleOracle) {
  CounterRng rng(11);
  for (int i = 0; i < 200; ++i) {
    const Vec3 axis = oracle::random_unit(rng);
    const double angle = rng.uniform(0.0, kPi);
    const UnitQuaternion q{std::cos(angle / 2), axis.x() * std::sin(angle / 2), axis.y() * std::sin(angle / 2),
                           axis.z() * std::sin(angle / 2)};
    EXPECT_LT(max_abs(quat_to_rotation(q) - oracle::rodrigues(axis, angle)), 1e-12);
  }
}

TEST(Quaternion, RenormalizesSlightlyOffUnitInput) {
  const Mat3 R = quat_to_rotation({1.0000005, 0, 0, 0});
  EXPECT_TRUE(is_rotation(R));
}

TEST(Quaternion, ZeroNormIsInvalid) {
  try {
    quat_to_rotation({0, 0, 0, 0});
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInvalidInput);
  }
}

TEST(Quaternion, RoundTripThroughRotation) {
  CounterRng rng(12);
  for (int i = 0; i < 1000; ++i) {
    const Mat3 R = oracle::random_rotation(rng);
    const UnitQuaternion q = rotation_to_quat(R);
    EXPECT_NEAR(q.norm(), 1.0, 1e-9);
    EXPECT_LT(max_abs(quat_to_rotation(q) - R), 1e-9);
  }
}

TEST(RelativePose, SamePoseIsIdentity) {
  CounterRng rng(13);
  const Pose T = random_pose(rng);
  const Pose rel = relative_pose(T, T);
  EXPECT_LT(max_abs(rel.rotation - Mat3::Identity()), 1e-12);
  EXPECT_LT(rel.translation.norm(), 1e-12);
}

TEST(RelativePose, TranslationAlongWorldX) {
  Pose j;
  j.translation = Vec3(1, 0, 0);
  const Pose rel = relative_pose(Pose{}, j);
  EXPECT_LT((rel.translation - Vec3(-1, 0, 0)).norm(), 1e-15);
  EXPECT_LT(max_abs(rel.rotation - Mat3::Identity()), 1e-15);
}

TEST(RelativePose, ComposesToIdentity) {
  CounterRng rng(14);
  for (int i = 0; i < 100; ++i) {
    const Pose a = random_pose(rng);
    const Pose b = random_pose(rng);
    const Pose round = relative_pose(b, a).compose(relative_pose(a, b));
    EXPECT_LT(max_abs(round.rotation - Mat3::Identity()), 1e-12);
    EXPECT_LT(round.translation.norm(), 1e-12);
  }
}

TEST(RelativePose, MapsCameraPointsBetweenFrames) {
  CounterRng rng(15);
  for (int i = 0; i < 50; ++i) {
    const Pose a = random_pose(rng);
    const Pose b = random_pose(rng);
    const Vec3 world(rng.uniform(-10, 10), rng.uniform(-10, 10), rng.uniform(-10, 10));
    const Vec3 in_a = a.rotation.transpose() * (world - a.translation);
    const Vec3 in_b = b.rotation.transpose() * (world - b.translation);
    const Pose rel = relative_pose(a, b);
    EXPECT_LT((rel.rotation * in_a + rel.translation - in_b).norm(), 1e-10);
  }
}

TEST(RotationError, Examples) {
  CounterRng rng(16);
  const Mat3 R = oracle::random_rotation(rng);
  EXPECT_NEAR(rotation_error_deg(R, R), 0.0, 1e-6);
  EXPECT_NEAR(rotation_error_deg(R * rot_x(10), R), 10.0, 1e-9);
}

TEST(RotationError, MatchesQuaternionGeodesic) {
  CounterRng rng(17);
  for (int i = 0; i < 500; ++i) {
    const Mat3 a = oracle::random_rotation(rng);
    const Mat3 b = oracle::random_rotation(rng);
    const double e = rotation_error_deg(a, b);
    EXPECT_NEAR(e, oracle::quaternion_geodesic_deg(a, b), 1e-9);
    EXPECT_NEAR(e, rotation_error_deg(b, a), 1e-9);
    EXPECT_GE(e, 0.0);
    EXPECT_LE(e, 180.0);
  }
}

TEST(TranslationError, Examples) {
  EXPECT_NEAR(translation_error_deg(Vec3(0.3, -2, 1), Vec3(0.3, -2, 1)), 0.0, 1e-6);
  EXPECT_NEAR(translation_error_deg(Vec3(1, 0, 0), Vec3(0, 1, 0)), 90.0, 1e-12);
  EXPECT_NEAR(translation_error_deg(Vec3(2, 0, 0), Vec3(1, 1, 0)), 45.0, 1e-12);
  EXPECT_NEAR(translation_error_deg(Vec3(1, 0, 0), Vec3(-1, 0, 0)), 180.0, 1e-12);
}

TEST(TranslationError, ScaleInvariant) {
  CounterRng rng(18);
  for (int i = 0; i < 200; ++i) {
    const Vec3 u = oracle::random_unit(rng);
    const Vec3 v = oracle::random_unit(rng);
    const double a = rng.uniform(1e-3, 1e3);
    const double b = rng.uniform(1e-3, 1e3);
    EXPECT_NEAR(translation_error_deg(a * u, b * v), translation_error_deg(u, v), 1e-9);
  }
}

TEST(TranslationError, DegenerateVector) {
  for (const Vec3& zero : {Vec3(0, 0, 0), Vec3(1e-10, 0, 0)}) {
    try {
      translation_error_deg(zero, Vec3(1, 0, 0));
      FAIL() << "expected an error";
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kDegenerateTranslation);
    }
    EXPECT_THROW(translation_error_deg(Vec3(1, 0, 0), zero), Error);
  }
}

TEST(PoseError, TakesTheMaximum) {
  EXPECT_EQ(pose_error(3, 7), 7);
  EXPECT_EQ(pose_error(0, 0), 0);
  EXPECT_EQ(pose_error(12.5, 2.1), 12.5);
  CounterRng rng(19);
  for (int i = 0; i < 100; ++i) {
    const double a = rng.uniform(0, 180);
    const double b = rng.uniform(0, 180);
    const double e = pose_error(a, b);
    EXPECT_GE(e, a);
    EXPECT_GE(e, b);
    EXPECT_TRUE(e == a || e == b);
  }
}

TEST(Essential, IdentityIntrinsicsProjectsF) {
  CounterRng rng(20);
  const Calibration I{1, 1, 0, 0, 0};
  for (int i = 0; i < 50; ++i) {
    Mat3 F = Mat3::Random();
    Eigen::JacobiSVD<Mat3> svd(F, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Vec3 s = svd.singularValues();
    s(2) = 0;
    F = svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
    const EssentialMatrix E = fundamental_to_essential({F}, I, I);
    EXPECT_LT(oracle::aligned_distance(E.m, project_to_essential(F).m), 1e-9);
    const Vec3 sv = Eigen::JacobiSVD<Mat3>(E.m).singularValues();
    EXPECT_LT(std::abs(sv(0) - sv(1)) / sv(0), 1e-9);
    EXPECT_LT(sv(2) / sv(0), 1e-9);
  }
}

TEST(Essential, RoundTripFromKnownE) {
  CounterRng rng(21);
  for (int i = 0; i < 50; ++i) {
    Pose p;
    p.rotation = oracle::random_rotation(rng);
    p.translation = oracle::random_unit(rng);
    const Calibration k1{rng.uniform(300, 1500), rng.uniform(300, 1500), rng.uniform(200, 800), rng.uniform(200, 600),
                         0.0};
    const Calibration k2{rng.uniform(300, 1500), rng.uniform(300, 1500), rng.uniform(200, 800), rng.uniform(200, 600),
                         0.0};
    Mat3 tx;
    tx << 0, -p.translation.z(), p.translation.y(), p.translation.z(), 0, -p.translation.x(), -p.translation.y(),
        p.translation.x(), 0;
    const Mat3 E0 = tx * p.rotation;
    const Mat3 F = oracle::fundamental_by_hand(p, k1, k2);
    EXPECT_LT(oracle::aligned_distance(fundamental_to_essential({F}, k1, k2).m, E0), 1e-9);
    EXPECT_LT(oracle::aligned_distance(fundamental_from_pose(p, k1, k2).m, F), 1e-9);
    EXPECT_LT(oracle::aligned_distance(essential_from_pose(p).m, E0), 1e-12);
  }
}

TEST(Decompose, RecoversSyntheticPose) {
  CounterRng rng(22);
  oracle::SceneSpec params;
  params.points = 50;
  for (int i = 0; i < 60; ++i) {
    const oracle::TwoViewScene scene = oracle::make_scene(params, rng);
    const EssentialMatrix E = essential_from_pose(scene.cam2_from_cam1);
    const Pose est = decompose_essential(E, scene.correspondences, params.k1, params.k2);
    EXPECT_LT(rotation_error_deg(est.rotation, scene.cam2_from_cam1.rotation), 1e-6);
    EXPECT_LT(translation_error_deg(est.translation, scene.cam2_from_cam1.translation), 1e-6);
    EXPECT_NEAR(est.translation.norm(), 1.0, 1e-9);
    EXPECT_TRUE(is_rotation(est.rotation));

    // Exhaustive check: exactly one candidate puts every point in front.
    int all_front = 0;
    for (const Pose& cand : essential_candidates(E)) {
      bool ok = true;
      for (const Correspondence& c : scene.correspondences) ok = ok && in_front_of_both(c, cand, params.k1, params.k2);
      all_front += ok ? 1 : 0;
    }
    EXPECT_EQ(all_front, 1);
  }
}

TEST(Decompose, PureXTranslationHasOneValidCandidate) {
  CounterRng rng(23);
  Pose p;
  p.translation = Vec3(1, 0, 0);
  const Calibration K{525, 525, 319.5, 239.5, 0};
  std::vector<Correspondence> corrs;
  for (int i = 0; i < 50; ++i) {
    const Vec3 X(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(3, 10));
    const auto a = oracle::project(K, X);
    const auto b = oracle::project(K, X + p.translation);
    corrs.push_back({a.x(), a.y(), b.x(), b.y()});
  }
  const EssentialMatrix E = essential_from_pose(p);
  int valid = 0;
  for (const Pose& cand : essential_candidates(E)) {
    int front = 0;
    for (const Correspondence& c : corrs) front += in_front_of_both(c, cand, K, K) ? 1 : 0;
    EXPECT_TRUE(front == 50 || front == 0);
    valid += front == 50 ? 1 : 0;
  }
  EXPECT_EQ(valid, 1);
  const Pose est = decompose_essential(E, corrs, K, K);
  EXPECT_LT((est.translation - Vec3(1, 0, 0)).norm(), 1e-9);
}

TEST(Decompose, NoPositiveDepthWitnessIsAmbiguous) {
  Pose p;
  p.translation = Vec3(1, 0, 0);
  const Calibration K{1, 1, 0, 0, 0};
  // Identical image coordinates under a sideways baseline: parallel rays.
  const std::vector<Correspondence> corrs{{0.1, 0.2, 0.1, 0.2}};
  try {
    decompose_essential(essential_from_pose(p), corrs, K, K);
    FAIL() << "expected an ambiguous decomposition";
  } catch (const AmbiguousDecompositionError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kAmbiguousDecomposition);
    EXPECT_EQ(e.support(), 0u);
  }
}

TEST(Triangulate, KnownDepth) {
  Pose p;
  p.translation = Vec3(1, 0, 0);
  const Calibration K{525, 525, 319.5, 239.5, 0};
  const Vec3 X(0, 0, 5);
  const auto a = oracle::project(K, X);
  const auto b = oracle::project(K, X + p.translation);
  const Triangulation t = triangulate({a.x(), a.y(), b.x(), b.y()}, p, K, K);
  ASSERT_FALSE(t.at_infinity);
  EXPECT_NEAR(t.point.z(), 5.0, 1e-9);
}

TEST(Triangulate, ParallelRaysAreAtInfinity) {
  Pose p;
  p.translation = Vec3(1, 0, 0);
  const Calibration K{525, 525, 319.5, 239.5, 0};
  const Triangulation t = triangulate({100, 200, 100, 200}, p, K, K);
  EXPECT_TRUE(t.at_infinity);
}

TEST(Triangulate, RandomNoiselessPoints) {
  CounterRng rng(24);
  oracle::SceneSpec params;
  const oracle::TwoViewScene scene = oracle::make_scene(params, rng);
  double worst = 0;
  for (std::size_t i = 0; i < scene.points.size(); ++i) {
    const Triangulation t = triangulate(scene.correspondences[i], scene.cam2_from_cam1, params.k1, params.k2);
    ASSERT_FALSE(t.at_infinity);
    worst = std::max(worst, (t.point - scene.points[i]).norm());
  }
  EXPECT_LT(worst, 1e-8);
}

TEST(Sampson, ZeroOnExactGeometry) {
  CounterRng rng(25);
  oracle::SceneSpec params;
  const oracle::TwoViewScene scene = oracle::make_scene(params, rng);
  const FundamentalMatrix F = fundamental_from_pose(scene.cam2_from_cam1, params.k1, params.k2);
  for (const Correspondence& c : scene.correspondences) EXPECT_LT(sampson_distance(F, c), 1e-12);
}

TEST(Sampson, OnePixelOffTheLine) {
  // Image 1 is sampled ten times finer than image 2, so the residual is
  // dominated by the second image and tracks the point-to-line distance.
  CounterRng rng(26);
  oracle::SceneSpec params;
  params.k1 = Calibration{5250, 5250, 3195, 2395, 0};
  params.width = 6400;
  params.height = 4800;
  for (int trial = 0; trial < 20; ++trial) {
    const oracle::TwoViewScene scene = oracle::make_scene(params, rng);
    const FundamentalMatrix F = fundamental_from_pose(scene.cam2_from_cam1, params.k1, params.k2);
    for (Correspondence c : scene.correspondences) {
      const Vec3 line = F.m * c.first_homogeneous();
      const Eigen::Vector2d normal = Eigen::Vector2d(line.x(), line.y()).normalized();
      c.x2 += normal.x();
      c.y2 += normal.y();
      const double geometric = oracle::point_to_line_distance(F.m, c);
      ASSERT_NEAR(geometric, 1.0, 1e-9);
      EXPECT_NEAR(sampson_distance(F, c), geometric * geometric, 0.1);
    }
  }
}

TEST(Sampson, NeverExceedsSquaredLineDistance) {
  CounterRng rng(27);
  oracle::SceneSpec params;
  params.noise_px = 2.0;
  const oracle::TwoViewScene scene = oracle::make_scene(params, rng);
  const FundamentalMatrix F = fundamental_from_pose(scene.cam2_from_cam1, params.k1, params.k2);
  for (const Correspondence& c : scene.correspondences) {
    const double d = oracle::point_to_line_distance(F.m, c);
    EXPECT_LE(sampson_distance(F, c), d * d * (1 + 1e-12));
  }
}

TEST(Sampson, ZeroDenominatorIsInfinite) {
  // F = [e]x has both epipoles at the origin of the homogeneous plane.
  Mat3 F;
  F << 0, -1, 0, 1, 0, 0, 0, 0, 0;
  const double d = sampson_distance({F}, {0, 0, 0, 0});
  EXPECT_TRUE(std::isinf(d));
  EXPECT_GT(d, 0);
}
