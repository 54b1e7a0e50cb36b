#pragma once

#include <array>
#include <span>
#include <utility>

#include <Eigen/Core>

#include "matchbench/common.hpp"

namespace matchbench {

using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;

/// Hamilton-convention quaternion, scalar first.
struct UnitQuaternion {
  double w = 1.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  double norm() const;
};

/// Rigid transform with the convention x_dst = rotation * x_src + translation.
///
/// Ground-truth poses are world-from-camera, so `translation` is the camera
/// center in world coordinates. Relative and estimated poses are
/// camera_j-from-camera_i; estimates carry a unit-norm translation.
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Pose inverse() const;
  /// (*this) after `other`: x -> rotation * (other.rotation * x + other.translation) + translation.
  Pose compose(const Pose& other) const;
};

/// Pinhole intrinsics in pixels.
struct Calibration {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  double skew = 0.0;

  Mat3 matrix() const;
  Mat3 inverse_matrix() const;
  /// Throws kInvalidInput unless fx > 0, fy > 0 and all fields are finite.
  void validate() const;

  static Calibration from_matrix(const Mat3& K);

  friend bool operator==(const Calibration&, const Calibration&) = default;
};

/// Defined up to scale, rank 2.
struct FundamentalMatrix {
  Mat3 m = Mat3::Zero();
};

/// Defined up to scale, singular values (s, s, 0).
struct EssentialMatrix {
  Mat3 m = Mat3::Zero();
};

/// Pixel-coordinate match: (x1, y1) in the first image, (x2, y2) in the second.
struct Correspondence {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  Vec3 first_homogeneous() const { return {x1, y1, 1.0}; }
  Vec3 second_homogeneous() const { return {x2, y2, 1.0}; }

  friend bool operator==(const Correspondence&, const Correspondence&) = default;
};

bool is_rotation(const Mat3& R, double tolerance = 1e-9);

Mat3 quat_to_rotation(const UnitQuaternion& q);
/// Inverse of quat_to_rotation; returns the representative with w >= 0.
UnitQuaternion rotation_to_quat(const Mat3& R);

/// Rotation by `angle_rad` about `axis` (normalized internally).
Mat3 axis_angle_rotation(const Vec3& axis, double angle_rad);

Mat3 skew_symmetric(const Vec3& v);

/// camera_j-from-camera_i given world-from-camera poses of both cameras.
Pose relative_pose(const Pose& world_from_i, const Pose& world_from_j);

double rotation_error_deg(const Mat3& R_est, const Mat3& R_gt);

/// Angle between the two directions, scale-free. Throws
/// kDegenerateTranslation if either norm is below 1e-9.
double translation_error_deg(const Vec3& t_est, const Vec3& t_gt);

double pose_error(double e_r, double e_t);

/// E = [t]x R for a camera2-from-camera1 pose.
EssentialMatrix essential_from_pose(const Pose& cam2_from_cam1);
/// F = K2^-T [t]x R K1^-1.
FundamentalMatrix fundamental_from_pose(const Pose& cam2_from_cam1, const Calibration& K1,
                                        const Calibration& K2);

/// Nearest matrix with singular values (1, 1, 0).
EssentialMatrix project_to_essential(const Mat3& M);

/// E = K2^T F K1 projected onto the essential manifold.
EssentialMatrix fundamental_to_essential(const FundamentalMatrix& F, const Calibration& K1,
                                         const Calibration& K2);

/// The four (R, +-t) factorizations of E, unit-norm t.
std::array<Pose, 4> essential_candidates(const EssentialMatrix& E);

struct Triangulation {
  Vec3 point = Vec3::Zero();  // camera-1 frame
  bool at_infinity = false;
};

/// Midpoint triangulation of the two viewing rays.
Triangulation triangulate(const Correspondence& c, const Pose& cam2_from_cam1,
                          const Calibration& K1, const Calibration& K2);

/// True if the triangulated point has depth > 1e-9 in both cameras.
bool in_front_of_both(const Correspondence& c, const Pose& cam2_from_cam1, const Calibration& K1,
                      const Calibration& K2);

class AmbiguousDecompositionError : public Error {
 public:
  AmbiguousDecompositionError(Pose first, Pose second, std::size_t support);

  const std::pair<Pose, Pose>& candidates() const noexcept { return candidates_; }
  std::size_t support() const noexcept { return support_; }

 private:
  std::pair<Pose, Pose> candidates_;
  std::size_t support_;
};

/// Picks the candidate with the most correspondences in front of both cameras.
/// Throws AmbiguousDecompositionError if the best count is shared.
Pose decompose_essential(const EssentialMatrix& E, std::span<const Correspondence> correspondences,
                         const Calibration& K1, const Calibration& K2);

/// First-order epipolar error in pixels squared; +inf for a zero denominator.
double sampson_distance(const FundamentalMatrix& F, const Correspondence& c);

}  // namespace matchbench
