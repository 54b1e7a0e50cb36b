#include "matchbench/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Geometry>
#include <Eigen/SVD>

namespace matchbench {

namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;
constexpr double kMinDepth = 1e-9;

// Same value as arccos(clamp(cosine)) but without the loss of resolution
// arccos has next to 0 and 180 degrees.
double angle_deg(double sine, double cosine) {
  return std::atan2(std::max(sine, 0.0), cosine) * kRadToDeg;
}

}  // namespace

double UnitQuaternion::norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }

Pose Pose::inverse() const {
  Pose out;
  out.rotation = rotation.transpose();
  out.translation = -(out.rotation * translation);
  return out;
}

Pose Pose::compose(const Pose& other) const {
  Pose out;
  out.rotation = rotation * other.rotation;
  out.translation = rotation * other.translation + translation;
  return out;
}

Mat3 Calibration::matrix() const {
  Mat3 K;
  K << fx, skew, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  return K;
}

Mat3 Calibration::inverse_matrix() const {
  // Closed form for an upper-triangular K.
  Mat3 Ki;
  Ki << 1.0 / fx, -skew / (fx * fy), (skew * cy - cx * fy) / (fx * fy), 0.0, 1.0 / fy, -cy / fy,
      0.0, 0.0, 1.0;
  return Ki;
}

void Calibration::validate() const {
  if (!std::isfinite(fx) || !std::isfinite(fy) || !std::isfinite(cx) || !std::isfinite(cy) ||
      !std::isfinite(skew)) {
    throw Error(ErrorKind::kInvalidInput, "calibration has non-finite entries");
  }
  if (fx <= 0.0 || fy <= 0.0) {
    throw Error(ErrorKind::kInvalidInput, "calibration focal lengths must be positive");
  }
}

Calibration Calibration::from_matrix(const Mat3& K) {
  Calibration c;
  const double s = K(2, 2);
  c.fx = K(0, 0) / s;
  c.skew = K(0, 1) / s;
  c.cx = K(0, 2) / s;
  c.fy = K(1, 1) / s;
  c.cy = K(1, 2) / s;
  return c;
}

bool is_rotation(const Mat3& R, double tolerance) {
  if (!R.allFinite()) return false;
  const double ortho = (R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff();
  return ortho < tolerance && std::abs(R.determinant() - 1.0) < tolerance;
}

Mat3 quat_to_rotation(const UnitQuaternion& q) {
  const double n = q.norm();
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw Error(ErrorKind::kInvalidInput, "quaternion has zero or non-finite norm");
  }
  const double w = q.w / n, x = q.x / n, y = q.y / n, z = q.z / n;
  Mat3 R;
  R << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return R;
}

UnitQuaternion rotation_to_quat(const Mat3& R) {
  // Shepperd's method: branch on the largest diagonal term for stability.
  UnitQuaternion q;
  const double trace = R.trace();
  if (trace > 0.0) {
    const double s = 2.0 * std::sqrt(1.0 + trace);
    q.w = 0.25 * s;
    q.x = (R(2, 1) - R(1, 2)) / s;
    q.y = (R(0, 2) - R(2, 0)) / s;
    q.z = (R(1, 0) - R(0, 1)) / s;
  } else if (R(0, 0) > R(1, 1) && R(0, 0) > R(2, 2)) {
    const double s = 2.0 * std::sqrt(1.0 + R(0, 0) - R(1, 1) - R(2, 2));
    q.w = (R(2, 1) - R(1, 2)) / s;
    q.x = 0.25 * s;
    q.y = (R(0, 1) + R(1, 0)) / s;
    q.z = (R(0, 2) + R(2, 0)) / s;
  } else if (R(1, 1) > R(2, 2)) {
    const double s = 2.0 * std::sqrt(1.0 + R(1, 1) - R(0, 0) - R(2, 2));
    q.w = (R(0, 2) - R(2, 0)) / s;
    q.x = (R(0, 1) + R(1, 0)) / s;
    q.y = 0.25 * s;
    q.z = (R(1, 2) + R(2, 1)) / s;
  } else {
    const double s = 2.0 * std::sqrt(1.0 + R(2, 2) - R(0, 0) - R(1, 1));
    q.w = (R(1, 0) - R(0, 1)) / s;
    q.x = (R(0, 2) + R(2, 0)) / s;
    q.y = (R(1, 2) + R(2, 1)) / s;
    q.z = 0.25 * s;
  }
  if (q.w < 0.0) q = {-q.w, -q.x, -q.y, -q.z};
  const double n = q.norm();
  return {q.w / n, q.x / n, q.y / n, q.z / n};
}

Mat3 axis_angle_rotation(const Vec3& axis, double angle_rad) {
  return Eigen::AngleAxisd(angle_rad, axis.normalized()).toRotationMatrix();
}

Mat3 skew_symmetric(const Vec3& v) {
  Mat3 S;
  S << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return S;
}

Pose relative_pose(const Pose& world_from_i, const Pose& world_from_j) {
  Pose rel;
  rel.rotation = world_from_j.rotation.transpose() * world_from_i.rotation;
  rel.translation =
      world_from_j.rotation.transpose() * (world_from_i.translation - world_from_j.translation);
  return rel;
}

double rotation_error_deg(const Mat3& R_est, const Mat3& R_gt) {
  const Mat3 D = R_gt.transpose() * R_est;
  const Vec3 axis(D(2, 1) - D(1, 2), D(0, 2) - D(2, 0), D(1, 0) - D(0, 1));
  return angle_deg(axis.norm() / 2.0, (D.trace() - 1.0) / 2.0);
}

double translation_error_deg(const Vec3& t_est, const Vec3& t_gt) {
  const double n_est = t_est.norm();
  const double n_gt = t_gt.norm();
  if (!(n_est >= 1e-9) || !(n_gt >= 1e-9)) {
    throw Error(ErrorKind::kDegenerateTranslation, "translation norm below 1e-9");
  }
  return angle_deg(t_est.cross(t_gt).norm() / (n_est * n_gt), t_est.dot(t_gt) / (n_est * n_gt));
}

double pose_error(double e_r, double e_t) { return std::max(e_r, e_t); }

EssentialMatrix essential_from_pose(const Pose& cam2_from_cam1) {
  return {skew_symmetric(cam2_from_cam1.translation) * cam2_from_cam1.rotation};
}

FundamentalMatrix fundamental_from_pose(const Pose& cam2_from_cam1, const Calibration& K1,
                                        const Calibration& K2) {
  return {K2.inverse_matrix().transpose() * essential_from_pose(cam2_from_cam1).m *
          K1.inverse_matrix()};
}

EssentialMatrix project_to_essential(const Mat3& M) {
  Eigen::JacobiSVD<Mat3> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return {svd.matrixU() * Eigen::Vector3d(1.0, 1.0, 0.0).asDiagonal() *
          svd.matrixV().transpose()};
}

EssentialMatrix fundamental_to_essential(const FundamentalMatrix& F, const Calibration& K1,
                                         const Calibration& K2) {
  return project_to_essential(K2.matrix().transpose() * F.m * K1.matrix());
}

std::array<Pose, 4> essential_candidates(const EssentialMatrix& E) {
  Eigen::JacobiSVD<Mat3> svd(E.m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 U = svd.matrixU();
  Mat3 V = svd.matrixV();
  // E is only defined up to sign, so flipping U or V keeps a valid factorization.
  if (U.determinant() < 0.0) U = -U;
  if (V.determinant() < 0.0) V = -V;

  Mat3 W;
  W << 0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0;
  const Mat3 Ra = U * W * V.transpose();
  const Mat3 Rb = U * W.transpose() * V.transpose();
  const Vec3 t = U.col(2).normalized();

  std::array<Pose, 4> out;
  out[0] = {Ra, t};
  out[1] = {Ra, -t};
  out[2] = {Rb, t};
  out[3] = {Rb, -t};
  return out;
}

Triangulation triangulate(const Correspondence& c, const Pose& cam2_from_cam1,
                          const Calibration& K1, const Calibration& K2) {
  const Mat3& R = cam2_from_cam1.rotation;
  const Vec3 d1 = K1.inverse_matrix() * c.first_homogeneous();
  const Vec3 d2 = R.transpose() * (K2.inverse_matrix() * c.second_homogeneous());
  const Vec3 center2 = -(R.transpose() * cam2_from_cam1.translation);

  // Closest points on the rays lambda1 * d1 and center2 + lambda2 * d2.
  const double a = d1.dot(d1);
  const double b = d1.dot(d2);
  const double cc = d2.dot(d2);
  const double d = d1.dot(center2);
  const double e = d2.dot(center2);
  const double denom = a * cc - b * b;

  Triangulation out;
  if (!(denom > 1e-14 * a * cc)) {
    out.at_infinity = true;
    out.point = d1.normalized();
    return out;
  }
  const double lambda1 = (cc * d - b * e) / denom;
  const double lambda2 = (b * d - a * e) / denom;
  out.point = 0.5 * (lambda1 * d1 + center2 + lambda2 * d2);
  return out;
}

bool in_front_of_both(const Correspondence& c, const Pose& cam2_from_cam1, const Calibration& K1,
                      const Calibration& K2) {
  const Triangulation tri = triangulate(c, cam2_from_cam1, K1, K2);
  if (tri.at_infinity || !tri.point.allFinite()) return false;
  const Vec3 in_cam2 = cam2_from_cam1.rotation * tri.point + cam2_from_cam1.translation;
  return tri.point.z() > kMinDepth && in_cam2.z() > kMinDepth;
}

AmbiguousDecompositionError::AmbiguousDecompositionError(Pose first, Pose second,
                                                         std::size_t support)
    : Error(ErrorKind::kAmbiguousDecomposition,
            "essential decomposition is ambiguous: two candidates share support " +
                std::to_string(support)),
      candidates_(std::move(first), std::move(second)),
      support_(support) {}

Pose decompose_essential(const EssentialMatrix& E, std::span<const Correspondence> correspondences,
                         const Calibration& K1, const Calibration& K2) {
  const auto candidates = essential_candidates(E);
  std::array<std::size_t, 4> support{};
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    for (const Correspondence& c : correspondences) {
      if (in_front_of_both(c, candidates[k], K1, K2)) ++support[k];
    }
  }

  std::size_t best = 0;
  for (std::size_t k = 1; k < support.size(); ++k) {
    if (support[k] > support[best]) best = k;
  }
  for (std::size_t k = 0; k < support.size(); ++k) {
    if (k != best && support[k] == support[best]) {
      throw AmbiguousDecompositionError(candidates[best], candidates[k], support[best]);
    }
  }
  return candidates[best];
}

double sampson_distance(const FundamentalMatrix& F, const Correspondence& c) {
  const Vec3 x1 = c.first_homogeneous();
  const Vec3 x2 = c.second_homogeneous();
  const Vec3 Fx1 = F.m * x1;
  const Vec3 Ftx2 = F.m.transpose() * x2;
  const double residual = x2.dot(Fx1);
  const double denom = Fx1.x() * Fx1.x() + Fx1.y() * Fx1.y() + Ftx2.x() * Ftx2.x() +
                       Ftx2.y() * Ftx2.y();
  if (denom == 0.0) return std::numeric_limits<double>::infinity();
  return residual * residual / denom;
}

}  // namespace matchbench
