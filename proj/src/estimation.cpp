#include "matchbench/estimation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include <Eigen/LU>
#include <Eigen/SVD>

namespace matchbench {

namespace {

constexpr std::size_t kSampleSize = 8;

// Singular-value ratio below which the 8-point design matrix is treated as
// having a null space of dimension two or more.
constexpr double kDegenerateRatio = 1e-10;

void require_size(std::size_t n) {
  if (n < kSampleSize) {
    throw Error(ErrorKind::kInsufficientData,
                "at least 8 correspondences required, got " + std::to_string(n));
  }
}

std::size_t count_mask(const std::vector<std::uint8_t>& mask) {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

std::size_t score(const FundamentalMatrix& F, std::span<const Correspondence> corrs,
                  double threshold_sq, std::vector<std::uint8_t>* mask, double* residual_sum = nullptr) {
  std::size_t count = 0;
  double sum = 0.0;
  if (mask) mask->assign(corrs.size(), 0);
  for (std::size_t i = 0; i < corrs.size(); ++i) {
    const double d = sampson_distance(F, corrs[i]);
    if (d < threshold_sq) {
      ++count;
      sum += d;
      if (mask) (*mask)[i] = 1;
    }
  }
  if (residual_sum) *residual_sum = sum;
  return count;
}

// Iterations needed to draw one all-inlier sample with the given confidence.
double required_iterations(double inlier_ratio, double confidence) {
  if (inlier_ratio >= 1.0) return 0.0;
  const double p_good = std::pow(inlier_ratio, static_cast<double>(kSampleSize));
  if (p_good <= 0.0) return std::numeric_limits<double>::infinity();
  return std::ceil(std::log(1.0 - confidence) / std::log1p(-p_good));
}

}  // namespace

void RansacConfig::validate() const {
  if (!(confidence > 0.0 && confidence < 1.0)) {
    throw Error(ErrorKind::kInvalidInput, "RANSAC confidence must lie in (0, 1)");
  }
  if (!(inlier_threshold > 0.0) || !std::isfinite(inlier_threshold)) {
    throw Error(ErrorKind::kInvalidInput, "RANSAC inlier threshold must be positive");
  }
  if (min_iterations < 1 || max_iterations < min_iterations) {
    throw Error(ErrorKind::kInvalidInput, "RANSAC requires 1 <= min_iterations <= max_iterations");
  }
}

RansacConfig RansacConfig::for_pair(std::int64_t pair_id) const {
  RansacConfig out = *this;
  out.seed = seed ^ static_cast<std::uint64_t>(pair_id);
  return out;
}

std::size_t RansacResult::inlier_count() const { return count_mask(inlier_mask); }
std::size_t PoseEstimate::inlier_count() const { return count_mask(inlier_mask); }

NormalizedPoints normalize_points(std::span<const Vec2> points) {
  if (points.size() < 2) {
    throw Error(ErrorKind::kDegenerateConfiguration, "normalization needs at least 2 points");
  }
  Vec2 centroid = Vec2::Zero();
  for (const Vec2& p : points) centroid += p;
  centroid /= static_cast<double>(points.size());

  double mean_dist = 0.0;
  for (const Vec2& p : points) mean_dist += (p - centroid).norm();
  mean_dist /= static_cast<double>(points.size());
  if (!(mean_dist > 1e-12 * (1.0 + centroid.norm()))) {
    throw Error(ErrorKind::kDegenerateConfiguration, "all points coincide");
  }

  const double s = std::numbers::sqrt2 / mean_dist;
  NormalizedPoints out;
  out.transform << s, 0.0, -s * centroid.x(), 0.0, s, -s * centroid.y(), 0.0, 0.0, 1.0;
  out.points.reserve(points.size());
  for (const Vec2& p : points) out.points.emplace_back(s * (p - centroid));
  return out;
}

FundamentalMatrix eight_point_fundamental(std::span<const Correspondence> correspondences) {
  require_size(correspondences.size());
  const std::size_t n = correspondences.size();

  std::vector<Vec2> first, second;
  first.reserve(n);
  second.reserve(n);
  for (const Correspondence& c : correspondences) {
    first.emplace_back(c.x1, c.y1);
    second.emplace_back(c.x2, c.y2);
  }
  const NormalizedPoints n1 = normalize_points(first);
  const NormalizedPoints n2 = normalize_points(second);

  // Row i encodes x2^T F x1 = 0 against F in row-major order.
  Eigen::Matrix<double, Eigen::Dynamic, 9> A(static_cast<Eigen::Index>(std::max<std::size_t>(n, 9)), 9);
  A.setZero();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& p = n1.points[i];
    const Vec2& q = n2.points[i];
    A.row(static_cast<Eigen::Index>(i)) << q.x() * p.x(), q.x() * p.y(), q.x(), q.y() * p.x(),
        q.y() * p.y(), q.y(), p.x(), p.y(), 1.0;
  }

  Eigen::JacobiSVD<Eigen::Matrix<double, Eigen::Dynamic, 9>> svd(A, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (!(sv(0) > 0.0) || sv(7) < kDegenerateRatio * sv(0)) {
    throw Error(ErrorKind::kDegenerateConfiguration, "8-point design matrix is rank deficient");
  }
  const Eigen::Matrix<double, 9, 1> f = svd.matrixV().col(8);
  Mat3 Fn;
  Fn << f(0), f(1), f(2), f(3), f(4), f(5), f(6), f(7), f(8);

  Eigen::JacobiSVD<Mat3> rank2(Fn, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Vector3d s = rank2.singularValues();
  s(2) = 0.0;
  Fn = rank2.matrixU() * s.asDiagonal() * rank2.matrixV().transpose();

  Mat3 F = n2.transform.transpose() * Fn * n1.transform;
  F /= F.norm();
  Eigen::Index r = 0, c = 0;
  F.cwiseAbs().maxCoeff(&r, &c);
  if (F(r, c) < 0.0) F = -F;
  return {F};
}

RansacResult ransac_fundamental(std::span<const Correspondence> correspondences,
                                const RansacConfig& cfg) {
  cfg.validate();
  require_size(correspondences.size());

  CounterRng rng(cfg.seed);

  // Optional uniform subsample; the returned mask still covers every input.
  std::vector<Correspondence> subsample;
  std::span<const Correspondence> pool = correspondences;
  if (cfg.max_correspondences >= kSampleSize && correspondences.size() > cfg.max_correspondences) {
    std::vector<std::size_t> idx(correspondences.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < cfg.max_correspondences; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(idx.size() - i));
      std::swap(idx[i], idx[j]);
    }
    idx.resize(cfg.max_correspondences);
    std::sort(idx.begin(), idx.end());
    subsample.reserve(idx.size());
    for (std::size_t i : idx) subsample.push_back(correspondences[i]);
    pool = subsample;
  }

  const double threshold_sq = cfg.inlier_threshold * cfg.inlier_threshold;
  const std::size_t n = pool.size();

  FundamentalMatrix best;
  std::size_t best_count = 0;
  double best_residual = std::numeric_limits<double>::infinity();
  double needed = std::numeric_limits<double>::infinity();
  int iterations = 0;

  std::array<std::size_t, kSampleSize> picks{};
  std::array<Correspondence, kSampleSize> sample{};
  while (iterations < cfg.max_iterations) {
    ++iterations;
    for (std::size_t k = 0; k < kSampleSize; ++k) {
      std::size_t candidate = 0;
      do {
        candidate = static_cast<std::size_t>(rng.below(n));
      } while (std::find(picks.begin(), picks.begin() + static_cast<std::ptrdiff_t>(k),
                         candidate) != picks.begin() + static_cast<std::ptrdiff_t>(k));
      picks[k] = candidate;
      sample[k] = pool[candidate];
    }

    try {
      const FundamentalMatrix F = eight_point_fundamental(sample);
      double residual = 0.0;
      const std::size_t count = score(F, pool, threshold_sq, nullptr, &residual);
      // Equal support is settled by the tighter fit.
      if (count > best_count || (count == best_count && count > 0 && residual < best_residual)) {
        best_count = count;
        best_residual = residual;
        best = F;
        needed = required_iterations(static_cast<double>(count) / static_cast<double>(n),
                                     cfg.confidence);
      }
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kDegenerateConfiguration) throw;
    }

    if (iterations >= cfg.min_iterations && static_cast<double>(iterations) >= needed) break;
  }

  if (best_count < kSampleSize) {
    throw Error(ErrorKind::kEstimationFailed,
                "RANSAC found only " + std::to_string(best_count) + " inliers");
  }

  RansacResult result;
  result.num_iterations = iterations;
  result.fundamental = best;
  std::size_t final_count = score(best, correspondences, threshold_sq, &result.inlier_mask);

  // Single refit on the consensus set. The mask is rescored against the refit
  // so every reported inlier satisfies the threshold for the returned model.
  std::vector<Correspondence> inliers;
  for (std::size_t i = 0; i < correspondences.size(); ++i) {
    if (result.inlier_mask[i]) inliers.push_back(correspondences[i]);
  }
  try {
    const FundamentalMatrix refit = eight_point_fundamental(inliers);
    std::vector<std::uint8_t> refit_mask;
    const std::size_t refit_count = score(refit, correspondences, threshold_sq, &refit_mask);
    if (refit_count >= kSampleSize) {
      result.fundamental = refit;
      result.inlier_mask = std::move(refit_mask);
      final_count = refit_count;
    }
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kDegenerateConfiguration &&
        e.kind() != ErrorKind::kInsufficientData) {
      throw;
    }
  }

  if (final_count < kSampleSize) {
    throw Error(ErrorKind::kEstimationFailed,
                "RANSAC consensus has only " + std::to_string(final_count) + " inliers");
  }
  return result;
}

PoseEstimate estimate_relative_pose(std::span<const Correspondence> correspondences,
                                    const Calibration& K1, const Calibration& K2,
                                    const RansacConfig& cfg) {
  K1.validate();
  K2.validate();
  require_size(correspondences.size());

  RansacResult fit = ransac_fundamental(correspondences, cfg);

  std::vector<Correspondence> inliers;
  double sampson_sum = 0.0;
  for (std::size_t i = 0; i < correspondences.size(); ++i) {
    if (!fit.inlier_mask[i]) continue;
    inliers.push_back(correspondences[i]);
    sampson_sum += sampson_distance(fit.fundamental, correspondences[i]);
  }

  const EssentialMatrix E = fundamental_to_essential(fit.fundamental, K1, K2);

  PoseEstimate out;
  out.pose = decompose_essential(E, inliers, K1, K2);
  out.fundamental = fit.fundamental;
  out.inlier_mask = std::move(fit.inlier_mask);
  out.num_iterations = fit.num_iterations;
  out.mean_inlier_sampson = sampson_sum / static_cast<double>(inliers.size());
  return out;
}

}  // namespace matchbench
