#include "matchbench/matching.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>

namespace matchbench {

namespace {

struct PatternPair {
  int x1, y1, x2, y2;
};

constexpr PatternPair kPattern[256] = {
#include "brief_pattern.inc"
};

constexpr int kMinImageSize = 32;
constexpr int kDescriptorBorder = 16;
constexpr int kBoxRadius = 2;
// Sobel (1) plus the 5-tap Gaussian window (2).
constexpr int kHarrisBorder = 3;

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

// 5x5 box sums with replicated borders. Sums (not means) keep the
// comparisons exact.
std::vector<int> box_sums(const GrayImage& img) {
  const int w = img.width, h = img.height;
  std::vector<int> horizontal(img.pixels.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      int s = 0;
      for (int dx = -kBoxRadius; dx <= kBoxRadius; ++dx) {
        s += img.at(std::clamp(x + dx, 0, w - 1), y);
      }
      horizontal[static_cast<std::size_t>(y * w + x)] = s;
    }
  }
  std::vector<int> out(img.pixels.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      int s = 0;
      for (int dy = -kBoxRadius; dy <= kBoxRadius; ++dy) {
        s += horizontal[static_cast<std::size_t>(std::clamp(y + dy, 0, h - 1) * w + x)];
      }
      out[static_cast<std::size_t>(y * w + x)] = s;
    }
  }
  return out;
}

template <typename Distance, typename Desc>
std::vector<TentativeMatch> brute_force(std::span<const Desc> desc_a, std::span<const Desc> desc_b,
                                        Distance distance) {
  if (desc_b.empty()) throw Error(ErrorKind::kInvalidInput, "match_nn: empty descriptor set b");
  std::vector<TentativeMatch> out;
  out.reserve(desc_a.size());
  for (std::size_t i = 0; i < desc_a.size(); ++i) {
    TentativeMatch m;
    m.index_a = i;
    m.distance = kNoSecondNeighbor;
    m.second_distance = kNoSecondNeighbor;
    for (std::size_t j = 0; j < desc_b.size(); ++j) {
      const double d = distance(desc_a[i], desc_b[j]);
      if (d < m.distance) {
        m.second_distance = m.distance;
        m.distance = d;
        m.index_b = j;
      } else if (d < m.second_distance) {
        m.second_distance = d;
      }
    }
    out.push_back(m);
  }
  return out;
}

}  // namespace

int hamming_distance(const BinaryDescriptor& a, const BinaryDescriptor& b) {
  int d = 0;
  for (std::size_t i = 0; i < a.bits.size(); ++i) d += std::popcount(a.bits[i] ^ b.bits[i]);
  return d;
}

std::vector<Keypoint> detect_corners(const GrayImage& image, std::size_t max_features,
                                     const HarrisConfig& cfg) {
  if (image.width < kMinImageSize || image.height < kMinImageSize) {
    throw Error(ErrorKind::kInvalidInput, "detect_corners: image must be at least 32x32");
  }
  const int w = image.width, h = image.height;
  const auto idx = [w](int x, int y) { return static_cast<std::size_t>(y * w + x); };

  std::vector<double> ixx(image.pixels.size(), 0.0), iyy(ixx.size(), 0.0), ixy(ixx.size(), 0.0);
  for (int y = 1; y < h - 1; ++y) {
    for (int x = 1; x < w - 1; ++x) {
      const int gx = (image.at(x + 1, y - 1) + 2 * image.at(x + 1, y) + image.at(x + 1, y + 1)) -
                     (image.at(x - 1, y - 1) + 2 * image.at(x - 1, y) + image.at(x - 1, y + 1));
      const int gy = (image.at(x - 1, y + 1) + 2 * image.at(x, y + 1) + image.at(x + 1, y + 1)) -
                     (image.at(x - 1, y - 1) + 2 * image.at(x, y - 1) + image.at(x + 1, y - 1));
      ixx[idx(x, y)] = static_cast<double>(gx) * gx;
      iyy[idx(x, y)] = static_cast<double>(gy) * gy;
      ixy[idx(x, y)] = static_cast<double>(gx) * gy;
    }
  }

  // Separable binomial window [1 4 6 4 1] / 16.
  static constexpr double kTaps[5] = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};
  auto smooth = [&](std::vector<double>& channel) {
    std::vector<double> tmp(channel.size(), 0.0);
    for (int y = 0; y < h; ++y) {
      for (int x = 2; x < w - 2; ++x) {
        double s = 0.0;
        for (int k = -2; k <= 2; ++k) s += kTaps[k + 2] * channel[idx(x + k, y)];
        tmp[idx(x, y)] = s;
      }
    }
    std::fill(channel.begin(), channel.end(), 0.0);
    for (int y = 2; y < h - 2; ++y) {
      for (int x = 0; x < w; ++x) {
        double s = 0.0;
        for (int k = -2; k <= 2; ++k) s += kTaps[k + 2] * tmp[idx(x, y + k)];
        channel[idx(x, y)] = s;
      }
    }
  };
  smooth(ixx);
  smooth(iyy);
  smooth(ixy);

  std::vector<double> response(image.pixels.size(), 0.0);
  double max_response = 0.0;
  for (int y = kHarrisBorder; y < h - kHarrisBorder; ++y) {
    for (int x = kHarrisBorder; x < w - kHarrisBorder; ++x) {
      const std::size_t i = idx(x, y);
      const double det = ixx[i] * iyy[i] - ixy[i] * ixy[i];
      const double tr = ixx[i] + iyy[i];
      const double r = det - cfg.k * tr * tr;
      response[i] = r;
      max_response = std::max(max_response, r);
    }
  }
  if (!(max_response > 0.0)) return {};
  const double threshold = cfg.quality_level * max_response;

  std::vector<Keypoint> corners;
  for (int y = kHarrisBorder; y < h - kHarrisBorder; ++y) {
    for (int x = kHarrisBorder; x < w - kHarrisBorder; ++x) {
      const double r = response[idx(x, y)];
      if (!(r > threshold) || !(r > 0.0)) continue;
      // Strict against earlier raster neighbours, non-strict against later
      // ones, so a plateau yields exactly one maximum.
      bool is_max = true;
      for (int dy = -1; dy <= 1 && is_max; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0) continue;
          const double n = response[idx(x + dx, y + dy)];
          const bool earlier = dy < 0 || (dy == 0 && dx < 0);
          if (earlier ? n >= r : n > r) {
            is_max = false;
            break;
          }
        }
      }
      if (!is_max) continue;

      auto offset = [](double left, double centre, double right) {
        const double curvature = left - 2.0 * centre + right;
        if (!(curvature < 0.0)) return 0.0;
        return std::clamp(0.5 * (left - right) / curvature, -0.5, 0.5);
      };
      Keypoint kp;
      kp.x = x + offset(response[idx(x - 1, y)], r, response[idx(x + 1, y)]);
      kp.y = y + offset(response[idx(x, y - 1)], r, response[idx(x, y + 1)]);
      kp.response = r;
      corners.push_back(kp);
    }
  }

  // Raster order already breaks ties; stable sort keeps it.
  std::stable_sort(corners.begin(), corners.end(),
                   [](const Keypoint& a, const Keypoint& b) { return a.response > b.response; });
  if (corners.size() > max_features) corners.resize(max_features);
  return corners;
}

DescribedKeypoints compute_descriptors(const GrayImage& image, std::span<const Keypoint> keypoints) {
  DescribedKeypoints out;
  if (keypoints.empty()) return out;
  const std::vector<int> sums = box_sums(image);
  const int w = image.width, h = image.height;
  const auto at = [&](int x, int y) { return sums[static_cast<std::size_t>(y * w + x)]; };

  for (const Keypoint& kp : keypoints) {
    const auto cx = static_cast<int>(std::lround(kp.x));
    const auto cy = static_cast<int>(std::lround(kp.y));
    if (cx < kDescriptorBorder || cy < kDescriptorBorder || cx >= w - kDescriptorBorder ||
        cy >= h - kDescriptorBorder) {
      ++out.dropped;
      continue;
    }
    BinaryDescriptor d;
    for (std::size_t i = 0; i < 256; ++i) {
      const PatternPair& p = kPattern[i];
      if (at(cx + p.x1, cy + p.y1) < at(cx + p.x2, cy + p.y2)) d.set_bit(i);
    }
    out.keypoints.push_back(kp);
    out.descriptors.push_back(d);
  }
  return out;
}

std::vector<TentativeMatch> match_nn(std::span<const BinaryDescriptor> desc_a,
                                     std::span<const BinaryDescriptor> desc_b) {
  return brute_force(desc_a, desc_b, [](const BinaryDescriptor& a, const BinaryDescriptor& b) {
    return static_cast<double>(hamming_distance(a, b));
  });
}

std::vector<TentativeMatch> match_nn(std::span<const std::vector<float>> desc_a,
                                     std::span<const std::vector<float>> desc_b) {
  return brute_force(desc_a, desc_b, [](const std::vector<float>& a, const std::vector<float>& b) {
    if (a.size() != b.size()) {
      throw Error(ErrorKind::kInvalidInput, "match_nn: descriptor lengths differ");
    }
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
      const double d = static_cast<double>(a[k]) - static_cast<double>(b[k]);
      s += d * d;
    }
    return std::sqrt(s);
  });
}

std::vector<TentativeMatch> ratio_test(std::span<const TentativeMatch> matches, double threshold) {
  std::vector<TentativeMatch> kept;
  for (const TentativeMatch& m : matches) {
    if (m.distance < threshold * m.second_distance) kept.push_back(m);
  }
  return kept;
}

CorrespondenceSet run_builtin_matcher(const GrayImage& image_a, const GrayImage& image_b,
                                      const BuiltinMatcherConfig& cfg, std::int64_t pair_id) {
  CorrespondenceSet out;
  out.pair_id = pair_id;

  auto start = Clock::now();
  const std::vector<Keypoint> kp_a = detect_corners(image_a, cfg.max_features, cfg.harris);
  const std::vector<Keypoint> kp_b = detect_corners(image_b, cfg.max_features, cfg.harris);
  const DescribedKeypoints da = compute_descriptors(image_a, kp_a);
  const DescribedKeypoints db = compute_descriptors(image_b, kp_b);
  out.detect_ms = elapsed_ms(start);

  if (da.descriptors.empty() || db.descriptors.empty()) {
    out.match_ms = 0.0;
    out.select_ms = 0.0;
    return out;
  }

  start = Clock::now();
  const std::vector<TentativeMatch> tentative = match_nn(da.descriptors, db.descriptors);
  out.match_ms = elapsed_ms(start);

  start = Clock::now();
  const std::vector<TentativeMatch> selected = ratio_test(tentative, cfg.ratio);
  out.select_ms = elapsed_ms(start);

  out.correspondences.reserve(selected.size());
  for (const TentativeMatch& m : selected) {
    const Keypoint& a = da.keypoints[m.index_a];
    const Keypoint& b = db.keypoints[m.index_b];
    out.correspondences.push_back({a.x, a.y, b.x, b.y});
  }
  return out;
}

}  // namespace matchbench
