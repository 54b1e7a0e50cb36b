#include "fixtures.hpp"

#include <cmath>
#include <filesystem>
#include <limits>

#include <unistd.h>

#include "oracles.hpp"

namespace fixtures {

using namespace matchbench;
namespace fs = std::filesystem;

namespace {

std::string random_name(CounterRng& rng) {
  static const char* words[] = {"office", "teddy", "castle", "cabinet", "street", "lab", "run"};
  return std::string(words[rng.below(7)]) + "-" + std::to_string(rng.below(100));
}

double random_timing(CounterRng& rng) {
  return rng.below(4) == 0 ? kUnknownTiming : rng.uniform(0.0, 500.0);
}

double random_error(CounterRng& rng) {
  switch (rng.below(6)) {
    case 0:
      return std::numeric_limits<double>::infinity();
    case 1:
      return static_cast<double>(rng.below(21));  // lands on grid thresholds
    default:
      return rng.uniform(0.0, 30.0);
  }
}

}  // namespace

SequenceManifest random_manifest(CounterRng& rng) {
  SequenceManifest m;
  m.name = random_name(rng);
  const double fps_choices[] = {0.0, 10.0, 30.0, 29.97};
  m.fps = fps_choices[rng.below(4)];
  const std::size_t n = 1 + rng.below(20);
  double t = rng.uniform(0.0, 1e6);
  for (std::size_t i = 0; i < n; ++i) {
    ImageEntry e;
    e.path = "images/" + std::to_string(rng.below(100000)) + (rng.below(2) ? ".png" : ".pgm");
    t += rng.uniform(0.0, 0.1);
    e.timestamp = t;
    e.calibration = Calibration{rng.uniform(100.0, 3000.0), rng.uniform(100.0, 3000.0), rng.uniform(0.0, 2000.0),
                                rng.uniform(0.0, 2000.0), rng.below(3) == 0 ? rng.uniform(-1.0, 1.0) : 0.0};
    e.has_pose = rng.below(5) != 0;
    if (e.has_pose) {
      e.pose.rotation = oracle::random_rotation(rng);
      e.pose.translation = Vec3(rng.uniform(-100, 100), rng.uniform(-100, 100), rng.uniform(-100, 100));
    }
    m.images.push_back(e);
  }
  return m;
}

std::vector<PairTask> random_pair_list(CounterRng& rng) {
  std::vector<PairTask> pairs;
  const std::size_t n = rng.below(50);
  std::int64_t id = static_cast<std::int64_t>(rng.below(10));
  for (std::size_t i = 0; i < n; ++i) {
    PairTask p;
    p.pair_id = id;
    id += 1 + static_cast<std::int64_t>(rng.below(3));
    p.ref_index = rng.below(1000);
    p.query_index = p.ref_index + 1 + rng.below(30);
    pairs.push_back(p);
  }
  return pairs;
}

CorrespondenceSet random_correspondences(CounterRng& rng) {
  CorrespondenceSet s;
  s.pair_id = static_cast<std::int64_t>(rng.below(100000));
  s.detect_ms = random_timing(rng);
  s.match_ms = random_timing(rng);
  s.select_ms = random_timing(rng);
  const std::size_t n = rng.below(200);
  for (std::size_t i = 0; i < n; ++i) {
    s.correspondences.push_back({rng.uniform(-5.0, 3100.0), rng.uniform(-5.0, 2100.0), rng.uniform(-5.0, 3100.0),
                                 rng.uniform(-5.0, 2100.0)});
  }
  return s;
}

PairResult random_pair_result(CounterRng& rng, std::int64_t pair_id) {
  PairResult r;
  r.pair_id = pair_id;
  r.correspondence_count = rng.below(3000);
  r.detect_ms = random_timing(rng);
  r.match_ms = random_timing(rng);
  r.select_ms = random_timing(rng);
  r.estimate_ms = random_timing(rng);
  const std::uint64_t kind = rng.below(8);
  if (kind == 0) {
    r.status = "failed: estimation-failed";
    r.inlier_count = 0;
  } else if (kind == 1) {
    r.e_r = random_error(rng);
    r.e_t = std::numeric_limits<double>::quiet_NaN();
    r.e = r.e_r;
    r.inlier_count = r.correspondence_count;
    r.status = "rotation-only";
  } else {
    r.e_r = random_error(rng);
    r.e_t = random_error(rng);
    r.e = std::max(r.e_r, r.e_t);
    r.inlier_count = r.correspondence_count / 2;
    r.status = "ok";
  }
  return r;
}

EvaluationReport random_report(CounterRng& rng) {
  EvaluationReport r;
  r.sequence = random_name(rng);
  r.matcher = random_name(rng);
  r.estimator.inlier_threshold = rng.uniform(0.1, 5.0);
  r.estimator.confidence = rng.uniform(0.5, 0.9999);
  r.estimator.min_iterations = static_cast<int>(rng.below(200));
  r.estimator.max_iterations = r.estimator.min_iterations + static_cast<int>(rng.below(20000));
  r.estimator.seed = rng.next();
  r.estimator.max_correspondences = rng.below(2) ? 0 : rng.below(5000);
  r.estimator_digest = estimator_config_digest(r.estimator);
  r.pair_list_digest = digest_hex(std::to_string(rng.next()));
  if (rng.below(2)) {
    r.metrics.thresholds = {0.5, 1.25, 2.0, 7.5, 10.0};
    r.metrics.ap_threshold = rng.uniform(1.0, 10.0);
  }
  r.metrics.degenerate_translation_policy =
      rng.below(2) ? DegenerateTranslationPolicy::kRotationOnly : DegenerateTranslationPolicy::kExcludePair;
  r.metrics.timing_subset = 1 + rng.below(300);
  const std::size_t n = 1 + rng.below(40);
  for (std::size_t i = 0; i < n; ++i) r.pairs.push_back(random_pair_result(rng, static_cast<std::int64_t>(i)));
  r.sp = sp_curve(r.pairs, r.metrics);
  r.auc = auc(r.sp);
  r.ap = ap(r.pairs, r.metrics);
  r.timing = timing_summary(r.pairs, r.metrics.timing_subset);
  const std::size_t dropped = rng.below(3);
  for (std::size_t i = 0; i < dropped; ++i) {
    r.dropped.push_back({static_cast<std::int64_t>(n + i), rng.below(50), 50 + rng.below(50),
                         "image " + std::to_string(i) + " has no ground-truth pose"});
  }
  return r;
}

std::string temp_dir(const std::string& tag) {
  static int counter = 0;
  const fs::path p = fs::temp_directory_path() /
                     ("matchbench-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  fs::remove_all(p);
  fs::create_directories(p);
  return p.string();
}

}  // namespace fixtures
