#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "matchbench/dataset.hpp"
#include "matchbench/estimation.hpp"
#include "matchbench/matching.hpp"

namespace matchbench {

inline constexpr double kFailedPoseError = std::numeric_limits<double>::infinity();

struct PairResult {
  std::int64_t pair_id = 0;
  double e_r = kFailedPoseError;
  double e_t = kFailedPoseError;  // NaN when the rotation-only policy applied
  double e = kFailedPoseError;
  std::size_t correspondence_count = 0;
  std::size_t inlier_count = 0;
  double detect_ms = kUnknownTiming;
  double match_ms = kUnknownTiming;
  double select_ms = kUnknownTiming;
  double estimate_ms = kUnknownTiming;
  std::string status = "ok";  // "ok", "rotation-only", or "failed: <reason>"
};

enum class DegenerateTranslationPolicy { kRotationOnly, kExcludePair };

std::string_view to_string(DegenerateTranslationPolicy policy);
DegenerateTranslationPolicy parse_degenerate_policy(std::string_view text);

struct MetricConfig {
  std::vector<double> thresholds = default_thresholds();
  double ap_threshold = 5.0;
  DegenerateTranslationPolicy degenerate_translation_policy =
      DegenerateTranslationPolicy::kRotationOnly;
  std::size_t timing_subset = 200;

  static std::vector<double> default_thresholds();  // 1, 2, ..., 20 degrees
  void validate() const;
};

struct SpPoint {
  double threshold = 0.0;
  double success_ratio = 0.0;
};

struct TimingSummary {
  std::size_t subset_size = 0;  // pairs considered
  double detect_ms = kUnknownTiming;
  double match_ms = kUnknownTiming;
  double select_ms = kUnknownTiming;
  double estimate_ms = kUnknownTiming;
};

struct EvaluationReport {
  std::string sequence;
  std::string matcher;
  RansacConfig estimator;
  std::string estimator_digest;
  std::string pair_list_digest;
  MetricConfig metrics;
  std::vector<PairResult> pairs;
  std::vector<SpPoint> sp;
  double auc = 0.0;
  std::optional<double> ap;  // empty when no pair is under ap_threshold
  TimingSummary timing;
  std::vector<DroppedPair> dropped;
};

/// e < threshold; failed estimates (e = +inf) never pass.
bool classify_pair(double e, double threshold);

/// Success ratio per threshold over all pairs, failures included.
std::vector<SpPoint> sp_curve(std::span<const PairResult> results, const MetricConfig& cfg);

/// Mean of the SP success ratios.
double auc(std::span<const SpPoint> sp);

/// Mean correspondence count over pairs with e < ap_threshold.
std::optional<double> ap(std::span<const PairResult> results, const MetricConfig& cfg);

/// Per-stage means over the first min(subset_size, n) pairs by pair_id,
/// skipping unknown entries stage by stage.
TimingSummary timing_summary(std::span<const PairResult> results, std::size_t subset_size = 200);

std::string estimator_config_digest(const RansacConfig& cfg);

struct EvaluationSetup {
  std::string sequence;
  std::string matcher;
  RansacConfig estimator;
  MetricConfig metrics;
  unsigned jobs = 1;
  std::vector<DroppedPair> dropped;  // carried into the report log
};

/// Scores one pair against its ground truth; never throws for data problems.
PairResult evaluate_pair(const PairTask& task, const CorrespondenceSource& source,
                         const RansacConfig& estimator, const MetricConfig& metrics = {});

/// Full protocol over a pair list. Per-pair I/O or estimation failures are
/// recorded as failed pairs; the run is never aborted by them.
EvaluationReport evaluate_pairs(std::span<const PairTask> pairs, const CorrespondenceSource& source,
                                const EvaluationSetup& setup);

// ---- serialization ----------------------------------------------------------

std::string format_report(const EvaluationReport& report);
EvaluationReport parse_report(std::string_view text, const std::string& source = "<memory>");
void write_report(const EvaluationReport& report, const std::string& path);
EvaluationReport read_report(const std::string& path);

std::string format_sp_csv(const EvaluationReport& report);
std::string format_pairs_csv(const EvaluationReport& report);

/// Field-by-field equality; timing fields are skipped when requested.
bool reports_equal(const EvaluationReport& a, const EvaluationReport& b, bool ignore_timings);

}  // namespace matchbench
