#include "matchbench/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstring>
#include <thread>

#include "json.hpp"

namespace matchbench {

using ordered_json = nlohmann::ordered_json;

namespace {

constexpr std::string_view kReportFormat = "matchbench-report";
constexpr int kReportVersion = 1;
constexpr double kDegenerateTranslationNorm = 1e-6;

// JSON has no inf/nan, so they travel as strings.
ordered_json encode_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double decode_double(const ordered_json& j, const char* field, const std::string& source) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  throw ParseError(source, 0, std::string("field '") + field + "' is not a number");
}

const ordered_json& field(const ordered_json& obj, const char* name, const std::string& source) {
  if (!obj.is_object()) throw ParseError(source, 0, std::string("expected an object holding '") + name + "'");
  const auto it = obj.find(name);
  if (it == obj.end()) throw ParseError(source, 0, std::string("missing required field '") + name + "'");
  return *it;
}

double number_field(const ordered_json& obj, const char* name, const std::string& source) {
  return decode_double(field(obj, name, source), name, source);
}

template <typename T>
T typed_field(const ordered_json& obj, const char* name, const std::string& source) {
  const ordered_json& j = field(obj, name, source);
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ParseError(source, 0, std::string("field '") + name + "' has the wrong type");
  }
}

ordered_json estimator_json(const RansacConfig& cfg) {
  ordered_json j;
  j["inlier_threshold"] = cfg.inlier_threshold;
  j["confidence"] = cfg.confidence;
  j["max_iterations"] = cfg.max_iterations;
  j["min_iterations"] = cfg.min_iterations;
  j["seed"] = cfg.seed;
  j["max_correspondences"] = cfg.max_correspondences;
  return j;
}

bool same_double(double a, double b) {
  return std::memcmp(&a, &b, sizeof(double)) == 0 || (std::isnan(a) && std::isnan(b));
}

std::string format_csv_value(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return format_double(v);
}

std::string format_csv_timing(double v) { return v < 0.0 ? "-" : format_double(v); }

}  // namespace

std::string_view to_string(DegenerateTranslationPolicy policy) {
  return policy == DegenerateTranslationPolicy::kRotationOnly ? "rotation-only" : "exclude-pair";
}

DegenerateTranslationPolicy parse_degenerate_policy(std::string_view text) {
  if (text == "rotation-only") return DegenerateTranslationPolicy::kRotationOnly;
  if (text == "exclude-pair") return DegenerateTranslationPolicy::kExcludePair;
  throw Error(ErrorKind::kInvalidInput, "unknown degenerate-translation policy '" + std::string(text) + "'");
}

std::vector<double> MetricConfig::default_thresholds() {
  std::vector<double> t;
  for (int d = 1; d <= 20; ++d) t.push_back(d);
  return t;
}

void MetricConfig::validate() const {
  if (thresholds.empty()) throw Error(ErrorKind::kInvalidInput, "threshold grid is empty");
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    if (!(thresholds[i] > 0.0)) throw Error(ErrorKind::kInvalidInput, "thresholds must be positive");
    if (i > 0 && !(thresholds[i] > thresholds[i - 1])) {
      throw Error(ErrorKind::kInvalidInput, "thresholds must be strictly increasing");
    }
  }
  if (!(ap_threshold > 0.0)) throw Error(ErrorKind::kInvalidInput, "ap_threshold must be positive");
}

bool classify_pair(double e, double threshold) { return e < threshold; }

std::vector<SpPoint> sp_curve(std::span<const PairResult> results, const MetricConfig& cfg) {
  if (results.empty()) throw Error(ErrorKind::kInvalidInput, "sp_curve: no pair results");
  cfg.validate();
  std::vector<SpPoint> sp;
  sp.reserve(cfg.thresholds.size());
  for (double t : cfg.thresholds) {
    std::size_t correct = 0;
    for (const PairResult& r : results) {
      if (classify_pair(r.e, t)) ++correct;
    }
    sp.push_back({t, static_cast<double>(correct) / static_cast<double>(results.size())});
  }
  return sp;
}

double auc(std::span<const SpPoint> sp) {
  if (sp.empty()) throw Error(ErrorKind::kInvalidInput, "auc: empty SP curve");
  double sum = 0.0;
  for (const SpPoint& p : sp) sum += p.success_ratio;
  return sum / static_cast<double>(sp.size());
}

std::optional<double> ap(std::span<const PairResult> results, const MetricConfig& cfg) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const PairResult& r : results) {
    if (!classify_pair(r.e, cfg.ap_threshold)) continue;
    sum += static_cast<double>(r.correspondence_count);
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

TimingSummary timing_summary(std::span<const PairResult> results, std::size_t subset_size) {
  std::vector<const PairResult*> ordered;
  ordered.reserve(results.size());
  for (const PairResult& r : results) ordered.push_back(&r);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const PairResult* a, const PairResult* b) { return a->pair_id < b->pair_id; });
  if (ordered.size() > subset_size) ordered.resize(subset_size);

  auto mean_of = [&ordered](double PairResult::*stage) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const PairResult* r : ordered) {
      if (r->*stage < 0.0) continue;
      sum += r->*stage;
      ++n;
    }
    return n == 0 ? kUnknownTiming : sum / static_cast<double>(n);
  };

  TimingSummary t;
  t.subset_size = ordered.size();
  t.detect_ms = mean_of(&PairResult::detect_ms);
  t.match_ms = mean_of(&PairResult::match_ms);
  t.select_ms = mean_of(&PairResult::select_ms);
  t.estimate_ms = mean_of(&PairResult::estimate_ms);
  return t;
}

std::string estimator_config_digest(const RansacConfig& cfg) {
  return digest_hex(estimator_json(cfg).dump());
}

namespace {

constexpr std::string_view kExcludedStatus = "excluded: degenerate ground-truth translation";

PairResult evaluate_pair_impl(const PairTask& task, const CorrespondenceSource& source,
                              const RansacConfig& estimator, const MetricConfig& metrics) {
  PairResult r;
  r.pair_id = task.pair_id;

  const bool degenerate_gt = task.gt_relative.translation.norm() < kDegenerateTranslationNorm;
  if (degenerate_gt &&
      metrics.degenerate_translation_policy == DegenerateTranslationPolicy::kExcludePair) {
    r.status = kExcludedStatus;
    return r;
  }

  CorrespondenceSet set;
  try {
    set = source.load(task.pair_id);
  } catch (const Error& e) {
    r.status = std::string("failed: ") + e.what();
    return r;
  }
  r.correspondence_count = set.correspondences.size();
  r.detect_ms = set.detect_ms;
  r.match_ms = set.match_ms;
  r.select_ms = set.select_ms;

  const auto start = std::chrono::steady_clock::now();
  PoseEstimate estimate;
  try {
    estimate = estimate_relative_pose(set.correspondences, task.ref_calibration,
                                      task.query_calibration, estimator.for_pair(task.pair_id));
  } catch (const Error& e) {
    r.estimate_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    r.status = std::string("failed: ") + std::string(to_string(e.kind()));
    return r;
  }
  r.estimate_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  r.inlier_count = estimate.inlier_count();

  r.e_r = rotation_error_deg(estimate.pose.rotation, task.gt_relative.rotation);
  if (degenerate_gt) {
    r.e_t = std::numeric_limits<double>::quiet_NaN();
    r.e = r.e_r;
    r.status = "rotation-only";
  } else {
    r.e_t = translation_error_deg(estimate.pose.translation, task.gt_relative.translation);
    r.e = pose_error(r.e_r, r.e_t);
  }
  return r;
}

}  // namespace

PairResult evaluate_pair(const PairTask& task, const CorrespondenceSource& source,
                         const RansacConfig& estimator, const MetricConfig& metrics) {
  return evaluate_pair_impl(task, source, estimator, metrics);
}

EvaluationReport evaluate_pairs(std::span<const PairTask> pairs, const CorrespondenceSource& source,
                                const EvaluationSetup& setup) {
  setup.estimator.validate();
  setup.metrics.validate();

  std::vector<PairResult> results(pairs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next.fetch_add(1); i < pairs.size(); i = next.fetch_add(1)) {
      results[i] = evaluate_pair_impl(pairs[i], source, setup.estimator, setup.metrics);
    }
  };
  const unsigned jobs = std::max(1u, std::min<unsigned>(setup.jobs, static_cast<unsigned>(pairs.size())));
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(jobs);
    for (unsigned t = 0; t < jobs; ++t) threads.emplace_back(worker);
    for (std::thread& t : threads) t.join();
  }

  EvaluationReport report;
  report.sequence = setup.sequence;
  report.matcher = setup.matcher;
  report.estimator = setup.estimator;
  report.estimator_digest = estimator_config_digest(setup.estimator);
  report.pair_list_digest = pair_list_digest(pairs);
  report.metrics = setup.metrics;
  report.dropped = setup.dropped;
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (results[i].status == kExcludedStatus) {
      report.dropped.push_back({pairs[i].pair_id, pairs[i].ref_index, pairs[i].query_index,
                                std::string(kExcludedStatus.substr(10))});
    } else {
      report.pairs.push_back(std::move(results[i]));
    }
  }
  std::stable_sort(report.pairs.begin(), report.pairs.end(),
                   [](const PairResult& a, const PairResult& b) { return a.pair_id < b.pair_id; });
  if (report.pairs.empty()) {
    throw Error(ErrorKind::kEmptySequence, "no pair left to evaluate");
  }

  report.sp = sp_curve(report.pairs, report.metrics);
  report.auc = auc(report.sp);
  report.ap = ap(report.pairs, report.metrics);
  report.timing = timing_summary(report.pairs, report.metrics.timing_subset);
  return report;
}

// ---- serialization ----------------------------------------------------------

std::string format_report(const EvaluationReport& report) {
  ordered_json root;
  root["format"] = kReportFormat;
  root["version"] = kReportVersion;
  root["tool"] = tool_version_string();
  root["sequence"] = report.sequence;
  root["matcher"] = report.matcher;
  root["seed"] = report.estimator.seed;
  root["estimator"] = estimator_json(report.estimator);
  root["estimator_digest"] = report.estimator_digest;
  root["pair_list_digest"] = report.pair_list_digest;

  ordered_json metrics;
  ordered_json thresholds = ordered_json::array();
  for (double t : report.metrics.thresholds) thresholds.push_back(encode_double(t));
  metrics["thresholds"] = std::move(thresholds);
  metrics["ap_threshold"] = encode_double(report.metrics.ap_threshold);
  metrics["degenerate_translation_policy"] = to_string(report.metrics.degenerate_translation_policy);
  metrics["timing_subset"] = report.metrics.timing_subset;
  root["metrics"] = std::move(metrics);

  root["auc"] = encode_double(report.auc);
  root["ap"] = report.ap ? encode_double(*report.ap) : ordered_json("-");
  ordered_json sp = ordered_json::array();
  for (const SpPoint& p : report.sp) {
    sp.push_back({{"threshold", encode_double(p.threshold)}, {"success_ratio", encode_double(p.success_ratio)}});
  }
  root["sp"] = std::move(sp);

  ordered_json timing;
  timing["subset_size"] = report.timing.subset_size;
  timing["detect_ms"] = encode_double(report.timing.detect_ms);
  timing["match_ms"] = encode_double(report.timing.match_ms);
  timing["select_ms"] = encode_double(report.timing.select_ms);
  timing["estimate_ms"] = encode_double(report.timing.estimate_ms);
  root["timing"] = std::move(timing);

  ordered_json pairs = ordered_json::array();
  for (const PairResult& r : report.pairs) {
    ordered_json j;
    j["pair_id"] = r.pair_id;
    j["e_r"] = encode_double(r.e_r);
    j["e_t"] = encode_double(r.e_t);
    j["e"] = encode_double(r.e);
    j["n_corr"] = r.correspondence_count;
    j["n_inlier"] = r.inlier_count;
    j["detect_ms"] = encode_double(r.detect_ms);
    j["match_ms"] = encode_double(r.match_ms);
    j["select_ms"] = encode_double(r.select_ms);
    j["estimate_ms"] = encode_double(r.estimate_ms);
    j["status"] = r.status;
    pairs.push_back(std::move(j));
  }
  root["pairs"] = std::move(pairs);

  ordered_json dropped = ordered_json::array();
  for (const DroppedPair& d : report.dropped) {
    dropped.push_back({{"pair_id", d.pair_id}, {"ref", d.ref_index}, {"query", d.query_index}, {"reason", d.reason}});
  }
  root["dropped"] = std::move(dropped);
  return root.dump(1) + "\n";
}

EvaluationReport parse_report(std::string_view text, const std::string& source) {
  ordered_json root;
  try {
    root = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(source, 0, std::string("malformed JSON: ") + e.what());
  }
  if (typed_field<std::string>(root, "format", source) != kReportFormat) {
    throw ParseError(source, 0, "not a matchbench report");
  }
  if (typed_field<int>(root, "version", source) != kReportVersion) {
    throw ParseError(source, 0, "unsupported report version");
  }

  EvaluationReport r;
  r.sequence = typed_field<std::string>(root, "sequence", source);
  r.matcher = typed_field<std::string>(root, "matcher", source);
  const ordered_json& est = field(root, "estimator", source);
  r.estimator.inlier_threshold = number_field(est, "inlier_threshold", source);
  r.estimator.confidence = number_field(est, "confidence", source);
  r.estimator.max_iterations = typed_field<int>(est, "max_iterations", source);
  r.estimator.min_iterations = typed_field<int>(est, "min_iterations", source);
  r.estimator.seed = typed_field<std::uint64_t>(est, "seed", source);
  r.estimator.max_correspondences = typed_field<std::size_t>(est, "max_correspondences", source);
  if (typed_field<std::uint64_t>(root, "seed", source) != r.estimator.seed) {
    throw ParseError(source, 0, "field 'seed' disagrees with the estimator seed");
  }
  r.estimator_digest = typed_field<std::string>(root, "estimator_digest", source);
  r.pair_list_digest = typed_field<std::string>(root, "pair_list_digest", source);

  const ordered_json& metrics = field(root, "metrics", source);
  const ordered_json& thresholds = field(metrics, "thresholds", source);
  if (!thresholds.is_array()) throw ParseError(source, 0, "field 'thresholds' must be an array");
  r.metrics.thresholds.clear();
  for (const ordered_json& t : thresholds) r.metrics.thresholds.push_back(decode_double(t, "thresholds", source));
  r.metrics.ap_threshold = number_field(metrics, "ap_threshold", source);
  try {
    r.metrics.degenerate_translation_policy =
        parse_degenerate_policy(typed_field<std::string>(metrics, "degenerate_translation_policy", source));
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(source, 0, e.what());
  }
  r.metrics.timing_subset = typed_field<std::size_t>(metrics, "timing_subset", source);

  r.auc = number_field(root, "auc", source);
  const ordered_json& ap_json = field(root, "ap", source);
  if (ap_json.is_string() && ap_json.get<std::string>() == "-") {
    r.ap = std::nullopt;
  } else {
    r.ap = decode_double(ap_json, "ap", source);
  }

  const ordered_json& sp = field(root, "sp", source);
  if (!sp.is_array()) throw ParseError(source, 0, "field 'sp' must be an array");
  for (const ordered_json& p : sp) {
    r.sp.push_back({number_field(p, "threshold", source), number_field(p, "success_ratio", source)});
  }

  const ordered_json& timing = field(root, "timing", source);
  r.timing.subset_size = typed_field<std::size_t>(timing, "subset_size", source);
  r.timing.detect_ms = number_field(timing, "detect_ms", source);
  r.timing.match_ms = number_field(timing, "match_ms", source);
  r.timing.select_ms = number_field(timing, "select_ms", source);
  r.timing.estimate_ms = number_field(timing, "estimate_ms", source);

  const ordered_json& pairs = field(root, "pairs", source);
  if (!pairs.is_array()) throw ParseError(source, 0, "field 'pairs' must be an array");
  for (const ordered_json& j : pairs) {
    PairResult p;
    p.pair_id = typed_field<std::int64_t>(j, "pair_id", source);
    p.e_r = number_field(j, "e_r", source);
    p.e_t = number_field(j, "e_t", source);
    p.e = number_field(j, "e", source);
    p.correspondence_count = typed_field<std::size_t>(j, "n_corr", source);
    p.inlier_count = typed_field<std::size_t>(j, "n_inlier", source);
    p.detect_ms = number_field(j, "detect_ms", source);
    p.match_ms = number_field(j, "match_ms", source);
    p.select_ms = number_field(j, "select_ms", source);
    p.estimate_ms = number_field(j, "estimate_ms", source);
    p.status = typed_field<std::string>(j, "status", source);
    r.pairs.push_back(std::move(p));
  }

  const ordered_json& dropped = field(root, "dropped", source);
  if (!dropped.is_array()) throw ParseError(source, 0, "field 'dropped' must be an array");
  for (const ordered_json& j : dropped) {
    r.dropped.push_back({typed_field<std::int64_t>(j, "pair_id", source),
                         typed_field<std::size_t>(j, "ref", source),
                         typed_field<std::size_t>(j, "query", source),
                         typed_field<std::string>(j, "reason", source)});
  }
  return r;
}

void write_report(const EvaluationReport& report, const std::string& path) {
  write_text_file(path, format_report(report));
}

EvaluationReport read_report(const std::string& path) {
  return parse_report(read_text_file(path), path);
}

std::string format_sp_csv(const EvaluationReport& report) {
  std::string out = "threshold_deg,success_ratio\n";
  for (const SpPoint& p : report.sp) {
    out += format_csv_value(p.threshold) + "," + format_csv_value(p.success_ratio) + "\n";
  }
  return out;
}

std::string format_pairs_csv(const EvaluationReport& report) {
  std::string out = "pair_id,e_r,e_t,e,n_corr,n_inlier,detect_ms,match_ms,select_ms,estimate_ms\n";
  for (const PairResult& r : report.pairs) {
    out += std::to_string(r.pair_id) + "," + format_csv_value(r.e_r) + "," + format_csv_value(r.e_t) +
           "," + format_csv_value(r.e) + "," + std::to_string(r.correspondence_count) + "," +
           std::to_string(r.inlier_count) + "," + format_csv_timing(r.detect_ms) + "," +
           format_csv_timing(r.match_ms) + "," + format_csv_timing(r.select_ms) + "," +
           format_csv_timing(r.estimate_ms) + "\n";
  }
  return out;
}

bool reports_equal(const EvaluationReport& a, const EvaluationReport& b, bool ignore_timings) {
  auto same_vec = [](const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (!same_double(x[i], y[i])) return false;
    }
    return true;
  };
  if (a.sequence != b.sequence || a.matcher != b.matcher || !(a.estimator == b.estimator) ||
      a.estimator_digest != b.estimator_digest || a.pair_list_digest != b.pair_list_digest) {
    return false;
  }
  if (!same_vec(a.metrics.thresholds, b.metrics.thresholds) ||
      !same_double(a.metrics.ap_threshold, b.metrics.ap_threshold) ||
      a.metrics.degenerate_translation_policy != b.metrics.degenerate_translation_policy ||
      a.metrics.timing_subset != b.metrics.timing_subset) {
    return false;
  }
  if (!same_double(a.auc, b.auc) || a.ap.has_value() != b.ap.has_value() ||
      (a.ap && !same_double(*a.ap, *b.ap))) {
    return false;
  }
  if (a.sp.size() != b.sp.size() || a.pairs.size() != b.pairs.size() || a.dropped != b.dropped) {
    return false;
  }
  for (std::size_t i = 0; i < a.sp.size(); ++i) {
    if (!same_double(a.sp[i].threshold, b.sp[i].threshold) ||
        !same_double(a.sp[i].success_ratio, b.sp[i].success_ratio)) {
      return false;
    }
  }
  for (std::size_t i = 0; i < a.pairs.size(); ++i) {
    const PairResult& x = a.pairs[i];
    const PairResult& y = b.pairs[i];
    if (x.pair_id != y.pair_id || !same_double(x.e_r, y.e_r) || !same_double(x.e_t, y.e_t) ||
        !same_double(x.e, y.e) || x.correspondence_count != y.correspondence_count ||
        x.inlier_count != y.inlier_count || x.status != y.status) {
      return false;
    }
    if (!ignore_timings &&
        (!same_double(x.detect_ms, y.detect_ms) || !same_double(x.match_ms, y.match_ms) ||
         !same_double(x.select_ms, y.select_ms) || !same_double(x.estimate_ms, y.estimate_ms))) {
      return false;
    }
  }
  if (!ignore_timings &&
      (a.timing.subset_size != b.timing.subset_size || !same_double(a.timing.detect_ms, b.timing.detect_ms) ||
       !same_double(a.timing.match_ms, b.timing.match_ms) || !same_double(a.timing.select_ms, b.timing.select_ms) ||
       !same_double(a.timing.estimate_ms, b.timing.estimate_ms))) {
    return false;
  }
  return true;
}

}  // namespace matchbench
