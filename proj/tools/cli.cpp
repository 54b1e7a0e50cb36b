#include "cli.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "matchbench/dataset.hpp"
#include "matchbench/image.hpp"

namespace matchbench::cli {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr std::string_view kSummaryFile = "match_summary.json";

void reject_unknown_keys(const ordered_json& obj, const std::set<std::string>& known, const std::string& where,
                         const std::string& source) {
  if (!obj.is_object()) throw ParseError(source, 0, "'" + where + "' must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (!known.count(key)) throw ParseError(source, 0, "unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read_opt(const ordered_json& obj, const char* key, T& target, const std::string& source) {
  const auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    target = it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ParseError(source, 0, std::string("config key '") + key + "' has the wrong type");
  }
}

unsigned parse_jobs_env() {
  const char* env = std::getenv("MATCHBENCH_JOBS");
  if (!env || !*env) return 1;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v < 1) throw Error(ErrorKind::kUsage, "MATCHBENCH_JOBS must be a positive integer");
  return static_cast<unsigned>(v);
}

std::string matcher_config_digest(const BuiltinMatcherConfig& m) {
  ordered_json j;
  j["max_features"] = m.max_features;
  j["ratio"] = m.ratio;
  j["harris_k"] = m.harris.k;
  j["quality_level"] = m.harris.quality_level;
  return digest_hex(j.dump());
}

template <typename Fn>
void parallel_for(std::size_t n, unsigned jobs, Fn fn) {
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(n)));
  if (threads <= 1) {
    worker();
    return;
  }
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
}

std::string format_ratio(double v) { return format_double(v); }

// ---- subcommands ------------------------------------------------------------

struct ImportArgs {
  std::string format;
  std::string input;
  std::string output;
  std::string sequence = "00";
  std::string name;
};

int cmd_import(const ImportArgs& a, std::ostream& out) {
  SequenceManifest m;
  if (a.format == "tum") {
    m = import_tum(a.input);
  } else if (a.format == "kitti") {
    m = import_kitti(a.input, a.sequence);
  } else {
    m = import_strecha(a.input);
  }
  if (!a.name.empty()) m.name = a.name;
  // Importers yield paths relative to the working directory; the manifest
  // resolves them against its own location.
  const fs::path base = fs::absolute(fs::path(a.output)).parent_path();
  for (ImageEntry& e : m.images) {
    const fs::path p(e.path);
    if (p.is_relative()) e.path = fs::absolute(p).lexically_relative(base).generic_string();
  }
  write_manifest(m, a.output);
  out << "images: " << m.size() << "\n";
  out << "poses: " << m.pose_count() << "/" << m.size() << "\n";
  return kExitOk;
}

struct PairsArgs {
  std::string manifest;
  std::string mode = "short";
  std::size_t k = 15;
  std::size_t window = 9;
  std::string output;
};

int cmd_pairs(const PairsArgs& a, std::ostream& out, std::ostream& err) {
  const SequenceManifest m = read_manifest(a.manifest);
  PairGenConfig cfg;
  cfg.mode = a.mode == "short"             ? PairMode::kShortFragment
             : a.mode == "wide-exhaustive" ? PairMode::kWideExhaustive
                                           : PairMode::kWideWindow;
  cfg.k = a.k;
  cfg.window = a.window;
  const PairSet set = generate_pairs(m, cfg);

  // Dropped pairs keep their ids in the list so the numbering stays stable;
  // the evaluator drops them again when attaching ground truth.
  std::vector<PairTask> all = set.pairs;
  for (const DroppedPair& d : set.dropped) {
    PairTask t;
    t.pair_id = d.pair_id;
    t.ref_index = d.ref_index;
    t.query_index = d.query_index;
    all.push_back(t);
  }
  std::sort(all.begin(), all.end(), [](const PairTask& x, const PairTask& y) { return x.pair_id < y.pair_id; });
  write_pair_list(all, a.output);
  for (const DroppedPair& d : set.dropped) {
    err << "dropped pair " << d.pair_id << " (" << d.ref_index << "," << d.query_index << "): " << d.reason
        << "\n";
  }
  out << all.size() << "\n";
  if (!set.dropped.empty()) out << "without ground truth: " << set.dropped.size() << "\n";
  return kExitOk;
}

struct MatchArgs {
  std::string manifest;
  std::string pairs;
  std::string matcher = "builtin";
  std::string output;
  std::string config;
  std::string timings = "measured";
  std::optional<std::size_t> max_features;
  std::optional<double> ratio;
  std::optional<unsigned> jobs;
};

int cmd_match(const MatchArgs& a, std::ostream& out, std::ostream& err) {
  RunConfig cfg = a.config.empty() ? RunConfig{} : load_run_config(a.config);
  if (a.max_features) cfg.matcher.max_features = *a.max_features;
  if (a.ratio) cfg.matcher.ratio = *a.ratio;
  if (!(cfg.matcher.ratio > 0.0 && cfg.matcher.ratio <= 1.0)) {
    throw Error(ErrorKind::kUsage, "ratio must lie in (0, 1]");
  }
  const unsigned jobs = a.jobs ? *a.jobs : parse_jobs_env();
  const bool omit_timings = a.timings == "omit";

  const SequenceManifest m = read_manifest(a.manifest);
  const std::vector<PairTask> pairs = read_pair_list(a.pairs);
  for (const PairTask& p : pairs) {
    if (p.ref_index >= m.size() || p.query_index >= m.size()) {
      throw Error(ErrorKind::kInvalidInput,
                  "pair " + std::to_string(p.pair_id) + " references an image outside the manifest");
    }
  }
  fs::create_directories(a.output);

  std::vector<std::optional<CorrespondenceSet>> sets(pairs.size());
  std::vector<std::string> failures(pairs.size());
  parallel_for(pairs.size(), jobs, [&](std::size_t i) {
    const PairTask& p = pairs[i];
    try {
      const GrayImage ref = read_image(resolve_image_path(a.manifest, m.images[p.ref_index].path));
      const GrayImage query = read_image(resolve_image_path(a.manifest, m.images[p.query_index].path));
      CorrespondenceSet s = run_builtin_matcher(ref, query, cfg.matcher, p.pair_id);
      if (omit_timings) s.detect_ms = s.match_ms = s.select_ms = kUnknownTiming;
      sets[i] = std::move(s);
    } catch (const Error& e) {
      failures[i] = e.what();
    }
  });

  ordered_json summary;
  summary["tool"] = tool_version_string();
  summary["matcher"] = a.matcher;
  summary["matcher_config_digest"] = matcher_config_digest(cfg.matcher);
  summary["seed"] = cfg.seed;
  summary["pair_list_digest"] = pair_list_digest(pairs);
  summary["timings"] = a.timings;
  std::size_t written = 0;
  ordered_json skipped = ordered_json::array();
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (sets[i]) {
      write_correspondences(a.output, *sets[i]);
      ++written;
    } else {
      err << "skipped pair " << pairs[i].pair_id << ": " << failures[i] << "\n";
      skipped.push_back({{"pair_id", pairs[i].pair_id}, {"reason", failures[i]}});
    }
  }
  summary["pairs"] = pairs.size();
  summary["written"] = written;
  summary["skipped_count"] = skipped.size();
  summary["skipped"] = std::move(skipped);
  write_text_file((fs::path(a.output) / kSummaryFile).string(), summary.dump(1) + "\n");

  out << "matched: " << written << "\n";
  out << "skipped: " << (pairs.size() - written) << "\n";
  return kExitOk;
}

struct EvaluateArgs {
  std::string manifest;
  std::string pairs;
  std::string corr;
  std::string config;
  std::string output;
  std::string csv_dir;
  std::string matcher_name;
  std::optional<std::uint64_t> seed;
  std::optional<double> inlier_threshold;
  std::optional<double> ap_threshold;
  std::optional<std::string> policy;
  std::optional<unsigned> jobs;
};

std::string matcher_name_for(const std::string& corr_dir) {
  const fs::path summary = fs::path(corr_dir) / kSummaryFile;
  if (fs::exists(summary)) {
    try {
      const ordered_json j = ordered_json::parse(read_text_file(summary.string()));
      if (j.contains("matcher") && j["matcher"].is_string()) return j["matcher"].get<std::string>();
    } catch (const nlohmann::json::exception&) {
    }
  }
  const fs::path p = fs::path(corr_dir).lexically_normal();
  return p.has_filename() ? p.filename().string() : p.parent_path().filename().string();
}

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out, std::ostream& err) {
  RunConfig cfg = a.config.empty() ? RunConfig{} : load_run_config(a.config);
  if (a.seed) cfg.seed = *a.seed;
  if (a.inlier_threshold) cfg.estimator.inlier_threshold = *a.inlier_threshold;
  if (a.ap_threshold) cfg.metrics.ap_threshold = *a.ap_threshold;
  if (a.policy) cfg.metrics.degenerate_translation_policy = parse_degenerate_policy(*a.policy);
  cfg.estimator.seed = cfg.seed;
  try {
    cfg.estimator.validate();
    cfg.metrics.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::kUsage, e.what());
  }
  if (!fs::is_directory(a.corr)) {
    throw Error(ErrorKind::kNotFound, "correspondence directory not found: " + a.corr);
  }

  const SequenceManifest m = read_manifest(a.manifest);
  const std::vector<PairTask> index_pairs = read_pair_list(a.pairs);
  const PairSet set = attach_ground_truth(index_pairs, m);
  for (const DroppedPair& d : set.dropped) {
    err << "dropped pair " << d.pair_id << ": " << d.reason << "\n";
  }

  EvaluationSetup setup;
  setup.sequence = m.name;
  setup.matcher = a.matcher_name.empty() ? matcher_name_for(a.corr) : a.matcher_name;
  setup.estimator = cfg.estimator;
  setup.metrics = cfg.metrics;
  setup.jobs = a.jobs ? *a.jobs : parse_jobs_env();
  setup.dropped = set.dropped;

  const DirectoryCorrespondenceSource source(a.corr);
  EvaluationReport report = evaluate_pairs(set.pairs, source, setup);
  // Digest over the full list, so reports stay comparable when ground-truth
  // drops differ between runs of the same list.
  report.pair_list_digest = pair_list_digest(index_pairs);

  const fs::path report_dir = fs::path(a.output).parent_path();
  if (!report_dir.empty()) fs::create_directories(report_dir);
  write_report(report, a.output);
  fs::path csv_dir = a.csv_dir.empty() ? fs::path(a.output).parent_path() : fs::path(a.csv_dir);
  if (csv_dir.empty()) csv_dir = ".";
  fs::create_directories(csv_dir);
  write_text_file((csv_dir / "sp.csv").string(), format_sp_csv(report));
  write_text_file((csv_dir / "pairs.csv").string(), format_pairs_csv(report));

  std::size_t failed = 0;
  for (const PairResult& r : report.pairs) failed += r.status.rfind("failed", 0) == 0 ? 1 : 0;
  out << "pairs: " << report.pairs.size() << " (failed " << failed << ", dropped " << report.dropped.size()
      << ")\n";
  out << "AUC: " << format_ratio(report.auc) << "\n";
  out << "AP: " << (report.ap ? format_double(*report.ap) : std::string("-")) << "\n";
  return kExitOk;
}

struct CompareArgs {
  std::vector<std::string> reports;
  std::string output;
};

int cmd_compare(const CompareArgs& a, std::ostream& out) {
  if (a.reports.size() < 2) throw Error(ErrorKind::kUsage, "compare needs at least two reports");
  std::vector<EvaluationReport> reports;
  for (const std::string& path : a.reports) reports.push_back(read_report(path));

  std::vector<std::string> sequences;
  std::vector<std::string> matchers;
  std::map<std::string, std::string> digest_of;
  std::map<std::pair<std::string, std::string>, double> cell;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const EvaluationReport& r = reports[i];
    if (std::find(sequences.begin(), sequences.end(), r.sequence) == sequences.end()) {
      sequences.push_back(r.sequence);
    }
    if (std::find(matchers.begin(), matchers.end(), r.matcher) == matchers.end()) matchers.push_back(r.matcher);
    const auto [it, inserted] = digest_of.emplace(r.sequence, r.pair_list_digest);
    if (!inserted && it->second != r.pair_list_digest) {
      throw Error(ErrorKind::kInvalidInput, "report " + a.reports[i] + " uses a different pair list for sequence '" +
                                                r.sequence + "' (digest " + r.pair_list_digest + " vs " +
                                                it->second + ")");
    }
    if (!cell.emplace(std::make_pair(r.matcher, r.sequence), r.auc).second) {
      throw Error(ErrorKind::kInvalidInput,
                  "duplicate report for matcher '" + r.matcher + "' on sequence '" + r.sequence + "'");
    }
  }

  std::map<std::string, double> best;
  for (const auto& [key, value] : cell) {
    auto [it, inserted] = best.emplace(key.second, value);
    if (!inserted) it->second = std::max(it->second, value);
  }

  std::string table = "matcher";
  for (const std::string& s : sequences) table += "," + s;
  table += "\n";
  for (const std::string& mt : matchers) {
    table += mt;
    for (const std::string& s : sequences) {
      const auto it = cell.find({mt, s});
      table += ",";
      if (it == cell.end()) {
        table += "-";
      } else {
        table += format_ratio(it->second);
        if (it->second == best[s]) table += "*";
      }
    }
    table += "\n";
  }
  if (!a.output.empty()) write_text_file(a.output, table);
  out << table;
  return kExitOk;
}

}  // namespace

// ---- config -----------------------------------------------------------------

RunConfig parse_run_config(std::string_view text, const std::string& source) {
  ordered_json root;
  try {
    root = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(source, 0, std::string("malformed JSON: ") + e.what());
  }
  reject_unknown_keys(root, {"seed", "estimator", "metrics", "matcher"}, "config", source);
  RunConfig cfg;
  read_opt(root, "seed", cfg.seed, source);
  if (root.contains("estimator")) {
    const ordered_json& e = root["estimator"];
    reject_unknown_keys(e, {"inlier_threshold", "confidence", "max_iterations", "min_iterations",
                            "max_correspondences"},
                        "estimator", source);
    read_opt(e, "inlier_threshold", cfg.estimator.inlier_threshold, source);
    read_opt(e, "confidence", cfg.estimator.confidence, source);
    read_opt(e, "max_iterations", cfg.estimator.max_iterations, source);
    read_opt(e, "min_iterations", cfg.estimator.min_iterations, source);
    read_opt(e, "max_correspondences", cfg.estimator.max_correspondences, source);
  }
  if (root.contains("metrics")) {
    const ordered_json& mt = root["metrics"];
    reject_unknown_keys(mt, {"thresholds", "ap_threshold", "degenerate_translation_policy", "timing_subset"},
                        "metrics", source);
    read_opt(mt, "thresholds", cfg.metrics.thresholds, source);
    read_opt(mt, "ap_threshold", cfg.metrics.ap_threshold, source);
    read_opt(mt, "timing_subset", cfg.metrics.timing_subset, source);
    if (mt.contains("degenerate_translation_policy")) {
      std::string policy;
      read_opt(mt, "degenerate_translation_policy", policy, source);
      try {
        cfg.metrics.degenerate_translation_policy = parse_degenerate_policy(policy);
      } catch (const Error& e) {
        throw ParseError(source, 0, e.what());
      }
    }
  }
  if (root.contains("matcher")) {
    const ordered_json& mt = root["matcher"];
    reject_unknown_keys(mt, {"max_features", "ratio", "harris_k", "quality_level"}, "matcher", source);
    read_opt(mt, "max_features", cfg.matcher.max_features, source);
    read_opt(mt, "ratio", cfg.matcher.ratio, source);
    read_opt(mt, "harris_k", cfg.matcher.harris.k, source);
    read_opt(mt, "quality_level", cfg.matcher.harris.quality_level, source);
  }
  cfg.estimator.seed = cfg.seed;
  return cfg;
}

RunConfig load_run_config(const std::string& path) { return parse_run_config(read_text_file(path), path); }

std::string format_run_config(const RunConfig& cfg) {
  ordered_json root;
  root["seed"] = cfg.seed;
  root["estimator"] = {{"inlier_threshold", cfg.estimator.inlier_threshold},
                       {"confidence", cfg.estimator.confidence},
                       {"max_iterations", cfg.estimator.max_iterations},
                       {"min_iterations", cfg.estimator.min_iterations},
                       {"max_correspondences", cfg.estimator.max_correspondences}};
  root["metrics"] = {{"thresholds", cfg.metrics.thresholds},
                     {"ap_threshold", cfg.metrics.ap_threshold},
                     {"degenerate_translation_policy", to_string(cfg.metrics.degenerate_translation_policy)},
                     {"timing_subset", cfg.metrics.timing_subset}};
  root["matcher"] = {{"max_features", cfg.matcher.max_features},
                     {"ratio", cfg.matcher.ratio},
                     {"harris_k", cfg.matcher.harris.k},
                     {"quality_level", cfg.matcher.harris.quality_level}};
  return root.dump(1) + "\n";
}

// ---- entry point ------------------------------------------------------------

int run_matchbench(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Feature-matcher evaluation harness", std::string(kToolName)};
  app.set_version_flag("--version", tool_version_string());
  app.require_subcommand(1);

  ImportArgs ia;
  CLI::App* imp = app.add_subcommand("import", "Convert a dataset layout into a manifest");
  imp->add_option("--format", ia.format, "tum | kitti | strecha")
      ->required()
      ->check(CLI::IsMember({"tum", "kitti", "strecha"}));
  imp->add_option("--input", ia.input, "Dataset directory")->required();
  imp->add_option("--output", ia.output, "Manifest file to write")->required();
  imp->add_option("--sequence", ia.sequence, "KITTI sequence id")->capture_default_str();
  imp->add_option("--name", ia.name, "Override the sequence name");

  PairsArgs pa;
  CLI::App* prs = app.add_subcommand("pairs", "Generate an evaluation pair list");
  prs->add_option("--manifest", pa.manifest)->required();
  prs->add_option("--mode", pa.mode, "short | wide-exhaustive | wide-window")
      ->check(CLI::IsMember({"short", "wide-exhaustive", "wide-window"}))
      ->capture_default_str();
  prs->add_option("--k", pa.k, "Fragment length for short mode")->capture_default_str();
  prs->add_option("--window", pa.window, "Window for wide-window mode")->capture_default_str();
  prs->add_option("--output", pa.output, "Pair CSV to write")->required();

  MatchArgs ma;
  CLI::App* mat = app.add_subcommand("match", "Run the built-in matcher over a pair list");
  mat->add_option("--manifest", ma.manifest)->required();
  mat->add_option("--pairs", ma.pairs)->required();
  mat->add_option("--matcher", ma.matcher)->check(CLI::IsMember({"builtin"}))->capture_default_str();
  mat->add_option("--output", ma.output, "Directory for .corr files")->required();
  mat->add_option("--config", ma.config, "JSON run config");
  mat->add_option("--timings", ma.timings, "measured | omit")
      ->check(CLI::IsMember({"measured", "omit"}))
      ->capture_default_str();
  mat->add_option("--max-features", ma.max_features);
  mat->add_option("--ratio", ma.ratio);
  mat->add_option("--jobs", ma.jobs, "Worker threads (default: $MATCHBENCH_JOBS or 1)")
      ->check(CLI::PositiveNumber);

  EvaluateArgs ea;
  CLI::App* ev = app.add_subcommand("evaluate", "Estimate poses and score a matcher");
  ev->add_option("--manifest", ea.manifest)->required();
  ev->add_option("--pairs", ea.pairs)->required();
  ev->add_option("--corr", ea.corr, "Directory of .corr files")->required();
  ev->add_option("--config", ea.config, "JSON run config");
  ev->add_option("--output", ea.output, "Report file to write")->required();
  ev->add_option("--csv-dir", ea.csv_dir, "Where sp.csv and pairs.csv go (default: report directory)");
  ev->add_option("--matcher-name", ea.matcher_name);
  ev->add_option("--seed", ea.seed);
  ev->add_option("--inlier-threshold", ea.inlier_threshold, "Pixels");
  ev->add_option("--ap-threshold", ea.ap_threshold, "Degrees");
  ev->add_option("--degenerate-policy", ea.policy)->check(CLI::IsMember({"rotation-only", "exclude-pair"}));
  ev->add_option("--jobs", ea.jobs, "Worker threads (default: $MATCHBENCH_JOBS or 1)")
      ->check(CLI::PositiveNumber);

  CompareArgs ca;
  CLI::App* cmp = app.add_subcommand("compare", "Tabulate AUC across reports");
  cmp->add_option("--reports", ca.reports)->required()->expected(1, -1);
  cmp->add_option("--output", ca.output, "CSV table to write");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (imp->parsed()) return cmd_import(ia, out);
    if (prs->parsed()) return cmd_pairs(pa, out, err);
    if (mat->parsed()) return cmd_match(ma, out, err);
    if (ev->parsed()) return cmd_evaluate(ea, out, err);
    return cmd_compare(ca, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.kind() == ErrorKind::kUsage ? kExitUsage : kExitDataError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitDataError;
  }
}

}  // namespace matchbench::cli
