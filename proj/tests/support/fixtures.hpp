#pragma once

// Randomized value generators for round-trip and property tests.

#include <string>
#include <vector>

#include "matchbench/common.hpp"
#include "matchbench/dataset.hpp"
#include "matchbench/matching.hpp"
#include "matchbench/metrics.hpp"

namespace fixtures {

matchbench::SequenceManifest random_manifest(matchbench::CounterRng& rng);
std::vector<matchbench::PairTask> random_pair_list(matchbench::CounterRng& rng);
matchbench::CorrespondenceSet random_correspondences(matchbench::CounterRng& rng);
matchbench::PairResult random_pair_result(matchbench::CounterRng& rng, std::int64_t pair_id);
matchbench::EvaluationReport random_report(matchbench::CounterRng& rng);

/// Fresh empty directory under the system temp dir.
std::string temp_dir(const std::string& tag);

}  // namespace fixtures
