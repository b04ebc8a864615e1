#pragma once

#include "mergesynth/checkpoint.hpp"
#include "mergesynth/metrics.hpp"
#include "mergesynth/scan_merge.hpp"

#include <span>
#include <vector>

namespace mergesynth {

/// Beam candidates (deduplicated by text, no threshold) for every tuple.
/// Regions beyond L_max get no candidates.
std::vector<SampleResult> model_results(std::span<const MergeTuple> tuples, const Model& model, std::size_t k,
                                        std::size_t threads = 1);

struct ScanMergeOptions {
    std::size_t trials = 100;
    std::size_t k = 3;
    std::size_t runs = 10;
    std::uint64_t seed = 1;
};

std::vector<SampleResult> scanmerge_results(std::span<const MergeTuple> tuples, const Vocabulary& vocab,
                                            const ValidityPredicate& valid, std::size_t trials, std::uint64_t seed,
                                            std::size_t k);

/// Mean report over options.runs seeds (seed, seed + 1, ...).
EvalReport scanmerge_report(std::span<const MergeTuple> tuples, const Vocabulary& vocab,
                            const ValidityPredicate& valid, const ScanMergeOptions& options,
                            std::span<const double> grid);

}  // namespace mergesynth
