#pragma once

#include "mergesynth/model.hpp"
#include "mergesynth/text_merge.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace mergesynth {

/// Must be deterministic: scan_merge evaluates it once per distinct interleaving.
using ValidityPredicate = std::function<bool(const Lines&)>;

/// Paren/bracket/brace nesting over the text, ignoring string literals
/// ('', "", ``) and // or /* */ comments.
bool brackets_balanced(const Lines& lines);

/// Runs the command with the candidate on standard input; exit status 0
/// means valid.
ValidityPredicate external_predicate(std::vector<std::string> argv);

struct ScanCandidate {
    Lines text;
    std::vector<LineRef> refs;
    /// Share of valid samples that produced this candidate.
    double confidence = 0.0;
};

/// Samples `trials` uniform order-preserving interleavings of all lines of A
/// and B, keeps the valid ones and returns up to k candidates with distinct text in
/// first-sampled order.
std::vector<ScanCandidate> scan_merge(const Lines& a, const Lines& b, std::size_t trials, std::uint64_t seed,
                                      const ValidityPredicate& valid, std::size_t k);
std::vector<ScanCandidate> scan_merge(const ConflictRegion& region, std::size_t trials, std::uint64_t seed,
                                      const ValidityPredicate& valid, std::size_t k);

}  // namespace mergesynth
