#pragma once

#include "mergesynth/checkpoint.hpp"
#include "mergesynth/text_merge.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mergesynth {

struct ResolveOptions {
    std::size_t k = 3;
    /// Candidates with confidence below this are dropped.
    double threshold = 0.5;
};

struct ResolutionCandidate {
    std::vector<LineRef> refs;  // ends with STOP unless cut at the length bound
    Lines text;
    double confidence = 0.0;
};

struct RegionResolution {
    /// Confidence descending; empty means abstain.
    std::vector<ResolutionCandidate> candidates;
    std::string abstain_reason;

    bool abstained() const { return candidates.empty(); }
};

RegionResolution resolve_region(const ConflictRegion& region, const Model& model, const ResolveOptions& options);

enum class RegionStatus { resolved, abstained, skipped };

struct RegionOutcome {
    std::size_t index = 0;
    RegionStatus status = RegionStatus::abstained;
    std::string detail;
    std::optional<ResolutionCandidate> applied;
};

struct FileReport {
    std::vector<RegionOutcome> regions;
    bool aborted = false;

    std::size_t resolved_count() const;
    /// 0 when every region was resolved (or there were none), 1 when some
    /// were, 2 when none were.
    int exit_code() const;
    std::string to_text() const;
};

struct FileResolution {
    std::string text;
    FileReport report;
};

/// Terminal accept/skip/abort loop for interactive resolution.
struct Prompt {
    std::istream& in;
    std::ostream& out;
};

/// Resolves every region of a conflicted file. Without a prompt the top
/// candidate is applied when one clears the threshold; with a prompt the
/// user picks among all beam candidates. Bytes outside replaced regions are
/// copied unchanged. Throws MalformedMarkers.
FileResolution resolve_file(std::string_view text, const Model& model, const ResolveOptions& options,
                            Prompt* prompt = nullptr);

}  // namespace mergesynth
