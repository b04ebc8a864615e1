#pragma once

#include "mergesynth/text_merge.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mergesynth {

struct Provenance {
    std::string repository;
    std::string commit;
    std::string path;
    bool operator==(const Provenance&) const = default;
};

/// ((A, B, O), R) for one conflict region, plus bounded surrounding context.
struct MergeTuple {
    Lines a;
    Lines b;
    Lines o;
    Lines r;
    std::size_t conflict_index = 0;
    Lines context_prefix;
    Lines context_suffix;
    Provenance provenance;

    bool operator==(const MergeTuple&) const = default;
};

/// Start position in `y` of the shortest non-empty prefix of `x` that occurs
/// exactly once in `y`; -1 when no prefix is unique or `x` is empty.
template <class T>
std::ptrdiff_t minimal_unique_prefix(std::span<const T> x, std::span<const T> y) {
    if (x.empty()) return -1;
    std::vector<std::size_t> candidates;
    for (std::size_t p = 0; p < y.size(); ++p) {
        if (y[p] == x[0]) candidates.push_back(p);
    }
    for (std::size_t len = 1;; ++len) {
        if (candidates.empty()) return -1;
        if (candidates.size() == 1) return static_cast<std::ptrdiff_t>(candidates.front());
        if (len == x.size()) return -1;
        std::size_t kept = 0;
        for (auto p : candidates) {
            if (p + len < y.size() && y[p + len] == x[len]) candidates[kept++] = p;
        }
        candidates.resize(kept);
    }
}

std::ptrdiff_t minimal_unique_prefix(std::string_view x, std::string_view y);

/// Lines of the resolved file that replaced conflict region `index` of the
/// conflict file, or nullopt when the bookends are ambiguous, overlap, or do
/// not fall on line boundaries. Throws MalformedMarkers.
std::optional<Lines> localize_res_region(std::string_view conflict_text, std::string_view resolved_text,
                                         std::size_t index);

inline constexpr std::size_t k_default_context_lines = 5;

/// Tuples for every region whose resolution localizes, is not one of A/B/O,
/// and uses only lines present in A or B. Throws MalformedMarkers.
std::vector<MergeTuple> localize_merge_tuples(std::string_view conflict_text, std::string_view resolved_text,
                                              const Provenance& provenance = {},
                                              std::size_t context_lines = k_default_context_lines);

enum class TupleVerdict { kept, trivial, new_code };

/// The trivial / lines-subset filters of tuple extraction.
TupleVerdict classify_tuple(const Lines& a, const Lines& b, const Lines& o, const Lines& r);

struct LocalizeStats {
    std::size_t regions = 0;
    std::size_t ambiguous = 0;
    std::size_t trivial = 0;
    std::size_t new_code = 0;
    std::size_t kept = 0;
    LocalizeStats& operator+=(const LocalizeStats& o);
};

std::vector<MergeTuple> localize_merge_tuples(std::string_view conflict_text, std::string_view resolved_text,
                                              const Provenance& provenance, std::size_t context_lines,
                                              LocalizeStats& stats);

}  // namespace mergesynth
