#pragma once

#include "mergesynth/localize.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace mergesynth {

/// Guards against minified or generated files.
struct MineLimits {
    std::size_t max_line_length = 1000;
    std::size_t max_file_bytes = 1 << 20;
};

/// A regenerated conflict file and the file the developer committed.
struct ConflictPair {
    std::string conflict_text;
    std::string resolved_text;
    Provenance provenance;
};

using PairSink = std::function<void(ConflictPair)>;
using LogSink = std::function<void(const std::string&)>;

/// Replays every two-parent merge commit of the repository: files modified
/// on both sides are re-merged with diff3 against the merge base and emitted
/// when the regeneration conflicts. Throws RepositoryUnreadable; per-file
/// failures go to `log` and are skipped.
void mine_repository(const std::filesystem::path& repo, const MineLimits& limits, const PairSink& sink,
                     const LogSink& log = {});

std::vector<ConflictPair> mine_repository(const std::filesystem::path& repo, const MineLimits& limits = {});

bool within_limits(std::string_view content, const MineLimits& limits);

enum class Split { train, valid, test };

std::string_view to_string(Split s);
Split split_from_string(std::string_view s);

struct CorpusRecord {
    std::string id;
    MergeTuple tuple;
    Split split = Split::train;
    bool operator==(const CorpusRecord&) const = default;
};

struct SplitManifest {
    std::array<double, 3> fractions{0.8, 0.1, 0.1};
    std::uint64_t seed = 0;
    std::array<std::size_t, 3> counts{};
};

/// SHA-256 (hex) of the canonical serialization of (a, b, o, r).
std::string record_id(const MergeTuple& t);

/// Orders records by a seeded hash of their id and hands out exact split
/// sizes (rounded, test takes the remainder). Independent of input order.
void assign_splits(std::vector<CorpusRecord>& records, SplitManifest& manifest);

/// Bucket upper bounds over |a|+|b| lines: [0,5] [6,10] [11,50] [51,100] 100+.
inline constexpr std::array<std::size_t, 4> k_corpus_bucket_bounds{5, 10, 50, 100};
std::array<std::size_t, 5> corpus_size_buckets(const std::vector<CorpusRecord>& records);
std::string format_size_buckets(const std::array<std::size_t, 5>& buckets);

struct BuildReport {
    std::size_t pairs = 0;
    std::size_t parse_failures = 0;
    LocalizeStats localize;
    std::size_t duplicates = 0;
    SplitManifest manifest;
    std::array<std::size_t, 5> size_buckets{};

    std::string to_text() const;
};

/// Localizes, deduplicates by id, and assigns splits. Records stay in first
/// occurrence order.
std::vector<CorpusRecord> build_records(const std::vector<ConflictPair>& pairs, SplitManifest& manifest,
                                        BuildReport& report);

/// build_records followed by write_dataset.
BuildReport build_dataset(const std::vector<ConflictPair>& pairs, const SplitManifest& manifest, std::ostream& out);

/// One JSON object per line.
void write_dataset(std::ostream& out, const std::vector<CorpusRecord>& records);
std::string record_to_json_line(const CorpusRecord& record);

/// Re-validates every record (id, filters); throws DataError with the line
/// number on the first violation.
std::vector<CorpusRecord> load_dataset(std::istream& in);
std::vector<CorpusRecord> load_dataset(const std::filesystem::path& path);

}  // namespace mergesynth
