#pragma once

#include "mergesynth/bpe.hpp"
#include "mergesynth/text_merge.hpp"

#include <json.hpp>

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mergesynth {

/// Line-for-line, byte-for-byte equality.
bool exact_match(const Lines& pred, const Lines& gold);

enum class ResolutionClass { concat, other };

std::string_view to_string(ResolutionClass c);
/// CONCAT iff r is a followed by b or b followed by a.
ResolutionClass classify_concat(const Lines& a, const Lines& b, const Lines& r);

inline constexpr std::size_t k_size_bucket_count = 5;
inline constexpr std::array<std::string_view, k_size_bucket_count> k_size_bucket_names = {"1-3", "4-5", "6-7",
                                                                                          "8-10", ">10"};
/// Bucket of |a| + |b| lines; zero lines fall in the first bucket.
std::size_t size_bucket(std::size_t input_lines);

/// Standard BLEU over n = 1..4 with a brevity penalty. A zero match count for
/// n >= 2 becomes (0 + 1) / (candidates + 1); no unigram match scores 0; two
/// empty sequences score 1.
double bleu4(std::span<const TokenId> pred, std::span<const TokenId> gold);

/// One evaluated sample: ranked candidates and what is needed to score them.
struct SampleResult {
    Lines gold;
    std::vector<Lines> candidates;
    std::vector<double> confidences;
    std::size_t input_lines = 0;
    ResolutionClass resolution_class = ResolutionClass::other;
    /// BLEU-4 of the first candidate (empty when there is none) against gold.
    double bleu = 0.0;

    /// 1-based position of gold among candidates.
    std::optional<std::size_t> gold_rank() const;
};

SampleResult make_result(const Lines& a, const Lines& b, const Lines& gold, std::vector<Lines> candidates,
                         std::vector<double> confidences, const Vocabulary& vocab);

double topk_accuracy(std::span<const SampleResult> results, std::size_t k);

struct ThresholdRow {
    double threshold = 0.0;
    /// Counts are means when the report averages several runs.
    double issued = 0.0;
    double correct = 0.0;
    std::size_t total = 0;
    double precision = 1.0;
    double recall = 0.0;
    double f1 = 0.0;
    /// Nothing issued: precision is reported as 1.
    bool precision_undefined = false;
};

/// At each threshold a sample is issued when its top candidate's confidence
/// is at least the threshold.
std::vector<ThresholdRow> threshold_sweep(std::span<const SampleResult> results, std::span<const double> grid);
std::vector<double> default_threshold_grid();

struct GroupRow {
    std::string name;
    std::size_t count = 0;
    double top1 = 0.0;
};

std::vector<GroupRow> size_bucket_accuracy(std::span<const SampleResult> results);
std::vector<GroupRow> class_accuracy(std::span<const SampleResult> results);

struct EvalReport {
    std::string name;
    std::size_t total = 0;
    double top1 = 0.0;
    double top3 = 0.0;
    double bleu = 0.0;
    std::vector<ThresholdRow> sweep;
    std::vector<GroupRow> buckets;
    std::vector<GroupRow> classes;
    /// Number of runs averaged into this report.
    std::size_t runs = 1;

    nlohmann::json to_json() const;
    std::string to_text() const;
    std::string sweep_csv() const;
};

EvalReport build_report(std::string name, std::span<const SampleResult> results, std::span<const double> grid);

/// Field-wise mean of reports over the same samples and grid.
EvalReport average_reports(std::span<const EvalReport> reports);

}  // namespace mergesynth
