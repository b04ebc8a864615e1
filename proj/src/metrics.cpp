#include "mergesynth/metrics.hpp"

#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>

namespace mergesynth {

namespace {

    Lines joined(const Lines& x, const Lines& y) {
        Lines out = x;
        out.insert(out.end(), y.begin(), y.end());
        return out;
    }

    double ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

    std::string fixed(double v, int digits = 4) {
        std::ostringstream out;
        out << std::fixed << std::setprecision(digits) << v;
        return out.str();
    }

    std::vector<GroupRow> grouped(std::span<const SampleResult> results, std::span<const std::string_view> names,
                                  std::size_t (*key)(const SampleResult&)) {
        std::vector<GroupRow> rows;
        std::vector<std::size_t> correct(names.size());
        for (auto n : names) rows.push_back({std::string(n), 0, 0.0});
        for (const auto& r : results) {
            const std::size_t k = key(r);
            ++rows[k].count;
            if (r.gold_rank() == 1u) ++correct[k];
        }
        for (std::size_t k = 0; k < rows.size(); ++k) {
            rows[k].top1 = ratio(static_cast<double>(correct[k]), static_cast<double>(rows[k].count));
        }
        return rows;
    }

}  // namespace

bool exact_match(const Lines& pred, const Lines& gold) { return pred == gold; }

std::string_view to_string(ResolutionClass c) { return c == ResolutionClass::concat ? "CONCAT" : "OTHER"; }

ResolutionClass classify_concat(const Lines& a, const Lines& b, const Lines& r) {
    if (r.size() != a.size() + b.size()) return ResolutionClass::other;
    return r == joined(a, b) || r == joined(b, a) ? ResolutionClass::concat : ResolutionClass::other;
}

std::size_t size_bucket(std::size_t n) {
    if (n <= 3) return 0;
    if (n <= 5) return 1;
    if (n <= 7) return 2;
    if (n <= 10) return 3;
    return 4;
}

double bleu4(std::span<const TokenId> pred, std::span<const TokenId> gold) {
    if (pred.empty() && gold.empty()) return 1.0;
    if (pred.empty() || gold.empty()) return 0.0;
    double log_sum = 0.0;
    for (std::size_t n = 1; n <= 4; ++n) {
        std::map<std::vector<TokenId>, std::size_t> ref;
        for (std::size_t i = 0; i + n <= gold.size(); ++i) ++ref[{gold.begin() + i, gold.begin() + i + n}];
        std::size_t candidates = 0, matches = 0;
        for (std::size_t i = 0; i + n <= pred.size(); ++i) {
            ++candidates;
            auto it = ref.find({pred.begin() + i, pred.begin() + i + n});
            if (it != ref.end() && it->second > 0) {
                --it->second;
                ++matches;
            }
        }
        double p;
        if (matches > 0) {
            p = static_cast<double>(matches) / static_cast<double>(candidates);
        } else if (n == 1) {
            return 0.0;
        } else {
            p = 1.0 / static_cast<double>(candidates + 1);
        }
        log_sum += std::log(p);
    }
    const double c = static_cast<double>(pred.size());
    const double r = static_cast<double>(gold.size());
    const double bp = c > r ? 1.0 : std::exp(1.0 - r / c);
    return bp * std::exp(log_sum / 4.0);
}

std::optional<std::size_t> SampleResult::gold_rank() const {
    for (std::size_t k = 0; k < candidates.size(); ++k) {
        if (exact_match(candidates[k], gold)) return k + 1;
    }
    return std::nullopt;
}

SampleResult make_result(const Lines& a, const Lines& b, const Lines& gold, std::vector<Lines> candidates,
                         std::vector<double> confidences, const Vocabulary& vocab) {
    if (candidates.size() != confidences.size()) throw std::invalid_argument("one confidence per candidate");
    SampleResult r;
    r.gold = gold;
    r.input_lines = a.size() + b.size();
    r.resolution_class = classify_concat(a, b, gold);
    const TokenSeq gold_tokens = vocab.encode(gold);
    const TokenSeq pred_tokens = candidates.empty() ? TokenSeq{} : vocab.encode(candidates.front());
    r.bleu = bleu4(pred_tokens, gold_tokens);
    r.candidates = std::move(candidates);
    r.confidences = std::move(confidences);
    return r;
}

double topk_accuracy(std::span<const SampleResult> results, std::size_t k) {
    if (k == 0) throw std::invalid_argument("k must be at least 1");
    std::size_t hits = 0;
    for (const auto& r : results) {
        const auto rank = r.gold_rank();
        if (rank && *rank <= k) ++hits;
    }
    return ratio(static_cast<double>(hits), static_cast<double>(results.size()));
}

std::vector<ThresholdRow> threshold_sweep(std::span<const SampleResult> results, std::span<const double> grid) {
    if (grid.empty()) throw std::invalid_argument("threshold grid is empty");
    std::vector<ThresholdRow> rows;
    for (double t : grid) {
        ThresholdRow row;
        row.threshold = t;
        row.total = results.size();
        std::size_t issued = 0, correct = 0;
        for (const auto& r : results) {
            if (r.candidates.empty() || r.confidences.front() < t) continue;
            ++issued;
            if (exact_match(r.candidates.front(), r.gold)) ++correct;
        }
        row.issued = static_cast<double>(issued);
        row.correct = static_cast<double>(correct);
        row.precision_undefined = issued == 0;
        row.precision = issued == 0 ? 1.0 : row.correct / row.issued;
        row.recall = ratio(row.correct, static_cast<double>(row.total));
        row.f1 = row.precision + row.recall > 0.0 ? 2.0 * row.precision * row.recall / (row.precision + row.recall)
                                                  : 0.0;
        rows.push_back(row);
    }
    return rows;
}

std::vector<double> default_threshold_grid() {
    std::vector<double> grid;
    for (int k = 0; k < 10; ++k) grid.push_back(k / 10.0);
    return grid;
}

std::vector<GroupRow> size_bucket_accuracy(std::span<const SampleResult> results) {
    return grouped(results, k_size_bucket_names, [](const SampleResult& r) { return size_bucket(r.input_lines); });
}

std::vector<GroupRow> class_accuracy(std::span<const SampleResult> results) {
    static constexpr std::array<std::string_view, 2> names = {"CONCAT", "OTHER"};
    return grouped(results, names, [](const SampleResult& r) {
        return static_cast<std::size_t>(r.resolution_class == ResolutionClass::concat ? 0 : 1);
    });
}

EvalReport build_report(std::string name, std::span<const SampleResult> results, std::span<const double> grid) {
    EvalReport rep;
    rep.name = std::move(name);
    rep.total = results.size();
    rep.top1 = topk_accuracy(results, 1);
    rep.top3 = topk_accuracy(results, 3);
    double bleu = 0.0;
    for (const auto& r : results) bleu += r.bleu;
    rep.bleu = ratio(bleu, static_cast<double>(results.size()));
    rep.sweep = threshold_sweep(results, grid);
    rep.buckets = size_bucket_accuracy(results);
    rep.classes = class_accuracy(results);
    return rep;
}

EvalReport average_reports(std::span<const EvalReport> reports) {
    if (reports.empty()) throw std::invalid_argument("no reports to average");
    EvalReport avg = reports.front();
    const double n = static_cast<double>(reports.size());
    avg.runs = reports.size();
    auto mean = [&](auto field) {
        double sum = 0.0;
        for (const auto& r : reports) sum += field(r);
        return sum / n;
    };
    avg.top1 = mean([](const EvalReport& r) { return r.top1; });
    avg.top3 = mean([](const EvalReport& r) { return r.top3; });
    avg.bleu = mean([](const EvalReport& r) { return r.bleu; });
    for (std::size_t k = 0; k < avg.sweep.size(); ++k) {
        auto& row = avg.sweep[k];
        row.issued = mean([k](const EvalReport& r) { return r.sweep[k].issued; });
        row.correct = mean([k](const EvalReport& r) { return r.sweep[k].correct; });
        row.precision = mean([k](const EvalReport& r) { return r.sweep[k].precision; });
        row.recall = mean([k](const EvalReport& r) { return r.sweep[k].recall; });
        row.f1 = mean([k](const EvalReport& r) { return r.sweep[k].f1; });
        row.precision_undefined = row.issued == 0.0;
    }
    for (std::size_t k = 0; k < avg.buckets.size(); ++k)
        avg.buckets[k].top1 = mean([k](const EvalReport& r) { return r.buckets[k].top1; });
    for (std::size_t k = 0; k < avg.classes.size(); ++k)
        avg.classes[k].top1 = mean([k](const EvalReport& r) { return r.classes[k].top1; });
    return avg;
}

nlohmann::json EvalReport::to_json() const {
    nlohmann::json j;
    j["name"] = name;
    j["total"] = total;
    j["runs"] = runs;
    j["top1"] = top1;
    j["top3"] = top3;
    j["bleu4"] = bleu;
    auto& s = j["thresholds"] = nlohmann::json::array();
    for (const auto& r : sweep) {
        s.push_back({{"threshold", r.threshold},
                     {"issued", r.issued},
                     {"correct", r.correct},
                     {"precision", r.precision},
                     {"precision_undefined", r.precision_undefined},
                     {"recall", r.recall},
                     {"f1", r.f1}});
    }
    for (const auto& [key, rows] : {std::pair{"size_buckets", &buckets}, std::pair{"classes", &classes}}) {
        auto& out = j[key] = nlohmann::json::array();
        for (const auto& r : *rows) out.push_back({{"name", r.name}, {"count", r.count}, {"top1", r.top1}});
    }
    return j;
}

std::string EvalReport::to_text() const {
    std::ostringstream out;
    out << name << ": " << total << " samples";
    if (runs > 1) out << ", mean of " << runs << " runs";
    out << "\n";
    out << "  top-1 " << fixed(top1) << "  top-3 " << fixed(top3) << "  BLEU-4 " << fixed(bleu) << "\n\n";
    out << std::setw(10) << "threshold" << std::setw(10) << "issued" << std::setw(11) << "precision"
        << std::setw(10) << "recall" << std::setw(10) << "f1" << "\n";
    for (const auto& r : sweep) {
        out << std::setw(10) << fixed(r.threshold, 2) << std::setw(10) << fixed(r.issued, runs > 1 ? 1 : 0)
            << std::setw(11) << (fixed(r.precision) + (r.precision_undefined ? "*" : "")) << std::setw(10)
            << fixed(r.recall) << std::setw(10) << fixed(r.f1) << "\n";
    }
    bool flagged = false;
    for (const auto& r : sweep) flagged = flagged || r.precision_undefined;
    if (flagged) out << "  * nothing issued at this threshold\n";
    for (const auto& [title, rows] : {std::pair{"input lines", &buckets}, std::pair{"class", &classes}}) {
        out << "\n" << std::setw(12) << title << std::setw(10) << "count" << std::setw(10) << "top-1" << "\n";
        for (const auto& r : *rows) {
            out << std::setw(12) << r.name << std::setw(10) << r.count << std::setw(10) << fixed(r.top1) << "\n";
        }
    }
    return out.str();
}

std::string EvalReport::sweep_csv() const {
    std::ostringstream out;
    out.precision(10);
    out << "threshold,issued,correct,precision,precision_undefined,recall,f1\n";
    for (const auto& r : sweep) {
        out << r.threshold << ',' << r.issued << ',' << r.correct << ',' << r.precision << ','
            << (r.precision_undefined ? 1 : 0) << ',' << r.recall << ',' << r.f1 << "\n";
    }
    return out.str();
}

}  // namespace mergesynth
