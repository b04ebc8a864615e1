#include "mergesynth/scan_merge.hpp"

#include "mergesynth/process.hpp"
#include "mergesynth/rng.hpp"

#include <map>
#include <stdexcept>

namespace mergesynth {

bool brackets_balanced(const Lines& lines) {
    std::string stack;
    bool block_comment = false;
    for (const auto& line : lines) {
        char quote = 0;
        for (std::size_t i = 0; i < line.size(); ++i) {
            const char c = line[i];
            const char next = i + 1 < line.size() ? line[i + 1] : '\0';
            if (block_comment) {
                if (c == '*' && next == '/') {
                    block_comment = false;
                    ++i;
                }
                continue;
            }
            if (quote != 0) {
                if (c == '\\') {
                    ++i;
                } else if (c == quote) {
                    quote = 0;
                }
                continue;
            }
            if (c == '/' && next == '/') break;
            if (c == '/' && next == '*') {
                block_comment = true;
                ++i;
                continue;
            }
            switch (c) {
                case '\'':
                case '"':
                case '`': quote = c; break;
                case '(': stack.push_back(')'); break;
                case '[': stack.push_back(']'); break;
                case '{': stack.push_back('}'); break;
                case ')':
                case ']':
                case '}':
                    if (stack.empty() || stack.back() != c) return false;
                    stack.pop_back();
                    break;
                default: break;
            }
        }
    }
    return stack.empty();
}

ValidityPredicate external_predicate(std::vector<std::string> argv) {
    if (argv.empty()) throw std::invalid_argument("external predicate needs a command");
    return [argv = std::move(argv)](const Lines& lines) {
        std::string text;
        for (const auto& line : lines) text += line + "\n";
        return run_process(argv, text).exit_code == 0;
    };
}

std::vector<ScanCandidate> scan_merge(const Lines& a, const Lines& b, std::size_t trials, std::uint64_t seed,
                                      const ValidityPredicate& valid, std::size_t k) {
    Rng rng(seed);
    std::map<Lines, std::size_t> index;
    std::map<std::vector<LineRef::Side>, bool> verdicts;
    std::vector<std::pair<std::vector<LineRef::Side>, std::size_t>> seen;
    std::size_t valid_samples = 0;
    for (std::size_t t = 0; t < trials; ++t) {
        std::vector<LineRef::Side> order;
        order.reserve(a.size() + b.size());
        std::size_t na = a.size(), nb = b.size();
        while (na + nb > 0) {
            if (rng.below(na + nb) < na) {
                order.push_back(LineRef::Side::a);
                --na;
            } else {
                order.push_back(LineRef::Side::b);
                --nb;
            }
        }
        Lines text;
        std::size_t ia = 0, ib = 0;
        for (auto side : order) text.push_back(side == LineRef::Side::a ? a[ia++] : b[ib++]);
        auto verdict = verdicts.find(order);
        if (verdict == verdicts.end()) verdict = verdicts.emplace(order, valid(text)).first;
        if (!verdict->second) continue;
        ++valid_samples;
        // orders that differ only in where a shared line came from give one candidate
        auto [it, inserted] = index.emplace(std::move(text), seen.size());
        if (inserted) seen.emplace_back(order, 0);
        ++seen[it->second].second;
    }
    std::vector<ScanCandidate> out;
    for (const auto& [order, count] : seen) {
        if (out.size() == k) break;
        ScanCandidate c;
        std::size_t ia = 0, ib = 0;
        for (auto side : order) {
            if (side == LineRef::Side::a) {
                c.refs.push_back(LineRef::of_a(ia + 1));
                c.text.push_back(a[ia++]);
            } else {
                c.refs.push_back(LineRef::of_b(ib + 1));
                c.text.push_back(b[ib++]);
            }
        }
        c.confidence = static_cast<double>(count) / static_cast<double>(valid_samples);
        out.push_back(std::move(c));
    }
    return out;
}

std::vector<ScanCandidate> scan_merge(const ConflictRegion& region, std::size_t trials, std::uint64_t seed,
                                      const ValidityPredicate& valid, std::size_t k) {
    return scan_merge(region.a_lines, region.b_lines, trials, seed, valid, k);
}

}  // namespace mergesynth
