#include "mergesynth/localize.hpp"

#include <algorithm>
#include <set>
#include <variant>

namespace mergesynth {

namespace {

    // Byte symbols plus two file anchors outside the byte alphabet.
    using Symbol = int;
    constexpr Symbol k_bof = 256;
    constexpr Symbol k_eof = 257;

    std::vector<Symbol> to_symbols(std::string_view s) {
        std::vector<Symbol> out;
        out.reserve(s.size() + 2);
        for (unsigned char c : s) out.push_back(c);
        return out;
    }

    bool at_line_start(std::string_view text, std::size_t pos) { return pos == 0 || text[pos - 1] == '\n'; }

    Lines split_region(std::string_view region, LineEnding terminator) {
        Lines out;
        if (region.empty()) return out;
        auto doc = TextDocument::from_text(region);
        out = std::move(doc.lines);
        // a CRLF file may resolve to a one-line region that from_text cannot
        // classify on its own
        if (terminator == LineEnding::crlf && doc.terminator == LineEnding::lf) {
            for (auto& l : out) {
                if (!l.empty() && l.back() == '\r') l.pop_back();
            }
        }
        return out;
    }

    Lines tail(const Lines& v, std::size_t n) {
        return Lines(v.end() - static_cast<std::ptrdiff_t>(std::min(n, v.size())), v.end());
    }

    Lines head(const Lines& v, std::size_t n) {
        return Lines(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(std::min(n, v.size())));
    }

    std::optional<Lines> localize_span(std::string_view conflict_text, std::string_view resolved_text, ByteSpan span,
                                       LineEnding terminator) {
        // prfx = <BOF> + C[0:spos], sffx = C[epos:m] + <EOF>
        std::vector<Symbol> prefix{k_bof};
        for (unsigned char c : conflict_text.substr(0, span.begin)) prefix.push_back(c);
        std::vector<Symbol> suffix = to_symbols(conflict_text.substr(span.end));
        suffix.push_back(k_eof);

        std::vector<Symbol> resolved{k_bof};
        for (unsigned char c : resolved_text) resolved.push_back(c);
        resolved.push_back(k_eof);

        std::reverse(prefix.begin(), prefix.end());
        std::vector<Symbol> reversed(resolved.rbegin(), resolved.rend());

        const auto n = static_cast<std::ptrdiff_t>(resolved.size());
        auto s = minimal_unique_prefix<Symbol>(prefix, reversed);
        auto e = minimal_unique_prefix<Symbol>(suffix, resolved);
        if (s < 0 || e < 0) return std::nullopt;

        // both offsets in the anchored text; shift back by the <BOF> symbol
        std::ptrdiff_t begin = n - s - 1;
        std::ptrdiff_t end = e - 1;
        const auto size = static_cast<std::ptrdiff_t>(resolved_text.size());
        if (begin < 0 || end < begin || end > size) return std::nullopt;

        auto ub = static_cast<std::size_t>(begin);
        auto ue = static_cast<std::size_t>(end);
        if (!at_line_start(resolved_text, ub)) return std::nullopt;
        if (ue != resolved_text.size() && !at_line_start(resolved_text, ue)) return std::nullopt;
        return split_region(resolved_text.substr(ub, ue - ub), terminator);
    }

}  // namespace

std::ptrdiff_t minimal_unique_prefix(std::string_view x, std::string_view y) {
    return minimal_unique_prefix<char>(std::span<const char>(x.data(), x.size()),
                                       std::span<const char>(y.data(), y.size()));
}

std::optional<Lines> localize_res_region(std::string_view conflict_text, std::string_view resolved_text,
                                         std::size_t index) {
    auto parsed = parse_conflicts_with_spans(conflict_text);
    if (index >= parsed.spans.size()) return std::nullopt;
    return localize_span(conflict_text, resolved_text, parsed.spans[index], parsed.document.terminator);
}

TupleVerdict classify_tuple(const Lines& a, const Lines& b, const Lines& o, const Lines& r) {
    if (r == a || r == b || r == o) return TupleVerdict::trivial;
    std::set<std::string_view> allowed(a.begin(), a.end());
    allowed.insert(b.begin(), b.end());
    for (const auto& line : r) {
        if (!allowed.contains(line)) return TupleVerdict::new_code;
    }
    return TupleVerdict::kept;
}

LocalizeStats& LocalizeStats::operator+=(const LocalizeStats& o) {
    regions += o.regions;
    ambiguous += o.ambiguous;
    trivial += o.trivial;
    new_code += o.new_code;
    kept += o.kept;
    return *this;
}

std::vector<MergeTuple> localize_merge_tuples(std::string_view conflict_text, std::string_view resolved_text,
                                              const Provenance& provenance, std::size_t context_lines,
                                              LocalizeStats& stats) {
    auto parsed = parse_conflicts_with_spans(conflict_text);
    const auto& segments = parsed.document.segments;

    std::vector<MergeTuple> out;
    std::size_t ordinal = 0;
    for (std::size_t s = 0; s < segments.size(); ++s) {
        const auto* region = std::get_if<ConflictRegion>(&segments[s]);
        if (region == nullptr) continue;
        const std::size_t index = ordinal++;
        ++stats.regions;

        auto r = localize_span(conflict_text, resolved_text, parsed.spans[index], parsed.document.terminator);
        if (!r) {
            ++stats.ambiguous;
            continue;
        }
        switch (classify_tuple(region->a_lines, region->b_lines, region->o_lines, *r)) {
            case TupleVerdict::trivial: ++stats.trivial; continue;
            case TupleVerdict::new_code: ++stats.new_code; continue;
            case TupleVerdict::kept: break;
        }
        ++stats.kept;

        MergeTuple t;
        t.a = region->a_lines;
        t.b = region->b_lines;
        t.o = region->o_lines;
        t.r = std::move(*r);
        t.conflict_index = index;
        if (s > 0) {
            if (const auto* p = std::get_if<PlainSegment>(&segments[s - 1])) t.context_prefix = tail(p->lines, context_lines);
        }
        if (s + 1 < segments.size()) {
            if (const auto* p = std::get_if<PlainSegment>(&segments[s + 1])) t.context_suffix = head(p->lines, context_lines);
        }
        t.provenance = provenance;
        out.push_back(std::move(t));
    }
    return out;
}

std::vector<MergeTuple> localize_merge_tuples(std::string_view conflict_text, std::string_view resolved_text,
                                              const Provenance& provenance, std::size_t context_lines) {
    LocalizeStats stats;
    return localize_merge_tuples(conflict_text, resolved_text, provenance, context_lines, stats);
}

}  // namespace mergesynth
