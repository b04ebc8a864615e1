#include "mergesynth/text_merge.hpp"

#include "mergesynth/errors.hpp"
#include "mergesynth/lcs.hpp"

#include <algorithm>
#include <cstdint>
#include <optional>
#include <unordered_map>

namespace mergesynth {

namespace {

    struct RawLine {
        std::string_view text;  // excludes terminator
        std::size_t begin = 0;  // byte offset of first char
        std::size_t end = 0;    // byte offset past terminator
    };

    struct SplitText {
        std::vector<RawLine> lines;
        LineEnding terminator = LineEnding::lf;
        bool final_newline = true;
    };

    SplitText split_text(std::string_view text) {
        SplitText out;
        std::size_t pos = 0;
        std::size_t terminated = 0;
        std::size_t crlf = 0;
        while (pos < text.size()) {
            auto nl = text.find('\n', pos);
            if (nl == std::string_view::npos) {
                out.lines.push_back({text.substr(pos), pos, text.size()});
                break;
            }
            ++terminated;
            if (nl > pos && text[nl - 1] == '\r') ++crlf;
            out.lines.push_back({text.substr(pos, nl - pos), pos, nl + 1});
            pos = nl + 1;
        }
        out.final_newline = text.empty() || text.back() == '\n';
        if (terminated > 0 && crlf == terminated) {
            out.terminator = LineEnding::crlf;
            for (auto& l : out.lines) {
                if (l.end <= text.size() && l.end > l.begin && text[l.end - 1] == '\n') {
                    l.text.remove_suffix(1);
                }
            }
        }
        return out;
    }

    std::string_view terminator_text(LineEnding e) { return e == LineEnding::crlf ? "\r\n" : "\n"; }

    enum class Marker { none, begin, base, separator, end };

    // Label is the text after "<marker> ", empty for a bare marker.
    Marker classify(std::string_view line, std::string& label) {
        auto try_marker = [&](char c, bool labelled) -> bool {
            for (std::size_t width : {std::size_t{7}, std::size_t{6}}) {
                if (line.size() < width) continue;
                if (line.find_first_not_of(c) < width) continue;
                if (line.size() == width) {
                    label.clear();
                    return true;
                }
                if (labelled && line[width] == ' ') {
                    label.assign(line.substr(width + 1));
                    return true;
                }
                // 7-char prefix followed by more marker chars is not a marker
                return false;
            }
            return false;
        };
        if (line.empty()) return Marker::none;
        switch (line.front()) {
            case '<': return try_marker('<', true) ? Marker::begin : Marker::none;
            case '|': return try_marker('|', true) ? Marker::base : Marker::none;
            case '=': return try_marker('=', false) ? Marker::separator : Marker::none;
            case '>': return try_marker('>', true) ? Marker::end : Marker::none;
            default: return Marker::none;
        }
    }

    void append_plain(std::vector<Segment>& segments, const Lines& lines) {
        if (lines.empty()) return;
        if (!segments.empty()) {
            if (auto* p = std::get_if<PlainSegment>(&segments.back())) {
                p->lines.insert(p->lines.end(), lines.begin(), lines.end());
                return;
            }
        }
        segments.push_back(PlainSegment{lines});
    }

    // Above this many DP cells the common suffix is trimmed as well, trading
    // strict leftmost tie-breaking on trailing repeats for bounded memory.
    constexpr std::size_t k_dp_cell_budget = 16'000'000;

    // Index pairs (o index, x index) of a line-level LCS between base and
    // variant.
    std::vector<MatchedPair> match_lines(const std::vector<std::uint32_t>& o,
                                         const std::vector<std::uint32_t>& x) {
        std::vector<MatchedPair> out;
        std::size_t prefix = 0;
        while (prefix < o.size() && prefix < x.size() && o[prefix] == x[prefix]) {
            out.push_back({prefix, prefix});
            ++prefix;
        }
        std::size_t o_end = o.size();
        std::size_t x_end = x.size();
        std::vector<MatchedPair> tail;
        if ((o_end - prefix) * (x_end - prefix) > k_dp_cell_budget) {
            while (o_end > prefix && x_end > prefix && o[o_end - 1] == x[x_end - 1]) {
                --o_end;
                --x_end;
                tail.push_back({o_end, x_end});
            }
        }
        std::span<const std::uint32_t> os(o.data() + prefix, o_end - prefix);
        std::span<const std::uint32_t> xs(x.data() + prefix, x_end - prefix);
        for (auto m : lcs_matches(os, xs)) out.push_back({m.first + prefix, m.second + prefix});
        out.insert(out.end(), tail.rbegin(), tail.rend());
        return out;
    }

    Lines slice(const Lines& v, std::size_t from, std::size_t to) {
        return Lines(v.begin() + static_cast<std::ptrdiff_t>(from), v.begin() + static_cast<std::ptrdiff_t>(to));
    }

}  // namespace

TextDocument TextDocument::from_text(std::string_view text) {
    auto split = split_text(text);
    TextDocument doc;
    doc.terminator = split.terminator;
    doc.final_newline = split.final_newline;
    doc.lines.reserve(split.lines.size());
    for (const auto& l : split.lines) doc.lines.emplace_back(l.text);
    return doc;
}

std::string TextDocument::to_text() const {
    std::string out;
    auto term = terminator_text(terminator);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        out += lines[i];
        if (i + 1 < lines.size() || final_newline) out += term;
    }
    return out;
}

std::size_t ConflictDocument::conflict_count() const {
    return static_cast<std::size_t>(std::count_if(segments.begin(), segments.end(), [](const Segment& s) {
        return std::holds_alternative<ConflictRegion>(s);
    }));
}

std::vector<const ConflictRegion*> ConflictDocument::conflicts() const {
    std::vector<const ConflictRegion*> out;
    for (const auto& s : segments) {
        if (const auto* c = std::get_if<ConflictRegion>(&s)) out.push_back(c);
    }
    return out;
}

Lines ConflictDocument::plain_lines() const {
    Lines out;
    for (const auto& s : segments) {
        if (const auto* p = std::get_if<PlainSegment>(&s)) out.insert(out.end(), p->lines.begin(), p->lines.end());
    }
    return out;
}

std::vector<MergeSlot> diff3_slots(const Lines& a, const Lines& o, const Lines& b) {
    std::unordered_map<std::string_view, std::uint32_t> ids;
    auto intern = [&](const Lines& lines) {
        std::vector<std::uint32_t> out;
        out.reserve(lines.size());
        for (const auto& l : lines) {
            auto [it, inserted] = ids.try_emplace(l, static_cast<std::uint32_t>(ids.size()));
            out.push_back(it->second);
        }
        return out;
    };
    auto ai = intern(a);
    auto oi = intern(o);
    auto bi = intern(b);

    constexpr std::size_t none = static_cast<std::size_t>(-1);
    std::vector<std::size_t> to_a(o.size(), none), to_b(o.size(), none);
    for (auto m : match_lines(oi, ai)) to_a[m.first] = m.second;
    for (auto m : match_lines(oi, bi)) to_b[m.first] = m.second;

    std::vector<MergeSlot> slots;
    std::size_t io = 0, ia = 0, ib = 0;
    while (io < o.size() || ia < a.size() || ib < b.size()) {
        if (io < o.size() && to_a[io] == ia && to_b[io] == ib) {
            // extend the stable run
            std::size_t k = 0;
            while (io + k < o.size() && to_a[io + k] == ia + k && to_b[io + k] == ib + k) ++k;
            slots.push_back({MergeSlot::Kind::stable, slice(a, ia, ia + k), slice(o, io, io + k), slice(b, ib, ib + k)});
            io += k;
            ia += k;
            ib += k;
            continue;
        }
        std::size_t jo = io;
        while (jo < o.size() && (to_a[jo] == none || to_b[jo] == none)) ++jo;
        std::size_t ja = jo < o.size() ? to_a[jo] : a.size();
        std::size_t jb = jo < o.size() ? to_b[jo] : b.size();

        MergeSlot slot{MergeSlot::Kind::conflict, slice(a, ia, ja), slice(o, io, jo), slice(b, ib, jb)};
        if (slot.a_lines == slot.o_lines) {
            slot.kind = MergeSlot::Kind::changed_b;
        } else if (slot.b_lines == slot.o_lines) {
            slot.kind = MergeSlot::Kind::changed_a;
        } else if (slot.a_lines == slot.b_lines) {
            slot.kind = MergeSlot::Kind::changed_both_same;
        }
        slots.push_back(std::move(slot));
        io = jo;
        ia = ja;
        ib = jb;
    }
    return slots;
}

ConflictDocument diff3_merge(const TextDocument& a, const TextDocument& o, const TextDocument& b,
                             const MergeLabels& labels) {
    ConflictDocument doc;
    doc.terminator = a.terminator;
    // the trailing-newline flag merges like a one-line slot
    doc.final_newline = (a.final_newline == o.final_newline) ? b.final_newline : a.final_newline;

    for (auto& slot : diff3_slots(a.lines, o.lines, b.lines)) {
        switch (slot.kind) {
            case MergeSlot::Kind::stable:
            case MergeSlot::Kind::changed_a:
            case MergeSlot::Kind::changed_both_same: append_plain(doc.segments, slot.a_lines); break;
            case MergeSlot::Kind::changed_b: append_plain(doc.segments, slot.b_lines); break;
            case MergeSlot::Kind::conflict:
                doc.segments.push_back(ConflictRegion{std::move(slot.a_lines), std::move(slot.o_lines),
                                                      std::move(slot.b_lines), labels.a, labels.o, labels.b});
                break;
        }
    }
    return doc;
}

ParsedConflicts parse_conflicts_with_spans(std::string_view text) {
    auto split = split_text(text);
    ParsedConflicts out;
    out.document.terminator = split.terminator;
    out.document.final_newline = split.final_newline;

    enum class State { outside, in_a, in_o, in_b };
    State state = State::outside;
    Lines plain;
    ConflictRegion region;
    std::size_t region_begin = 0;
    std::size_t region_line = 0;
    std::string label;

    for (std::size_t n = 0; n < split.lines.size(); ++n) {
        const auto& raw = split.lines[n];
        const std::size_t line_no = n + 1;
        Marker m = classify(raw.text, label);
        switch (m) {
            case Marker::none:
                switch (state) {
                    case State::outside: plain.emplace_back(raw.text); break;
                    case State::in_a: region.a_lines.emplace_back(raw.text); break;
                    case State::in_o: region.o_lines.emplace_back(raw.text); break;
                    case State::in_b: region.b_lines.emplace_back(raw.text); break;
                }
                break;
            case Marker::begin:
                if (state != State::outside) throw MalformedMarkers(line_no, "nested '<<<<<<<' marker");
                append_plain(out.document.segments, plain);
                plain.clear();
                region = ConflictRegion{};
                region.a_label = label;
                region_begin = raw.begin;
                region_line = line_no;
                state = State::in_a;
                break;
            case Marker::base:
                if (state != State::in_a) throw MalformedMarkers(line_no, "'|||||||' marker outside side A");
                region.o_label = label;
                state = State::in_o;
                break;
            case Marker::separator:
                if (state != State::in_o) throw MalformedMarkers(line_no, "'=======' marker without preceding base section");
                state = State::in_b;
                break;
            case Marker::end:
                if (state != State::in_b) throw MalformedMarkers(line_no, "'>>>>>>>' marker without '======='");
                region.b_label = label;
                out.document.segments.push_back(std::move(region));
                out.spans.push_back({region_begin, raw.end});
                state = State::outside;
                break;
        }
    }
    if (state != State::outside) throw MalformedMarkers(region_line, "unterminated conflict region");
    append_plain(out.document.segments, plain);
    return out;
}

ConflictDocument parse_conflicts(std::string_view text) { return parse_conflicts_with_spans(text).document; }

std::string serialize(const ConflictDocument& doc) {
    Lines all;
    auto marker = [](std::string_view m, const std::string& label) {
        return label.empty() ? std::string(m) : std::string(m) + " " + label;
    };
    for (const auto& s : doc.segments) {
        if (const auto* p = std::get_if<PlainSegment>(&s)) {
            all.insert(all.end(), p->lines.begin(), p->lines.end());
        } else {
            const auto& c = std::get<ConflictRegion>(s);
            all.push_back(marker("<<<<<<<", c.a_label));
            all.insert(all.end(), c.a_lines.begin(), c.a_lines.end());
            all.push_back(marker("|||||||", c.o_label));
            all.insert(all.end(), c.o_lines.begin(), c.o_lines.end());
            all.emplace_back("=======");
            all.insert(all.end(), c.b_lines.begin(), c.b_lines.end());
            all.push_back(marker(">>>>>>>", c.b_label));
        }
    }
    TextDocument t{std::move(all), doc.terminator, doc.final_newline};
    return t.to_text();
}

}  // namespace mergesynth
