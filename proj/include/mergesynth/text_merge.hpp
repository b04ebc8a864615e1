#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace mergesynth {

using Lines = std::vector<std::string>;

enum class LineEnding { lf, crlf };

/// A text file as lines without terminators. The terminator convention is
/// uniform per document; `final_newline` records whether the last line was
/// terminated so that to_text(from_text(x)) == x for every byte string x.
struct TextDocument {
    Lines lines;
    LineEnding terminator = LineEnding::lf;
    bool final_newline = true;

    static TextDocument from_text(std::string_view text);
    std::string to_text() const;

    bool operator==(const TextDocument&) const = default;
};

struct ConflictRegion {
    Lines a_lines;
    Lines o_lines;
    Lines b_lines;
    std::string a_label;
    std::string o_label;
    std::string b_label;

    bool operator==(const ConflictRegion&) const = default;
};

struct PlainSegment {
    Lines lines;
    bool operator==(const PlainSegment&) const = default;
};

using Segment = std::variant<PlainSegment, ConflictRegion>;

struct ConflictDocument {
    std::vector<Segment> segments;
    LineEnding terminator = LineEnding::lf;
    bool final_newline = true;

    std::size_t conflict_count() const;
    bool is_clean() const { return conflict_count() == 0; }
    std::vector<const ConflictRegion*> conflicts() const;

    /// Plain lines only. Valid as a merge result when the document is clean.
    Lines plain_lines() const;

    bool operator==(const ConflictDocument&) const = default;
};

struct MergeLabels {
    std::string a = "a";
    std::string o = "base";
    std::string b = "b";
};

/// One aligned diff3 slot. Stable slots carry identical lines on all three
/// sides; the others carry each side's lines for the slot.
struct MergeSlot {
    enum class Kind { stable, changed_a, changed_b, changed_both_same, conflict };
    Kind kind;
    Lines a_lines;
    Lines o_lines;
    Lines b_lines;
};

std::vector<MergeSlot> diff3_slots(const Lines& a, const Lines& o, const Lines& b);

/// Line-based three-way merge with diff3 semantics.
ConflictDocument diff3_merge(const TextDocument& a, const TextDocument& o, const TextDocument& b,
                             const MergeLabels& labels = {});

struct ByteSpan {
    std::size_t begin = 0;
    std::size_t end = 0;
};

struct ParsedConflicts {
    ConflictDocument document;
    /// Per conflict region: bytes from the start of its "<<<<<<<" line to
    /// just past the terminator of its ">>>>>>>" line.
    std::vector<ByteSpan> spans;
};

/// Accepts 6- or 7-character markers. Throws MalformedMarkers.
ParsedConflicts parse_conflicts_with_spans(std::string_view text);
ConflictDocument parse_conflicts(std::string_view text);

/// Emits 7-character markers, "<<<<<<< label" (bare marker if the label is
/// empty). Byte-identical round trip with parse_conflicts for such input.
std::string serialize(const ConflictDocument& doc);

}  // namespace mergesynth
