#pragma once

#include "mergesynth/bpe.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace mergesynth {

/// Edit kinds between a variant and the base. The underlying values index
/// the edit-symbol embedding table.
enum class EditSymbol : std::uint8_t { eq = 0, ins = 1, del = 2, repl = 3, pad = 4, nl = 5 };
inline constexpr std::size_t k_edit_symbol_count = 6;

using EditSequence = std::vector<EditSymbol>;

/// One character per symbol: = + - ^ . |
std::string to_string(const EditSequence& delta);
EditSequence edit_sequence_from_string(std::string_view s);

/// Variant and base token streams padded with Vocabulary::pad so that matched
/// tokens share a position, plus the edit sequence over those positions.
struct AlignedPair {
    TokenSeq variant_padded;
    TokenSeq base_padded;
    EditSequence delta;

    bool operator==(const AlignedPair&) const = default;
};

/// LCS alignment with leftmost tie-breaking. Between two matched tokens the
/// unmatched base tokens (DEL) precede the unmatched variant tokens (INS);
/// the two runs are fused position by position into REPL, the longer run's
/// remainder stays DEL or INS. A matched NEWLINE yields NL instead of EQ.
AlignedPair align_two_way(std::span<const TokenId> variant, std::span<const TokenId> base);

/// Both two-way alignments, with the shorter one right-padded (PAD symbol and
/// PAD tokens) to the longer length.
std::pair<AlignedPair, AlignedPair> align_merge(std::span<const TokenId> a, std::span<const TokenId> b,
                                                std::span<const TokenId> o);

/// count(INS) + count(DEL) + 2 * count(REPL).
std::size_t edit_cost(const EditSequence& delta);

}  // namespace mergesynth
