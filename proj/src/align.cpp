#include "mergesynth/align.hpp"

#include "mergesynth/lcs.hpp"

#include <stdexcept>

namespace mergesynth {

namespace {

    constexpr char k_symbol_chars[k_edit_symbol_count] = {'=', '+', '-', '^', '.', '|'};

    void emit_gap(AlignedPair& out, std::span<const TokenId> base_gap, std::span<const TokenId> variant_gap) {
        const std::size_t fused = std::min(base_gap.size(), variant_gap.size());
        for (std::size_t k = 0; k < fused; ++k) {
            out.variant_padded.push_back(variant_gap[k]);
            out.base_padded.push_back(base_gap[k]);
            out.delta.push_back(EditSymbol::repl);
        }
        for (std::size_t k = fused; k < base_gap.size(); ++k) {
            out.variant_padded.push_back(Vocabulary::pad);
            out.base_padded.push_back(base_gap[k]);
            out.delta.push_back(EditSymbol::del);
        }
        for (std::size_t k = fused; k < variant_gap.size(); ++k) {
            out.variant_padded.push_back(variant_gap[k]);
            out.base_padded.push_back(Vocabulary::pad);
            out.delta.push_back(EditSymbol::ins);
        }
    }

    void pad_to(AlignedPair& p, std::size_t length) {
        p.variant_padded.resize(length, Vocabulary::pad);
        p.base_padded.resize(length, Vocabulary::pad);
        p.delta.resize(length, EditSymbol::pad);
    }

}  // namespace

std::string to_string(const EditSequence& delta) {
    std::string out;
    out.reserve(delta.size());
    for (auto s : delta) out.push_back(k_symbol_chars[static_cast<std::size_t>(s)]);
    return out;
}

EditSequence edit_sequence_from_string(std::string_view s) {
    EditSequence out;
    for (char c : s) {
        std::size_t k = 0;
        while (k < k_edit_symbol_count && k_symbol_chars[k] != c) ++k;
        if (k == k_edit_symbol_count) throw std::invalid_argument(std::string("unknown edit symbol '") + c + "'");
        out.push_back(static_cast<EditSymbol>(k));
    }
    return out;
}

AlignedPair align_two_way(std::span<const TokenId> variant, std::span<const TokenId> base) {
    AlignedPair out;
    std::size_t bi = 0, vi = 0;
    for (auto m : lcs_matches(base, variant)) {
        emit_gap(out, base.subspan(bi, m.first - bi), variant.subspan(vi, m.second - vi));
        const TokenId t = variant[m.second];
        out.variant_padded.push_back(t);
        out.base_padded.push_back(t);
        out.delta.push_back(t == Vocabulary::newline ? EditSymbol::nl : EditSymbol::eq);
        bi = m.first + 1;
        vi = m.second + 1;
    }
    emit_gap(out, base.subspan(bi), variant.subspan(vi));
    return out;
}

std::pair<AlignedPair, AlignedPair> align_merge(std::span<const TokenId> a, std::span<const TokenId> b,
                                                std::span<const TokenId> o) {
    auto ao = align_two_way(a, o);
    auto bo = align_two_way(b, o);
    const std::size_t length = std::max(ao.delta.size(), bo.delta.size());
    pad_to(ao, length);
    pad_to(bo, length);
    return {std::move(ao), std::move(bo)};
}

std::size_t edit_cost(const EditSequence& delta) {
    std::size_t cost = 0;
    for (auto s : delta) {
        if (s == EditSymbol::ins || s == EditSymbol::del) cost += 1;
        if (s == EditSymbol::repl) cost += 2;
    }
    return cost;
}

}  // namespace mergesynth
