#pragma once

#include "mergesynth/text_merge.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace mergesynth {

using TokenId = std::int32_t;
using TokenSeq = std::vector<TokenId>;

/// Byte-pair-encoding vocabulary. Ids 0..2 are PAD, NEWLINE and UNK, ids
/// 3..258 are the 256 bytes, and learned tokens follow in merge order.
/// NEWLINE never takes part in a merge.
class Vocabulary {
public:
    static constexpr TokenId pad = 0;
    static constexpr TokenId newline = 1;
    static constexpr TokenId unk = 2;
    static constexpr TokenId first_byte = 3;
    static constexpr std::size_t base_size = 3 + 256;

    struct MergeRule {
        TokenId left;
        TokenId right;
        TokenId result;
        bool operator==(const MergeRule&) const = default;
    };

    /// Byte alphabet only, no merges.
    Vocabulary();

    std::size_t size() const { return tokens_.size(); }
    const std::vector<MergeRule>& rules() const { return rules_; }

    /// Surface bytes of a token; specials render as "<pad>", "\n", "<unk>".
    const std::string& token_text(TokenId id) const;
    TokenId byte_token(unsigned char c) const { return first_byte + c; }

    TokenSeq encode(const Lines& lines) const;
    /// Inverse of encode; PAD is dropped and UNK renders as U+FFFD. An empty
    /// token sequence decodes to no lines.
    Lines decode(std::span<const TokenId> tokens) const;

    std::string to_json() const;
    static Vocabulary from_json(std::string_view text);
    void save(const std::filesystem::path& path) const;
    static Vocabulary load(const std::filesystem::path& path);

    bool operator==(const Vocabulary& o) const { return rules_ == o.rules_; }

    /// Registers a learned rule. The result token is new unless the
    /// concatenation already exists.
    void add_rule(TokenId left, TokenId right);

private:
    void encode_chunk(std::string_view chunk, TokenSeq& out) const;

    std::vector<std::string> tokens_;
    std::map<std::string, TokenId> ids_;
    std::vector<MergeRule> rules_;
    std::map<std::pair<TokenId, TokenId>, std::size_t> rank_;
};

/// Splits a line into runs of word characters, whitespace, or punctuation.
/// Merges never cross chunk boundaries.
std::vector<std::string_view> pretokenize(std::string_view line);

/// Greedy most-frequent-pair merging until the vocabulary holds
/// `target_size` tokens or no pair occurs twice. Ties go to the
/// lexicographically smallest (left, right) surface pair. Throws EmptyCorpus,
/// and std::invalid_argument when target_size <= Vocabulary::base_size.
Vocabulary train_bpe(const std::vector<Lines>& corpus, std::size_t target_size);

inline constexpr std::size_t k_default_vocab_size = 2000;

}  // namespace mergesynth
