#include "mergesynth/bpe.hpp"

#include "mergesynth/errors.hpp"

#include <json.hpp>

#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace mergesynth {

using nlohmann::json;

namespace {

    enum class CharClass { word, space, punct };

    CharClass class_of(unsigned char c) {
        if (c >= 0x80 || c == '_' || (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z')) {
            return CharClass::word;
        }
        if (c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v') return CharClass::space;
        return CharClass::punct;
    }

    const std::string k_format = "mergesynth-bpe";

}  // namespace

std::vector<std::string_view> pretokenize(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (std::size_t i = 1; i <= line.size(); ++i) {
        if (i == line.size() || class_of(static_cast<unsigned char>(line[i])) !=
                                    class_of(static_cast<unsigned char>(line[start]))) {
            out.push_back(line.substr(start, i - start));
            start = i;
        }
    }
    return out;
}

Vocabulary::Vocabulary() {
    tokens_ = {"<pad>", "\n", "<unk>"};
    for (int c = 0; c < 256; ++c) {
        tokens_.emplace_back(1, static_cast<char>(c));
        ids_.emplace(tokens_.back(), static_cast<TokenId>(tokens_.size() - 1));
    }
}

const std::string& Vocabulary::token_text(TokenId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) return tokens_[unk];
    return tokens_[static_cast<std::size_t>(id)];
}

void Vocabulary::add_rule(TokenId left, TokenId right) {
    auto valid = [&](TokenId t) { return t >= first_byte && static_cast<std::size_t>(t) < tokens_.size(); };
    if (!valid(left) || !valid(right)) throw DataError("merge rule references an unknown or special token");
    if (rank_.contains({left, right})) throw DataError("duplicate merge rule");
    std::string joined = tokens_[left] + tokens_[right];
    auto [it, inserted] = ids_.try_emplace(joined, static_cast<TokenId>(tokens_.size()));
    if (inserted) tokens_.push_back(std::move(joined));
    rank_.emplace(std::pair{left, right}, rules_.size());
    rules_.push_back({left, right, it->second});
}

void Vocabulary::encode_chunk(std::string_view chunk, TokenSeq& out) const {
    TokenSeq sym;
    sym.reserve(chunk.size());
    for (unsigned char c : chunk) sym.push_back(byte_token(c));
    while (sym.size() > 1) {
        std::size_t best = std::numeric_limits<std::size_t>::max();
        for (std::size_t i = 0; i + 1 < sym.size(); ++i) {
            auto it = rank_.find({sym[i], sym[i + 1]});
            if (it != rank_.end() && it->second < best) best = it->second;
        }
        if (best == std::numeric_limits<std::size_t>::max()) break;
        const auto& rule = rules_[best];
        std::size_t w = 0;
        for (std::size_t i = 0; i < sym.size();) {
            if (i + 1 < sym.size() && sym[i] == rule.left && sym[i + 1] == rule.right) {
                sym[w++] = rule.result;
                i += 2;
            } else {
                sym[w++] = sym[i++];
            }
        }
        sym.resize(w);
    }
    out.insert(out.end(), sym.begin(), sym.end());
}

TokenSeq Vocabulary::encode(const Lines& lines) const {
    TokenSeq out;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (i > 0) out.push_back(newline);
        for (auto chunk : pretokenize(lines[i])) encode_chunk(chunk, out);
    }
    return out;
}

Lines Vocabulary::decode(std::span<const TokenId> tokens) const {
    Lines out;
    if (tokens.empty()) return out;
    out.emplace_back();
    for (auto t : tokens) {
        if (t == newline) {
            out.emplace_back();
        } else if (t == pad) {
            continue;
        } else if (t == unk || t < 0 || static_cast<std::size_t>(t) >= tokens_.size()) {
            out.back() += "\xEF\xBF\xBD";
        } else {
            out.back() += tokens_[static_cast<std::size_t>(t)];
        }
    }
    return out;
}

std::string Vocabulary::to_json() const {
    json rules = json::array();
    for (const auto& r : rules_) rules.push_back({r.left, r.right});
    json j;
    j["format"] = k_format;
    j["version"] = 1;
    j["specials"] = {"<pad>", "<nl>", "<unk>"};
    j["merges"] = std::move(rules);
    return j.dump();
}

Vocabulary Vocabulary::from_json(std::string_view text) {
    try {
        auto j = json::parse(text);
        if (j.at("format").get<std::string>() != k_format) throw DataError("not a vocabulary file");
        if (j.at("version").get<int>() != 1) throw DataError("unsupported vocabulary version");
        Vocabulary v;
        for (const auto& r : j.at("merges")) v.add_rule(r.at(0).get<TokenId>(), r.at(1).get<TokenId>());
        return v;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed vocabulary: ") + e.what());
    }
}

void Vocabulary::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << to_json();
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

Vocabulary train_bpe(const std::vector<Lines>& corpus, std::size_t target_size) {
    if (target_size <= Vocabulary::base_size) {
        throw std::invalid_argument("target vocabulary size must exceed the " + std::to_string(Vocabulary::base_size) +
                                    " base symbols");
    }
    std::map<std::string, std::size_t> chunk_counts;
    bool any = false;
    for (const auto& doc : corpus) {
        for (const auto& line : doc) {
            any = any || !line.empty();
            for (auto chunk : pretokenize(line)) ++chunk_counts[std::string(chunk)];
        }
    }
    if (!any) throw EmptyCorpus("BPE training corpus has no text");

    Vocabulary vocab;
    struct Word {
        TokenSeq symbols;
        std::size_t count;
    };
    std::vector<Word> words;
    for (const auto& [chunk, count] : chunk_counts) {
        Word w{{}, count};
        for (unsigned char c : chunk) w.symbols.push_back(vocab.byte_token(c));
        words.push_back(std::move(w));
    }

    while (vocab.size() < target_size) {
        std::map<std::pair<TokenId, TokenId>, std::size_t> pairs;
        for (const auto& w : words) {
            for (std::size_t i = 0; i + 1 < w.symbols.size(); ++i) pairs[{w.symbols[i], w.symbols[i + 1]}] += w.count;
        }
        const std::pair<TokenId, TokenId>* best = nullptr;
        std::size_t best_count = 0;
        for (const auto& [p, c] : pairs) {
            if (c > best_count) {
                best = &p;
                best_count = c;
            } else if (c == best_count && best != nullptr) {
                const auto& bl = vocab.token_text(best->first);
                const auto& br = vocab.token_text(best->second);
                const auto& pl = vocab.token_text(p.first);
                const auto& pr = vocab.token_text(p.second);
                if (std::tie(pl, pr) < std::tie(bl, br)) best = &p;
            }
        }
        if (best == nullptr || best_count < 2) break;
        const auto [left, right] = *best;
        vocab.add_rule(left, right);
        const TokenId result = vocab.rules().back().result;
        for (auto& w : words) {
            auto& s = w.symbols;
            std::size_t out = 0;
            for (std::size_t i = 0; i < s.size();) {
                if (i + 1 < s.size() && s[i] == left && s[i + 1] == right) {
                    s[out++] = result;
                    i += 2;
                } else {
                    s[out++] = s[i++];
                }
            }
            s.resize(out);
        }
    }
    return vocab;
}

}  // namespace mergesynth
