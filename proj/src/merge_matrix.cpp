#include "mergesynth/merge_matrix.hpp"

#include "mergesynth/errors.hpp"

#include <stdexcept>
#include <string>

namespace mergesynth {

namespace {

    constexpr std::pair<Representation, std::string_view> k_names[] = {
        {Representation::naive, "naive"},
        {Representation::linearized, "linearized"},
        {Representation::ltre, "ltre"},
        {Representation::aligned_naive, "aligned_naive"},
        {Representation::aligned_linearized, "aligned_linearized"},
    };

    std::vector<TokenId> to_ids(const EditSequence& delta) {
        std::vector<TokenId> out;
        out.reserve(delta.size());
        for (auto s : delta) out.push_back(static_cast<TokenId>(s));
        return out;
    }

    TokenSeq padded(const TokenSeq& s, std::size_t length) {
        TokenSeq out = s;
        out.resize(length, Vocabulary::pad);
        return out;
    }

    const Matrix& table_for(const Stream& s, const Matrix& token_table, const Matrix& edit_table) {
        return s.edit ? edit_table : token_table;
    }

}  // namespace

std::string_view to_string(Representation r) {
    for (const auto& [k, name] : k_names) {
        if (k == r) return name;
    }
    return "aligned_linearized";
}

Representation representation_from_string(std::string_view s) {
    for (const auto& [k, name] : k_names) {
        if (name == s) return k;
    }
    throw std::invalid_argument("unknown representation '" + std::string(s) + "'");
}

std::size_t theta_size(Representation r) {
    switch (r) {
        case Representation::linearized: return 4;
        case Representation::aligned_linearized: return 3;
        default: return 0;
    }
}

Matrix embed(std::span<const TokenId> tokens, const Matrix& table) {
    Matrix out(table.rows(), static_cast<Eigen::Index>(tokens.size()));
    for (std::size_t n = 0; n < tokens.size(); ++n) {
        const auto t = tokens[n];
        if (t < 0 || t >= table.cols()) {
            throw IndexOutOfVocabulary("token index " + std::to_string(t) + " outside table of " +
                                       std::to_string(table.cols()) + " columns");
        }
        out.col(static_cast<Eigen::Index>(n)) = table.col(t);
    }
    return out;
}

Matrix concat(std::span<const Matrix> parts) {
    if (parts.empty()) return Matrix(0, 0);
    Eigen::Index cols = 0;
    for (const auto& p : parts) {
        if (p.rows() != parts[0].rows() || p.cols() != parts[0].cols()) {
            throw ShapeMismatch("concat: parts must share one shape");
        }
        cols += p.cols();
    }
    Matrix out(parts[0].rows(), cols);
    Eigen::Index at = 0;
    for (const auto& p : parts) {
        out.middleCols(at, p.cols()) = p;
        at += p.cols();
    }
    return out;
}

Matrix linearize(std::span<const Matrix> parts, std::span<const double> theta) {
    if (parts.empty()) throw ShapeMismatch("linearize: no parts");
    if (theta.size() != parts.size() + 1) throw ShapeMismatch("linearize: theta must hold s + 1 values");
    Matrix out = Matrix::Constant(parts[0].rows(), parts[0].cols(), theta[parts.size()]);
    for (std::size_t k = 0; k < parts.size(); ++k) {
        if (parts[k].rows() != out.rows() || parts[k].cols() != out.cols()) {
            throw ShapeMismatch("linearize: parts must share one shape");
        }
        out += theta[k] * parts[k];
    }
    return out;
}

TokenizedTuple tokenize(const Lines& a, const Lines& b, const Lines& o, const Vocabulary& vocab) {
    return {vocab.encode(a), vocab.encode(b), vocab.encode(o)};
}

bool Assembly::linear() const {
    return mode == Representation::linearized || mode == Representation::aligned_linearized;
}

Assembly assemble(const TokenizedTuple& t, Representation mode) {
    Assembly out;
    out.mode = mode;
    switch (mode) {
        case Representation::naive:
        case Representation::linearized: {
            out.length = std::max({t.a.size(), t.b.size(), t.o.size()});
            for (const auto* s : {&t.a, &t.b, &t.o}) out.streams.push_back({false, padded(*s, out.length)});
            break;
        }
        case Representation::aligned_naive:
        case Representation::aligned_linearized: {
            auto [ao, bo] = align_merge(t.a, t.b, t.o);
            out.length = ao.delta.size();
            out.streams.push_back({true, to_ids(ao.delta)});
            out.streams.push_back({true, to_ids(bo.delta)});
            break;
        }
        case Representation::ltre: {
            auto [ao, bo] = align_merge(t.a, t.b, t.o);
            out.length = ao.delta.size();
            out.streams.push_back({true, to_ids(ao.delta)});
            out.streams.push_back({false, std::move(ao.variant_padded)});
            out.streams.push_back({false, std::move(ao.base_padded)});
            out.streams.push_back({true, to_ids(bo.delta)});
            out.streams.push_back({false, std::move(bo.variant_padded)});
            out.streams.push_back({false, std::move(bo.base_padded)});
            break;
        }
    }
    return out;
}

InputMatrix represent(const Assembly& assembly, const Matrix& token_table, const Matrix& edit_table,
                      const Matrix& theta) {
    std::vector<Matrix> parts;
    parts.reserve(assembly.streams.size());
    for (const auto& s : assembly.streams) parts.push_back(embed(s.ids, table_for(s, token_table, edit_table)));
    InputMatrix out;
    out.mode = assembly.mode;
    if (assembly.linear()) {
        out.values = linearize(parts, std::span<const double>(theta.data(), static_cast<std::size_t>(theta.size())));
    } else {
        out.values = concat(parts);
    }
    return out;
}

void represent_backward(const Assembly& assembly, const Matrix& d_values, const Matrix& token_table,
                        const Matrix& edit_table, const Matrix& theta, Matrix& d_token_table, Matrix& d_edit_table,
                        Matrix& d_theta) {
    const auto length = static_cast<Eigen::Index>(assembly.length);
    if (assembly.linear()) {
        const auto s = static_cast<Eigen::Index>(assembly.streams.size());
        d_theta(s, 0) += d_values.sum();
        for (Eigen::Index k = 0; k < s; ++k) {
            const auto& stream = assembly.streams[static_cast<std::size_t>(k)];
            const Matrix& table = table_for(stream, token_table, edit_table);
            Matrix& d_table = stream.edit ? d_edit_table : d_token_table;
            for (Eigen::Index n = 0; n < length; ++n) {
                const auto id = stream.ids[static_cast<std::size_t>(n)];
                d_theta(k, 0) += d_values.col(n).dot(table.col(id));
                d_table.col(id) += theta(k, 0) * d_values.col(n);
            }
        }
        return;
    }
    Eigen::Index at = 0;
    for (const auto& stream : assembly.streams) {
        Matrix& d_table = stream.edit ? d_edit_table : d_token_table;
        for (Eigen::Index n = 0; n < length; ++n) d_table.col(stream.ids[static_cast<std::size_t>(n)]) += d_values.col(at + n);
        at += length;
    }
}

}  // namespace mergesynth
