#pragma once

#include "mergesynth/align.hpp"
#include "mergesynth/bpe.hpp"
#include "mergesynth/localize.hpp"

#include <Eigen/Dense>

#include <span>
#include <string_view>
#include <vector>

namespace mergesynth {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// How (A, B, O) become one encoder input matrix.
enum class Representation { naive, linearized, ltre, aligned_naive, aligned_linearized };

std::string_view to_string(Representation r);
/// Throws std::invalid_argument.
Representation representation_from_string(std::string_view s);

/// Number of linearize parameters (s + 1), zero for concatenating modes.
std::size_t theta_size(Representation r);

/// Column n is column tokens[n] of the table. Throws IndexOutOfVocabulary.
Matrix embed(std::span<const TokenId> tokens, const Matrix& table);

/// Horizontal concatenation in argument order. Throws ShapeMismatch.
Matrix concat(std::span<const Matrix> parts);

/// theta[0] * parts[0] + ... + theta[s-1] * parts[s-1] + theta[s], pointwise.
/// Throws ShapeMismatch on unequal shapes or theta.size() != s + 1.
Matrix linearize(std::span<const Matrix> parts, std::span<const double> theta);

struct TokenizedTuple {
    TokenSeq a;
    TokenSeq b;
    TokenSeq o;
};

TokenizedTuple tokenize(const Lines& a, const Lines& b, const Lines& o, const Vocabulary& vocab);

/// An index stream into either the token table or the edit-symbol table.
struct Stream {
    bool edit = false;
    std::vector<TokenId> ids;
};

/// The equal-length streams a representation combines, in combination order.
struct Assembly {
    Representation mode = Representation::aligned_linearized;
    std::vector<Stream> streams;
    std::size_t length = 0;

    bool linear() const;
    std::size_t columns() const { return linear() ? length : length * streams.size(); }
};

/// NAIVE / LINEARIZED pad A, B, O with PAD to the longest; aligned modes use
/// align_merge. LTRE order: dAO, A', AO', dBO, B', BO'.
Assembly assemble(const TokenizedTuple& tuple, Representation mode);

struct InputMatrix {
    Matrix values;
    Representation mode = Representation::aligned_linearized;
};

InputMatrix represent(const Assembly& assembly, const Matrix& token_table, const Matrix& edit_table,
                      const Matrix& theta);

/// Accumulates d(loss)/d(tables, theta) given d(loss)/d(values).
void represent_backward(const Assembly& assembly, const Matrix& d_values, const Matrix& token_table,
                        const Matrix& edit_table, const Matrix& theta, Matrix& d_token_table, Matrix& d_edit_table,
                        Matrix& d_theta);

}  // namespace mergesynth
