#include "mergesynth/errors.hpp"
#include "mergesynth/merge_matrix.hpp"

#include "synthetic.hpp"

#include <doctest.h>

using namespace mergesynth;

namespace {

Matrix random_matrix(Rng& rng, Eigen::Index r, Eigen::Index c) {
    Matrix m(r, c);
    for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = rng.uniform(-1, 1);
    return m;
}

}  // namespace

TEST_CASE("embed picks columns") {
    Rng rng(1);
    const Matrix table = random_matrix(rng, 3, 5);
    const std::vector<TokenId> ids = {4, 4, 0};
    const Matrix m = embed(ids, table);
    REQUIRE(m.cols() == 3);
    CHECK(m.col(0) == table.col(4));
    CHECK(m.col(1) == m.col(0));
    CHECK(m.col(2) == table.col(0));
    CHECK(embed(std::vector<TokenId>{}, table).cols() == 0);
    CHECK_THROWS_AS(embed(std::vector<TokenId>{5}, table), IndexOutOfVocabulary);
    CHECK_THROWS_AS(embed(std::vector<TokenId>{-1}, table), IndexOutOfVocabulary);
}

TEST_CASE("concat joins columns in order") {
    Rng rng(2);
    const std::vector<Matrix> parts = {random_matrix(rng, 2, 3), random_matrix(rng, 2, 3)};
    const Matrix m = concat(parts);
    CHECK(m.cols() == 6);
    CHECK(m.leftCols(3) == parts[0]);
    CHECK(m.rightCols(3) == parts[1]);
    CHECK(concat(std::span(parts.data(), 1)) == parts[0]);
    const std::vector<Matrix> bad = {Matrix::Zero(2, 3), Matrix::Zero(2, 4)};
    CHECK_THROWS_AS(concat(bad), ShapeMismatch);
}

TEST_CASE("linearize is a pointwise affine combination") {
    Rng rng(3);
    const std::vector<Matrix> parts = {random_matrix(rng, 2, 2), random_matrix(rng, 2, 2)};
    const std::vector<double> sum = {1, 1, 0};
    CHECK(linearize(parts, sum).isApprox(parts[0] + parts[1]));
    const std::vector<double> constant = {0, 0, 2.5};
    CHECK(linearize(parts, constant) == Matrix::Constant(2, 2, 2.5));

    const std::vector<double> theta = {rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};
    const Matrix m = linearize(parts, theta);
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            CHECK(m(i, j) == doctest::Approx(theta[0] * parts[0](i, j) + theta[1] * parts[1](i, j) + theta[2]).epsilon(1e-12));
        }
    }

    const double alpha = 3.25;
    const std::vector<double> no_bias = {theta[0], theta[1], 0.0};
    const std::vector<Matrix> scaled = {alpha * parts[0], alpha * parts[1]};
    CHECK(linearize(scaled, no_bias).isApprox(alpha * linearize(parts, no_bias)));

    CHECK_THROWS_AS(linearize(parts, std::vector<double>{1, 1}), ShapeMismatch);
    const std::vector<Matrix> bad = {Matrix::Zero(2, 2), Matrix::Zero(3, 2)};
    CHECK_THROWS_AS(linearize(bad, sum), ShapeMismatch);
}

TEST_CASE("representation names") {
    for (auto r : {Representation::naive, Representation::linearized, Representation::ltre,
                   Representation::aligned_naive, Representation::aligned_linearized}) {
        CHECK(representation_from_string(to_string(r)) == r);
    }
    CHECK_THROWS_AS(representation_from_string("fancy"), std::invalid_argument);
}

TEST_CASE("naive widths follow the padded length") {
    const TokenizedTuple t{{10, 11, 12}, {13}, {14, 15}};
    const auto naive = assemble(t, Representation::naive);
    CHECK(naive.length == 3);
    CHECK(naive.columns() == 9);
    CHECK(naive.streams[1].ids == std::vector<TokenId>{13, 0, 0});
    CHECK(assemble(t, Representation::linearized).columns() == 3);
}

TEST_CASE("shape law per mode") {
    Rng rng(4);
    Vocabulary vocab;
    for (int i = 0; i < 30; ++i) {
        const auto tuple = testing::random_copy_tuple(rng);
        const auto tok = tokenize(tuple.a, tuple.b, tuple.o, vocab);
        const auto [ao, bo] = align_merge(tok.a, tok.b, tok.o);
        const std::size_t delta = ao.delta.size();
        const std::size_t longest = std::max({tok.a.size(), tok.b.size(), tok.o.size()});
        const Matrix table = random_matrix(rng, 4, static_cast<Eigen::Index>(vocab.size()));
        const Matrix edits = random_matrix(rng, 4, 6);
        const std::pair<Representation, std::size_t> expected[] = {
            {Representation::naive, 3 * longest},
            {Representation::linearized, longest},
            {Representation::ltre, 6 * delta},
            {Representation::aligned_naive, 2 * delta},
            {Representation::aligned_linearized, delta},
        };
        for (const auto& [mode, n] : expected) {
            const auto assembly = assemble(tok, mode);
            const Matrix theta = Matrix::Ones(static_cast<Eigen::Index>(theta_size(mode)), 1);
            const auto m = represent(assembly, table, edits, theta);
            CHECK(m.values.cols() == static_cast<Eigen::Index>(n));
            CHECK(m.values.rows() == 4);
            CHECK(m.values.allFinite());
            CHECK(represent(assembly, table, edits, theta).values == m.values);
        }
    }
}

TEST_CASE("identical sides give two all-equal deltas") {
    Vocabulary vocab;
    const Lines x = {"a = 1", "b"};
    const auto assembly = assemble(tokenize(x, x, x, vocab), Representation::aligned_linearized);
    REQUIRE(assembly.streams.size() == 2);
    CHECK(assembly.streams[0].ids == assembly.streams[1].ids);
    CHECK(assembly.length == vocab.encode(x).size());
    Matrix edits = Matrix::Zero(2, 6);
    edits(0, 0) = 1;
    edits(1, 5) = 1;
    Matrix theta(3, 1);
    theta << 2, 3, 0;
    const Matrix m = represent(assembly, Matrix::Zero(2, 259), edits, theta).values;
    CHECK(m(0, 0) == 5.0);
    CHECK(m(1, 5) == 5.0);
}

TEST_CASE("ltre on the running example") {
    const auto t = testing::swap_tuple();
    Vocabulary vocab;
    const auto tok = tokenize(t.a, t.b, t.o, vocab);
    const auto assembly = assemble(tok, Representation::ltre);
    const auto [ao, bo] = align_merge(tok.a, tok.b, tok.o);
    REQUIRE(assembly.streams.size() == 6);
    CHECK(assembly.length == ao.delta.size());
    CHECK(assembly.columns() == 6 * ao.delta.size());
    CHECK(assembly.streams[1].ids == ao.variant_padded);
    CHECK(assembly.streams[2].ids == ao.base_padded);
    CHECK(assembly.streams[4].ids == bo.variant_padded);
    CHECK(assembly.streams[5].ids == bo.base_padded);
    CHECK(assembly.streams[0].edit);
    CHECK_FALSE(assembly.streams[1].edit);
}

TEST_CASE("backward pass matches finite differences of a linear probe") {
    Rng rng(9);
    Vocabulary vocab;
    const auto tuple = testing::random_copy_tuple(rng);
    const auto tok = tokenize(tuple.a, tuple.b, tuple.o, vocab);
    for (auto mode : {Representation::linearized, Representation::ltre, Representation::aligned_linearized}) {
        const auto assembly = assemble(tok, mode);
        Matrix table = random_matrix(rng, 3, static_cast<Eigen::Index>(vocab.size()));
        Matrix edits = random_matrix(rng, 3, 6);
        Matrix theta = random_matrix(rng, static_cast<Eigen::Index>(theta_size(mode)), 1);
        const Matrix probe = random_matrix(rng, 3, static_cast<Eigen::Index>(assembly.columns()));
        auto f = [&] { return (represent(assembly, table, edits, theta).values.array() * probe.array()).sum(); };
        Matrix dt = Matrix::Zero(table.rows(), table.cols()), de = Matrix::Zero(3, 6),
               dth = Matrix::Zero(theta.rows(), 1);
        represent_backward(assembly, probe, table, edits, theta, dt, de, dth);
        for (Matrix* m : {&edits, &theta}) {
            Matrix& d = m == &edits ? de : dth;
            for (Eigen::Index k = 0; k < m->size(); ++k) {
                const double saved = m->data()[k];
                m->data()[k] = saved + 1e-5;
                const double up = f();
                m->data()[k] = saved - 1e-5;
                const double down = f();
                m->data()[k] = saved;
                CHECK(d.data()[k] == doctest::Approx((up - down) / 2e-5).epsilon(1e-6));
            }
        }
        const auto probe_col = static_cast<Eigen::Index>(tok.a.empty() ? 0 : tok.a[0]);
        const double saved = table(0, probe_col);
        table(0, probe_col) = saved + 1e-5;
        const double up = f();
        table(0, probe_col) = saved - 1e-5;
        const double down = f();
        table(0, probe_col) = saved;
        CHECK(dt(0, probe_col) == doctest::Approx((up - down) / 2e-5).epsilon(1e-6));
    }
}
