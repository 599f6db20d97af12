#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "smn/backbone.hpp"
#include "smn/error.hpp"
#include "smn/random.hpp"

using namespace smn;
using ad::Tape;

namespace {

Matrix random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
    return m;
}

SparseMatrix sparse(const oracle::Dense& d) { return oracle::to_matrix(d).sparseView(); }

oracle::Dense random_adjacency(std::mt19937_64& rng, std::size_t n) {
    oracle::Dense a = oracle::zeros(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (rng() % 2) a[i][j] = a[j][i] = 0.1 + uniform01(rng);
    return a;
}

void check_close(const Matrix& got, const oracle::Dense& expect, double tol) {
    REQUIRE(static_cast<std::size_t>(got.rows()) == expect.size());
    for (std::size_t i = 0; i < expect.size(); ++i)
        for (std::size_t j = 0; j < expect[i].size(); ++j)
            CHECK(got(i, j) == doctest::Approx(expect[i][j]).epsilon(tol));
}

}  // namespace

TEST_CASE("normalized adjacency") {
    CHECK(Matrix(normalize_adjacency(SparseMatrix(4, 4))) == Matrix::Identity(4, 4));

    oracle::Dense two{{0, 1}, {1, 0}};
    const Matrix n2 = Matrix(normalize_adjacency(sparse(two)));
    CHECK(n2 == Matrix::Constant(2, 2, 0.5));

    auto rng = make_rng(3, 0);
    const auto a = random_adjacency(rng, 7);
    const Matrix n = Matrix(normalize_adjacency(sparse(a)));
    CHECK(n == n.transpose());
    check_close(n, oracle::normalized_adjacency(a), 1e-14);

    oracle::Dense loop{{1, 0}, {0, 0}};
    CHECK_THROWS(normalize_adjacency(sparse(loop)));
}

TEST_CASE("gcn layer") {
    auto rng = make_rng(4, 0);
    const auto a = random_adjacency(rng, 5);
    const Matrix h = random_matrix(rng, 5, 3);
    const Matrix w = random_matrix(rng, 3, 4);
    const SparseMatrix norm = normalize_adjacency(sparse(a));
    Tape tape;
    const Matrix out = gcn_forward(norm, tape.constant(h), tape.constant(w)).value();
    check_close(out, oracle::gcn(a, oracle::to_dense(h), oracle::to_dense(w)), 1e-12);

    const SparseMatrix eye = normalize_adjacency(SparseMatrix(3, 3));
    const Matrix pos = random_matrix(rng, 3, 3).cwiseAbs();
    CHECK(gcn_forward(eye, tape.constant(pos), tape.constant(Matrix::Identity(3, 3))).value() == pos);
    CHECK(gcn_forward(norm, tape.constant(Matrix::Zero(5, 3)), tape.constant(w)).value().isZero());
    CHECK_THROWS_AS(gcn_forward(norm, tape.constant(h), tape.constant(Matrix::Ones(2, 2))), ShapeError);
}

TEST_CASE("gat layer on a path graph") {
    auto rng = make_rng(5, 0);
    oracle::Dense path{{0, 1, 0}, {1, 0, 1}, {0, 1, 0}};
    const Matrix h = random_matrix(rng, 3, 2);
    const Matrix w = random_matrix(rng, 2, 2);
    const Matrix att = random_matrix(rng, 4, 1);
    const auto nb = neighbourhoods_with_self_loops(sparse(path));
    CHECK(nb[1] == std::vector<std::size_t>{0, 1, 2});
    Tape tape;
    const Matrix out = gat_forward(nb, tape.constant(h), tape.constant(w), tape.constant(att)).value();
    check_close(out, oracle::gat(path, oracle::to_dense(h), oracle::to_dense(w),
                                 std::vector<double>(att.data(), att.data() + 4), kGatSlope),
                1e-12);

    const Matrix alpha = ad::attention_coefficients(h * w, att, nb, kGatSlope);
    for (Eigen::Index i = 0; i < 3; ++i) CHECK(alpha.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));

    const ad::Neighbourhoods lone{{0}};
    CHECK(ad::attention_coefficients(Matrix::Ones(1, 2), Matrix::Ones(4, 1), lone, kGatSlope)(0, 0) == 1.0);
}

TEST_CASE("pooling cardinality") {
    CHECK(ceil_fraction(0.5, 10) == 5);
    CHECK(ceil_fraction(0.7, 10) == 7);
    CHECK(ceil_fraction(0.3, 10) == 3);
    CHECK(ceil_fraction(0.01, 10) == 1);
    CHECK(ceil_fraction(1.0, 7) == 7);
    CHECK(ceil_fraction(0.34, 3) == 2);
    CHECK_THROWS(ceil_fraction(0.0, 3));
    CHECK_THROWS(ceil_fraction(1.5, 3));
}

TEST_CASE("top rank ties go to the lower index") {
    const Matrix tied = Matrix::Constant(6, 2, 0.5);
    CHECK(top_rank(tied, 3) == std::vector<std::size_t>{0, 1, 2});
    const Matrix s = (Matrix(5, 1) << 0.2, 0.9, 0.2, 0.9, 0.1).finished();
    CHECK(top_rank(s, 3) == std::vector<std::size_t>{0, 1, 3});
    CHECK(top_rank(s, 3) == oracle::top_rows(oracle::to_dense(s), 3));

    // Relabeling nodes relabels the selection.
    auto rng = make_rng(6, 0);
    const Matrix r = random_matrix(rng, 8, 3);
    const std::vector<std::size_t> perm{3, 7, 0, 5, 1, 6, 2, 4};
    Matrix p(8, 3);
    for (std::size_t i = 0; i < 8; ++i) p.row(perm[i]) = r.row(i);
    auto a = top_rank(r, 4);
    std::vector<std::size_t> mapped;
    for (auto i : a) mapped.push_back(perm[i]);
    std::sort(mapped.begin(), mapped.end());
    CHECK(top_rank(p, 4) == mapped);
}

TEST_CASE("self-attention pooling") {
    auto rng = make_rng(7, 0);
    const auto a = random_adjacency(rng, 10);
    const SparseMatrix norm = normalize_adjacency(sparse(a));
    const Matrix h = random_matrix(rng, 10, 4);
    const Matrix theta = random_matrix(rng, 4, 4);
    Tape tape;

    const auto full = self_attention_pool(tape.constant(h), norm, tape.constant(theta), 1.0);
    CHECK(full.idx.size() == 10);
    const Matrix s = full.scores.value();
    CHECK(full.features.value() == h.cwiseProduct(s));
    const auto na = oracle::multiply(oracle::multiply(oracle::normalized_adjacency(a), oracle::to_dense(h)),
                                     oracle::to_dense(theta));
    for (std::size_t i = 0; i < 10; ++i)
        for (std::size_t j = 0; j < 4; ++j) CHECK(s(i, j) == doctest::Approx(oracle::sigmoid(na[i][j])).epsilon(1e-12));

    const auto half = self_attention_pool(tape.constant(h), norm, tape.constant(theta), 0.5);
    CHECK(half.idx.size() == 5);
    CHECK(std::is_sorted(half.idx.begin(), half.idx.end()));
    CHECK(half.idx == oracle::top_rows(oracle::to_dense(half.scores.value()), 5));
    for (Eigen::Index i = 0; i < 10; ++i) {
        const bool kept = std::binary_search(half.idx.begin(), half.idx.end(), static_cast<std::size_t>(i));
        if (!kept) {
            CHECK(half.features.value().row(i).isZero());
            CHECK(half.scores_masked.value().row(i).isZero());
        }
    }

    const std::vector<std::size_t> fixed{1, 4, 9};
    const auto pinned = self_attention_pool(tape.constant(h), norm, tape.constant(theta), 0.5, fixed);
    CHECK(pinned.idx == fixed);
}

TEST_CASE("backbone is deterministic") {
    auto rng = make_rng(8, 0);
    const auto a = random_adjacency(rng, 6);
    const Matrix h = random_matrix(rng, 6, 3);
    const Matrix w = random_matrix(rng, 3, 3);
    const Matrix att = random_matrix(rng, 6, 1);
    const auto nb = neighbourhoods_with_self_loops(sparse(a));
    Tape t1, t2;
    CHECK(gat_forward(nb, t1.constant(h), t1.constant(w), t1.constant(att)).value() ==
          gat_forward(nb, t2.constant(h), t2.constant(w), t2.constant(att)).value());
}
