#include <doctest.h>

#include <cmath>
#include <functional>
#include <limits>
#include <random>

#include "oracles.hpp"
#include "smn/diffcore.hpp"
#include "smn/error.hpp"
#include "smn/random.hpp"

using namespace smn;
using ad::Tape;
using ad::Var;

namespace {

using Builder = std::function<Var(Tape&, const std::vector<Var>&)>;

Matrix random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c, double shift = 0.0) {
    std::normal_distribution<double> normal(shift, 1.0);
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
    return m;
}

// Largest relative error between tape gradients and central differences of
// sum(op(inputs) * R) for a fixed random R.
double gradient_error(std::vector<Matrix> inputs, const Builder& op, std::uint64_t seed) {
    auto rng = make_rng(seed, 99);
    Matrix weight;
    auto loss = [&](Tape& t, const std::vector<Var>& vars) {
        const Var y = op(t, vars);
        if (weight.size() == 0) weight = random_matrix(rng, y.rows(), y.cols());
        return ad::sum(ad::hadamard(y, t.constant(weight)));
    };
    Tape tape;
    std::vector<Var> vars;
    for (const auto& m : inputs) vars.push_back(tape.leaf(m));
    tape.backward(loss(tape, vars));

    double worst = 0.0;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        for (Eigen::Index i = 0; i < inputs[k].size(); ++i) {
            const double numeric = oracle::central_difference(inputs[k].data()[i], [&] {
                Tape t;
                std::vector<Var> vs;
                for (const auto& m : inputs) vs.push_back(t.constant(m));
                return loss(t, vs).scalar();
            });
            worst = std::max(worst, oracle::relative_error(vars[k].grad().data()[i], numeric));
        }
    }
    return worst;
}

}  // namespace

TEST_CASE("matmul gradient matches finite differences") {
    auto rng = make_rng(1, 1);
    const double err = gradient_error({random_matrix(rng, 3, 4), random_matrix(rng, 4, 2)},
                                      [](Tape&, const std::vector<Var>& v) { return ad::matmul(v[0], v[1]); }, 1);
    CHECK(err < 1e-6);
}

TEST_CASE("every op gradient over 20 seeds") {
    const ad::Neighbourhoods nb{{0, 1}, {0, 1, 2}, {1, 2, 3}, {2, 3}, {4}};
    SparseMatrix sp(5, 5);
    sp.insert(0, 1) = 0.5;
    sp.insert(1, 0) = 0.5;
    sp.insert(2, 2) = 1.0;
    sp.insert(3, 4) = -0.7;
    sp.insert(4, 0) = 0.2;
    sp.makeCompressed();
    const std::vector<std::size_t> rows{3, 0, 3};
    const Matrix mask = (Matrix(4, 3) << 1, 0, 1, 0, 0, 1, 1, 1, 0, 0, 1, 0).finished();

    struct Case {
        const char* name;
        std::vector<std::pair<int, int>> shapes;
        Builder op;
    };
    const std::vector<Case> cases{
        {"add", {{4, 3}, {4, 3}}, [](Tape&, const auto& v) { return ad::add(v[0], v[1]); }},
        {"sub", {{4, 3}, {4, 3}}, [](Tape&, const auto& v) { return ad::sub(v[0], v[1]); }},
        {"hadamard", {{4, 3}, {4, 3}}, [](Tape&, const auto& v) { return ad::hadamard(v[0], v[1]); }},
        {"matmul", {{4, 3}, {3, 5}}, [](Tape&, const auto& v) { return ad::matmul(v[0], v[1]); }},
        {"spmm", {{5, 3}}, [&](Tape&, const auto& v) { return ad::spmm(sp, v[0]); }},
        {"transpose", {{4, 3}}, [](Tape&, const auto& v) { return ad::transpose(v[0]); }},
        {"row_sum", {{4, 3}}, [](Tape&, const auto& v) { return ad::row_sum(v[0]); }},
        {"mean_rows", {{4, 3}}, [](Tape&, const auto& v) { return ad::mean_rows(v[0]); }},
        {"sum", {{4, 3}}, [](Tape&, const auto& v) { return ad::sum(v[0]); }},
        {"gather_rows", {{4, 3}}, [&](Tape&, const auto& v) { return ad::gather_rows(v[0], rows); }},
        {"scale", {{4, 3}}, [](Tape&, const auto& v) { return ad::scale(v[0], -1.7); }},
        {"add_scalar", {{4, 3}}, [](Tape&, const auto& v) { return ad::add_scalar(v[0], 0.3); }},
        {"scalar_mul", {{1, 1}, {4, 3}}, [](Tape&, const auto& v) { return ad::scalar_mul(v[0], v[1]); }},
        {"add_row", {{4, 3}, {1, 3}}, [](Tape&, const auto& v) { return ad::add_row(v[0], v[1]); }},
        {"outer_sum", {{4, 1}, {1, 4}}, [](Tape&, const auto& v) { return ad::outer_sum(v[0], v[1]); }},
        {"mul_constant", {{4, 3}}, [&](Tape&, const auto& v) { return ad::mul_constant(v[0], mask); }},
        {"relu", {{4, 3}}, [](Tape&, const auto& v) { return ad::relu(v[0]); }},
        {"leaky_relu", {{4, 3}}, [](Tape&, const auto& v) { return ad::leaky_relu(v[0], 0.2); }},
        {"gelu", {{4, 3}}, [](Tape&, const auto& v) { return ad::gelu(v[0]); }},
        {"sigmoid", {{4, 3}}, [](Tape&, const auto& v) { return ad::sigmoid(v[0]); }},
        {"exp", {{4, 3}}, [](Tape&, const auto& v) { return ad::exp(v[0]); }},
        {"abs", {{4, 3}}, [](Tape&, const auto& v) { return ad::abs(v[0]); }},
        {"huber", {{1, 1}}, [](Tape&, const auto& v) { return ad::huber(v[0], 0.4, 1.0); }},
        {"huber_linear", {{1, 1}}, [](Tape&, const auto& v) { return ad::huber(ad::add_scalar(v[0], 3.0), 0.0, 1.0); }},
        {"graph_attention", {{5, 3}, {6, 1}},
         [&](Tape&, const auto& v) { return ad::graph_attention(v[0], v[1], nb, 0.2); }},
    };
    for (const auto& c : cases) {
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            auto rng = make_rng(seed, 7);
            std::vector<Matrix> inputs;
            for (auto [r, k] : c.shapes) inputs.push_back(random_matrix(rng, r, k));
            const double err = gradient_error(inputs, c.op, seed);
            INFO(c.name << " seed " << seed);
            CHECK(err < 1e-4);
        }
    }
}

TEST_CASE("gelu is the exact erf form") {
    for (double x : {-2.0, -0.5, 0.5, 2.0}) {
        CHECK(ad::gelu_value(x) == doctest::Approx(oracle::gelu(x)).epsilon(1e-15));
        const double h = 1e-5;
        const double numeric = (ad::gelu_value(x + h) - ad::gelu_value(x - h)) / (2 * h);
        CHECK(std::abs(ad::gelu_derivative(x) - numeric) / std::abs(numeric) < 1e-6);
    }
    CHECK(ad::gelu_value(0.0) == 0.0);
}

TEST_CASE("straight-through mask") {
    Tape tape;
    const Var w = tape.leaf((Matrix(3, 1) << 0.5, -1.0, 2.0).finished());
    const Var y = ad::ste_mask_apply(w, Matrix::Zero(3, 1));
    CHECK(y.value().isZero());
    const Matrix up = (Matrix(3, 1) << 1.0, 2.0, -3.0).finished();
    tape.backward(ad::sum(ad::hadamard(y, tape.constant(up))));
    CHECK(w.grad() == up);
}

TEST_CASE("fan-out accumulates") {
    Tape tape;
    const Var x = tape.leaf((Matrix(1, 2) << 1.0, 3.0).finished());
    const Var y = ad::add(ad::hadamard(x, x), ad::scale(x, 2.0));
    tape.backward(ad::sum(y));
    CHECK(x.grad()(0, 0) == 4.0);
    CHECK(x.grad()(0, 1) == 8.0);
}

TEST_CASE("abs subgradient at zero") {
    Tape tape;
    const Var x = tape.leaf(Matrix::Zero(1, 3));
    tape.backward(ad::sum(ad::abs(x)));
    CHECK(x.grad().isZero());
}

TEST_CASE("huber values") {
    Tape tape;
    CHECK(ad::huber(tape.constant(Matrix::Constant(1, 1, 0.6)), 0.5, 1.0).scalar() == doctest::Approx(0.005));
    CHECK(ad::huber(tape.constant(Matrix::Constant(1, 1, 3.0)), 0.0, 1.0).scalar() == doctest::Approx(2.5));
    CHECK(ad::huber(tape.constant(Matrix::Constant(1, 1, 0.5)), 0.5, 1.0).scalar() == 0.0);
}

TEST_CASE("non-finite values are rejected") {
    Tape tape;
    const Var big = tape.leaf(Matrix::Constant(1, 1, 1000.0));
    CHECK_THROWS_AS(ad::exp(big), NumericError);
    CHECK_THROWS_AS(tape.leaf(Matrix::Constant(1, 1, std::numeric_limits<double>::quiet_NaN())), NumericError);
    const Var x = tape.leaf(Matrix::Constant(1, 1, 1e300));
    CHECK_THROWS_AS(ad::hadamard(x, x), NumericError);
}

TEST_CASE("shape and lifetime errors") {
    Tape tape;
    const Var a = tape.leaf(Matrix::Ones(2, 3));
    const Var b = tape.leaf(Matrix::Ones(2, 2));
    CHECK_THROWS_AS(ad::add(a, b), ShapeError);
    CHECK_THROWS_AS(ad::matmul(a, b), ShapeError);
    CHECK_THROWS(tape.backward(a));

    const Var s = ad::sum(a);
    tape.backward(s);
    CHECK_THROWS(tape.backward(s));

    tape.clear();
    CHECK_THROWS(a.value());

    Tape other;
    const Var c = other.leaf(Matrix::Ones(2, 3));
    Tape third;
    const Var d = third.leaf(Matrix::Ones(2, 3));
    CHECK_THROWS(ad::add(c, d));
}

TEST_CASE("constants receive no gradient") {
    Tape tape;
    const Var c = tape.constant(Matrix::Ones(2, 2));
    const Var w = tape.leaf(Matrix::Ones(2, 2));
    tape.backward(ad::sum(ad::matmul(c, w)));
    CHECK_FALSE(c.requires_grad());
    CHECK(w.grad() == Matrix::Constant(2, 2, 2.0));
}
