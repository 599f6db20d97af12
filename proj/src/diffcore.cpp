#include "smn/diffcore.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "smn/error.hpp"

namespace smn::ad {

namespace {

std::string shape(const Matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_same_shape(std::string_view op, const Var& a, const Var& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw ShapeError(std::string(op) + ": shape mismatch " + shape(a.value()) + " vs " +
                         shape(b.value()));
    }
}

Tape& tape_of(const Var& a) {
    if (a.tape() == nullptr) throw ValidationError("operation on an unbound variable");
    return *a.tape();
}

Tape& tape_of(const Var& a, const Var& b) {
    Tape& t = tape_of(a);
    if (b.tape() != &t) throw ValidationError("operands belong to different tapes");
    return t;
}

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

}  // namespace

double gelu_value(double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); }

double gelu_derivative(double x) {
    return 0.5 * (1.0 + std::erf(x * kInvSqrt2)) + x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

double sigmoid_value(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// ---------------------------------------------------------------------------
// Var / Tape

const Matrix& Var::value() const { return tape_of(*this).node(*this).value; }

const Matrix& Var::grad() const {
    const auto& n = tape_of(*this).node(*this);
    return n.grad;
}

double Var::scalar() const {
    const Matrix& v = value();
    if (v.rows() != 1 || v.cols() != 1) throw ShapeError("scalar() on a " + shape(v) + " variable");
    return v(0, 0);
}

bool Var::requires_grad() const { return tape_of(*this).node(*this).requires_grad; }

const Tape::Node& Tape::node(const Var& v) const {
    if (v.generation_ != generation_ || v.id_ >= nodes_.size()) {
        throw ValidationError("variable refers to a cleared tape");
    }
    return nodes_[v.id_];
}

Tape::Node& Tape::node(const Var& v) {
    return const_cast<Node&>(static_cast<const Tape&>(*this).node(v));
}

Var Tape::leaf(Matrix value) {
    if (!value.allFinite()) throw NumericError("leaf: non-finite input value");
    if (consumed_) throw ValidationError("cannot record on a tape after backward()");
    nodes_.push_back(Node{std::move(value), Matrix(), true, "leaf", nullptr});
    return Var(this, nodes_.size() - 1, generation_);
}

Var Tape::constant(Matrix value) {
    if (!value.allFinite()) throw NumericError("constant: non-finite input value");
    if (consumed_) throw ValidationError("cannot record on a tape after backward()");
    nodes_.push_back(Node{std::move(value), Matrix(), false, "constant", nullptr});
    return Var(this, nodes_.size() - 1, generation_);
}

Var Tape::record(Matrix value, std::string_view op, std::vector<Var> parents, BackwardFn backward) {
    if (consumed_) throw ValidationError("cannot record on a tape after backward()");
    if (!value.allFinite()) {
        throw NumericError(std::string(op) + ": non-finite value produced");
    }
    bool requires_grad = false;
    for (const auto& p : parents) {
        if (p.tape() != this) throw ValidationError(std::string(op) + ": operand from another tape");
        requires_grad = requires_grad || node(p).requires_grad;
    }
    nodes_.push_back(Node{std::move(value), Matrix(), requires_grad, op,
                          requires_grad ? std::move(backward) : BackwardFn{}});
    return Var(this, nodes_.size() - 1, generation_);
}

void Tape::accumulate(const Var& target, const Matrix& gradient) {
    Node& n = node(target);
    if (!n.requires_grad) return;
    if (gradient.rows() != n.value.rows() || gradient.cols() != n.value.cols()) {
        throw ShapeError(std::string(n.op) + ": gradient shape " + shape(gradient) +
                         " does not match value " + shape(n.value));
    }
    if (n.grad.size() == 0) {
        n.grad = gradient;
    } else {
        n.grad += gradient;
    }
}

void Tape::backward(const Var& root) {
    if (consumed_) throw ValidationError("backward() called twice on the same tape");
    Node& r = node(root);
    if (r.value.rows() != 1 || r.value.cols() != 1) {
        throw ShapeError("backward() root must be 1x1, got " + shape(r.value));
    }
    consumed_ = true;
    if (!r.requires_grad) return;
    r.grad = Matrix::Ones(1, 1);
    for (std::size_t i = root.id_ + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (!n.backward || n.grad.size() == 0) continue;
        if (!n.grad.allFinite()) throw NumericError(std::string(n.op) + ": non-finite gradient");
        n.backward(*this, n.grad);
    }
    for (std::size_t i = 0; i <= root.id_; ++i) {
        Node& n = nodes_[i];
        if (n.requires_grad && n.grad.size() == 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
    }
}

void Tape::clear() {
    nodes_.clear();
    ++generation_;
    consumed_ = false;
}

// ---------------------------------------------------------------------------
// Ops

Var add(const Var& a, const Var& b) {
    require_same_shape("add", a, b);
    Tape& t = tape_of(a, b);
    return t.record(a.value() + b.value(), "add", {a, b}, [a, b](Tape& t, const Matrix& g) {
        t.accumulate(a, g);
        t.accumulate(b, g);
    });
}

Var sub(const Var& a, const Var& b) {
    require_same_shape("sub", a, b);
    Tape& t = tape_of(a, b);
    return t.record(a.value() - b.value(), "sub", {a, b}, [a, b](Tape& t, const Matrix& g) {
        t.accumulate(a, g);
        t.accumulate(b, -g);
    });
}

Var hadamard(const Var& a, const Var& b) {
    require_same_shape("hadamard", a, b);
    Tape& t = tape_of(a, b);
    return t.record(a.value().cwiseProduct(b.value()), "hadamard", {a, b},
                    [a, b](Tape& t, const Matrix& g) {
                        t.accumulate(a, g.cwiseProduct(b.value()));
                        t.accumulate(b, g.cwiseProduct(a.value()));
                    });
}

Var matmul(const Var& a, const Var& b) {
    if (a.cols() != b.rows()) {
        throw ShapeError("matmul: inner dimensions differ " + shape(a.value()) + " * " + shape(b.value()));
    }
    Tape& t = tape_of(a, b);
    return t.record(a.value() * b.value(), "matmul", {a, b}, [a, b](Tape& t, const Matrix& g) {
        if (a.requires_grad()) t.accumulate(a, g * b.value().transpose());
        if (b.requires_grad()) t.accumulate(b, a.value().transpose() * g);
    });
}

Var spmm(const SparseMatrix& a, const Var& b) {
    if (a.cols() != b.rows()) {
        throw ShapeError("spmm: inner dimensions differ " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + " * " + shape(b.value()));
    }
    Tape& t = tape_of(b);
    Matrix out = a * b.value();
    return t.record(std::move(out), "spmm", {b},
                    [&a, b](Tape& t, const Matrix& g) { t.accumulate(b, Matrix(a.transpose() * g)); });
}

Var transpose(const Var& a) {
    Tape& t = tape_of(a);
    return t.record(a.value().transpose(), "transpose", {a},
                    [a](Tape& t, const Matrix& g) { t.accumulate(a, g.transpose()); });
}

Var row_sum(const Var& a) {
    Tape& t = tape_of(a);
    Matrix out = a.value().rowwise().sum();
    return t.record(std::move(out), "row_sum", {a}, [a](Tape& t, const Matrix& g) {
        t.accumulate(a, g.replicate(1, a.cols()));
    });
}

Var mean_rows(const Var& a) {
    if (a.rows() == 0) throw ShapeError("mean_rows: no rows");
    Tape& t = tape_of(a);
    const double inv = 1.0 / static_cast<double>(a.rows());
    Matrix out = a.value().colwise().sum() * inv;
    return t.record(std::move(out), "mean_rows", {a}, [a, inv](Tape& t, const Matrix& g) {
        t.accumulate(a, (g * inv).replicate(a.rows(), 1));
    });
}

Var sum(const Var& a) {
    Tape& t = tape_of(a);
    Matrix out(1, 1);
    out(0, 0) = a.value().sum();
    return t.record(std::move(out), "sum", {a}, [a](Tape& t, const Matrix& g) {
        t.accumulate(a, Matrix::Constant(a.rows(), a.cols(), g(0, 0)));
    });
}

Var gather_rows(const Var& a, std::span<const std::size_t> rows) {
    Tape& t = tape_of(a);
    Matrix out(static_cast<Eigen::Index>(rows.size()), a.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (static_cast<Eigen::Index>(rows[r]) >= a.rows()) throw ShapeError("gather_rows: index out of range");
        out.row(static_cast<Eigen::Index>(r)) = a.value().row(static_cast<Eigen::Index>(rows[r]));
    }
    std::vector<std::size_t> idx(rows.begin(), rows.end());
    return t.record(std::move(out), "gather_rows", {a}, [a, idx = std::move(idx)](Tape& t, const Matrix& g) {
        Matrix full = Matrix::Zero(a.rows(), a.cols());
        for (std::size_t r = 0; r < idx.size(); ++r) {
            full.row(static_cast<Eigen::Index>(idx[r])) += g.row(static_cast<Eigen::Index>(r));
        }
        t.accumulate(a, full);
    });
}

Var scale(const Var& a, double factor) {
    Tape& t = tape_of(a);
    return t.record(a.value() * factor, "scale", {a},
                    [a, factor](Tape& t, const Matrix& g) { t.accumulate(a, g * factor); });
}

Var add_scalar(const Var& a, double offset) {
    Tape& t = tape_of(a);
    return t.record(a.value().array() + offset, "add_scalar", {a},
                    [a](Tape& t, const Matrix& g) { t.accumulate(a, g); });
}

Var scalar_mul(const Var& s, const Var& a) {
    const double sv = s.scalar();
    Tape& t = tape_of(s, a);
    return t.record(a.value() * sv, "scalar_mul", {s, a}, [s, a](Tape& t, const Matrix& g) {
        Matrix gs(1, 1);
        gs(0, 0) = g.cwiseProduct(a.value()).sum();
        t.accumulate(s, gs);
        t.accumulate(a, g * s.scalar());
    });
}

Var add_row(const Var& a, const Var& row) {
    if (row.rows() != 1 || row.cols() != a.cols()) {
        throw ShapeError("add_row: expected 1x" + std::to_string(a.cols()) + " row, got " + shape(row.value()));
    }
    Tape& t = tape_of(a, row);
    Matrix out = a.value().rowwise() + row.value().row(0);
    return t.record(std::move(out), "add_row", {a, row}, [a, row](Tape& t, const Matrix& g) {
        t.accumulate(a, g);
        t.accumulate(row, g.colwise().sum());
    });
}

Var outer_sum(const Var& col, const Var& row) {
    if (col.cols() != 1 || row.rows() != 1 || col.rows() != row.cols()) {
        throw ShapeError("outer_sum: expected m x 1 and 1 x m, got " + shape(col.value()) + " and " +
                         shape(row.value()));
    }
    Tape& t = tape_of(col, row);
    const Eigen::Index m = col.rows();
    Matrix out(m, m);
    for (Eigen::Index j = 0; j < m; ++j) {
        for (Eigen::Index k = 0; k < m; ++k) out(j, k) = col.value()(j, 0) + row.value()(0, k);
    }
    return t.record(std::move(out), "outer_sum", {col, row}, [col, row](Tape& t, const Matrix& g) {
        t.accumulate(col, g.rowwise().sum());
        t.accumulate(row, g.colwise().sum());
    });
}

Var mul_constant(const Var& a, const Matrix& mask) {
    if (a.rows() != mask.rows() || a.cols() != mask.cols()) {
        throw ShapeError("mul_constant: shape mismatch " + shape(a.value()) + " vs " + shape(mask));
    }
    Tape& t = tape_of(a);
    return t.record(a.value().cwiseProduct(mask), "mul_constant", {a},
                    [a, mask](Tape& t, const Matrix& g) { t.accumulate(a, g.cwiseProduct(mask)); });
}

Var relu(const Var& a) {
    Tape& t = tape_of(a);
    return t.record(a.value().cwiseMax(0.0), "relu", {a}, [a](Tape& t, const Matrix& g) {
        t.accumulate(a, (a.value().array() > 0.0).select(g, 0.0));
    });
}

Var leaky_relu(const Var& a, double slope) {
    Tape& t = tape_of(a);
    Matrix out = (a.value().array() > 0.0).select(a.value(), a.value() * slope);
    return t.record(std::move(out), "leaky_relu", {a}, [a, slope](Tape& t, const Matrix& g) {
        t.accumulate(a, (a.value().array() > 0.0).select(g, g * slope));
    });
}

Var gelu(const Var& a) {
    Tape& t = tape_of(a);
    return t.record(a.value().unaryExpr(&gelu_value), "gelu", {a}, [a](Tape& t, const Matrix& g) {
        t.accumulate(a, g.cwiseProduct(a.value().unaryExpr(&gelu_derivative)));
    });
}

Var sigmoid(const Var& a) {
    Tape& t = tape_of(a);
    Matrix out = a.value().unaryExpr(&sigmoid_value);
    Matrix dsig = out.array() * (1.0 - out.array());
    return t.record(std::move(out), "sigmoid", {a}, [a, dsig = std::move(dsig)](Tape& t, const Matrix& g) {
        t.accumulate(a, g.cwiseProduct(dsig));
    });
}

Var exp(const Var& a) {
    Tape& t = tape_of(a);
    Matrix out = a.value().array().exp();
    Matrix copy = out;
    return t.record(std::move(out), "exp", {a}, [a, e = std::move(copy)](Tape& t, const Matrix& g) {
        t.accumulate(a, g.cwiseProduct(e));
    });
}

Var abs(const Var& a) {
    Tape& t = tape_of(a);
    return t.record(a.value().cwiseAbs(), "abs", {a}, [a](Tape& t, const Matrix& g) {
        t.accumulate(a, g.cwiseProduct(a.value().unaryExpr([](double x) {
            return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
        })));
    });
}

Var huber(const Var& prediction, double target, double delta) {
    if (!(delta > 0.0)) throw ConfigError("huber delta must be positive");
    const double r = prediction.scalar() - target;
    Matrix out(1, 1);
    out(0, 0) = std::abs(r) <= delta ? 0.5 * r * r : delta * (std::abs(r) - 0.5 * delta);
    const double slope = std::abs(r) <= delta ? r : (r > 0.0 ? delta : -delta);
    Tape& t = tape_of(prediction);
    return t.record(std::move(out), "huber", {prediction}, [prediction, slope](Tape& t, const Matrix& g) {
        t.accumulate(prediction, g * slope);
    });
}

Var ste_mask_apply(const Var& w, const Matrix& mask) {
    if (w.rows() != mask.rows() || w.cols() != mask.cols()) {
        throw ShapeError("ste_mask_apply: mask shape " + shape(mask) + " vs weight " + shape(w.value()));
    }
    Tape& t = tape_of(w);
    return t.record(w.value().cwiseProduct(mask), "ste_mask_apply", {w},
                    [w](Tape& t, const Matrix& g) { t.accumulate(w, g); });
}

namespace {

struct AttentionScores {
    Vector src;  // projected . a_src
    Vector dst;  // projected . a_dst
};

AttentionScores attention_scores(const Matrix& projected, const Matrix& attention) {
    const Eigen::Index f = projected.cols();
    if (attention.rows() != 2 * f || attention.cols() != 1) {
        throw ShapeError("graph_attention: attention vector must be " + std::to_string(2 * f) + "x1, got " +
                         shape(attention));
    }
    return {projected * attention.topRows(f).col(0), projected * attention.bottomRows(f).col(0)};
}

/// Softmax weights of node i over its neighbourhood; also returns the raw
/// pre-activation logits.
void node_softmax(const AttentionScores& s, std::size_t i, const std::vector<std::size_t>& nbrs,
                  double slope, std::vector<double>& logits, std::vector<double>& alpha) {
    logits.resize(nbrs.size());
    alpha.resize(nbrs.size());
    double max_u = -std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n < nbrs.size(); ++n) {
        const double e = s.src(static_cast<Eigen::Index>(i)) + s.dst(static_cast<Eigen::Index>(nbrs[n]));
        logits[n] = e;
        const double u = e > 0.0 ? e : slope * e;
        alpha[n] = u;
        max_u = std::max(max_u, u);
    }
    double z = 0.0;
    for (double& a : alpha) {
        a = std::exp(a - max_u);
        z += a;
    }
    for (double& a : alpha) a /= z;
}

void check_neighbourhoods(const Neighbourhoods& neighbours, Eigen::Index n) {
    if (static_cast<Eigen::Index>(neighbours.size()) != n) {
        throw ShapeError("graph_attention: neighbourhood list size differs from node count");
    }
    for (const auto& nb : neighbours) {
        if (nb.empty()) throw ValidationError("graph_attention: every node needs at least one in-edge");
        for (auto j : nb) {
            if (static_cast<Eigen::Index>(j) >= n) throw ShapeError("graph_attention: neighbour out of range");
        }
    }
}

}  // namespace

Matrix attention_coefficients(const Matrix& projected, const Matrix& attention,
                              const Neighbourhoods& neighbours, double slope) {
    check_neighbourhoods(neighbours, projected.rows());
    const AttentionScores s = attention_scores(projected, attention);
    Matrix out = Matrix::Zero(projected.rows(), projected.rows());
    std::vector<double> logits, alpha;
    for (std::size_t i = 0; i < neighbours.size(); ++i) {
        node_softmax(s, i, neighbours[i], slope, logits, alpha);
        for (std::size_t n = 0; n < alpha.size(); ++n) {
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(neighbours[i][n])) += alpha[n];
        }
    }
    return out;
}

Var graph_attention(const Var& projected, const Var& attention, const Neighbourhoods& neighbours,
                    double slope) {
    Tape& t = tape_of(projected, attention);
    const Matrix& h = projected.value();
    check_neighbourhoods(neighbours, h.rows());
    const AttentionScores s = attention_scores(h, attention.value());

    Matrix out = Matrix::Zero(h.rows(), h.cols());
    std::vector<double> logits, alpha;
    for (std::size_t i = 0; i < neighbours.size(); ++i) {
        node_softmax(s, i, neighbours[i], slope, logits, alpha);
        for (std::size_t n = 0; n < alpha.size(); ++n) {
            out.row(static_cast<Eigen::Index>(i)) += alpha[n] * h.row(static_cast<Eigen::Index>(neighbours[i][n]));
        }
    }

    return t.record(std::move(out), "graph_attention", {projected, attention},
                    [projected, attention, &neighbours, slope](Tape& t, const Matrix& g) {
                        const Matrix& h = projected.value();
                        const Matrix& a = attention.value();
                        const Eigen::Index f = h.cols();
                        const AttentionScores s = attention_scores(h, a);
                        Matrix dh = Matrix::Zero(h.rows(), f);
                        Vector ds_src = Vector::Zero(h.rows());
                        Vector ds_dst = Vector::Zero(h.rows());
                        std::vector<double> logits, alpha, dalpha;
                        for (std::size_t i = 0; i < neighbours.size(); ++i) {
                            const auto& nbrs = neighbours[i];
                            const auto ii = static_cast<Eigen::Index>(i);
                            node_softmax(s, i, nbrs, slope, logits, alpha);
                            dalpha.resize(nbrs.size());
                            double weighted = 0.0;
                            for (std::size_t n = 0; n < nbrs.size(); ++n) {
                                const auto jj = static_cast<Eigen::Index>(nbrs[n]);
                                dh.row(jj) += alpha[n] * g.row(ii);
                                dalpha[n] = g.row(ii).dot(h.row(jj));
                                weighted += alpha[n] * dalpha[n];
                            }
                            for (std::size_t n = 0; n < nbrs.size(); ++n) {
                                const double du = alpha[n] * (dalpha[n] - weighted);
                                const double de = du * (logits[n] > 0.0 ? 1.0 : slope);
                                ds_src(ii) += de;
                                ds_dst(static_cast<Eigen::Index>(nbrs[n])) += de;
                            }
                        }
                        dh += ds_src * a.topRows(f).col(0).transpose();
                        dh += ds_dst * a.bottomRows(f).col(0).transpose();
                        Matrix da(2 * f, 1);
                        da.topRows(f) = h.transpose() * ds_src;
                        da.bottomRows(f) = h.transpose() * ds_dst;
                        t.accumulate(projected, dh);
                        t.accumulate(attention, da);
                    });
}

}  // namespace smn::ad
