#pragma once

// Reverse-mode automatic differentiation over dense row-major matrices.
//
// A Tape records every operation applied to its variables together with a
// backward rule. `Tape::backward` walks the records in exact reverse order,
// accumulating gradients additively. Every forward value is checked for
// NaN/Inf at the op that produced it.

#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "smn/types.hpp"

namespace smn::ad {

class Tape;

/// Handle to a value recorded on a tape. Cheap to copy; only valid while the
/// tape has not been cleared.
class Var {
public:
    Var() = default;

    const Matrix& value() const;
    const Matrix& grad() const;
    Eigen::Index rows() const { return value().rows(); }
    Eigen::Index cols() const { return value().cols(); }
    double scalar() const;
    bool requires_grad() const;

    Tape* tape() const { return tape_; }
    std::size_t id() const { return id_; }

private:
    friend class Tape;
    Var(Tape* tape, std::size_t id, std::uint64_t generation)
        : tape_(tape), id_(id), generation_(generation) {}

    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
    std::uint64_t generation_ = 0;
};

class Tape {
public:
    /// Receives the upstream gradient of the node and must accumulate into
    /// the node's parents via `Tape::accumulate`.
    using BackwardFn = std::function<void(Tape&, const Matrix& upstream)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Trainable input.
    Var leaf(Matrix value);
    /// Input that never receives gradient.
    Var constant(Matrix value);

    Var record(Matrix value, std::string_view op, std::vector<Var> parents, BackwardFn backward);

    /// Seeds d(root)/d(root) = 1 for a 1x1 root and propagates to all nodes.
    /// A tape can be back-propagated once.
    void backward(const Var& root);

    void accumulate(const Var& target, const Matrix& gradient);

    /// Drops all records; outstanding Vars become invalid.
    void clear();

    std::size_t size() const { return nodes_.size(); }

private:
    friend class Var;

    struct Node {
        Matrix value;
        Matrix grad;
        bool requires_grad = false;
        std::string_view op;
        BackwardFn backward;
    };

    const Node& node(const Var& v) const;
    Node& node(const Var& v);

    std::deque<Node> nodes_;
    std::uint64_t generation_ = 1;
    bool consumed_ = false;
};

// Shape-preserving binary ops.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var hadamard(const Var& a, const Var& b);

Var matmul(const Var& a, const Var& b);
/// Constant sparse left factor times a variable. `a` must outlive the tape.
Var spmm(const SparseMatrix& a, const Var& b);
Var transpose(const Var& a);

/// N x F -> N x 1.
Var row_sum(const Var& a);
/// N x F -> 1 x F.
Var mean_rows(const Var& a);
/// Sum of all entries, 1 x 1.
Var sum(const Var& a);
Var gather_rows(const Var& a, std::span<const std::size_t> rows);

Var scale(const Var& a, double factor);
Var add_scalar(const Var& a, double offset);
/// 1 x 1 variable times a matrix variable.
Var scalar_mul(const Var& s, const Var& a);
/// Adds a 1 x F row to every row of an N x F matrix.
Var add_row(const Var& a, const Var& row);
/// m x 1 column and 1 x m row -> m x m with out(j,k) = col(j) + row(k).
Var outer_sum(const Var& col, const Var& row);
/// Hadamard product with a constant; no gradient flows to `mask`.
Var mul_constant(const Var& a, const Matrix& mask);

Var relu(const Var& a);
Var leaky_relu(const Var& a, double slope);
/// Exact x * Phi(x).
Var gelu(const Var& a);
Var sigmoid(const Var& a);
Var exp(const Var& a);
/// Subgradient 0 at 0.
Var abs(const Var& a);

/// Huber loss of a 1 x 1 prediction against a target.
Var huber(const Var& prediction, double target, double delta);

/// Forward `w * mask`; backward passes the upstream gradient to `w`
/// unchanged (straight-through).
Var ste_mask_apply(const Var& w, const Matrix& mask);

/// Row-wise neighbourhood list, each sorted ascending.
using Neighbourhoods = std::vector<std::vector<std::size_t>>;

/// Single-head graph attention aggregation. `projected` is N x F (already
/// multiplied by the layer weight), `attention` is 2F x 1. For node i,
/// e_ij = leaky(projected_i . a_src + projected_j . a_dst) over j in
/// neighbourhood(i), alpha = softmax_j(e), out_i = sum_j alpha_ij projected_j.
/// `neighbours` must outlive the tape.
Var graph_attention(const Var& projected, const Var& attention, const Neighbourhoods& neighbours,
                    double slope);

/// The attention coefficients graph_attention would use, as dense N x N.
Matrix attention_coefficients(const Matrix& projected, const Matrix& attention,
                              const Neighbourhoods& neighbours, double slope);

// Plain elementwise helpers shared with code that works on raw matrices.
double gelu_value(double x);
double gelu_derivative(double x);
double sigmoid_value(double x);

}  // namespace smn::ad
