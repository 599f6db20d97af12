#include "smn/backbone.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "smn/error.hpp"

namespace smn {

BackboneKind parse_backbone(const std::string& name) {
    if (name == "gcn") return BackboneKind::gcn;
    if (name == "gat") return BackboneKind::gat;
    throw ConfigError("unknown backbone \"" + name + "\" (expected gcn or gat)");
}

const char* to_string(BackboneKind kind) { return kind == BackboneKind::gcn ? "gcn" : "gat"; }

SparseMatrix normalize_adjacency(const SparseMatrix& adjacency) {
    const Eigen::Index n = adjacency.rows();
    if (adjacency.cols() != n) throw ShapeError("normalize_adjacency: adjacency must be square");
    Vector degree = Vector::Ones(n);
    for (Eigen::Index r = 0; r < adjacency.outerSize(); ++r) {
        for (SparseMatrix::InnerIterator it(adjacency, r); it; ++it) {
            if (it.col() == r) throw ValidationError("normalize_adjacency: diagonal must be zero");
            degree(r) += it.value();
        }
    }
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(static_cast<std::size_t>(adjacency.nonZeros() + n));
    for (Eigen::Index r = 0; r < n; ++r) {
        triplets.emplace_back(r, r, 1.0 / degree(r));
        for (SparseMatrix::InnerIterator it(adjacency, r); it; ++it) {
            triplets.emplace_back(r, it.col(), it.value() / std::sqrt(degree(r) * degree(it.col())));
        }
    }
    SparseMatrix out(n, n);
    out.setFromTriplets(triplets.begin(), triplets.end());
    out.makeCompressed();
    return out;
}

ad::Neighbourhoods neighbourhoods_with_self_loops(const SparseMatrix& adjacency) {
    ad::Neighbourhoods out(static_cast<std::size_t>(adjacency.rows()));
    for (Eigen::Index r = 0; r < adjacency.outerSize(); ++r) {
        auto& nb = out[static_cast<std::size_t>(r)];
        nb.push_back(static_cast<std::size_t>(r));
        for (SparseMatrix::InnerIterator it(adjacency, r); it; ++it) {
            if (it.value() > 0.0 && it.col() != r) nb.push_back(static_cast<std::size_t>(it.col()));
        }
        std::sort(nb.begin(), nb.end());
    }
    return out;
}

ad::Var gcn_forward(const SparseMatrix& norm_adjacency, const ad::Var& features, const ad::Var& weight) {
    return ad::relu(ad::spmm(norm_adjacency, ad::matmul(features, weight)));
}

ad::Var gat_forward(const ad::Neighbourhoods& neighbours, const ad::Var& features, const ad::Var& weight,
                    const ad::Var& attention, double slope) {
    return ad::relu(ad::graph_attention(ad::matmul(features, weight), attention, neighbours, slope));
}

std::size_t ceil_fraction(double ratio, std::size_t n) {
    if (!(ratio > 0.0 && ratio <= 1.0)) throw ConfigError("ratio must lie in (0, 1]");
    if (n == 0) return 0;
    const double raw = ratio * static_cast<double>(n);
    auto count = static_cast<std::size_t>(std::ceil(raw - 1e-9 * std::max(1.0, raw)));
    return std::clamp<std::size_t>(count, 1, n);
}

std::vector<std::size_t> top_rank(const Matrix& scores, std::size_t count) {
    const auto n = static_cast<std::size_t>(scores.rows());
    count = std::min(count, n);
    const Vector key = scores.rowwise().sum();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return key(static_cast<Eigen::Index>(a)) > key(static_cast<Eigen::Index>(b));
    });
    order.resize(count);
    std::sort(order.begin(), order.end());
    return order;
}

PoolingOutput self_attention_pool(const ad::Var& features, const SparseMatrix& norm_adjacency,
                                  const ad::Var& theta, double ratio,
                                  const std::optional<std::vector<std::size_t>>& fixed_idx) {
    PoolingOutput out;
    out.scores = ad::sigmoid(ad::spmm(norm_adjacency, ad::matmul(features, theta)));
    if (out.scores.cols() != features.cols()) {
        throw ShapeError("self_attention_pool: Theta must be F x F so S matches H");
    }
    const auto n = static_cast<std::size_t>(features.rows());
    if (fixed_idx) {
        out.idx = *fixed_idx;
        std::sort(out.idx.begin(), out.idx.end());
        for (auto i : out.idx) {
            if (i >= n) throw ShapeError("self_attention_pool: fixed index out of range");
        }
    } else {
        out.idx = top_rank(out.scores.value(), ceil_fraction(ratio, n));
    }
    Matrix keep = Matrix::Zero(features.rows(), features.cols());
    for (auto i : out.idx) keep.row(static_cast<Eigen::Index>(i)).setOnes();
    out.scores_masked = ad::mul_constant(out.scores, keep);
    out.features = ad::hadamard(features, out.scores_masked);
    return out;
}

}  // namespace smn
