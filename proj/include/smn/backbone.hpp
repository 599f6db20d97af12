#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "smn/diffcore.hpp"
#include "smn/types.hpp"

namespace smn {

enum class BackboneKind { gcn, gat };

BackboneKind parse_backbone(const std::string& name);
const char* to_string(BackboneKind kind);

inline constexpr double kGatSlope = 0.2;

/// D^-1/2 (A + I) D^-1/2 with D_ii = sum_j (A + I)_ij.
SparseMatrix normalize_adjacency(const SparseMatrix& adjacency);

/// In-neighbours of every node from A > 0 plus a self-loop, ascending.
ad::Neighbourhoods neighbourhoods_with_self_loops(const SparseMatrix& adjacency);

/// relu(normA * H * W).
ad::Var gcn_forward(const SparseMatrix& norm_adjacency, const ad::Var& features, const ad::Var& weight);

/// relu(attention-weighted neighbour sum of H * W).
ad::Var gat_forward(const ad::Neighbourhoods& neighbours, const ad::Var& features, const ad::Var& weight,
                    const ad::Var& attention, double slope = kGatSlope);

/// ceil(ratio * n) for ratio in (0, 1], robust to products such as 0.7 * 10
/// landing one ulp above an integer. Always in [1, n] for n >= 1.
std::size_t ceil_fraction(double ratio, std::size_t n);

/// Indices of the `count` rows with the largest row sum, ties to the lower
/// index, returned ascending.
std::vector<std::size_t> top_rank(const Matrix& scores, std::size_t count);

struct PoolingOutput {
    std::vector<std::size_t> idx;  // retained nodes, ascending
    ad::Var scores;                // S, N x F
    ad::Var scores_masked;         // S with dropped rows zeroed
    ad::Var features;              // H * S_mask
};

/// S = sigmoid(normA * H * Theta), keep the top ceil(ratio * N) rows by row
/// sum of S, H~ = H (.) S_mask. When `fixed_idx` is given it replaces the
/// ranking, which lets gradient checks hold the discrete selection constant.
PoolingOutput self_attention_pool(const ad::Var& features, const SparseMatrix& norm_adjacency,
                                  const ad::Var& theta, double ratio,
                                  const std::optional<std::vector<std::size_t>>& fixed_idx = std::nullopt);

}  // namespace smn
