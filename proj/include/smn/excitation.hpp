#pragma once

#include <span>
#include <string>
#include <vector>

#include "smn/diffcore.hpp"
#include "smn/types.hpp"

namespace smn {

/// H^ = relu(relu(H~ W1) W2).
ad::Var project_excitation(const ad::Var& pooled, const ad::Var& w1, const ad::Var& w2);

/// One event's slice of the pooled graph features.
struct EventView {
    std::vector<std::size_t> members;  // retained word nodes, ascending
    ad::Var words;                     // h_ij, rows of H~ for members (m x F)
    ad::Var excited_words;             // rows of H^ for members (m x F)
    ad::Var event_vector;              // h~_i, 1 x F
    ad::Var excited_event_vector;      // h^_i, 1 x F; unset when no members
    bool has_members() const { return !members.empty(); }
};

/// Builds the view for an event whose distinct word nodes are `nodes`.
/// Members are `nodes` intersected with `retained`. Aggregates are means over
/// the members; an event with no retained word falls back to the mean of its
/// words' unpooled features for the event vector.
EventView make_event_view(std::span<const std::size_t> nodes, std::span<const std::size_t> retained,
                          const ad::Var& pooled, const ad::Var& excited, const ad::Var& unpooled);

struct MutualExcitation {
    ad::Var value;          // y_m, 1 x 1
    ad::Var products;       // z_jk = h^_j . h^_k, m x m
    ad::Var sq_distances;   // ||h^_j - h^_k||^2 via the z expansion, m x m
    ad::Var eta;            // 1 x 1
    ad::Var gamma;          // 1 x 1
    Matrix pair_mask;       // 1 on the pairs that enter the sum
};

/// y_m = eta * sum_{j != k} exp(-gamma ||h^_j - h^_k||^2) with
/// eta = gelu(h^_i W_eta), gamma = gelu(h^_i W_gamma). Set
/// `include_diagonal` to sum over j == k as well.
MutualExcitation mutual_excitation(const ad::Var& excited_words, const ad::Var& excited_event,
                                   const ad::Var& w_eta, const ad::Var& w_gamma,
                                   bool include_diagonal = false);

struct SelfExcitation {
    ad::Var value;   // y_s, 1 x 1
    ad::Var scores;  // beta^_ij, m x 1
};

/// beta^_ij = gelu(h_ij (W_mask (.) W_beta)); the mask is applied
/// straight-through so W_beta receives the unmasked gradient.
SelfExcitation self_excitation(const ad::Var& words, const ad::Var& w_beta, const Matrix& mask);

/// y_b = gelu(h~_i W_mu).
ad::Var base_excitation(const ad::Var& event_vector, const ad::Var& w_mu);

/// Number of ones a refreshed mask carries: ceil(delta / 100 * F).
std::size_t mask_cardinality(double delta, std::size_t f);

/// Keeps the top delta% entries of W_beta (ties to the lower index).
Matrix refresh_mask(const Matrix& w_beta, double delta);

}  // namespace smn
