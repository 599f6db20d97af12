#include "smn/excitation.hpp"

#include <algorithm>
#include <numeric>

#include "smn/backbone.hpp"
#include "smn/error.hpp"

namespace smn {

ad::Var project_excitation(const ad::Var& pooled, const ad::Var& w1, const ad::Var& w2) {
    return ad::relu(ad::matmul(ad::relu(ad::matmul(pooled, w1)), w2));
}

EventView make_event_view(std::span<const std::size_t> nodes, std::span<const std::size_t> retained,
                          const ad::Var& pooled, const ad::Var& excited, const ad::Var& unpooled) {
    if (nodes.empty()) throw ValidationError("event view requires at least one word");
    EventView view;
    std::vector<std::size_t> sorted(nodes.begin(), nodes.end());
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    std::set_intersection(sorted.begin(), sorted.end(), retained.begin(), retained.end(),
                          std::back_inserter(view.members));
    if (view.has_members()) {
        view.words = ad::gather_rows(pooled, view.members);
        view.excited_words = ad::gather_rows(excited, view.members);
        view.event_vector = ad::mean_rows(view.words);
        view.excited_event_vector = ad::mean_rows(view.excited_words);
    } else {
        view.event_vector = ad::mean_rows(ad::gather_rows(unpooled, sorted));
    }
    return view;
}

MutualExcitation mutual_excitation(const ad::Var& excited_words, const ad::Var& excited_event,
                                   const ad::Var& w_eta, const ad::Var& w_gamma, bool include_diagonal) {
    const Eigen::Index m = excited_words.rows();
    MutualExcitation out;
    out.eta = ad::gelu(ad::matmul(excited_event, w_eta));
    out.gamma = ad::gelu(ad::matmul(excited_event, w_gamma));

    out.products = ad::matmul(excited_words, ad::transpose(excited_words));
    const ad::Var norms = ad::row_sum(ad::hadamard(excited_words, excited_words));
    out.sq_distances = ad::sub(ad::outer_sum(norms, ad::transpose(norms)), ad::scale(out.products, 2.0));

    out.pair_mask = Matrix::Ones(m, m);
    if (!include_diagonal) out.pair_mask.diagonal().setZero();
    const ad::Var kernel = ad::exp(ad::scale(ad::scalar_mul(out.gamma, out.sq_distances), -1.0));
    out.value = ad::scalar_mul(out.eta, ad::sum(ad::mul_constant(kernel, out.pair_mask)));
    return out;
}

SelfExcitation self_excitation(const ad::Var& words, const ad::Var& w_beta, const Matrix& mask) {
    SelfExcitation out;
    out.scores = ad::gelu(ad::matmul(words, ad::ste_mask_apply(w_beta, mask)));
    out.value = ad::sum(out.scores);
    return out;
}

ad::Var base_excitation(const ad::Var& event_vector, const ad::Var& w_mu) {
    return ad::gelu(ad::matmul(event_vector, w_mu));
}

std::size_t mask_cardinality(double delta, std::size_t f) {
    if (!(delta > 0.0 && delta <= 100.0)) throw ConfigError("sparsity delta must lie in (0, 100]");
    return ceil_fraction(delta / 100.0, f);
}

Matrix refresh_mask(const Matrix& w_beta, double delta) {
    const auto f = static_cast<std::size_t>(w_beta.size());
    const std::size_t keep = mask_cardinality(delta, f);
    std::vector<std::size_t> order(f);
    std::iota(order.begin(), order.end(), std::size_t{0});
    const double* values = w_beta.data();
    std::stable_sort(order.begin(), order.end(),
                     [values](std::size_t a, std::size_t b) { return values[a] > values[b]; });
    Matrix mask = Matrix::Zero(w_beta.rows(), w_beta.cols());
    for (std::size_t r = 0; r < keep; ++r) mask.data()[order[r]] = 1.0;
    return mask;
}

}  // namespace smn
