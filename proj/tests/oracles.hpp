#pragma once

// Brute-force reference implementations used by the test suites. Nothing in
// here calls into the library's numerical code; inputs and outputs are plain
// nested vectors.

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "smn/types.hpp"

namespace oracle {

using Dense = std::vector<std::vector<double>>;

Dense to_dense(const smn::Matrix& m);
Dense to_dense(const smn::SparseMatrix& m);
smn::Matrix to_matrix(const Dense& d);

Dense zeros(std::size_t rows, std::size_t cols);
Dense identity(std::size_t n);
Dense multiply(const Dense& a, const Dense& b);
Dense relu(const Dense& a);

double gelu(double x);
double sigmoid(double x);

// max(0, log((d_ij / P) * U^2 / (d_i d_j))) over document-level presence
// counts, P the ordered pair total and U the unigram total. Vocabulary order
// is given by `vocab`.
Dense pmi_adjacency(const std::vector<std::vector<std::string>>& events,
                    const std::vector<std::string>& vocab);

Dense normalized_adjacency(const Dense& a);
Dense gcn(const Dense& a, const Dense& h, const Dense& w);

// Single-head attention over {j : A(i,j) > 0} plus i itself.
Dense gat_coefficients(const Dense& a, const Dense& projected, const std::vector<double>& att,
                       double slope);
Dense gat(const Dense& a, const Dense& h, const Dense& w, const std::vector<double>& att, double slope);

// Rows with the largest row sum, ties to the lower index, ascending.
std::vector<std::size_t> top_rows(const Dense& scores, std::size_t count);

// ceil(num / den) for non-negative integers.
std::size_t ceil_div(std::size_t num, std::size_t den);

// Top `count` entries by value, ties to the lower index.
std::vector<int> top_mask(const std::vector<double>& w, std::size_t count);

// eta * sum_{j != k} exp(-gamma * ||h_j - h_k||^2) by direct subtraction.
double mutual_direct(const Dense& words, double eta, double gamma);
double squared_distance(const std::vector<double>& a, const std::vector<double>& b);

// sum_j gelu(h_j . (mask * w)).
double self_sum(const Dense& words, const std::vector<double>& w, const std::vector<double>& mask);

struct Item {
    std::string id;
    double y_true;
    double y_pred;
};

// Orders by descending score then ascending id using pairwise counting.
std::vector<std::size_t> rank_by(const std::vector<Item>& items, bool predicted);
double order_loss(const std::vector<Item>& items, std::size_t k);
double average_precision(const std::vector<Item>& items, std::size_t m);
double ndcg(const std::vector<Item>& items, std::size_t k);

// Central difference (f(x + h) - f(x - h)) / 2h on one entry.
double central_difference(double& entry, const std::function<double()>& f, double h = 1e-5);

double relative_error(double analytic, double numeric);

}  // namespace oracle
