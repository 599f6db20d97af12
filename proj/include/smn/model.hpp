#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "smn/backbone.hpp"
#include "smn/corpus.hpp"
#include "smn/diffcore.hpp"
#include "smn/excitation.hpp"
#include "smn/graph.hpp"
#include "smn/image.hpp"

namespace smn {

/// Which additive components take part in the prediction.
struct HeadToggles {
    bool base = true;
    bool self = true;
    bool mutual = true;
    bool image = true;

    /// Comma-separated subset of base,self,mutual,image.
    static HeadToggles parse(const std::string& list);
    std::string to_string() const;
    bool any_text() const { return base || self || mutual; }
    bool operator==(const HeadToggles&) const = default;
};

struct ModelConfig {
    BackboneKind backbone = BackboneKind::gcn;
    std::size_t layers = 2;
    double pool_ratio = 1.0;
    double delta = 50.0;
    HeadToggles heads;
    std::size_t image_hidden = kDefaultImageHidden;
    bool mutual_include_diagonal = false;
    bool image_relu_output = false;

    void validate() const;
};

/// Every trainable tensor of the model. Instantiated over Matrix for stored
/// weights and over ad::Var for the copies bound to a tape.
template <class T>
struct ParamSet {
    std::vector<T> gnn_weight;     // F x F per layer
    std::vector<T> gnn_attention;  // 2F x 1 per layer, GAT only
    T theta;                       // pooling projection, F x F
    T excite_w1;                   // F x F
    T excite_w2;                   // F x F
    T w_eta;                       // F x 1
    T w_gamma;                     // F x 1
    T w_beta;                      // F x 1
    T w_mu;                        // F x 1
    T image_w1;                    // Fc x Fh
    T image_b1;                    // 1 x Fh
    T image_w2;                    // Fh x 1
    T image_b2;                    // 1 x 1

    /// Calls fn(name, tensor) in a fixed order.
    template <class Fn>
    void for_each(Fn&& fn) {
        visit(*this, fn);
    }
    template <class Fn>
    void for_each(Fn&& fn) const {
        visit(*this, fn);
    }

private:
    template <class Self, class Fn>
    static void visit(Self& self, Fn& fn) {
        for (std::size_t l = 0; l < self.gnn_weight.size(); ++l) {
            fn("gnn." + std::to_string(l) + ".weight", self.gnn_weight[l]);
        }
        for (std::size_t l = 0; l < self.gnn_attention.size(); ++l) {
            fn("gnn." + std::to_string(l) + ".attention", self.gnn_attention[l]);
        }
        fn(std::string("pool.theta"), self.theta);
        fn(std::string("excite.w1"), self.excite_w1);
        fn(std::string("excite.w2"), self.excite_w2);
        fn(std::string("mutual.w_eta"), self.w_eta);
        fn(std::string("mutual.w_gamma"), self.w_gamma);
        fn(std::string("self.w_beta"), self.w_beta);
        fn(std::string("base.w_mu"), self.w_mu);
        fn(std::string("image.w1"), self.image_w1);
        fn(std::string("image.b1"), self.image_b1);
        fn(std::string("image.w2"), self.image_w2);
        fn(std::string("image.b2"), self.image_b2);
    }
};

using ParamVars = ParamSet<ad::Var>;

struct ModelParams {
    ParamSet<Matrix> weights;
    Matrix w_mask;  // binary, same shape as w_beta

    /// Seeded uniform(-1/sqrt(F_in), 1/sqrt(F_in)) weights, zero biases and a
    /// mask refreshed from the initial W_beta. `fc` of 0 disables image weights.
    static ModelParams init(const ModelConfig& config, std::size_t f, std::size_t fc, std::uint64_t seed);
};

/// The four additive components and their sum.
struct PredictionBreakdown {
    double base = 0.0;
    double self = 0.0;
    double mutual = 0.0;
    double image = 0.0;
    double total = 0.0;
};

/// Backbone output shared by every event of one step.
struct GraphPass {
    ad::Var hidden;   // H^(l+1), unpooled
    PoolingOutput pool;
    ad::Var excited;  // H^
};

struct EventForward {
    PredictionBreakdown breakdown;
    ad::Var total;
    std::vector<std::size_t> members;
    std::optional<ad::Var> beta_scores;    // m x 1 when the self head ran
    std::optional<ad::Var> pair_products;  // m x m when the mutual head ran
    Matrix pair_mask;
};

class Model {
public:
    Model(const WordGraph& graph, ModelConfig config);

    const ModelConfig& config() const { return config_; }
    const WordGraph& graph() const { return graph_; }
    const SparseMatrix& norm_adjacency() const { return norm_adjacency_; }

    /// Copies `params` onto the tape as leaves (or constants).
    ParamVars bind(ad::Tape& tape, const ModelParams& params, bool trainable) const;

    GraphPass graph_pass(ad::Tape& tape, const ParamVars& vars,
                         const std::optional<std::vector<std::size_t>>& fixed_idx = std::nullopt) const;

    /// Distinct word nodes of an event; throws on a token outside the graph.
    std::vector<std::size_t> event_nodes(const Event& event) const;

    EventForward forward_event(ad::Tape& tape, const Event& event, std::span<const std::size_t> nodes,
                               const std::optional<GraphPass>& pass, const ParamVars& vars,
                               const Matrix& mask) const;

private:
    const WordGraph& graph_;
    ModelConfig config_;
    SparseMatrix norm_adjacency_;
    ad::Neighbourhoods neighbours_;
};

struct LossWeights {
    double lambda1 = 0.001;
    double lambda2 = 0.001;
    double huber_delta = 1.0;
};

/// Huber(y^, y) + lambda1 ||beta||_1 + lambda2 ||z||_1 on plain values.
double loss_value(double prediction, double target, std::span<const double> beta, std::span<const double> z,
                  const LossWeights& weights);

/// Same loss recorded on the tape of `forward`.
ad::Var event_loss(const EventForward& forward, double target, const LossWeights& weights);

/// Predictions for many events with one shared backbone pass.
struct EventPrediction {
    std::string id;
    PredictionBreakdown breakdown;
    std::vector<std::size_t> members;
    std::vector<double> beta;  // parallel to members, empty when the self head is off
    double loss = 0.0;
};

std::vector<EventPrediction> predict(const Model& model, const ModelParams& params,
                                     const std::vector<Event>& events,
                                     const std::optional<LossWeights>& weights = std::nullopt);

}  // namespace smn
