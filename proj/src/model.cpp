#include "smn/model.hpp"

#include <cmath>
#include <sstream>

#include "smn/error.hpp"
#include "smn/random.hpp"

namespace smn {

HeadToggles HeadToggles::parse(const std::string& list) {
    HeadToggles heads{false, false, false, false};
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item == "base") {
            heads.base = true;
        } else if (item == "self") {
            heads.self = true;
        } else if (item == "mutual") {
            heads.mutual = true;
        } else if (item == "image") {
            heads.image = true;
        } else {
            throw ConfigError("unknown head \"" + item + "\" (expected base, self, mutual, image)");
        }
    }
    if (!heads.base && !heads.self && !heads.mutual && !heads.image) {
        throw ConfigError("at least one head must be enabled");
    }
    return heads;
}

std::string HeadToggles::to_string() const {
    std::string out;
    auto add = [&out](bool on, const char* name) {
        if (!on) return;
        if (!out.empty()) out += ',';
        out += name;
    };
    add(base, "base");
    add(self, "self");
    add(mutual, "mutual");
    add(image, "image");
    return out;
}

void ModelConfig::validate() const {
    if (layers == 0) throw ConfigError("backbone needs at least one layer");
    if (!(pool_ratio > 0.0 && pool_ratio <= 1.0)) throw ConfigError("pool ratio must lie in (0, 1]");
    if (!(delta > 0.0 && delta <= 100.0)) throw ConfigError("delta must lie in (0, 100]");
    if (image_hidden == 0) throw ConfigError("image hidden width must be positive");
    if (!heads.base && !heads.self && !heads.mutual && !heads.image) {
        throw ConfigError("at least one head must be enabled");
    }
}

namespace {

Matrix uniform_init(std::uint64_t seed, const std::string& name, Eigen::Index rows, Eigen::Index cols,
                    double fan_in) {
    auto rng = make_rng(seed, fnv1a(name));
    const double bound = 1.0 / std::sqrt(fan_in);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = bound * (2.0 * uniform01(rng) - 1.0);
    return m;
}

}  // namespace

ModelParams ModelParams::init(const ModelConfig& config, std::size_t f, std::size_t fc, std::uint64_t seed) {
    config.validate();
    if (f == 0) throw ConfigError("feature dimension must be positive");
    const auto F = static_cast<Eigen::Index>(f);
    const auto Fc = static_cast<Eigen::Index>(fc);
    const auto Fh = static_cast<Eigen::Index>(config.image_hidden);
    const double df = static_cast<double>(f);

    ModelParams p;
    auto& w = p.weights;
    for (std::size_t l = 0; l < config.layers; ++l) {
        const std::string prefix = "gnn." + std::to_string(l);
        w.gnn_weight.push_back(uniform_init(seed, prefix + ".weight", F, F, df));
        if (config.backbone == BackboneKind::gat) {
            w.gnn_attention.push_back(uniform_init(seed, prefix + ".attention", 2 * F, 1, 2.0 * df));
        }
    }
    w.theta = uniform_init(seed, "pool.theta", F, F, df);
    w.excite_w1 = uniform_init(seed, "excite.w1", F, F, df);
    w.excite_w2 = uniform_init(seed, "excite.w2", F, F, df);
    w.w_eta = uniform_init(seed, "mutual.w_eta", F, 1, df);
    w.w_gamma = uniform_init(seed, "mutual.w_gamma", F, 1, df);
    w.w_beta = uniform_init(seed, "self.w_beta", F, 1, df);
    w.w_mu = uniform_init(seed, "base.w_mu", F, 1, df);
    if (fc > 0) {
        w.image_w1 = uniform_init(seed, "image.w1", Fc, Fh, static_cast<double>(fc));
        w.image_w2 = uniform_init(seed, "image.w2", Fh, 1, static_cast<double>(config.image_hidden));
    } else {
        w.image_w1 = Matrix::Zero(0, Fh);
        w.image_w2 = Matrix::Zero(Fh, 1);
    }
    w.image_b1 = Matrix::Zero(1, Fh);
    w.image_b2 = Matrix::Zero(1, 1);
    p.w_mask = refresh_mask(w.w_beta, config.delta);
    return p;
}

Model::Model(const WordGraph& graph, ModelConfig config)
    : graph_(graph),
      config_(std::move(config)),
      norm_adjacency_(normalize_adjacency(graph.adjacency)),
      neighbours_(neighbourhoods_with_self_loops(graph.adjacency)) {
    config_.validate();
}

ParamVars Model::bind(ad::Tape& tape, const ModelParams& params, bool trainable) const {
    ParamVars vars;
    auto make = [&](const Matrix& m) { return trainable ? tape.leaf(m) : tape.constant(m); };
    const auto& w = params.weights;
    for (const auto& m : w.gnn_weight) vars.gnn_weight.push_back(make(m));
    for (const auto& m : w.gnn_attention) vars.gnn_attention.push_back(make(m));
    vars.theta = make(w.theta);
    vars.excite_w1 = make(w.excite_w1);
    vars.excite_w2 = make(w.excite_w2);
    vars.w_eta = make(w.w_eta);
    vars.w_gamma = make(w.w_gamma);
    vars.w_beta = make(w.w_beta);
    vars.w_mu = make(w.w_mu);
    vars.image_w1 = make(w.image_w1);
    vars.image_b1 = make(w.image_b1);
    vars.image_w2 = make(w.image_w2);
    vars.image_b2 = make(w.image_b2);
    return vars;
}

GraphPass Model::graph_pass(ad::Tape& tape, const ParamVars& vars,
                            const std::optional<std::vector<std::size_t>>& fixed_idx) const {
    if (vars.gnn_weight.size() != config_.layers) throw ShapeError("parameter set has wrong layer count");
    if (static_cast<std::size_t>(vars.gnn_weight.front().rows()) != graph_.dim()) {
        throw ShapeError("backbone input width " + std::to_string(vars.gnn_weight.front().rows()) +
                         " does not match graph embedding dim " + std::to_string(graph_.dim()));
    }
    GraphPass pass;
    ad::Var h = tape.constant(graph_.embeddings);
    for (std::size_t l = 0; l < config_.layers; ++l) {
        if (config_.backbone == BackboneKind::gcn) {
            h = gcn_forward(norm_adjacency_, h, vars.gnn_weight[l]);
        } else {
            h = gat_forward(neighbours_, h, vars.gnn_weight[l], vars.gnn_attention.at(l));
        }
    }
    pass.hidden = h;
    pass.pool = self_attention_pool(h, norm_adjacency_, vars.theta, config_.pool_ratio, fixed_idx);
    if (config_.heads.mutual) {
        pass.excited = project_excitation(pass.pool.features, vars.excite_w1, vars.excite_w2);
    } else {
        pass.excited = pass.pool.features;
    }
    return pass;
}

std::vector<std::size_t> Model::event_nodes(const Event& event) const {
    std::vector<std::size_t> nodes;
    for (const auto& t : event.distinct_tokens()) {
        const auto idx = graph_.vocab.find(t);
        if (!idx) {
            throw ValidationError("event \"" + event.id + "\" has token \"" + t +
                                  "\" outside the graph vocabulary (corpus/graph mismatch)");
        }
        nodes.push_back(*idx);
    }
    return nodes;
}

EventForward Model::forward_event(ad::Tape& tape, const Event& event, std::span<const std::size_t> nodes,
                                  const std::optional<GraphPass>& pass, const ParamVars& vars,
                                  const Matrix& mask) const {
    const HeadToggles& heads = config_.heads;
    EventForward out;
    ad::Var total = tape.constant(Matrix::Zero(1, 1));

    if (heads.any_text()) {
        if (!pass) throw ValidationError("text heads need a backbone pass");
        const EventView view =
            make_event_view(nodes, pass->pool.idx, pass->pool.features, pass->excited, pass->hidden);
        out.members = view.members;
        if (heads.base) {
            const ad::Var y = base_excitation(view.event_vector, vars.w_mu);
            out.breakdown.base = y.scalar();
            total = ad::add(total, y);
        }
        if (heads.self && view.has_members()) {
            SelfExcitation s = self_excitation(view.words, vars.w_beta, mask);
            out.breakdown.self = s.value.scalar();
            total = ad::add(total, s.value);
            out.beta_scores = s.scores;
        }
        if (heads.mutual && view.has_members()) {
            MutualExcitation m = mutual_excitation(view.excited_words, view.excited_event_vector, vars.w_eta,
                                                   vars.w_gamma, config_.mutual_include_diagonal);
            out.breakdown.mutual = m.value.scalar();
            total = ad::add(total, m.value);
            out.pair_products = m.products;
            out.pair_mask = std::move(m.pair_mask);
        }
    }
    if (heads.image && event.image_feature) {
        const auto& feature = *event.image_feature;
        Matrix x(1, static_cast<Eigen::Index>(feature.size()));
        for (std::size_t c = 0; c < feature.size(); ++c) x(0, static_cast<Eigen::Index>(c)) = feature[c];
        const ad::Var y = image_popularity(tape.constant(std::move(x)),
                                           {vars.image_w1, vars.image_b1, vars.image_w2, vars.image_b2},
                                           config_.image_relu_output);
        out.breakdown.image = y.scalar();
        total = ad::add(total, y);
    }
    out.total = total;
    out.breakdown.total = total.scalar();
    return out;
}

double loss_value(double prediction, double target, std::span<const double> beta, std::span<const double> z,
                  const LossWeights& weights) {
    const double r = prediction - target;
    const double d = weights.huber_delta;
    double loss = std::abs(r) <= d ? 0.5 * r * r : d * (std::abs(r) - 0.5 * d);
    double l1_beta = 0.0;
    for (double b : beta) l1_beta += std::abs(b);
    double l1_z = 0.0;
    for (double v : z) l1_z += std::abs(v);
    return loss + weights.lambda1 * l1_beta + weights.lambda2 * l1_z;
}

ad::Var event_loss(const EventForward& forward, double target, const LossWeights& weights) {
    ad::Var loss = ad::huber(forward.total, target, weights.huber_delta);
    if (forward.beta_scores && weights.lambda1 != 0.0) {
        loss = ad::add(loss, ad::scale(ad::sum(ad::abs(*forward.beta_scores)), weights.lambda1));
    }
    if (forward.pair_products && weights.lambda2 != 0.0) {
        const ad::Var l1 = ad::sum(ad::mul_constant(ad::abs(*forward.pair_products), forward.pair_mask));
        loss = ad::add(loss, ad::scale(l1, weights.lambda2));
    }
    return loss;
}

std::vector<EventPrediction> predict(const Model& model, const ModelParams& params,
                                     const std::vector<Event>& events,
                                     const std::optional<LossWeights>& weights) {
    ad::Tape tape;
    const ParamVars vars = model.bind(tape, params, false);
    std::optional<GraphPass> pass;
    if (model.config().heads.any_text()) pass = model.graph_pass(tape, vars);

    std::vector<EventPrediction> out;
    out.reserve(events.size());
    for (const auto& ev : events) {
        const auto nodes = model.event_nodes(ev);
        EventForward fwd = model.forward_event(tape, ev, nodes, pass, vars, params.w_mask);
        EventPrediction pred;
        pred.id = ev.id;
        pred.breakdown = fwd.breakdown;
        pred.members = fwd.members;
        if (fwd.beta_scores) {
            const Matrix& b = fwd.beta_scores->value();
            pred.beta.assign(b.data(), b.data() + b.size());
        }
        if (weights) pred.loss = event_loss(fwd, ev.popularity, *weights).scalar();
        out.push_back(std::move(pred));
    }
    return out;
}

}  // namespace smn
