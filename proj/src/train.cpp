#include "smn/train.hpp"

#include <cmath>
#include <numbers>

#include "smn/error.hpp"
#include "smn/metrics.hpp"
#include "smn/random.hpp"

namespace smn {

void CosineWarmRestarts::validate() const {
    if (!(lr0 > 0.0)) throw ConfigError("learning rate must be positive");
    if (t0 < 1) throw ConfigError("scheduler T0 must be >= 1");
    if (!(t_mult >= 1.0)) throw ConfigError("scheduler T_mult must be >= 1");
    if (!(lr_min >= 0.0 && lr_min <= lr0)) throw ConfigError("scheduler lr_min must lie in [0, lr0]");
}

double CosineWarmRestarts::at(double epoch) const {
    if (epoch < 0.0) throw ConfigError("scheduler epoch must be nonnegative");
    double start = 0.0;
    double period = static_cast<double>(t0);
    while (epoch >= start + period) {
        start += period;
        period *= t_mult;
    }
    const double t_cur = epoch - start;
    return lr_min + 0.5 * (lr0 - lr_min) * (1.0 + std::cos(std::numbers::pi * t_cur / period));
}

double lr_schedule(std::size_t step, std::size_t steps_per_epoch, std::size_t epoch,
                   const CosineWarmRestarts& schedule) {
    schedule.validate();
    const double frac = steps_per_epoch == 0 ? 0.0
                                             : static_cast<double>(step) / static_cast<double>(steps_per_epoch);
    return schedule.at(static_cast<double>(epoch) + frac);
}

void TrainConfig::validate() const {
    model.validate();
    schedule.validate();
    if (!(loss.lambda1 >= 0.0) || !(loss.lambda2 >= 0.0)) throw ConfigError("lambda1/lambda2 must be >= 0");
    if (!(loss.huber_delta > 0.0)) throw ConfigError("huber delta must be positive");
    if (epochs == 0) throw ConfigError("epochs must be positive");
    if (split.train <= 0.0 || split.val <= 0.0 || split.test <= 0.0 ||
        std::abs(split.train + split.val + split.test - 1.0) > 1e-9) {
        throw ConfigError("split ratios must be positive and sum to 1");
    }
}

PreparedData prepare_data(const Corpus& corpus, const SplitRatios& ratios, std::uint64_t seed,
                          const std::optional<PopularityRange>& range) {
    PreparedData data;
    data.split = split(corpus.events, ratios, seed);
    auto train = select_events(corpus.events, data.split.train_ids);
    data.range = range ? *range : popularity_range(train);
    data.train = apply_popularity_range(std::move(train), data.range);
    data.val = apply_popularity_range(select_events(corpus.events, data.split.val_ids), data.range);
    data.test = apply_popularity_range(select_events(corpus.events, data.split.test_ids), data.range);
    return data;
}

TrainState initial_state(const WordGraph& graph, const Corpus& corpus, const TrainConfig& config,
                         const PopularityRange& range) {
    config.validate();
    TrainState state;
    state.config = config;
    state.params = ModelParams::init(config.model, graph.dim(), corpus.header.fc.value_or(0), config.seed);
    state.range = range;
    state.vocab_hash = graph.vocab.hash();
    return state;
}

Trainer::Trainer(const WordGraph& graph, std::vector<Event> train, std::vector<Event> val, TrainState state)
    : model_(graph, state.config.model), train_(std::move(train)), val_(std::move(val)), state_(std::move(state)) {
    state_.config.validate();
    if (state_.vocab_hash != graph.vocab.hash()) {
        throw ValidationError("vocabulary hash mismatch between model state and graph");
    }
    if (train_.empty()) throw ValidationError("training split is empty");
    train_nodes_.reserve(train_.size());
    for (const auto& ev : train_) train_nodes_.push_back(model_.event_nodes(ev));
    for (const auto& ev : val_) model_.event_nodes(ev);
}

double Trainer::step(const Event& event, std::span<const std::size_t> nodes, double lr) {
    ad::Tape tape;
    const ParamVars vars = model_.bind(tape, state_.params, true);
    std::optional<GraphPass> pass;
    if (model_.config().heads.any_text()) pass = model_.graph_pass(tape, vars);
    const EventForward fwd = model_.forward_event(tape, event, nodes, pass, vars, state_.params.w_mask);
    const ad::Var loss = event_loss(fwd, event.popularity, state_.config.loss);
    tape.backward(loss);

    std::vector<const ad::Var*> leaves;
    vars.for_each([&](const std::string&, const ad::Var& v) { leaves.push_back(&v); });
    std::size_t i = 0;
    state_.params.weights.for_each([&](const std::string& name, Matrix& w) {
        const Matrix& g = leaves[i++]->grad();
        if (!g.allFinite()) {
            throw NumericError("non-finite gradient for parameter " + name + " on event \"" + event.id + "\"");
        }
        w -= lr * g;
    });
    return loss.scalar();
}

EpochLog Trainer::run_epoch() {
    const TrainConfig& cfg = state_.config;
    const std::size_t epoch = state_.epoch;
    if (cfg.model.heads.self) state_.params.w_mask = refresh_mask(state_.params.weights.w_beta, cfg.model.delta);

    EpochLog log;
    log.epoch = epoch;
    log.lr = lr_schedule(0, train_.size(), epoch, cfg.schedule);

    auto rng = make_rng(cfg.seed, 0xE90C0000ULL + epoch);
    const auto order = shuffled_indices(train_.size(), rng);
    double total = 0.0;
    for (std::size_t s = 0; s < order.size(); ++s) {
        const double lr = lr_schedule(s, order.size(), epoch, cfg.schedule);
        const std::size_t k = order[s];
        const double loss = step(train_[k], train_nodes_[k], lr);
        if (!std::isfinite(loss)) {
            throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + " on event \"" +
                               train_[k].id + "\"");
        }
        total += loss;
    }
    log.train_loss = total / static_cast<double>(order.size());

    if (!val_.empty()) {
        const auto preds = predict(model_, state_.params, val_, cfg.loss);
        double val_loss = 0.0;
        std::vector<ScoredEvent> scored;
        for (std::size_t i = 0; i < preds.size(); ++i) {
            val_loss += preds[i].loss;
            scored.push_back({val_[i].id, val_[i].popularity, preds[i].breakdown.total});
        }
        log.val_loss = val_loss / static_cast<double>(preds.size());
        log.val_mse = mse_abs(scored);
    }
    ++state_.epoch;
    return log;
}

TrainRun train(const Corpus& corpus, const WordGraph& graph, const TrainConfig& config,
               const std::function<void(const EpochLog&)>& on_epoch) {
    config.validate();
    TrainRun run;
    run.data = prepare_data(corpus, config.split, config.seed);
    Trainer trainer(graph, run.data.train, run.data.val, initial_state(graph, corpus, config, run.data.range));
    while (trainer.state().epoch < config.epochs) {
        run.log.push_back(trainer.run_epoch());
        if (on_epoch) on_epoch(run.log.back());
    }
    run.state = trainer.state();
    return run;
}

}  // namespace smn
