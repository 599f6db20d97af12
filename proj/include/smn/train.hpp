#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "smn/corpus.hpp"
#include "smn/graph.hpp"
#include "smn/model.hpp"

namespace smn {

/// Cosine annealing with warm restarts: period i lasts t0 * t_mult^i epochs,
/// lr = lr_min + (lr0 - lr_min) (1 + cos(pi * t_cur / t_i)) / 2.
struct CosineWarmRestarts {
    double lr0 = 0.01;
    std::size_t t0 = 10;
    double t_mult = 2.0;
    double lr_min = 0.0;

    void validate() const;
    /// `epoch` may be fractional (epoch + step / steps_per_epoch).
    double at(double epoch) const;
};

double lr_schedule(std::size_t step, std::size_t steps_per_epoch, std::size_t epoch,
                   const CosineWarmRestarts& schedule);

struct TrainConfig {
    ModelConfig model;
    LossWeights loss;
    CosineWarmRestarts schedule;
    std::size_t epochs = 50;
    std::uint64_t seed = 1;
    SplitRatios split;

    void validate() const;
};

struct EpochLog {
    std::size_t epoch = 0;
    double lr = 0.0;
    double train_loss = 0.0;
    std::optional<double> val_loss;
    std::optional<double> val_mse;
};

/// Everything needed to resume or evaluate a run.
struct TrainState {
    TrainConfig config;
    ModelParams params;
    std::size_t epoch = 0;  // completed epochs
    PopularityRange range;
    std::string vocab_hash;
};

/// Split and normalization shared by training and evaluation: ids come from
/// the seeded split, the popularity range is fitted on the training part.
struct PreparedData {
    Split split;
    PopularityRange range;
    std::vector<Event> train;
    std::vector<Event> val;
    std::vector<Event> test;
};

PreparedData prepare_data(const Corpus& corpus, const SplitRatios& ratios, std::uint64_t seed,
                          const std::optional<PopularityRange>& range = std::nullopt);

TrainState initial_state(const WordGraph& graph, const Corpus& corpus, const TrainConfig& config,
                         const PopularityRange& range);

/// Per-event SGD over a fixed training set.
class Trainer {
public:
    Trainer(const WordGraph& graph, std::vector<Event> train, std::vector<Event> val, TrainState state);

    /// Refreshes the sparsity mask, then one shuffled pass of single-event
    /// steps followed by validation.
    EpochLog run_epoch();

    /// One SGD step on a single event; returns its loss before the update.
    double step(const Event& event, std::span<const std::size_t> nodes, double lr);

    const TrainState& state() const { return state_; }
    const Model& model() const { return model_; }

private:
    Model model_;
    std::vector<Event> train_;
    std::vector<Event> val_;
    std::vector<std::vector<std::size_t>> train_nodes_;
    TrainState state_;
};

struct TrainRun {
    TrainState state;
    std::vector<EpochLog> log;
    PreparedData data;
};

TrainRun train(const Corpus& corpus, const WordGraph& graph, const TrainConfig& config,
               const std::function<void(const EpochLog&)>& on_epoch = {});

}  // namespace smn
