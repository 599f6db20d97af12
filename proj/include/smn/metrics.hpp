#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace smn {

struct ScoredEvent {
    std::string id;
    double y_true = 0.0;
    double y_pred = 0.0;
};

/// Events with their true and predicted rankings. Both rankings sort by
/// descending score and break ties by ascending id.
class RankedResult {
public:
    explicit RankedResult(std::vector<ScoredEvent> events);

    std::size_t size() const { return events_.size(); }
    const std::vector<ScoredEvent>& events() const { return events_; }
    /// Event indices, best first.
    const std::vector<std::size_t>& true_order() const { return true_order_; }
    const std::vector<std::size_t>& predicted_order() const { return predicted_order_; }
    /// 1-based position of each event in the true ranking.
    std::size_t true_rank(std::size_t event) const { return true_rank_[event]; }

private:
    std::vector<ScoredEvent> events_;
    std::vector<std::size_t> true_order_;
    std::vector<std::size_t> predicted_order_;
    std::vector<std::size_t> true_rank_;
};

/// Mean absolute deviation, the form the popularity literature labels MSE.
double mse_abs(std::span<const ScoredEvent> events);
/// Conventional mean squared error.
double mse_sq(std::span<const ScoredEvent> events);

/// sum_{k=1..K} |R_k - P_k| / N, with R_k the true popularity at true rank k
/// and P_k the true popularity at predicted rank k.
double order_loss(const RankedResult& result, std::size_t k);

/// Average precision where the relevant events are the top `m` by true rank.
double average_precision(const RankedResult& result, std::size_t m);
double map_mean(const RankedResult& result, std::span<const std::size_t> thresholds);

/// NDCG@k with gain = true popularity (clamped at 0). When the ideal DCG is
/// zero the ranking is perfect by vacuity: returns 1 and sets `degenerate`.
double ndcg_at(const RankedResult& result, std::size_t k, bool* degenerate = nullptr);

struct MetricsOptions {
    std::vector<std::size_t> ol_k{10, 20, 30};
    std::vector<std::size_t> map_thresholds{6, 7, 8, 9, 10, 15};
    std::size_t ndcg_k = 10;
};

struct MetricsReport {
    std::size_t count = 0;
    double mse_abs = 0.0;
    double mse_sq = 0.0;
    std::map<std::size_t, double> ol;
    double map_mean = 0.0;
    std::map<std::size_t, double> map_per_m;
    std::size_t ndcg_k = 0;
    double ndcg = 0.0;
    std::vector<std::string> warnings;
};

/// Computes every metric; cut-offs larger than the event count are skipped
/// with a warning rather than failing the whole report.
MetricsReport evaluate_metrics(std::vector<ScoredEvent> events, const MetricsOptions& options = {});

nlohmann::json to_json(const MetricsReport& report);

}  // namespace smn
