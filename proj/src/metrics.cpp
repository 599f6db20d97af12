#include "smn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "smn/error.hpp"

namespace smn {

namespace {

std::vector<std::size_t> ranking(const std::vector<ScoredEvent>& events, double ScoredEvent::*score) {
    std::vector<std::size_t> order(events.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double sa = events[a].*score;
        const double sb = events[b].*score;
        if (sa != sb) return sa > sb;
        return events[a].id < events[b].id;
    });
    return order;
}

void require_cutoff(const char* name, std::size_t k, std::size_t n) {
    if (k == 0 || k > n) {
        throw ValidationError(std::string(name) + " cut-off " + std::to_string(k) + " outside [1, " +
                              std::to_string(n) + "]");
    }
}

}  // namespace

RankedResult::RankedResult(std::vector<ScoredEvent> events) : events_(std::move(events)) {
    true_order_ = ranking(events_, &ScoredEvent::y_true);
    predicted_order_ = ranking(events_, &ScoredEvent::y_pred);
    true_rank_.resize(events_.size());
    for (std::size_t r = 0; r < true_order_.size(); ++r) true_rank_[true_order_[r]] = r + 1;
}

double mse_abs(std::span<const ScoredEvent> events) {
    if (events.empty()) throw ValidationError("mse of an empty result set");
    double total = 0.0;
    for (const auto& e : events) total += std::abs(e.y_pred - e.y_true);
    return total / static_cast<double>(events.size());
}

double mse_sq(std::span<const ScoredEvent> events) {
    if (events.empty()) throw ValidationError("mse of an empty result set");
    double total = 0.0;
    for (const auto& e : events) total += (e.y_pred - e.y_true) * (e.y_pred - e.y_true);
    return total / static_cast<double>(events.size());
}

double order_loss(const RankedResult& result, std::size_t k) {
    require_cutoff("OL@K", k, result.size());
    const auto& ev = result.events();
    double total = 0.0;
    for (std::size_t r = 0; r < k; ++r) {
        total += std::abs(ev[result.true_order()[r]].y_true - ev[result.predicted_order()[r]].y_true);
    }
    return total / static_cast<double>(result.size());
}

double average_precision(const RankedResult& result, std::size_t m) {
    require_cutoff("mAP threshold", m, result.size());
    std::size_t hits = 0;
    double total = 0.0;
    for (std::size_t r = 0; r < result.size(); ++r) {
        if (result.true_rank(result.predicted_order()[r]) <= m) {
            ++hits;
            total += static_cast<double>(hits) / static_cast<double>(r + 1);
        }
    }
    return total / static_cast<double>(m);
}

double map_mean(const RankedResult& result, std::span<const std::size_t> thresholds) {
    if (thresholds.empty()) throw ValidationError("mAP needs at least one threshold");
    double total = 0.0;
    for (auto m : thresholds) total += average_precision(result, m);
    return total / static_cast<double>(thresholds.size());
}

double ndcg_at(const RankedResult& result, std::size_t k, bool* degenerate) {
    require_cutoff("NDCG@k", k, result.size());
    const auto& ev = result.events();
    auto gain = [&](std::size_t i) { return std::max(0.0, ev[i].y_true); };
    double dcg = 0.0;
    double ideal = 0.0;
    for (std::size_t r = 0; r < k; ++r) {
        const double discount = std::log2(static_cast<double>(r) + 2.0);
        dcg += gain(result.predicted_order()[r]) / discount;
        ideal += gain(result.true_order()[r]) / discount;
    }
    if (degenerate) *degenerate = ideal == 0.0;
    if (ideal == 0.0) return 1.0;
    return dcg / ideal;
}

MetricsReport evaluate_metrics(std::vector<ScoredEvent> events, const MetricsOptions& options) {
    MetricsReport report;
    report.count = events.size();
    report.mse_abs = mse_abs(events);
    report.mse_sq = mse_sq(events);
    const RankedResult result(std::move(events));
    const std::size_t n = result.size();

    for (auto k : options.ol_k) {
        if (k <= n) {
            report.ol[k] = order_loss(result, k);
        } else {
            report.warnings.push_back("OL@" + std::to_string(k) + " skipped: only " + std::to_string(n) + " events");
        }
    }
    std::vector<std::size_t> thresholds;
    for (auto m : options.map_thresholds) {
        if (m <= n) {
            thresholds.push_back(m);
            report.map_per_m[m] = average_precision(result, m);
        } else {
            report.warnings.push_back("mAP threshold " + std::to_string(m) + " skipped: only " +
                                      std::to_string(n) + " events");
        }
    }
    if (!thresholds.empty()) report.map_mean = map_mean(result, thresholds);

    report.ndcg_k = std::min(options.ndcg_k, n);
    if (report.ndcg_k < options.ndcg_k) {
        report.warnings.push_back("NDCG cut-off lowered to " + std::to_string(n));
    }
    bool degenerate = false;
    report.ndcg = ndcg_at(result, report.ndcg_k, &degenerate);
    if (degenerate) report.warnings.push_back("NDCG ideal gain is zero; reported as 1");
    return report;
}

nlohmann::json to_json(const MetricsReport& report) {
    nlohmann::json ol = nlohmann::json::object();
    for (const auto& [k, v] : report.ol) ol[std::to_string(k)] = v;
    nlohmann::json per_m = nlohmann::json::object();
    for (const auto& [m, v] : report.map_per_m) per_m[std::to_string(m)] = v;
    nlohmann::json j = {{"mse_abs", report.mse_abs},
                        {"mse_sq", report.mse_sq},
                        {"ol", ol},
                        {"map", {{"mean", report.map_mean}, {"per_m", per_m}}},
                        {"ndcg@" + std::to_string(report.ndcg_k), report.ndcg},
                        {"count", report.count}};
    if (!report.warnings.empty()) j["warnings"] = report.warnings;
    return j;
}

}  // namespace smn
