#include "age/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace age {

Pcoc compute_pcoc(std::span<const double> predictions, std::span<const int> clicks) {
    if (predictions.size() != clicks.size())
        throw std::invalid_argument("pcoc: prediction/click length mismatch");
    if (predictions.empty()) return {0.0, false};
    double pred_sum = 0.0;
    std::int64_t click_sum = 0;
    for (double p : predictions) pred_sum += p;
    for (int c : clicks) click_sum += c;
    return compute_pcoc(pred_sum, static_cast<std::int64_t>(predictions.size()), click_sum);
}

Pcoc compute_pcoc(double pred_sum, std::int64_t n, std::int64_t clicks) {
    if (n <= 0 || clicks <= 0) return {0.0, false};
    double mean_pred = pred_sum / static_cast<double>(n);
    double mean_click = static_cast<double>(clicks) / static_cast<double>(n);
    return {mean_pred / mean_click, true};
}

ArmCurveTracker::ArmCurveTracker(std::int64_t arm_space) {
    if (arm_space <= 0) throw std::invalid_argument("curve tracker: arm_space must be positive");
    cells_.resize(static_cast<std::size_t>(arm_space));
}

void ArmCurveTracker::record(std::int32_t arm_id, int click, double prediction) {
    if (arm_id < 0 || static_cast<std::size_t>(arm_id) >= cells_.size())
        throw std::invalid_argument("curve tracker: arm id out of range");
    Cell& c = cells_[static_cast<std::size_t>(arm_id)];
    c.impressions += 1;
    c.clicks += click;
    c.pred_sum += prediction;
    std::int64_t n = c.impressions;
    if ((n & (n - 1)) == 0) {
        points_.push_back({arm_id, n,
                           static_cast<double>(c.clicks) / static_cast<double>(n),
                           c.pred_sum / static_cast<double>(n)});
    }
}

const ArmCurveTracker::Cell& ArmCurveTracker::cell(std::int32_t arm_id) const {
    if (arm_id < 0 || static_cast<std::size_t>(arm_id) >= cells_.size())
        throw std::invalid_argument("curve tracker: arm id out of range");
    return cells_[static_cast<std::size_t>(arm_id)];
}

std::vector<std::pair<std::int64_t, double>> convergence_curve(
    std::span<const ArmCurvePoint> points, std::span<const std::int32_t> arm_filter) {
    if (arm_filter.empty()) throw std::invalid_argument("convergence_curve: empty arm filter");

    std::map<std::int64_t, std::pair<double, std::int64_t>> acc;  // level -> (sum, count)
    for (const ArmCurvePoint& p : points) {
        bool wanted = std::find(arm_filter.begin(), arm_filter.end(), p.arm_id) !=
                      arm_filter.end();
        if (!wanted) continue;
        if (p.empirical_ctr <= 0.0) continue;  // PCOC undefined without clicks
        double err = std::abs(p.mean_pred / p.empirical_ctr - 1.0);
        auto& slot = acc[p.impressions];
        slot.first += err;
        slot.second += 1;
    }
    std::vector<std::pair<std::int64_t, double>> out;
    out.reserve(acc.size());
    for (const auto& [level, slot] : acc)
        out.push_back({level, slot.first / static_cast<double>(slot.second)});
    return out;
}

double mean_of(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("mean: empty sample");
    double acc = 0.0;
    for (double v : values) acc += v;
    return acc / static_cast<double>(values.size());
}

double std_of(std::span<const double> values) {
    if (values.size() < 2) return 0.0;
    double m = mean_of(values);
    double acc = 0.0;
    for (double v : values) acc += (v - m) * (v - m);
    return std::sqrt(acc / static_cast<double>(values.size() - 1));
}

}  // namespace age
