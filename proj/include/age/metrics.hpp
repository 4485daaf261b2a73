#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace age {

/// Calibration ratio: mean predicted CTR over mean realized click rate.
/// Undefined (flagged) when no clicks landed in the window.
struct Pcoc {
    double value = 0.0;
    bool defined = false;
};

Pcoc compute_pcoc(std::span<const double> predictions, std::span<const int> clicks);
Pcoc compute_pcoc(double pred_sum, std::int64_t n, std::int64_t clicks);

/// One calibration sample for one arm, taken at a power-of-two impression
/// count: empirical CTR so far versus the mean of the predictions that were
/// live when the arm was served.
struct ArmCurvePoint {
    std::int32_t arm_id = 0;
    std::int64_t impressions = 0;
    double empirical_ctr = 0.0;
    double mean_pred = 0.0;
};

/// Per-arm impression/click/prediction accumulators that emit an
/// ArmCurvePoint whenever an arm's impression count hits a power of two.
class ArmCurveTracker {
  public:
    struct Cell {
        std::int64_t impressions = 0;
        std::int64_t clicks = 0;
        double pred_sum = 0.0;
    };

    explicit ArmCurveTracker(std::int64_t arm_space);

    void record(std::int32_t arm_id, int click, double prediction);

    const Cell& cell(std::int32_t arm_id) const;
    std::span<const ArmCurvePoint> points() const { return points_; }

  private:
    std::vector<Cell> cells_;
    std::vector<ArmCurvePoint> points_;
};

/// Mean |PCOC - 1| per impression level, over the arms selected by the
/// filter. Levels where no selected arm has a defined PCOC are skipped.
/// An empty filter is an input-domain error.
std::vector<std::pair<std::int64_t, double>> convergence_curve(
    std::span<const ArmCurvePoint> points, std::span<const std::int32_t> arm_filter);

double mean_of(std::span<const double> values);
double std_of(std::span<const double> values);  // sample std, N-1

}  // namespace age
