#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "age/adversarial.hpp"
#include "age/model.hpp"
#include "age/parallel.hpp"
#include "age/uncertainty.hpp"

namespace age {

struct AgeConfig {
    double lambda = 1e-3;  // exploration step size
    UncertaintyConfig uncertainty;
    AdvConfig adv;
    // Arms at or above the cap are served without exploration.
    std::int64_t impression_cap = std::numeric_limits<std::int64_t>::max();
    bool dgu_enabled = true;
    // Replaces the learned gate baseline with a constant.
    std::optional<double> dgu_fixed_threshold;
    // Component knock-outs: substitute the uncertainty value with a standard
    // normal draw, or the direction with a uniformly random unit vector.
    bool ablate_delta_random = false;
    bool ablate_direction_random = false;
};

struct ScoreBreakdown {
    double base_pred = 0.0;
    double uncertainty = 0.0;
    std::vector<double> direction;
    bool direction_degenerate = false;
    int gate = 1;
    bool eligible = true;
    double final_score = 0.0;
};

/// One JSON object per scored candidate, for audit logs.
std::string to_json(const ScoreBreakdown& b);

/// 1 when the personalized prediction is at least the arm-level baseline
/// (the shallow net's output, or `fixed_threshold` when set), else 0.
int dgu_gate(const Model& model, double main_pred, std::int32_t arm_id,
             const std::optional<double>& fixed_threshold = std::nullopt);

/// Exploration-adjusted score for one candidate: perturbs the input embedding
/// by gate * lambda * uncertainty along the adversarial direction and
/// re-evaluates the network.
ScoreBreakdown age_score(const Model& model, const SparseFeatureVector& x,
                         const AgeConfig& cfg, std::int64_t arm_impression_count,
                         std::uint64_t seed);

struct Selection {
    std::int32_t arm_id = -1;
    std::size_t pool_index = 0;
    std::vector<ScoreBreakdown> breakdowns;  // pool order
};

/// Argmax of final_score over the pool; ties go to the lowest arm_id.
/// impression_counts aligns with the pool (empty means all zero).
Selection select_arm(const Model& model, std::span<const SparseFeatureVector> pool,
                     const AgeConfig& cfg, std::span<const std::int64_t> impression_counts,
                     std::uint64_t seed, Exec exec = Exec::parallel);

struct TrainLosses {
    double main_loss = 0.0;
    double shallow_loss = 0.0;
};

/// Joint step: the main net trains on the dropout-masked prediction and
/// updates the embeddings; the shallow net trains on the arm embedding with
/// the gradient stopped there, so only its own layers move.
TrainLosses train_step(Model& model, const SparseFeatureVector& x, int label,
                       double dropout_rate, std::uint64_t seed);

struct Collinearity {
    double cosine = 0.0;
    bool degenerate = false;
};

/// Cosine between the expected one-step plain-gradient-descent displacement
/// of the input embedding under labels y ~ Bernoulli(true_ctr) and the
/// one-step adversarial direction. Flagged when either side vanishes.
Collinearity expected_update_collinearity(const NetworkParams& net, const SparseFeatureVector& x,
                                          double true_ctr, double sgd_lr);

}  // namespace age
