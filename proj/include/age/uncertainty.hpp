#pragma once

#include <cstdint>
#include <span>

#include "age/model.hpp"
#include "age/nn.hpp"

namespace age {

enum class UncertaintyMethod { mc_ucb, mc_ts, ensemble_ucb, ensemble_ts, grad_norm };

struct UncertaintyConfig {
    UncertaintyMethod method = UncertaintyMethod::mc_ucb;
    int n_samples = 20;          // dropout passes for mc_ucb
    double dropout_rate = 0.01;  // mask rate for the MC estimators
    double grad_scale = 1.0;     // multiplier for grad_norm
};

/// Spread of `samples` around `base`: sqrt(sum (s_i - base)^2 / (N-1)).
double ucb_spread(std::span<const double> samples, double base);

/// Sample standard deviation with the N-1 denominator.
double sample_std(std::span<const double> values);

/// Upper-confidence uncertainty from N dropout passes against the
/// non-dropout prediction. Non-negative; zero iff every pass agrees
/// with the base. Requires n_samples >= 2.
double mc_ucb_uncertainty(const NetworkParams& net, const SparseFeatureVector& x,
                          const UncertaintyConfig& cfg, std::uint64_t seed);

/// Signed posterior-style draw: one dropout prediction minus the base.
double mc_ts_uncertainty(const NetworkParams& net, const SparseFeatureVector& x,
                         const UncertaintyConfig& cfg, std::uint64_t seed);

enum class EnsembleMode { ucb, ts };

/// ucb: sample std of the member predictions.
/// ts: one uniformly drawn member's prediction minus the ensemble mean.
double ensemble_uncertainty(std::span<const Model> members, const SparseFeatureVector& x,
                            EnsembleMode mode, std::uint64_t seed);

/// grad_scale times the L2 norm of d f / d (final-layer weights); the bias
/// term is excluded.
double grad_norm_uncertainty(const NetworkParams& net, const SparseFeatureVector& x,
                             const UncertaintyConfig& cfg);

}  // namespace age
