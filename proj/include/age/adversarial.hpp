#pragma once

#include <span>
#include <vector>

#include "age/nn.hpp"

namespace age {

enum class AdvMethod { fgm, pgd };

struct AdvConfig {
    AdvMethod method = AdvMethod::pgd;
    int steps = 4;                    // pgd iterations
    double zero_grad_epsilon = 1e-12;
    bool restrict_to_item = false;    // confine the direction to the arm-embedding block
};

/// Normalized ascent direction in input-embedding space. When the gradient
/// norm never exceeds zero_grad_epsilon the vector is all zeros and the
/// degenerate flag is set; callers fall back to the unperturbed prediction.
struct Direction {
    std::vector<double> g;
    bool degenerate = false;
};

/// One-step direction: grad f / ||grad f||.
Direction fgm_direction(const NetworkParams& net, const SparseFeatureVector& x,
                        const AdvConfig& cfg = {});
Direction fgm_direction_at(const NetworkParams& net, std::span<const double> h,
                           const AdvConfig& cfg = {});

/// Iterated direction: g_0 = 0, g_t = normalize(g_{t-1} + grad f(h + g_{t-1})),
/// returned after cfg.steps iterations. Every intermediate has unit norm.
Direction pgd_direction(const NetworkParams& net, const SparseFeatureVector& x,
                        const AdvConfig& cfg);
Direction pgd_direction_at(const NetworkParams& net, std::span<const double> h,
                           const AdvConfig& cfg);

/// Dispatch on cfg.method.
Direction adv_direction(const NetworkParams& net, const SparseFeatureVector& x,
                        const AdvConfig& cfg);
Direction adv_direction_at(const NetworkParams& net, std::span<const double> h,
                           const AdvConfig& cfg);

}  // namespace age
