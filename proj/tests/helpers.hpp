#pragma once

// Shared fixtures for the test binaries: small random networks, valid random
// inputs, and finite-difference gradients to check analytic ones against.

#include <cmath>
#include <vector>

#include "age/nn.hpp"
#include "age/rng.hpp"

namespace testutil {

struct NetSpec {
    std::int64_t feature_space = 12;
    std::int64_t arm_space = 6;
    int dim = 3;
    int fields = 2;
    std::vector<int> hidden = {8, 4};
};

inline age::NetworkParams small_net(std::uint64_t seed, const NetSpec& s = {}) {
    return age::make_network(s.feature_space, s.arm_space, s.dim, s.fields, s.hidden, seed);
}

// One strictly increasing index per field, each drawn from its own slice of
// the feature space so collisions cannot occur.
inline age::SparseFeatureVector random_input(const age::NetworkParams& net,
                                             std::uint64_t seed) {
    age::Rng rng(seed);
    age::SparseFeatureVector x;
    std::int64_t per_field = net.emb.feature_space / net.num_user_fields;
    for (int f = 0; f < net.num_user_fields; ++f)
        x.active_indices.push_back(
            static_cast<std::int32_t>(f * per_field + rng.below(per_field)));
    x.arm_id = static_cast<std::int32_t>(rng.below(net.emb.arm_space));
    return x;
}

// Central finite difference of the prediction with respect to the embedding
// input, evaluated one coordinate at a time.
inline std::vector<double> fd_input_gradient(const age::NetworkParams& net,
                                             const age::SparseFeatureVector& x,
                                             double eps = 1e-6) {
    std::vector<double> h = age::gather_embedding(net, x);
    std::vector<double> g(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) {
        std::vector<double> hp = h, hm = h;
        hp[i] += eps;
        hm[i] -= eps;
        g[i] = (age::forward_at(net, hp) - age::forward_at(net, hm)) / (2.0 * eps);
    }
    return g;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst;
}

inline double l2_norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace testutil
