#include "age/adversarial.hpp"

#include <cmath>
#include <stdexcept>

namespace age {

namespace {

void check_cfg(const AdvConfig& cfg) {
    if (cfg.steps < 1) throw std::invalid_argument("adv: steps must be at least 1");
    if (!(cfg.zero_grad_epsilon > 0.0))
        throw std::invalid_argument("adv: zero_grad_epsilon must be positive");
}

// Zeroes every coordinate outside the arm-embedding block (the last dim
// entries of the concatenated input).
void mask_to_item(const NetworkParams& net, std::vector<double>& v) {
    std::size_t user_width =
        static_cast<std::size_t>(net.num_user_fields) * static_cast<std::size_t>(net.emb.dim);
    for (std::size_t i = 0; i < user_width && i < v.size(); ++i) v[i] = 0.0;
}

double l2_norm(const std::vector<double>& v) {
    double acc = 0.0;
    for (double c : v) acc += c * c;
    return std::sqrt(acc);
}

Direction degenerate_at(std::size_t width) {
    Direction d;
    d.g.assign(width, 0.0);
    d.degenerate = true;
    return d;
}

}  // namespace

Direction fgm_direction_at(const NetworkParams& net, std::span<const double> h,
                           const AdvConfig& cfg) {
    check_cfg(cfg);
    std::vector<double> grad = grad_wrt_embedding_at(net.mlp, h);
    if (cfg.restrict_to_item) mask_to_item(net, grad);
    double norm = l2_norm(grad);
    if (!(norm > cfg.zero_grad_epsilon)) return degenerate_at(h.size());
    for (double& c : grad) c /= norm;
    return {std::move(grad), false};
}

Direction pgd_direction_at(const NetworkParams& net, std::span<const double> h,
                           const AdvConfig& cfg) {
    check_cfg(cfg);
    std::vector<double> g(h.size(), 0.0);
    std::vector<double> probe(h.size());
    for (int t = 0; t < cfg.steps; ++t) {
        for (std::size_t i = 0; i < h.size(); ++i) probe[i] = h[i] + g[i];
        std::vector<double> grad = grad_wrt_embedding_at(net.mlp, probe);
        if (cfg.restrict_to_item) mask_to_item(net, grad);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += grad[i];
        double norm = l2_norm(g);
        if (!(norm > cfg.zero_grad_epsilon)) return degenerate_at(h.size());
        for (double& c : g) c /= norm;
    }
    return {std::move(g), false};
}

Direction fgm_direction(const NetworkParams& net, const SparseFeatureVector& x,
                        const AdvConfig& cfg) {
    return fgm_direction_at(net, gather_embedding(net, x), cfg);
}

Direction pgd_direction(const NetworkParams& net, const SparseFeatureVector& x,
                        const AdvConfig& cfg) {
    return pgd_direction_at(net, gather_embedding(net, x), cfg);
}

Direction adv_direction_at(const NetworkParams& net, std::span<const double> h,
                           const AdvConfig& cfg) {
    return cfg.method == AdvMethod::fgm ? fgm_direction_at(net, h, cfg)
                                        : pgd_direction_at(net, h, cfg);
}

Direction adv_direction(const NetworkParams& net, const SparseFeatureVector& x,
                        const AdvConfig& cfg) {
    return adv_direction_at(net, gather_embedding(net, x), cfg);
}

}  // namespace age
