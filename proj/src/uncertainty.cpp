#include "age/uncertainty.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "age/rng.hpp"

namespace age {

double ucb_spread(std::span<const double> samples, double base) {
    if (samples.size() < 2)
        throw std::invalid_argument("ucb_spread: needs at least 2 samples");
    double acc = 0.0;
    for (double s : samples) {
        double d = s - base;
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(samples.size() - 1));
}

double sample_std(std::span<const double> values) {
    if (values.size() < 2)
        throw std::invalid_argument("sample_std: needs at least 2 values");
    bool all_same = true;
    for (double v : values)
        if (v != values.front()) {
            all_same = false;
            break;
        }
    if (all_same) return 0.0;
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double acc = 0.0;
    for (double v : values) {
        double d = v - mean;
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(values.size() - 1));
}

double mc_ucb_uncertainty(const NetworkParams& net, const SparseFeatureVector& x,
                          const UncertaintyConfig& cfg, std::uint64_t seed) {
    if (cfg.n_samples < 2)
        throw std::invalid_argument("mc_ucb: n_samples must be at least 2");
    std::vector<double> h = gather_embedding(net, x);
    double base = forward_cache_at(net.mlp, h).prob;
    if (cfg.dropout_rate == 0.0) return 0.0;  // keep-all: every pass equals the base
    std::vector<int> hidden = net.mlp.hidden_widths();

    std::vector<double> preds(cfg.n_samples);
    for (int i = 0; i < cfg.n_samples; ++i) {
        DropoutMask mask =
            sample_mask(cfg.dropout_rate, hidden, derive_seed(seed, tag("mc_ucb"), i));
        preds[i] = forward_cache_at(net.mlp, h, &mask).prob;
    }
    return ucb_spread(preds, base);
}

double mc_ts_uncertainty(const NetworkParams& net, const SparseFeatureVector& x,
                         const UncertaintyConfig& cfg, std::uint64_t seed) {
    std::vector<double> h = gather_embedding(net, x);
    if (cfg.dropout_rate == 0.0) return 0.0;  // keep-all: the draw equals the base
    double base = forward_cache_at(net.mlp, h).prob;
    DropoutMask mask = sample_mask(cfg.dropout_rate, net.mlp.hidden_widths(),
                                   derive_seed(seed, tag("mc_ts")));
    return forward_cache_at(net.mlp, h, &mask).prob - base;
}

double ensemble_uncertainty(std::span<const Model> members, const SparseFeatureVector& x,
                            EnsembleMode mode, std::uint64_t seed) {
    if (members.size() < 2)
        throw std::invalid_argument("ensemble_uncertainty: needs at least 2 models");
    std::vector<double> preds(members.size());
    for (std::size_t i = 0; i < members.size(); ++i)
        preds[i] = forward(members[i].net, x);

    if (mode == EnsembleMode::ucb) return sample_std(preds);

    double mean = 0.0;
    for (double p : preds) mean += p;
    mean /= static_cast<double>(preds.size());
    Rng rng(derive_seed(seed, tag("ens_ts")));
    std::size_t pick = static_cast<std::size_t>(rng.below(preds.size()));
    return preds[pick] - mean;
}

double grad_norm_uncertainty(const NetworkParams& net, const SparseFeatureVector& x,
                             const UncertaintyConfig& cfg) {
    std::vector<double> h = gather_embedding(net, x);
    ForwardCache cache = forward_cache_at(net.mlp, h);
    // d f / d W_last = sigmoid'(logit) * a_last; its L2 norm factors.
    double sig_prime = cache.prob * (1.0 - cache.prob);
    const std::vector<double>& last_act =
        net.mlp.num_hidden() > 0 ? cache.post.back() : cache.input;
    double norm2 = 0.0;
    for (double a : last_act) norm2 += a * a;
    return cfg.grad_scale * sig_prime * std::sqrt(norm2);
}

}  // namespace age
