#include "age/age_policy.hpp"

#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "age/rng.hpp"

namespace age {

namespace {

std::vector<double> random_unit(std::size_t width, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> v(width);
    double norm2 = 0.0;
    for (double& c : v) {
        c = rng.normal();
        norm2 += c * c;
    }
    double norm = std::sqrt(norm2);
    if (norm <= 1e-12) return std::vector<double>(width, 0.0);
    for (double& c : v) c /= norm;
    return v;
}

double uncertainty_value(const Model& model, const SparseFeatureVector& x,
                         const UncertaintyConfig& cfg, std::uint64_t seed) {
    switch (cfg.method) {
        case UncertaintyMethod::mc_ucb:
            return mc_ucb_uncertainty(model.net, x, cfg, seed);
        case UncertaintyMethod::mc_ts:
            return mc_ts_uncertainty(model.net, x, cfg, seed);
        case UncertaintyMethod::grad_norm:
            return grad_norm_uncertainty(model.net, x, cfg);
        default:
            throw std::invalid_argument("age_score: ensemble uncertainty needs a model set");
    }
}

}  // namespace

std::string to_json(const ScoreBreakdown& b) {
    nlohmann::json j{{"base_pred", b.base_pred},
                     {"uncertainty", b.uncertainty},
                     {"direction", b.direction},
                     {"direction_degenerate", b.direction_degenerate},
                     {"gate", b.gate},
                     {"eligible", b.eligible},
                     {"final_score", b.final_score}};
    return j.dump();
}

int dgu_gate(const Model& model, double main_pred, std::int32_t arm_id,
             const std::optional<double>& fixed_threshold) {
    double baseline = fixed_threshold ? *fixed_threshold : shallow_forward(model, arm_id);
    return main_pred >= baseline ? 1 : 0;
}

ScoreBreakdown age_score(const Model& model, const SparseFeatureVector& x,
                         const AgeConfig& cfg, std::int64_t arm_impression_count,
                         std::uint64_t seed) {
    if (!(cfg.lambda > 0.0)) throw std::invalid_argument("age_score: lambda must be positive");

    std::vector<double> h = gather_embedding(model.net, x);
    ScoreBreakdown out;
    out.base_pred = forward_at(model.net, h);

    out.uncertainty = cfg.ablate_delta_random
                          ? Rng(derive_seed(seed, tag("ablate_delta"))).normal()
                          : uncertainty_value(model, x, cfg.uncertainty,
                                              derive_seed(seed, tag("uncertainty")));

    Direction dir;
    if (cfg.ablate_direction_random) {
        dir.g = random_unit(h.size(), derive_seed(seed, tag("ablate_dir")));
        bool all_zero = true;
        for (double c : dir.g)
            if (c != 0.0) all_zero = false;
        dir.degenerate = all_zero;
    } else {
        dir = adv_direction_at(model.net, h, cfg.adv);
    }
    out.direction = dir.g;
    out.direction_degenerate = dir.degenerate;

    out.gate = cfg.dgu_enabled
                   ? dgu_gate(model, out.base_pred, x.arm_id, cfg.dgu_fixed_threshold)
                   : 1;
    out.eligible = arm_impression_count < cfg.impression_cap;

    double scale = (out.eligible ? 1.0 : 0.0) * out.gate * cfg.lambda * out.uncertainty;
    if (dir.degenerate || scale == 0.0) {
        out.final_score = out.base_pred;
        return out;
    }
    for (std::size_t i = 0; i < h.size(); ++i) h[i] += scale * dir.g[i];
    out.final_score = forward_at(model.net, h);
    return out;
}

Selection select_arm(const Model& model, std::span<const SparseFeatureVector> pool,
                     const AgeConfig& cfg, std::span<const std::int64_t> impression_counts,
                     std::uint64_t seed, Exec exec) {
    if (pool.empty()) throw std::invalid_argument("select_arm: empty pool");
    if (!impression_counts.empty() && impression_counts.size() != pool.size())
        throw std::invalid_argument("select_arm: impression counts do not align with pool");

    std::int64_t n = static_cast<std::int64_t>(pool.size());
    Selection sel;
    sel.breakdowns.resize(pool.size());

    pool_for(exec, n, [&](std::int64_t i) {
        std::int64_t impressions = impression_counts.empty() ? 0 : impression_counts[i];
        sel.breakdowns[i] =
            age_score(model, pool[i], cfg, impressions, derive_seed(seed, tag("cand"), i));
    });

    std::size_t best = 0;
    for (std::size_t i = 1; i < pool.size(); ++i) {
        double s = sel.breakdowns[i].final_score;
        double b = sel.breakdowns[best].final_score;
        if (s > b || (s == b && pool[i].arm_id < pool[best].arm_id)) best = i;
    }
    sel.arm_id = pool[best].arm_id;
    sel.pool_index = best;
    return sel;
}

TrainLosses train_step(Model& model, const SparseFeatureVector& x, int label,
                       double dropout_rate, std::uint64_t seed) {
    if (label != 0 && label != 1) throw std::invalid_argument("train_step: label must be 0 or 1");

    // Shallow pass first, on the pre-update embedding snapshot. The input
    // gradient is never requested, which is what stops the shared embedding
    // from moving under the shallow loss.
    const double* arm_row = model.net.emb.row(model.net.emb.arm_row(x.arm_id));
    std::span<const double> h_item(arm_row, static_cast<std::size_t>(model.net.emb.dim));
    ForwardCache shallow_cache = forward_cache_at(model.shallow, h_item);
    double shallow_loss = cross_entropy(shallow_cache.prob, label);
    MlpGrads shallow_grads;
    backprop(model.shallow, shallow_cache, shallow_cache.prob - label, &shallow_grads, nullptr);

    LossResult main;
    if (dropout_rate > 0.0) {
        DropoutMask mask = sample_mask(dropout_rate, model.net.mlp.hidden_widths(),
                                       derive_seed(seed, tag("train_mask")));
        main = loss_and_grads(model.net, x, label, &mask);
    } else {
        main = loss_and_grads(model.net, x, label);
    }

    adam_step(model.net, main.grads, model.net_state);
    adam_step(model.shallow, shallow_grads, model.shallow_state);
    return {main.loss, shallow_loss};
}

Collinearity expected_update_collinearity(const NetworkParams& net, const SparseFeatureVector& x,
                                          double true_ctr, double sgd_lr) {
    if (!(sgd_lr > 0.0))
        throw std::invalid_argument("collinearity: learning rate must be positive");
    if (!(true_ctr >= 0.0 && true_ctr <= 1.0))
        throw std::invalid_argument("collinearity: true_ctr must lie in [0,1]");

    std::vector<double> h = gather_embedding(net, x);
    ForwardCache cache = forward_cache_at(net.mlp, h);

    // Loss gradients with respect to h for each label outcome.
    std::vector<double> g_click, g_skip;
    backprop(net.mlp, cache, cache.prob - 1.0, nullptr, &g_click);
    backprop(net.mlp, cache, cache.prob - 0.0, nullptr, &g_skip);

    // Expected plain-gradient-descent displacement under y ~ Bernoulli(p).
    std::vector<double> disp(h.size());
    double norm2 = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        disp[i] = sgd_lr * (true_ctr * -g_click[i] + (1.0 - true_ctr) * -g_skip[i]);
        norm2 += disp[i] * disp[i];
    }
    double norm = std::sqrt(norm2);

    Direction dir = fgm_direction_at(net, h, AdvConfig{});
    if (dir.degenerate || norm <= 1e-12) return {0.0, true};

    double dot = 0.0;
    for (std::size_t i = 0; i < disp.size(); ++i) dot += disp[i] * dir.g[i];
    return {dot / norm, false};
}

}  // namespace age
