#include "age/policies.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "age/rng.hpp"

namespace age {

namespace {

void require_pool(std::span<const SparseFeatureVector> pool) {
    if (pool.empty()) throw std::invalid_argument("select: empty pool");
}

// Argmax with ties going to the lowest arm id.
std::size_t argmax_index(std::span<const SparseFeatureVector> pool,
                         std::span<const double> scores) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < pool.size(); ++i) {
        if (scores[i] > scores[best] ||
            (scores[i] == scores[best] && pool[i].arm_id < pool[best].arm_id))
            best = i;
    }
    return best;
}

double median_of(std::vector<double> v) {
    if (v.empty()) throw std::invalid_argument("median: empty sample");
    std::sort(v.begin(), v.end());
    std::size_t mid = v.size() / 2;
    return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

}  // namespace

std::string policy_kind_name(PolicyKind kind) {
    switch (kind) {
        case PolicyKind::vanilla: return "vanilla";
        case PolicyKind::random_choice: return "random";
        case PolicyKind::eps_greedy: return "eps_greedy";
        case PolicyKind::ensemble_ts: return "ensemble_ts";
        case PolicyKind::ensemble_ucb: return "ensemble_ucb";
        case PolicyKind::gradient_ts: return "gradient_ts";
        case PolicyKind::gradient_ucb: return "gradient_ucb";
        case PolicyKind::age_ts: return "age_ts";
        case PolicyKind::age_ucb: return "age_ucb";
        case PolicyKind::oracle: return "oracle";
    }
    throw std::invalid_argument("policy_kind_name: unknown kind");
}

PolicyKind policy_kind_from_name(const std::string& name) {
    for (PolicyKind k :
         {PolicyKind::vanilla, PolicyKind::random_choice, PolicyKind::eps_greedy,
          PolicyKind::ensemble_ts, PolicyKind::ensemble_ucb, PolicyKind::gradient_ts,
          PolicyKind::gradient_ucb, PolicyKind::age_ts, PolicyKind::age_ucb, PolicyKind::oracle})
        if (policy_kind_name(k) == name) return k;
    throw std::invalid_argument("unknown policy kind: " + name);
}

void validate_policy_config(const PolicyConfig& cfg) {
    if (!(cfg.epsilon >= 0.0 && cfg.epsilon <= 1.0))
        throw std::invalid_argument("policy: epsilon must lie in [0,1]");
    if (cfg.ensemble_size < 1)
        throw std::invalid_argument("policy: ensemble_size must be positive");
    if (!(cfg.age.lambda > 0.0)) throw std::invalid_argument("policy: lambda must be positive");
    if (cfg.age.adv.steps < 1) throw std::invalid_argument("policy: pgd steps must be positive");
    if (!(cfg.train_dropout_rate >= 0.0 && cfg.train_dropout_rate < 1.0))
        throw std::invalid_argument("policy: train_dropout_rate must lie in [0,1)");
    if (!(cfg.uncertainty.dropout_rate >= 0.0 && cfg.uncertainty.dropout_rate < 1.0))
        throw std::invalid_argument("policy: uncertainty dropout_rate must lie in [0,1)");
    if (cfg.uncertainty.n_samples < 2)
        throw std::invalid_argument("policy: n_samples must be at least 2");
}

std::int32_t vanilla_select(const NetworkParams& net, std::span<const SparseFeatureVector> pool) {
    require_pool(pool);
    std::vector<double> scores(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) scores[i] = forward(net, pool[i]);
    return pool[argmax_index(pool, scores)].arm_id;
}

std::int32_t random_select(std::span<const SparseFeatureVector> pool, std::uint64_t seed) {
    require_pool(pool);
    Rng rng(seed);
    return pool[static_cast<std::size_t>(rng.below(pool.size()))].arm_id;
}

std::int32_t eps_greedy_select(const NetworkParams& net, std::span<const SparseFeatureVector> pool,
                               double epsilon, std::uint64_t seed) {
    require_pool(pool);
    if (!(epsilon >= 0.0 && epsilon <= 1.0))
        throw std::invalid_argument("eps_greedy: epsilon must lie in [0,1]");
    Rng rng(seed);
    if (rng.uniform() < epsilon)
        return pool[static_cast<std::size_t>(rng.below(pool.size()))].arm_id;
    return vanilla_select(net, pool);
}

std::int32_t ensemble_select(std::span<const Model> members,
                             std::span<const SparseFeatureVector> pool, EnsembleMode mode,
                             std::uint64_t seed) {
    require_pool(pool);
    if (members.empty()) throw std::invalid_argument("ensemble_select: no members");

    if (mode == EnsembleMode::ts) {
        Rng rng(derive_seed(seed, tag("ens_pick")));
        const Model& m = members[static_cast<std::size_t>(rng.below(members.size()))];
        return vanilla_select(m.net, pool);
    }

    std::vector<double> scores(pool.size());
    std::vector<double> preds(members.size());
    for (std::size_t i = 0; i < pool.size(); ++i) {
        for (std::size_t m = 0; m < members.size(); ++m)
            preds[m] = forward(members[m].net, pool[i]);
        double mean = 0.0;
        for (double p : preds) mean += p;
        mean /= static_cast<double>(preds.size());
        scores[i] = mean + (members.size() > 1 ? sample_std(preds) : 0.0);
    }
    return pool[argmax_index(pool, scores)].arm_id;
}

std::int32_t gradient_select(const NetworkParams& net, std::span<const SparseFeatureVector> pool,
                             EnsembleMode mode, const UncertaintyConfig& cfg,
                             std::uint64_t seed) {
    require_pool(pool);
    std::vector<double> scores(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) {
        double base = forward(net, pool[i]);
        double width = grad_norm_uncertainty(net, pool[i], cfg);
        if (mode == EnsembleMode::ucb) {
            scores[i] = base + width;
        } else {
            Rng rng(derive_seed(seed, tag("grad_ts"), i));
            scores[i] = base + rng.normal() * width;
        }
    }
    return pool[argmax_index(pool, scores)].arm_id;
}

BanditPolicy::BanditPolicy(const PolicyConfig& cfg, std::int64_t feature_space,
                           std::int64_t arm_space, int num_user_fields, std::uint64_t seed)
    : cfg_(cfg), seed_(seed) {
    validate_policy_config(cfg_);
    bool ensemble =
        cfg_.kind == PolicyKind::ensemble_ts || cfg_.kind == PolicyKind::ensemble_ucb;
    int members = ensemble ? cfg_.ensemble_size : 1;
    models_.reserve(members);
    for (int m = 0; m < members; ++m)
        models_.push_back(make_model(feature_space, arm_space, num_user_fields, cfg_.network,
                                     derive_seed(seed, tag("member_init"), m)));
    if (cfg_.kind == PolicyKind::age_ts) cfg_.age.uncertainty.method = UncertaintyMethod::mc_ts;
    if (cfg_.kind == PolicyKind::age_ucb) cfg_.age.uncertainty.method = UncertaintyMethod::mc_ucb;
}

std::int32_t BanditPolicy::select(std::span<const SparseFeatureVector> pool,
                                  std::int64_t event_index, std::int32_t hint,
                                  std::span<const std::int64_t> impressions, Exec exec) {
    require_pool(pool);
    switch (cfg_.kind) {
        case PolicyKind::vanilla:
            return vanilla_select(primary().net, pool);
        case PolicyKind::random_choice:
            return random_select(pool, derive_seed(seed_, tag("random"), event_index));
        case PolicyKind::eps_greedy:
            return eps_greedy_select(primary().net, pool, cfg_.epsilon,
                                     derive_seed(seed_, tag("eps"), event_index));
        case PolicyKind::ensemble_ts:
            return ensemble_select(models_, pool, EnsembleMode::ts,
                                   derive_seed(seed_, tag("ens"), event_index));
        case PolicyKind::ensemble_ucb:
            return ensemble_select(models_, pool, EnsembleMode::ucb,
                                   derive_seed(seed_, tag("ens"), event_index));
        case PolicyKind::gradient_ts:
            return gradient_select(primary().net, pool, EnsembleMode::ts, cfg_.uncertainty,
                                   derive_seed(seed_, tag("grad"), event_index));
        case PolicyKind::gradient_ucb:
            return gradient_select(primary().net, pool, EnsembleMode::ucb, cfg_.uncertainty,
                                   derive_seed(seed_, tag("grad"), event_index));
        case PolicyKind::age_ts:
        case PolicyKind::age_ucb:
            return select_arm(primary(), pool, cfg_.age, impressions,
                              derive_seed(seed_, tag("age"), event_index), exec)
                .arm_id;
        case PolicyKind::oracle:
            if (hint < 0) throw std::invalid_argument("oracle policy needs a hint");
            return hint;
    }
    throw std::invalid_argument("select: unknown policy kind");
}

void BanditPolicy::update(const SparseFeatureVector& x, int click, std::int64_t event_index) {
    for (std::size_t m = 0; m < models_.size(); ++m)
        train_step(models_[m], x, click, cfg_.train_dropout_rate,
                   derive_seed(seed_, tag("train"), m, event_index));
}

double BanditPolicy::predict(const SparseFeatureVector& x) const {
    double acc = 0.0;
    for (const Model& m : models_) acc += forward(m.net, x);
    return acc / static_cast<double>(models_.size());
}

void BanditPolicy::calibrate_grad_scale(std::span<const SparseFeatureVector> probes) {
    cfg_.uncertainty.grad_scale =
        grad_scale_for(primary(), probes, cfg_.uncertainty, derive_seed(seed_, tag("calib")));
}

std::uint64_t BanditPolicy::state_digest() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const Model& m : models_) {
        std::uint64_t d = digest(m);
        h = (h ^ d) * 0x100000001b3ULL;
    }
    return h;
}

double grad_scale_for(const Model& model, std::span<const SparseFeatureVector> probes,
                      const UncertaintyConfig& cfg, std::uint64_t seed) {
    if (probes.empty()) throw std::invalid_argument("grad_scale_for: no probe inputs");
    UncertaintyConfig raw = cfg;
    raw.grad_scale = 1.0;
    std::vector<double> mc(probes.size()), gn(probes.size());
    for (std::size_t i = 0; i < probes.size(); ++i) {
        mc[i] = mc_ucb_uncertainty(model.net, probes[i], raw, derive_seed(seed, i));
        gn[i] = grad_norm_uncertainty(model.net, probes[i], raw);
    }
    double denom = median_of(gn);
    if (denom <= 0.0) return 1.0;
    return median_of(mc) / denom;
}

}  // namespace age
