#include "age/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "age/nn.hpp"
#include "age/rng.hpp"

namespace age {

namespace {

using nlohmann::json;

double squash(const SyntheticWorldSpec& spec, double z) {
    return spec.ctr_low + (spec.ctr_high - spec.ctr_low) * stable_sigmoid(z);
}

}  // namespace

void validate_world_spec(const SyntheticWorldSpec& spec) {
    if (spec.num_arms < 1) throw std::invalid_argument("world: num_arms must be positive");
    if (spec.num_user_fields < 1)
        throw std::invalid_argument("world: num_user_fields must be positive");
    if (spec.feature_space < spec.num_user_fields)
        throw std::invalid_argument("world: feature_space smaller than the field count");
    if (spec.feature_space % spec.num_user_fields != 0)
        throw std::invalid_argument("world: feature_space must divide evenly across fields");
    if (spec.teacher_dim < 1) throw std::invalid_argument("world: teacher_dim must be positive");
    if (!(spec.zipf_exponent >= 0.0))
        throw std::invalid_argument("world: zipf_exponent must be non-negative");
    if (!(spec.ctr_low > 0.0 && spec.ctr_high > spec.ctr_low && spec.ctr_high < 1.0))
        throw std::invalid_argument("world: ctr range must satisfy 0 < low < high < 1");
    if (spec.preset != "default" && spec.preset != "low_ctr_heavy")
        throw std::invalid_argument("world: unknown preset '" + spec.preset + "'");
}

SyntheticWorld build_world(const SyntheticWorldSpec& spec) {
    validate_world_spec(spec);
    SyntheticWorld w;
    w.spec = spec;

    int k = spec.teacher_dim;
    w.user_latent.resize(static_cast<std::size_t>(spec.feature_space) * k);
    {
        Rng rng(derive_seed(spec.seed, tag("teacher_user")));
        for (double& v : w.user_latent) v = 2.0 * rng.uniform() - 1.0;
    }
    // Arm latents scaled so |dot| stays within about 1.5 and the bias band
    // controls each arm's CTR regime.
    double scale = 1.5 / static_cast<double>(k);
    w.arm_latent.resize(static_cast<std::size_t>(spec.num_arms) * k);
    {
        Rng rng(derive_seed(spec.seed, tag("teacher_arm")));
        for (double& v : w.arm_latent) v = (2.0 * rng.uniform() - 1.0) * scale;
    }

    w.arm_bias.resize(static_cast<std::size_t>(spec.num_arms));
    for (std::int64_t a = 0; a < spec.num_arms; ++a) {
        Rng rng(derive_seed(spec.seed, tag("teacher_bias"), a));
        // low_ctr_heavy assigns bands by index so the 80% share holds exactly
        // and the rare healthy arms sit at every popularity rank.
        bool low_band = spec.preset == "low_ctr_heavy" &&
                        a % 5 != 4;  // 4 of every 5 arms
        if (low_band) {
            // z stays below -3.5 even at maximal affinity, keeping CTR < 2%.
            w.arm_bias[a] = -6.0 + rng.uniform();
        } else if (spec.preset == "low_ctr_heavy") {
            w.arm_bias[a] = -2.5 + 2.0 * rng.uniform();
        } else {
            w.arm_bias[a] = -3.5 + 3.0 * rng.uniform();
        }
    }

    w.zipf_cdf.resize(static_cast<std::size_t>(spec.num_arms));
    double acc = 0.0;
    for (std::int64_t a = 0; a < spec.num_arms; ++a) {
        acc += std::pow(static_cast<double>(a + 1), -spec.zipf_exponent);
        w.zipf_cdf[a] = acc;
    }
    for (double& c : w.zipf_cdf) c /= acc;
    w.zipf_cdf.back() = 1.0;
    return w;
}

double SyntheticWorld::true_ctr(const std::vector<std::int32_t>& user_indices,
                                std::int32_t arm_id) const {
    if (arm_id < 0 || arm_id >= spec.num_arms)
        throw std::invalid_argument("world: arm id out of range");
    if (static_cast<int>(user_indices.size()) != spec.num_user_fields)
        throw std::invalid_argument("world: wrong user field count");
    int k = spec.teacher_dim;
    double z = arm_bias[static_cast<std::size_t>(arm_id)];
    const double* v = arm_latent.data() + static_cast<std::size_t>(arm_id) * k;
    double inv_fields = 1.0 / static_cast<double>(spec.num_user_fields);
    for (std::int32_t idx : user_indices) {
        if (idx < 0 || idx >= spec.feature_space)
            throw std::invalid_argument("world: user index out of range");
        const double* u = user_latent.data() + static_cast<std::size_t>(idx) * k;
        double dot = 0.0;
        for (int d = 0; d < k; ++d) dot += u[d] * v[d];
        z += dot * inv_fields;
    }
    return squash(spec, z);
}

std::vector<std::int32_t> SyntheticWorld::sample_user(std::uint64_t seed) const {
    Rng rng(seed);
    std::int64_t per_field = field_size();
    std::vector<std::int32_t> idx(static_cast<std::size_t>(spec.num_user_fields));
    for (int f = 0; f < spec.num_user_fields; ++f)
        idx[static_cast<std::size_t>(f)] = static_cast<std::int32_t>(
            f * per_field + static_cast<std::int64_t>(rng.below(per_field)));
    return idx;
}

std::vector<std::int32_t> SyntheticWorld::sample_pool(std::int64_t pool_size,
                                                      std::uint64_t seed) const {
    if (pool_size < 1 || pool_size > spec.num_arms)
        throw std::invalid_argument("world: pool_size must lie in [1, num_arms]");
    Rng rng(seed);
    std::vector<std::int32_t> pool;
    pool.reserve(static_cast<std::size_t>(pool_size));
    std::int64_t attempts = 0;
    std::int64_t max_attempts = 1000 * pool_size;
    while (static_cast<std::int64_t>(pool.size()) < pool_size && attempts < max_attempts) {
        ++attempts;
        double u = rng.uniform();
        auto it = std::lower_bound(zipf_cdf.begin(), zipf_cdf.end(), u);
        std::int32_t arm = static_cast<std::int32_t>(it - zipf_cdf.begin());
        if (std::find(pool.begin(), pool.end(), arm) == pool.end()) pool.push_back(arm);
    }
    // Pathological skews can starve rejection sampling; fill ascending.
    for (std::int32_t a = 0; static_cast<std::int64_t>(pool.size()) < pool_size; ++a)
        if (std::find(pool.begin(), pool.end(), a) == pool.end()) pool.push_back(a);
    return pool;
}

std::vector<LoggedEvent> generate_log(const SyntheticWorld& world, std::int64_t n_events,
                                      std::int64_t pool_size, std::uint64_t seed) {
    if (n_events < 0) throw std::invalid_argument("generate_log: negative event count");
    std::vector<LoggedEvent> events;
    events.reserve(static_cast<std::size_t>(n_events));
    for (std::int64_t i = 0; i < n_events; ++i) {
        LoggedEvent ev;
        ev.ts = i;
        ev.user = world.sample_user(derive_seed(seed, tag("user"), i));
        ev.pool = world.sample_pool(pool_size, derive_seed(seed, tag("pool"), i));
        Rng rng(derive_seed(seed, tag("serve"), i));
        ev.shown = ev.pool[static_cast<std::size_t>(rng.below(ev.pool.size()))];
        double p = world.true_ctr(ev.user, ev.shown);
        ev.click = rng.bernoulli(p) ? 1 : 0;
        events.push_back(std::move(ev));
    }
    return events;
}

LiveReport live_simulate(const SyntheticWorld& world, const PolicyConfig& policy_cfg,
                         const LiveConfig& cfg, std::uint64_t seed,
                         const LiveObserver& observer) {
    if (cfg.n_steps < 0 || cfg.warm_steps < 0)
        throw std::invalid_argument("live: negative step count");

    BanditPolicy policy(policy_cfg, world.spec.feature_space, world.spec.num_arms,
                        world.spec.num_user_fields, derive_seed(seed, tag("live_policy")));

    std::vector<std::int64_t> impressions(static_cast<std::size_t>(world.spec.num_arms), 0);
    ArmCurveTracker tracker(world.spec.num_arms);
    LiveReport rep;
    double pred_sum = 0.0, pred_sum_low = 0.0;
    std::int64_t served = 0, served_low = 0, clicks_low = 0;

    std::int64_t total = cfg.warm_steps + cfg.n_steps;
    std::vector<SparseFeatureVector> feats;
    std::vector<std::int64_t> pool_impressions;
    for (std::int64_t t = 0; t < total; ++t) {
        bool warm = t < cfg.warm_steps;
        std::vector<std::int32_t> user = world.sample_user(derive_seed(seed, tag("user"), t));
        std::vector<std::int32_t> pool =
            world.sample_pool(cfg.pool_size, derive_seed(seed, tag("pool"), t));

        feats.clear();
        pool_impressions.clear();
        for (std::int32_t arm : pool) {
            feats.push_back({user, arm});
            pool_impressions.push_back(impressions[static_cast<std::size_t>(arm)]);
        }

        std::int32_t chosen;
        if (warm) {
            Rng rng(derive_seed(seed, tag("warm_serve"), t));
            chosen = pool[static_cast<std::size_t>(rng.below(pool.size()))];
        } else {
            // The oracle kind follows the teacher-best arm in the pool.
            std::int32_t hint = pool.front();
            double best = -1.0;
            for (std::int32_t arm : pool) {
                double p = world.true_ctr(user, arm);
                if (p > best) {
                    best = p;
                    hint = arm;
                }
            }
            chosen = policy.select(feats, t, hint, pool_impressions, cfg.exec);
        }

        SparseFeatureVector x{user, chosen};
        double p_true = world.true_ctr(user, chosen);
        Rng click_rng(derive_seed(seed, tag("click"), t));
        int click = click_rng.bernoulli(p_true) ? 1 : 0;

        if (!warm) {
            double pred = policy.predict(x);
            double best = 0.0;
            for (std::int32_t arm : pool) best = std::max(best, world.true_ctr(user, arm));
            rep.steps += 1;
            rep.clicks += click;
            rep.regret += best - p_true;
            pred_sum += pred;
            served += 1;
            if (impressions[static_cast<std::size_t>(chosen)] < cfg.low_impression_limit) {
                pred_sum_low += pred;
                served_low += 1;
                clicks_low += click;
            }
            tracker.record(chosen, click, pred);
            if (observer) observer(t, user, pool, chosen, click);
        }

        impressions[static_cast<std::size_t>(chosen)] += 1;
        policy.update(x, click, t);
    }

    rep.pcoc = compute_pcoc(pred_sum, served, rep.clicks);
    rep.pcoc_low = compute_pcoc(pred_sum_low, served_low, clicks_low);
    rep.curves.assign(tracker.points().begin(), tracker.points().end());
    return rep;
}

SyntheticWorldSpec world_spec_from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path + ": cannot open");
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
    SyntheticWorldSpec spec;
    if (j.contains("num_arms")) spec.num_arms = j.at("num_arms").get<std::int64_t>();
    if (j.contains("num_user_fields")) spec.num_user_fields = j.at("num_user_fields").get<int>();
    if (j.contains("feature_space")) spec.feature_space = j.at("feature_space").get<std::int64_t>();
    if (j.contains("zipf_exponent")) spec.zipf_exponent = j.at("zipf_exponent").get<double>();
    if (j.contains("teacher_dim")) spec.teacher_dim = j.at("teacher_dim").get<int>();
    if (j.contains("ctr_low")) spec.ctr_low = j.at("ctr_low").get<double>();
    if (j.contains("ctr_high")) spec.ctr_high = j.at("ctr_high").get<double>();
    if (j.contains("preset")) spec.preset = j.at("preset").get<std::string>();
    if (j.contains("seed")) spec.seed = j.at("seed").get<std::uint64_t>();
    validate_world_spec(spec);
    return spec;
}

std::string world_spec_to_json(const SyntheticWorldSpec& spec) {
    json j{{"num_arms", spec.num_arms},
           {"num_user_fields", spec.num_user_fields},
           {"feature_space", spec.feature_space},
           {"zipf_exponent", spec.zipf_exponent},
           {"teacher_dim", spec.teacher_dim},
           {"ctr_low", spec.ctr_low},
           {"ctr_high", spec.ctr_high},
           {"preset", spec.preset},
           {"seed", spec.seed}};
    return j.dump(2);
}

}  // namespace age
