#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "age/log.hpp"
#include "age/metrics.hpp"
#include "age/policies.hpp"

namespace age {

/// Ground-truth bandit world. The teacher is a frozen low-rank logistic
/// model over (user features, arm), squashed into (ctr_low, ctr_high), so
/// the true CTR varies with user context. "low_ctr_heavy" pushes 80% of the
/// arms under 2% CTR to exercise gating.
struct SyntheticWorldSpec {
    std::int64_t num_arms = 200;
    int num_user_fields = 2;
    std::int64_t feature_space = 64;  // must divide evenly across the fields
    double zipf_exponent = 1.0;       // arm popularity skew
    int teacher_dim = 8;
    double ctr_low = 0.001;
    double ctr_high = 0.5;
    std::string preset = "default";   // "default" | "low_ctr_heavy"
    std::uint64_t seed = 1;
};

void validate_world_spec(const SyntheticWorldSpec& spec);
SyntheticWorldSpec world_spec_from_json_file(const std::string& path);
std::string world_spec_to_json(const SyntheticWorldSpec& spec);

struct SyntheticWorld {
    SyntheticWorldSpec spec;
    std::vector<double> user_latent;  // feature_space x teacher_dim
    std::vector<double> arm_latent;   // num_arms x teacher_dim
    std::vector<double> arm_bias;     // num_arms
    std::vector<double> zipf_cdf;     // num_arms, normalized cumulative weights

    std::int64_t field_size() const { return spec.feature_space / spec.num_user_fields; }

    double true_ctr(const std::vector<std::int32_t>& user_indices, std::int32_t arm_id) const;
    std::vector<std::int32_t> sample_user(std::uint64_t seed) const;
    std::vector<std::int32_t> sample_pool(std::int64_t pool_size, std::uint64_t seed) const;
};

SyntheticWorld build_world(const SyntheticWorldSpec& spec);

/// Uniform-random logging policy over sampled pools, click from the teacher.
std::vector<LoggedEvent> generate_log(const SyntheticWorld& world, std::int64_t n_events,
                                      std::int64_t pool_size, std::uint64_t seed);

struct LiveConfig {
    std::int64_t n_steps = 100000;
    std::int64_t pool_size = 5;
    std::int64_t warm_steps = 0;  // uniform-random serving before the policy takes over
    std::int64_t low_impression_limit = 1000;
    Exec exec = Exec::parallel;
};

struct LiveReport {
    std::int64_t steps = 0;
    std::int64_t clicks = 0;
    double regret = 0.0;
    Pcoc pcoc;      // all policy-served impressions
    Pcoc pcoc_low;  // impressions served while the arm was under the limit
    std::vector<ArmCurvePoint> curves;
};

/// Observer for every policy-served step (tests and audits); may be empty.
using LiveObserver = std::function<void(std::int64_t step, const std::vector<std::int32_t>& user,
                                        const std::vector<std::int32_t>& pool,
                                        std::int32_t chosen, int click)>;

LiveReport live_simulate(const SyntheticWorld& world, const PolicyConfig& policy_cfg,
                         const LiveConfig& cfg, std::uint64_t seed,
                         const LiveObserver& observer = {});

}  // namespace age
