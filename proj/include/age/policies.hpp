#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "age/age_policy.hpp"
#include "age/model.hpp"
#include "age/parallel.hpp"

namespace age {

enum class PolicyKind {
    vanilla,
    random_choice,
    eps_greedy,
    ensemble_ts,
    ensemble_ucb,
    gradient_ts,
    gradient_ucb,
    age_ts,
    age_ucb,
    oracle,  // follows the externally supplied hint; harness reference point
};

std::string policy_kind_name(PolicyKind kind);
PolicyKind policy_kind_from_name(const std::string& name);

struct PolicyConfig {
    PolicyKind kind = PolicyKind::vanilla;
    double epsilon = 0.1;
    int ensemble_size = 5;
    NetworkConfig network;
    UncertaintyConfig uncertainty;  // gradient policies read grad_scale from here
    AgeConfig age;                  // age_ts / age_ucb scoring parameters
    double train_dropout_rate = 0.01;
};

void validate_policy_config(const PolicyConfig& cfg);

// --- stateless selection primitives ------------------------------------------

std::int32_t vanilla_select(const NetworkParams& net, std::span<const SparseFeatureVector> pool);
std::int32_t random_select(std::span<const SparseFeatureVector> pool, std::uint64_t seed);
std::int32_t eps_greedy_select(const NetworkParams& net, std::span<const SparseFeatureVector> pool,
                               double epsilon, std::uint64_t seed);
std::int32_t ensemble_select(std::span<const Model> members,
                             std::span<const SparseFeatureVector> pool, EnsembleMode mode,
                             std::uint64_t seed);
std::int32_t gradient_select(const NetworkParams& net, std::span<const SparseFeatureVector> pool,
                             EnsembleMode mode, const UncertaintyConfig& cfg, std::uint64_t seed);

/// One bandit policy with its model state. Selection is deterministic given
/// (construction seed, event index); updates are keyed the same way.
class BanditPolicy {
  public:
    BanditPolicy(const PolicyConfig& cfg, std::int64_t feature_space, std::int64_t arm_space,
                 int num_user_fields, std::uint64_t seed);

    /// Chooses an arm from the pool. `hint` is the arm the oracle kind
    /// follows (pass -1 elsewhere); `impressions` aligns with the pool and
    /// feeds the eligibility cap (empty means all zero).
    std::int32_t select(std::span<const SparseFeatureVector> pool, std::int64_t event_index,
                        std::int32_t hint = -1,
                        std::span<const std::int64_t> impressions = {},
                        Exec exec = Exec::parallel);

    /// One supervised step on a labeled impression; trains every member.
    void update(const SparseFeatureVector& x, int click, std::int64_t event_index);

    /// Base prediction used for calibration metrics (ensemble mean when the
    /// policy holds several members).
    double predict(const SparseFeatureVector& x) const;

    /// Sets grad_scale so the median gradient-norm uncertainty matches the
    /// median Monte Carlo spread over the given probe inputs.
    void calibrate_grad_scale(std::span<const SparseFeatureVector> probes);

    const PolicyConfig& config() const { return cfg_; }
    std::span<const Model> models() const { return models_; }
    Model& primary() { return models_.front(); }
    const Model& primary() const { return models_.front(); }
    std::uint64_t state_digest() const;

  private:
    PolicyConfig cfg_;
    std::uint64_t seed_;
    std::vector<Model> models_;
};

/// Median spread ratio used by calibrate_grad_scale; exposed for tests.
double grad_scale_for(const Model& model, std::span<const SparseFeatureVector> probes,
                      const UncertaintyConfig& cfg, std::uint64_t seed);

}  // namespace age
