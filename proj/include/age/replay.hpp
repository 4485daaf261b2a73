#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "age/log.hpp"
#include "age/metrics.hpp"
#include "age/policies.hpp"

namespace age {

struct ReplayConfig {
    PolicyConfig policy;
    std::int64_t warm_n = 80000;
    std::int64_t max_events = -1;  // cap on evaluated (post-warm) events; -1 means all
    // Model dimensioning; must cover every index in the log.
    std::int64_t feature_space = 0;
    std::int64_t arm_space = 0;
    int num_user_fields = 0;
    // Gradient policies: fit grad_scale on warm-up features after warm start.
    bool calibrate_gradient = true;
    std::int64_t calibration_probes = 256;
    Exec exec = Exec::parallel;
};

void validate_replay_config(const ReplayConfig& cfg);

struct ReplayReport {
    std::string policy_name;
    std::uint64_t seed = 0;
    std::int64_t events_seen = 0;
    std::int64_t events_matched = 0;
    std::int64_t cumulative_clicks = 0;
    double matched_ctr = 0.0;
    Pcoc pcoc;
    std::vector<ArmCurvePoint> per_arm_curves;
};

struct MatchOutcome {
    bool matched = false;
    int click = 0;
    double predicted = 0.0;
};

/// One policy evaluated against one log: the policy replays each event,
/// scores only when its choice agrees with what was actually shown, and
/// learns only from those matched events.
class ReplayRun {
  public:
    ReplayRun(const ReplayConfig& cfg, std::uint64_t seed);

    /// Supervised pretraining on the first n events (shown arm, click).
    /// Throws when the stream holds fewer than n events.
    void warm_start(std::span<const LoggedEvent> events, std::int64_t n);

    MatchOutcome step(const LoggedEvent& ev, std::int64_t event_index);

    ReplayReport report() const;
    BanditPolicy& policy() { return policy_; }
    const BanditPolicy& policy() const { return policy_; }

    /// Digest over parameters, optimizer state, and impression counters;
    /// unmatched events must leave it untouched.
    std::uint64_t state_digest() const;

  private:
    ReplayConfig cfg_;
    BanditPolicy policy_;
    ArmCurveTracker tracker_;
    std::int64_t seen_ = 0;
    std::int64_t matched_ = 0;
    std::int64_t clicks_ = 0;
    double pred_sum_ = 0.0;
};

/// Warm start for a standalone policy: trains on (shown, click) pairs.
void warm_start(BanditPolicy& policy, std::span<const LoggedEvent> events, std::int64_t n);

ReplayReport run_replay_once(const ReplayConfig& cfg, std::span<const LoggedEvent> log,
                             std::uint64_t seed);

/// One fresh warm start + replay pass per seed. jobs > 0 bounds the number
/// of concurrent runs; results do not depend on it.
std::vector<ReplayReport> run_replay(const ReplayConfig& cfg, std::span<const LoggedEvent> log,
                                     std::span<const std::uint64_t> seeds, int jobs = 0);

}  // namespace age
