#include "age/replay.hpp"

#include <algorithm>
#include <stdexcept>

#include "age/rng.hpp"

namespace age {

void validate_replay_config(const ReplayConfig& cfg) {
    validate_policy_config(cfg.policy);
    if (cfg.warm_n < 0) throw std::invalid_argument("replay: warm_n must be non-negative");
    if (cfg.max_events < -1)
        throw std::invalid_argument("replay: max_events must be -1 (all) or non-negative");
    if (cfg.feature_space < 1 || cfg.arm_space < 1 || cfg.num_user_fields < 1)
        throw std::invalid_argument("replay: model dimensions must be positive");
    if (cfg.calibration_probes < 1)
        throw std::invalid_argument("replay: calibration_probes must be positive");
}

ReplayRun::ReplayRun(const ReplayConfig& cfg, std::uint64_t seed)
    : cfg_(cfg),
      policy_(cfg.policy, cfg.feature_space, cfg.arm_space, cfg.num_user_fields,
              derive_seed(seed, tag("replay_policy"))),
      tracker_(cfg.arm_space) {
    validate_replay_config(cfg);
}

void warm_start(BanditPolicy& policy, std::span<const LoggedEvent> events, std::int64_t n) {
    if (n < 0) throw std::invalid_argument("warm_start: negative count");
    if (static_cast<std::int64_t>(events.size()) < n)
        throw std::invalid_argument("warm_start: stream exhausted before n events");
    for (std::int64_t i = 0; i < n; ++i) {
        const LoggedEvent& ev = events[static_cast<std::size_t>(i)];
        policy.update(event_features(ev, ev.shown), ev.click, i);
    }
}

void ReplayRun::warm_start(std::span<const LoggedEvent> events, std::int64_t n) {
    age::warm_start(policy_, events, n);

    bool gradient = cfg_.policy.kind == PolicyKind::gradient_ts ||
                    cfg_.policy.kind == PolicyKind::gradient_ucb;
    if (gradient && cfg_.calibrate_gradient && n > 0) {
        std::int64_t probe_n = std::min(cfg_.calibration_probes, n);
        std::vector<SparseFeatureVector> probes;
        probes.reserve(static_cast<std::size_t>(probe_n));
        for (std::int64_t i = n - probe_n; i < n; ++i) {
            const LoggedEvent& ev = events[static_cast<std::size_t>(i)];
            probes.push_back(event_features(ev, ev.shown));
        }
        policy_.calibrate_grad_scale(probes);
    }
}

MatchOutcome ReplayRun::step(const LoggedEvent& ev, std::int64_t event_index) {
    std::vector<SparseFeatureVector> feats;
    std::vector<std::int64_t> impressions;
    feats.reserve(ev.pool.size());
    impressions.reserve(ev.pool.size());
    for (std::int32_t arm : ev.pool) {
        feats.push_back(event_features(ev, arm));
        impressions.push_back(tracker_.cell(arm).impressions);
    }

    std::int32_t choice = policy_.select(feats, event_index, ev.shown, impressions, cfg_.exec);
    seen_ += 1;

    MatchOutcome out;
    if (choice != ev.shown) return out;

    SparseFeatureVector x = event_features(ev, ev.shown);
    out.matched = true;
    out.click = ev.click;
    out.predicted = policy_.predict(x);

    matched_ += 1;
    clicks_ += ev.click;
    pred_sum_ += out.predicted;
    tracker_.record(ev.shown, ev.click, out.predicted);
    policy_.update(x, ev.click, event_index);
    return out;
}

ReplayReport ReplayRun::report() const {
    ReplayReport rep;
    rep.policy_name = policy_kind_name(cfg_.policy.kind);
    rep.events_seen = seen_;
    rep.events_matched = matched_;
    rep.cumulative_clicks = clicks_;
    rep.matched_ctr =
        matched_ > 0 ? static_cast<double>(clicks_) / static_cast<double>(matched_) : 0.0;
    rep.pcoc = compute_pcoc(pred_sum_, matched_, clicks_);
    rep.per_arm_curves.assign(tracker_.points().begin(), tracker_.points().end());
    return rep;
}

std::uint64_t ReplayRun::state_digest() const {
    std::uint64_t h = policy_.state_digest();
    for (std::int64_t a = 0; a < cfg_.arm_space; ++a) {
        h ^= static_cast<std::uint64_t>(tracker_.cell(static_cast<std::int32_t>(a)).impressions) +
             0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return h;
}

ReplayReport run_replay_once(const ReplayConfig& cfg, std::span<const LoggedEvent> log,
                             std::uint64_t seed) {
    ReplayRun run(cfg, seed);
    run.warm_start(log, cfg.warm_n);

    std::int64_t start = cfg.warm_n;
    std::int64_t end = static_cast<std::int64_t>(log.size());
    if (cfg.max_events >= 0) end = std::min(end, start + cfg.max_events);
    for (std::int64_t i = start; i < end; ++i)
        run.step(log[static_cast<std::size_t>(i)], i);

    ReplayReport rep = run.report();
    rep.seed = seed;
    return rep;
}

std::vector<ReplayReport> run_replay(const ReplayConfig& cfg, std::span<const LoggedEvent> log,
                                     std::span<const std::uint64_t> seeds, int jobs) {
    validate_replay_config(cfg);
    std::vector<ReplayReport> reports(seeds.size());
    std::int64_t n = static_cast<std::int64_t>(seeds.size());
    std::exception_ptr err = nullptr;
    if (jobs < 1) jobs = 1;
#pragma omp parallel for schedule(dynamic) num_threads(jobs)
    for (std::int64_t i = 0; i < n; ++i) {
        try {
            reports[static_cast<std::size_t>(i)] =
                run_replay_once(cfg, log, seeds[static_cast<std::size_t>(i)]);
        } catch (...) {
#pragma omp critical
            if (!err) err = std::current_exception();
        }
    }
    if (err) std::rethrow_exception(err);
    return reports;
}

}  // namespace age
