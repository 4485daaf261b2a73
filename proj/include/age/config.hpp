#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "age/policies.hpp"
#include "age/synth.hpp"

namespace age {

struct NamedPolicy {
    std::string name;
    PolicyConfig policy;
};

/// Everything one run needs, loadable from a single JSON file. Modes ignore
/// the fields they do not use; validation is per mode.
struct ExperimentConfig {
    std::string mode = "replay";  // gen | replay | live | ablate | theorem-check

    std::optional<SyntheticWorldSpec> world;
    std::string log_path;

    std::int64_t events = 100000;  // gen: log length; ablate: replay length
    std::int64_t pool_size = 5;
    std::int64_t warm_n = 80000;
    std::int64_t max_events = -1;
    std::vector<std::uint64_t> seeds = {1};
    int jobs = 1;
    std::string out_dir = "out";

    LiveConfig live;
    std::vector<NamedPolicy> policies;

    // Replay dimensioning when no world spec is present (imported logs).
    std::int64_t feature_space = 0;
    std::int64_t arm_space = 0;
    int num_user_fields = 0;

    std::int64_t check_networks = 50;  // theorem-check
    std::uint64_t master_seed = 7;     // theorem-check network sampling
};

struct ConfigParse {
    ExperimentConfig config;
    std::vector<std::string> diagnostics;  // empty means valid
};

/// Parses and validates without executing. Diagnostics carry field paths,
/// e.g. "policies[0].epsilon: must lie in [0,1]".
ConfigParse parse_experiment_config(const std::string& json_text);
ConfigParse load_experiment_config(const std::string& path);

/// Parses a bare policy list: either a JSON array or {"policies": [...]}.
std::vector<NamedPolicy> parse_policy_list(const std::string& json_text,
                                           std::vector<std::string>& diagnostics);

std::string policy_to_json(const NamedPolicy& p);
std::string experiment_config_to_json(const ExperimentConfig& cfg);

/// FNV-1a over the canonical serialized config; keys run names and manifests.
std::uint64_t config_digest(const std::string& canonical_text);

}  // namespace age
