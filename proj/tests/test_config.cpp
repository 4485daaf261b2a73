#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>
#include <vector>

#include "age/config.hpp"

using namespace age;

namespace {

bool has_diag(const std::vector<std::string>& diags, const std::string& needle) {
    for (const std::string& d : diags)
        if (d.find(needle) != std::string::npos) return true;
    return false;
}

const char* kFullConfig = R"({
  "mode": "replay",
  "world": {
    "num_arms": 50,
    "num_user_fields": 2,
    "feature_space": 32,
    "zipf_exponent": 1.1,
    "teacher_dim": 4,
    "ctr_low": 0.002,
    "ctr_high": 0.4,
    "preset": "low_ctr_heavy",
    "seed": 9
  },
  "events": 5000,
  "pool_size": 4,
  "warm_n": 1000,
  "max_events": -1,
  "num_seeds": 3,
  "jobs": 2,
  "out_dir": "results",
  "policies": [
    {"name": "vanilla", "kind": "vanilla"},
    {
      "name": "age",
      "kind": "age_ts",
      "network": {"embedding_dim": 4, "hidden": [16, 8], "learning_rate": 2e-5},
      "uncertainty": {"method": "mc_ts", "n_samples": 8, "dropout_rate": 0.2},
      "age": {
        "lambda": 0.01,
        "impression_cap": 3000,
        "dgu_enabled": true,
        "adv": {"method": "pgd", "steps": 2}
      }
    }
  ]
})";

}  // namespace

TEST_CASE("a full experiment config parses into typed values") {
    ConfigParse parsed = parse_experiment_config(kFullConfig);
    REQUIRE(parsed.diagnostics.empty());
    const ExperimentConfig& cfg = parsed.config;

    CHECK(cfg.mode == "replay");
    REQUIRE(cfg.world.has_value());
    CHECK(cfg.world->num_arms == 50);
    CHECK(cfg.world->preset == "low_ctr_heavy");
    CHECK(cfg.events == 5000);
    CHECK(cfg.pool_size == 4);
    CHECK(cfg.warm_n == 1000);
    CHECK(cfg.seeds == std::vector<std::uint64_t>{1, 2, 3});
    CHECK(cfg.jobs == 2);
    CHECK(cfg.out_dir == "results");
    // Dimensions come from the world when present.
    CHECK(cfg.feature_space == 32);
    CHECK(cfg.arm_space == 50);

    REQUIRE(cfg.policies.size() == 2);
    CHECK(cfg.policies[0].name == "vanilla");
    CHECK(cfg.policies[0].policy.kind == PolicyKind::vanilla);
    const PolicyConfig& age = cfg.policies[1].policy;
    CHECK(age.kind == PolicyKind::age_ts);
    CHECK(age.network.embedding_dim == 4);
    CHECK(age.network.hidden == std::vector<int>{16, 8});
    CHECK(age.network.learning_rate == 2e-5);
    CHECK(age.uncertainty.method == UncertaintyMethod::mc_ts);
    CHECK(age.uncertainty.n_samples == 8);
    CHECK(age.age.lambda == 0.01);
    CHECK(age.age.impression_cap == 3000);
    CHECK(age.age.adv.steps == 2);
}

TEST_CASE("defaults hold when fields are omitted") {
    ConfigParse parsed = parse_experiment_config(R"({
      "mode": "replay",
      "log_path": "events.jsonl",
      "feature_space": 100,
      "arm_space": 20,
      "num_user_fields": 2,
      "policies": [{"name": "p", "kind": "age_ts"}]
    })");
    REQUIRE(parsed.diagnostics.empty());
    const PolicyConfig& p = parsed.config.policies[0].policy;
    CHECK(p.network.learning_rate == 1e-5);
    CHECK(p.network.embedding_dim == 8);
    CHECK(p.network.hidden == std::vector<int>{256, 64});
    CHECK(p.age.lambda == 1e-3);
    CHECK(p.uncertainty.dropout_rate == 0.01);
    CHECK(p.uncertainty.n_samples == 20);
    CHECK(p.train_dropout_rate == 0.01);
    CHECK(parsed.config.warm_n == 80000);
    CHECK(parsed.config.seeds == std::vector<std::uint64_t>{1});
}

TEST_CASE("diagnostics carry the field path") {
    SUBCASE("unknown fields are flagged") {
        ConfigParse parsed = parse_experiment_config(R"({
          "mode": "replay",
          "log_path": "x.jsonl",
          "feature_space": 10, "arm_space": 5, "num_user_fields": 2,
          "polices": []
        })");
        CHECK_FALSE(parsed.diagnostics.empty());
        CHECK(has_diag(parsed.diagnostics, "polices"));
    }

    SUBCASE("nested unknown fields name the full path") {
        ConfigParse parsed = parse_experiment_config(R"({
          "mode": "replay",
          "log_path": "x.jsonl",
          "feature_space": 10, "arm_space": 5, "num_user_fields": 2,
          "policies": [{"name": "p", "kind": "age_ts", "age": {"lamda": 0.1}}]
        })");
        CHECK(has_diag(parsed.diagnostics, "lamda"));
        CHECK(has_diag(parsed.diagnostics, "policies[0].age"));
    }

    SUBCASE("wrong types are flagged with the expected kind") {
        ConfigParse parsed = parse_experiment_config(R"({
          "mode": "replay",
          "log_path": "x.jsonl",
          "feature_space": "many", "arm_space": 5, "num_user_fields": 2,
          "policies": [{"name": "p", "kind": "vanilla"}]
        })");
        CHECK(has_diag(parsed.diagnostics, "feature_space"));
    }

    SUBCASE("unknown enum values list the field") {
        ConfigParse parsed = parse_experiment_config(R"({
          "mode": "replay",
          "log_path": "x.jsonl",
          "feature_space": 10, "arm_space": 5, "num_user_fields": 2,
          "policies": [{"name": "p", "kind": "thompson"}]
        })");
        CHECK(has_diag(parsed.diagnostics, "kind"));
    }

    SUBCASE("malformed json is one diagnostic, not an exception") {
        ConfigParse parsed = parse_experiment_config("{not json");
        CHECK_FALSE(parsed.diagnostics.empty());
    }
}

TEST_CASE("mode-specific requirements") {
    SUBCASE("replay needs a log source") {
        ConfigParse parsed = parse_experiment_config(R"({
          "mode": "replay",
          "feature_space": 10, "arm_space": 5, "num_user_fields": 2,
          "policies": [{"name": "p", "kind": "vanilla"}]
        })");
        CHECK_FALSE(parsed.diagnostics.empty());
    }

    SUBCASE("replay with a log path needs explicit dimensions") {
        ConfigParse parsed = parse_experiment_config(R"({
          "mode": "replay",
          "log_path": "x.jsonl",
          "policies": [{"name": "p", "kind": "vanilla"}]
        })");
        CHECK_FALSE(parsed.diagnostics.empty());
    }

    SUBCASE("live needs a world") {
        ConfigParse parsed = parse_experiment_config(R"({
          "mode": "live",
          "policies": [{"name": "p", "kind": "vanilla"}]
        })");
        CHECK_FALSE(parsed.diagnostics.empty());
    }

    SUBCASE("policy names must be unique") {
        ConfigParse parsed = parse_experiment_config(R"({
          "mode": "replay",
          "log_path": "x.jsonl",
          "feature_space": 10, "arm_space": 5, "num_user_fields": 2,
          "policies": [{"name": "p", "kind": "vanilla"}, {"name": "p", "kind": "age_ts"}]
        })");
        CHECK(has_diag(parsed.diagnostics, "p"));
    }

    SUBCASE("unknown modes are rejected") {
        ConfigParse parsed = parse_experiment_config(R"({"mode": "evaluate"})");
        CHECK(has_diag(parsed.diagnostics, "mode"));
    }
}

TEST_CASE("a parsed config serializes and parses back to the same values") {
    ConfigParse first = parse_experiment_config(kFullConfig);
    REQUIRE(first.diagnostics.empty());
    std::string round = experiment_config_to_json(first.config);
    ConfigParse second = parse_experiment_config(round);
    REQUIRE(second.diagnostics.empty());
    CHECK(experiment_config_to_json(second.config) == round);
    CHECK(config_digest(round) == config_digest(experiment_config_to_json(second.config)));
    CHECK(config_digest(round) != config_digest("{}"));
}

TEST_CASE("bare policy lists parse with and without the wrapper object") {
    const char* bare = R"([{"name": "a", "kind": "vanilla"}])";
    const char* wrapped = R"({"policies": [{"name": "a", "kind": "vanilla"}]})";
    std::vector<std::string> diags;
    std::vector<NamedPolicy> from_bare = parse_policy_list(bare, diags);
    CHECK(diags.empty());
    std::vector<NamedPolicy> from_wrapped = parse_policy_list(wrapped, diags);
    CHECK(diags.empty());
    REQUIRE(from_bare.size() == 1);
    REQUIRE(from_wrapped.size() == 1);
    CHECK(from_bare[0].name == from_wrapped[0].name);
    CHECK(from_bare[0].policy.kind == from_wrapped[0].policy.kind);

    SUBCASE("missing names are diagnosed") {
        std::vector<std::string> d2;
        parse_policy_list(R"([{"kind": "vanilla"}])", d2);
        CHECK_FALSE(d2.empty());
    }
}
