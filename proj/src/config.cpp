#include "age/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace age {

namespace {

using nlohmann::json;

const char* json_type_name(const json& j) {
    if (j.is_string()) return "string";
    if (j.is_boolean()) return "boolean";
    if (j.is_number()) return "number";
    if (j.is_array()) return "array";
    if (j.is_object()) return "object";
    if (j.is_null()) return "null";
    return "value";
}

/// Field-by-field object reader that records a diagnostic (with the full
/// path) for every type mismatch or unknown key instead of throwing.
class Reader {
  public:
    Reader(const json& j, std::string path, std::vector<std::string>& diags)
        : j_(j), path_(std::move(path)), diags_(diags) {
        if (!j_.is_object()) diags_.push_back(path_ + ": expected an object");
    }

    bool has(const char* key) const { return j_.is_object() && j_.contains(key); }

    template <typename T>
    void read(const char* key, T& out) {
        seen_.insert(key);
        if (!has(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const std::exception&) {
            diags_.push_back(path_ + "." + key + ": wrong type (" +
                             json_type_name(j_.at(key)) + ")");
        }
    }

    void read_enum(const char* key, const std::vector<std::string>& allowed, std::string& out) {
        std::string v = out;
        read(key, v);
        if (std::find(allowed.begin(), allowed.end(), v) == allowed.end()) {
            std::string joined;
            for (const std::string& a : allowed) joined += (joined.empty() ? "" : " | ") + a;
            diags_.push_back(path_ + "." + key + ": must be one of " + joined);
        } else {
            out = v;
        }
    }

    const json* child(const char* key) {
        seen_.insert(key);
        if (!has(key)) return nullptr;
        return &j_.at(key);
    }

    void check(bool ok, const std::string& field, const std::string& msg) {
        if (!ok) diags_.push_back(path_ + "." + field + ": " + msg);
    }

    void finish() {
        if (!j_.is_object()) return;
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key()))
                diags_.push_back(path_ + "." + it.key() + ": unknown field");
    }

    const std::string& path() const { return path_; }

  private:
    const json& j_;
    std::string path_;
    std::vector<std::string>& diags_;
    std::set<std::string> seen_;
};

void parse_network(const json& j, const std::string& path, std::vector<std::string>& diags,
                   NetworkConfig& out) {
    Reader r(j, path, diags);
    r.read("embedding_dim", out.embedding_dim);
    r.read("hidden", out.hidden);
    r.read("shallow_hidden", out.shallow_hidden);
    r.read("learning_rate", out.learning_rate);
    r.read("shallow_learning_rate", out.shallow_learning_rate);
    r.check(out.embedding_dim >= 1, "embedding_dim", "must be positive");
    for (int w : out.hidden) r.check(w >= 1, "hidden", "layer widths must be positive");
    for (int w : out.shallow_hidden)
        r.check(w >= 1, "shallow_hidden", "layer widths must be positive");
    r.check(out.learning_rate > 0.0, "learning_rate", "must be positive");
    r.check(out.shallow_learning_rate > 0.0, "shallow_learning_rate", "must be positive");
    r.finish();
}

void parse_uncertainty(const json& j, const std::string& path, std::vector<std::string>& diags,
                       UncertaintyConfig& out) {
    Reader r(j, path, diags);
    std::string method = "mc_ucb";
    switch (out.method) {
        case UncertaintyMethod::mc_ucb: method = "mc_ucb"; break;
        case UncertaintyMethod::mc_ts: method = "mc_ts"; break;
        case UncertaintyMethod::ensemble_ucb: method = "ensemble_ucb"; break;
        case UncertaintyMethod::ensemble_ts: method = "ensemble_ts"; break;
        case UncertaintyMethod::grad_norm: method = "grad_norm"; break;
    }
    if (r.has("method"))
        r.read_enum("method", {"mc_ucb", "mc_ts", "ensemble_ucb", "ensemble_ts", "grad_norm"},
                    method);
    if (method == "mc_ucb") out.method = UncertaintyMethod::mc_ucb;
    if (method == "mc_ts") out.method = UncertaintyMethod::mc_ts;
    if (method == "ensemble_ucb") out.method = UncertaintyMethod::ensemble_ucb;
    if (method == "ensemble_ts") out.method = UncertaintyMethod::ensemble_ts;
    if (method == "grad_norm") out.method = UncertaintyMethod::grad_norm;
    r.read("n_samples", out.n_samples);
    r.read("dropout_rate", out.dropout_rate);
    r.read("grad_scale", out.grad_scale);
    r.check(out.n_samples >= 2, "n_samples", "must be at least 2");
    r.check(out.dropout_rate >= 0.0 && out.dropout_rate < 1.0, "dropout_rate",
            "must lie in [0,1)");
    r.finish();
}

void parse_adv(const json& j, const std::string& path, std::vector<std::string>& diags,
               AdvConfig& out) {
    Reader r(j, path, diags);
    std::string method = out.method == AdvMethod::fgm ? "fgm" : "pgd";
    if (r.has("method")) r.read_enum("method", {"fgm", "pgd"}, method);
    out.method = method == "fgm" ? AdvMethod::fgm : AdvMethod::pgd;
    r.read("steps", out.steps);
    r.read("zero_grad_epsilon", out.zero_grad_epsilon);
    r.read("restrict_to_item", out.restrict_to_item);
    r.check(out.steps >= 1, "steps", "must be at least 1");
    r.check(out.zero_grad_epsilon > 0.0, "zero_grad_epsilon", "must be positive");
    r.finish();
}

void parse_age(const json& j, const std::string& path, std::vector<std::string>& diags,
               AgeConfig& out) {
    Reader r(j, path, diags);
    r.read("lambda", out.lambda);
    if (const json* c = r.child("uncertainty"))
        parse_uncertainty(*c, path + ".uncertainty", diags, out.uncertainty);
    if (const json* c = r.child("adv")) parse_adv(*c, path + ".adv", diags, out.adv);
    if (r.has("impression_cap")) {
        std::int64_t cap = 0;
        r.read("impression_cap", cap);
        r.check(cap >= 0, "impression_cap", "must be non-negative");
        if (cap >= 0) out.impression_cap = cap;
    }
    r.read("dgu_enabled", out.dgu_enabled);
    if (r.has("dgu_fixed_threshold")) {
        double t = 0.0;
        r.read("dgu_fixed_threshold", t);
        out.dgu_fixed_threshold = t;
    }
    r.read("ablate_delta_random", out.ablate_delta_random);
    r.read("ablate_direction_random", out.ablate_direction_random);
    r.check(out.lambda > 0.0, "lambda", "must be positive");
    r.finish();
}

void parse_policy(const json& j, const std::string& path, std::vector<std::string>& diags,
                  NamedPolicy& out) {
    Reader r(j, path, diags);
    std::string kind = policy_kind_name(out.policy.kind);
    if (r.has("kind"))
        r.read_enum("kind",
                    {"vanilla", "random", "eps_greedy", "ensemble_ts", "ensemble_ucb",
                     "gradient_ts", "gradient_ucb", "age_ts", "age_ucb", "oracle"},
                    kind);
    try {
        out.policy.kind = policy_kind_from_name(kind);
    } catch (const std::exception&) {
        // diagnostic already recorded by read_enum
    }
    out.name = kind;
    r.read("name", out.name);
    r.read("epsilon", out.policy.epsilon);
    r.read("ensemble_size", out.policy.ensemble_size);
    r.read("train_dropout_rate", out.policy.train_dropout_rate);
    if (const json* c = r.child("network"))
        parse_network(*c, path + ".network", diags, out.policy.network);
    if (const json* c = r.child("uncertainty"))
        parse_uncertainty(*c, path + ".uncertainty", diags, out.policy.uncertainty);
    if (const json* c = r.child("age")) parse_age(*c, path + ".age", diags, out.policy.age);
    r.check(out.policy.epsilon >= 0.0 && out.policy.epsilon <= 1.0, "epsilon",
            "must lie in [0,1]");
    r.check(out.policy.ensemble_size >= 1, "ensemble_size", "must be positive");
    r.check(out.policy.train_dropout_rate >= 0.0 && out.policy.train_dropout_rate < 1.0,
            "train_dropout_rate", "must lie in [0,1)");
    r.finish();
}

void parse_world(const json& j, const std::string& path, std::vector<std::string>& diags,
                 SyntheticWorldSpec& out) {
    Reader r(j, path, diags);
    r.read("num_arms", out.num_arms);
    r.read("num_user_fields", out.num_user_fields);
    r.read("feature_space", out.feature_space);
    r.read("zipf_exponent", out.zipf_exponent);
    r.read("teacher_dim", out.teacher_dim);
    r.read("ctr_low", out.ctr_low);
    r.read("ctr_high", out.ctr_high);
    if (r.has("preset")) r.read_enum("preset", {"default", "low_ctr_heavy"}, out.preset);
    r.read("seed", out.seed);
    try {
        validate_world_spec(out);
    } catch (const std::exception& e) {
        diags.push_back(path + ": " + e.what());
    }
    r.finish();
}

void parse_live(const json& j, const std::string& path, std::vector<std::string>& diags,
                LiveConfig& out) {
    Reader r(j, path, diags);
    r.read("n_steps", out.n_steps);
    r.read("pool_size", out.pool_size);
    r.read("warm_steps", out.warm_steps);
    r.read("low_impression_limit", out.low_impression_limit);
    r.check(out.n_steps >= 0, "n_steps", "must be non-negative");
    r.check(out.pool_size >= 1, "pool_size", "must be positive");
    r.check(out.warm_steps >= 0, "warm_steps", "must be non-negative");
    r.check(out.low_impression_limit >= 1, "low_impression_limit", "must be positive");
    r.finish();
}

}  // namespace

ConfigParse parse_experiment_config(const std::string& json_text) {
    ConfigParse res;
    json j;
    try {
        j = json::parse(json_text);
    } catch (const std::exception& e) {
        res.diagnostics.push_back(std::string("config: ") + e.what());
        return res;
    }

    std::vector<std::string>& diags = res.diagnostics;
    ExperimentConfig& cfg = res.config;
    Reader r(j, "config", diags);

    r.read_enum("mode", {"gen", "replay", "live", "ablate", "theorem-check"}, cfg.mode);
    if (const json* c = r.child("world")) {
        SyntheticWorldSpec spec;
        parse_world(*c, "config.world", diags, spec);
        cfg.world = spec;
    }
    r.read("log", cfg.log_path);
    r.read("events", cfg.events);
    r.read("pool_size", cfg.pool_size);
    r.read("warm_n", cfg.warm_n);
    r.read("max_events", cfg.max_events);
    r.read("seeds", cfg.seeds);
    if (r.has("num_seeds")) {
        std::int64_t n = 0;
        r.read("num_seeds", n);
        if (n < 1) {
            diags.push_back("config.num_seeds: must be positive");
        } else {
            cfg.seeds.clear();
            for (std::int64_t s = 1; s <= n; ++s)
                cfg.seeds.push_back(static_cast<std::uint64_t>(s));
        }
    }
    r.read("jobs", cfg.jobs);
    r.read("out_dir", cfg.out_dir);
    if (const json* c = r.child("live")) parse_live(*c, "config.live", diags, cfg.live);
    if (const json* c = r.child("policies")) {
        if (!c->is_array()) {
            diags.push_back("config.policies: expected an array");
        } else {
            for (std::size_t i = 0; i < c->size(); ++i) {
                NamedPolicy p;
                parse_policy((*c)[i], "config.policies[" + std::to_string(i) + "]", diags, p);
                cfg.policies.push_back(std::move(p));
            }
        }
    }
    r.read("feature_space", cfg.feature_space);
    r.read("arm_space", cfg.arm_space);
    r.read("num_user_fields", cfg.num_user_fields);
    r.read("check_networks", cfg.check_networks);
    r.read("master_seed", cfg.master_seed);
    r.finish();

    // Cross-field checks per mode.
    auto need = [&](bool ok, const std::string& msg) {
        if (!ok) diags.push_back("config: " + msg);
    };
    need(cfg.events >= 0, "events must be non-negative");
    need(cfg.pool_size >= 1, "pool_size must be positive");
    need(cfg.warm_n >= 0, "warm_n must be non-negative");
    need(!cfg.seeds.empty(), "seeds must not be empty");
    need(cfg.jobs >= 1, "jobs must be positive");
    if (cfg.mode == "gen") need(cfg.world.has_value(), "gen mode needs a world spec");
    if (cfg.mode == "replay") {
        need(!cfg.log_path.empty() || cfg.world.has_value(),
             "replay mode needs a log or a world spec");
        bool dims_ok = cfg.world.has_value() ||
                       (cfg.feature_space > 0 && cfg.arm_space > 0 && cfg.num_user_fields > 0);
        need(dims_ok,
             "model dimensions need a world spec or explicit "
             "feature_space/arm_space/num_user_fields");
    }
    if (cfg.mode == "live" || cfg.mode == "ablate")
        need(cfg.world.has_value(), cfg.mode + " mode needs a world spec");
    if (cfg.mode == "replay" || cfg.mode == "live")
        need(!cfg.policies.empty(), cfg.mode + " mode needs at least one policy");
    if (cfg.mode == "theorem-check")
        need(cfg.check_networks >= 1, "check_networks must be positive");

    std::set<std::string> names;
    for (const NamedPolicy& p : cfg.policies)
        if (!names.insert(p.name).second)
            diags.push_back("config.policies: duplicate policy name '" + p.name + "'");

    return res;
}

ConfigParse load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        ConfigParse res;
        res.diagnostics.push_back(path + ": cannot open");
        return res;
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_experiment_config(ss.str());
}

std::vector<NamedPolicy> parse_policy_list(const std::string& json_text,
                                           std::vector<std::string>& diagnostics) {
    std::vector<NamedPolicy> out;
    json j;
    try {
        j = json::parse(json_text);
    } catch (const std::exception& e) {
        diagnostics.push_back(std::string("policies: ") + e.what());
        return out;
    }
    const json* arr = nullptr;
    if (j.is_array()) {
        arr = &j;
    } else if (j.is_object() && j.contains("policies") && j.at("policies").is_array()) {
        arr = &j.at("policies");
    } else {
        diagnostics.push_back("policies: expected an array or {\"policies\": [...]}");
        return out;
    }
    for (std::size_t i = 0; i < arr->size(); ++i) {
        NamedPolicy p;
        parse_policy((*arr)[i], "policies[" + std::to_string(i) + "]", diagnostics, p);
        out.push_back(std::move(p));
    }
    std::set<std::string> names;
    for (const NamedPolicy& p : out)
        if (!names.insert(p.name).second)
            diagnostics.push_back("policies: duplicate policy name '" + p.name + "'");
    return out;
}

namespace {

json uncertainty_json(const UncertaintyConfig& u) {
    const char* method = "mc_ucb";
    switch (u.method) {
        case UncertaintyMethod::mc_ucb: method = "mc_ucb"; break;
        case UncertaintyMethod::mc_ts: method = "mc_ts"; break;
        case UncertaintyMethod::ensemble_ucb: method = "ensemble_ucb"; break;
        case UncertaintyMethod::ensemble_ts: method = "ensemble_ts"; break;
        case UncertaintyMethod::grad_norm: method = "grad_norm"; break;
    }
    return json{{"method", method},
                {"n_samples", u.n_samples},
                {"dropout_rate", u.dropout_rate},
                {"grad_scale", u.grad_scale}};
}

json policy_json(const NamedPolicy& p) {
    json age{{"lambda", p.policy.age.lambda},
             {"uncertainty", uncertainty_json(p.policy.age.uncertainty)},
             {"adv",
              json{{"method", p.policy.age.adv.method == AdvMethod::fgm ? "fgm" : "pgd"},
                   {"steps", p.policy.age.adv.steps},
                   {"zero_grad_epsilon", p.policy.age.adv.zero_grad_epsilon},
                   {"restrict_to_item", p.policy.age.adv.restrict_to_item}}},
             {"dgu_enabled", p.policy.age.dgu_enabled},
             {"ablate_delta_random", p.policy.age.ablate_delta_random},
             {"ablate_direction_random", p.policy.age.ablate_direction_random}};
    if (p.policy.age.impression_cap != std::numeric_limits<std::int64_t>::max())
        age["impression_cap"] = p.policy.age.impression_cap;
    if (p.policy.age.dgu_fixed_threshold)
        age["dgu_fixed_threshold"] = *p.policy.age.dgu_fixed_threshold;
    return json{{"name", p.name},
                {"kind", policy_kind_name(p.policy.kind)},
                {"epsilon", p.policy.epsilon},
                {"ensemble_size", p.policy.ensemble_size},
                {"train_dropout_rate", p.policy.train_dropout_rate},
                {"network",
                 json{{"embedding_dim", p.policy.network.embedding_dim},
                      {"hidden", p.policy.network.hidden},
                      {"shallow_hidden", p.policy.network.shallow_hidden},
                      {"learning_rate", p.policy.network.learning_rate},
                      {"shallow_learning_rate", p.policy.network.shallow_learning_rate}}},
                {"uncertainty", uncertainty_json(p.policy.uncertainty)},
                {"age", age}};
}

}  // namespace

std::string policy_to_json(const NamedPolicy& p) { return policy_json(p).dump(2); }

std::string experiment_config_to_json(const ExperimentConfig& cfg) {
    json j{{"mode", cfg.mode},
           {"events", cfg.events},
           {"pool_size", cfg.pool_size},
           {"warm_n", cfg.warm_n},
           {"max_events", cfg.max_events},
           {"seeds", cfg.seeds},
           {"jobs", cfg.jobs},
           {"out_dir", cfg.out_dir},
           {"live",
            json{{"n_steps", cfg.live.n_steps},
                 {"pool_size", cfg.live.pool_size},
                 {"warm_steps", cfg.live.warm_steps},
                 {"low_impression_limit", cfg.live.low_impression_limit}}},
           {"feature_space", cfg.feature_space},
           {"arm_space", cfg.arm_space},
           {"num_user_fields", cfg.num_user_fields},
           {"check_networks", cfg.check_networks},
           {"master_seed", cfg.master_seed}};
    if (!cfg.log_path.empty()) j["log"] = cfg.log_path;
    if (cfg.world) j["world"] = json::parse(world_spec_to_json(*cfg.world));
    json pol = json::array();
    for (const NamedPolicy& p : cfg.policies) pol.push_back(policy_json(p));
    j["policies"] = pol;
    return j.dump(2);
}

std::uint64_t config_digest(const std::string& canonical_text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canonical_text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace age
