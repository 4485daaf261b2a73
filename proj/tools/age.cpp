#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "age/age_policy.hpp"
#include "age/config.hpp"
#include "age/log.hpp"
#include "age/r6b.hpp"
#include "age/replay.hpp"
#include "age/reporting.hpp"
#include "age/rng.hpp"
#include "age/synth.hpp"

namespace fs = std::filesystem;
using namespace age;

namespace {

int log_level() {
    static int level = [] {
        const char* env = std::getenv("AGE_LOG_LEVEL");
        if (!env) return 1;
        std::string v(env);
        if (v == "0" || v == "quiet") return 0;
        if (v == "2" || v == "debug") return 2;
        return 1;
    }();
    return level;
}

template <typename... Args>
void log_info(const char* fmt, Args... args) {
    if (log_level() >= 1) {
        std::fprintf(stderr, fmt, args...);
        std::fprintf(stderr, "\n");
    }
}

template <typename... Args>
void log_debug(const char* fmt, Args... args) {
    if (log_level() >= 2) {
        std::fprintf(stderr, fmt, args...);
        std::fprintf(stderr, "\n");
    }
}

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void print_diags(const std::vector<std::string>& diags) {
    for (const std::string& d : diags) std::fprintf(stderr, "%s\n", d.c_str());
}

ExperimentConfig base_config(const std::string& config_path, const std::string& mode) {
    ExperimentConfig cfg;
    cfg.mode = mode;
    if (config_path.empty()) return cfg;
    ConfigParse parsed = load_experiment_config(config_path);
    if (!parsed.diagnostics.empty()) {
        print_diags(parsed.diagnostics);
        throw ConfigError("invalid config: " + config_path);
    }
    cfg = parsed.config;
    cfg.mode = mode;
    return cfg;
}

std::vector<std::uint64_t> seeds_from_count(std::int64_t n) {
    if (n < 1) throw ConfigError("--seeds must be positive");
    std::vector<std::uint64_t> seeds;
    for (std::int64_t s = 1; s <= n; ++s) seeds.push_back(static_cast<std::uint64_t>(s));
    return seeds;
}

std::vector<NamedPolicy> load_policies_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open");
    std::stringstream ss;
    ss << in.rdbuf();
    std::vector<std::string> diags;
    std::vector<NamedPolicy> policies = parse_policy_list(ss.str(), diags);
    if (!diags.empty()) {
        print_diags(diags);
        throw ConfigError("invalid policy list: " + path);
    }
    if (policies.empty()) throw ConfigError(path + ": no policies");
    return policies;
}

void read_sidecar_dims(const std::string& path, ExperimentConfig& cfg) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open");
    nlohmann::json j;
    try {
        in >> j;
        cfg.feature_space = j.at("feature_space").get<std::int64_t>();
        cfg.arm_space = j.at("arm_space").get<std::int64_t>();
        cfg.num_user_fields = j.at("num_user_fields").get<int>();
    } catch (const std::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

void resolve_dims(ExperimentConfig& cfg) {
    if (cfg.world) {
        cfg.feature_space = cfg.world->feature_space;
        cfg.arm_space = cfg.world->num_arms;
        cfg.num_user_fields = cfg.world->num_user_fields;
    }
    if (cfg.feature_space < 1 || cfg.arm_space < 1 || cfg.num_user_fields < 1)
        throw ConfigError("model dimensions unresolved: give --world, --dims, or config fields");
}

std::vector<LoggedEvent> obtain_log(const ExperimentConfig& cfg) {
    if (!cfg.log_path.empty()) {
        log_info("loading log %s", cfg.log_path.c_str());
        return load_log(cfg.log_path);
    }
    if (!cfg.world) throw ConfigError("no log path and no world spec");
    SyntheticWorld world = build_world(*cfg.world);
    std::uint64_t log_seed = derive_seed(cfg.world->seed, tag("log"));
    log_info("generating %lld-event log from the world spec",
             static_cast<long long>(cfg.events));
    return generate_log(world, cfg.events, cfg.pool_size, log_seed);
}

std::string seed_file_name(const std::string& name, std::uint64_t seed) {
    return name + "_seed" + std::to_string(seed) + ".json";
}

// Fan-out over (policy, seed) pairs, then one results/summary table.
int run_replay_mode(ExperimentConfig cfg) {
    resolve_dims(cfg);
    if (cfg.policies.empty()) throw ConfigError("replay needs at least one policy");
    std::vector<LoggedEvent> log = obtain_log(cfg);
    if (static_cast<std::int64_t>(log.size()) < cfg.warm_n)
        throw ConfigError("log shorter than warm_n");

    struct Job {
        std::size_t policy_idx;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    for (std::size_t p = 0; p < cfg.policies.size(); ++p)
        for (std::uint64_t s : cfg.seeds) jobs.push_back({p, s});

    std::vector<ReplayReport> reports(jobs.size());
    std::vector<std::string> names(jobs.size());
    std::exception_ptr err = nullptr;
    std::int64_t n = static_cast<std::int64_t>(jobs.size());
#pragma omp parallel for schedule(dynamic) num_threads(cfg.jobs)
    for (std::int64_t i = 0; i < n; ++i) {
        try {
            const Job& job = jobs[static_cast<std::size_t>(i)];
            ReplayConfig rc;
            rc.policy = cfg.policies[job.policy_idx].policy;
            rc.warm_n = cfg.warm_n;
            rc.max_events = cfg.max_events;
            rc.feature_space = cfg.feature_space;
            rc.arm_space = cfg.arm_space;
            rc.num_user_fields = cfg.num_user_fields;
            reports[static_cast<std::size_t>(i)] = run_replay_once(rc, log, job.seed);
            names[static_cast<std::size_t>(i)] = cfg.policies[job.policy_idx].name;
        } catch (...) {
#pragma omp critical
            if (!err) err = std::current_exception();
        }
    }
    if (err) std::rethrow_exception(err);

    fs::create_directories(cfg.out_dir);
    std::vector<std::string> outputs;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        std::string fname = seed_file_name(names[i], reports[i].seed);
        write_text_file((fs::path(cfg.out_dir) / fname).string(),
                        replay_report_json(reports[i], names[i]));
        outputs.push_back(fname);
        log_debug("%s: seed %llu clicks %lld", names[i].c_str(),
                  static_cast<unsigned long long>(reports[i].seed),
                  static_cast<long long>(reports[i].cumulative_clicks));
    }
    write_text_file((fs::path(cfg.out_dir) / "results.csv").string(),
                    results_csv(reports, names));
    outputs.push_back("results.csv");
    write_text_file((fs::path(cfg.out_dir) / "summary.csv").string(),
                    summary_csv(reports, names));
    outputs.push_back("summary.csv");
    write_text_file((fs::path(cfg.out_dir) / "manifest.json").string(),
                    manifest_json(experiment_config_to_json(cfg), cfg.seeds, outputs));
    log_info("wrote %zu reports to %s", outputs.size(), cfg.out_dir.c_str());
    return 0;
}

int run_live_mode(ExperimentConfig cfg) {
    if (!cfg.world) throw ConfigError("live needs a world spec");
    if (cfg.policies.empty()) throw ConfigError("live needs at least one policy");
    resolve_dims(cfg);
    SyntheticWorld world = build_world(*cfg.world);

    struct Job {
        std::size_t policy_idx;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    for (std::size_t p = 0; p < cfg.policies.size(); ++p)
        for (std::uint64_t s : cfg.seeds) jobs.push_back({p, s});

    std::vector<LiveReport> reports(jobs.size());
    std::vector<std::string> names(jobs.size());
    std::vector<std::uint64_t> seeds(jobs.size());
    std::exception_ptr err = nullptr;
    std::int64_t n = static_cast<std::int64_t>(jobs.size());
#pragma omp parallel for schedule(dynamic) num_threads(cfg.jobs)
    for (std::int64_t i = 0; i < n; ++i) {
        try {
            const Job& job = jobs[static_cast<std::size_t>(i)];
            reports[static_cast<std::size_t>(i)] =
                live_simulate(world, cfg.policies[job.policy_idx].policy, cfg.live, job.seed);
            names[static_cast<std::size_t>(i)] = cfg.policies[job.policy_idx].name;
            seeds[static_cast<std::size_t>(i)] = job.seed;
        } catch (...) {
#pragma omp critical
            if (!err) err = std::current_exception();
        }
    }
    if (err) std::rethrow_exception(err);

    fs::create_directories(cfg.out_dir);
    std::vector<std::string> outputs;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        std::string fname = seed_file_name(names[i], seeds[i]);
        write_text_file((fs::path(cfg.out_dir) / fname).string(),
                        live_report_json(reports[i], names[i], seeds[i]));
        outputs.push_back(fname);
    }
    write_text_file((fs::path(cfg.out_dir) / "live_results.csv").string(),
                    live_results_csv(reports, names, seeds));
    outputs.push_back("live_results.csv");
    write_text_file((fs::path(cfg.out_dir) / "manifest.json").string(),
                    manifest_json(experiment_config_to_json(cfg), cfg.seeds, outputs));
    log_info("wrote %zu live reports to %s", outputs.size(), cfg.out_dir.c_str());
    return 0;
}

int run_gen_mode(const ExperimentConfig& cfg, const std::string& out_path) {
    if (!cfg.world) throw ConfigError("gen needs a world spec");
    SyntheticWorld world = build_world(*cfg.world);
    std::uint64_t log_seed = derive_seed(cfg.world->seed, tag("log"));
    std::vector<LoggedEvent> log = generate_log(world, cfg.events, cfg.pool_size, log_seed);
    write_log(out_path, log);
    write_text_file(out_path + ".manifest.json",
                    manifest_json(experiment_config_to_json(cfg), cfg.seeds,
                                  std::vector<std::string>{out_path}));
    log_info("wrote %lld events to %s", static_cast<long long>(log.size()), out_path.c_str());
    return 0;
}

std::vector<NamedPolicy> ablation_suite(const NamedPolicy& base) {
    // The base is an AGE policy; each variant knocks out one component.
    std::vector<NamedPolicy> out;
    NamedPolicy ts = base;
    ts.name = "age_ts";
    ts.policy.kind = PolicyKind::age_ts;
    out.push_back(ts);

    NamedPolicy v = ts;
    v.name = "age_ts_fgm";
    v.policy.age.adv.method = AdvMethod::fgm;
    out.push_back(v);

    v = ts;
    v.name = "age_ts_no_delta";
    v.policy.age.ablate_delta_random = true;
    out.push_back(v);

    v = ts;
    v.name = "age_ts_no_dir";
    v.policy.age.ablate_direction_random = true;
    out.push_back(v);

    v = ts;
    v.name = "age_ts_no_dgu";
    v.policy.age.dgu_enabled = false;
    out.push_back(v);

    NamedPolicy ucb = ts;
    ucb.name = "age_ucb";
    ucb.policy.kind = PolicyKind::age_ucb;
    out.push_back(ucb);

    v = ucb;
    v.name = "age_ucb_no_dgu";
    v.policy.age.dgu_enabled = false;
    out.push_back(v);

    NamedPolicy vanilla = base;
    vanilla.name = "vanilla";
    vanilla.policy.kind = PolicyKind::vanilla;
    out.push_back(vanilla);
    return out;
}

int run_ablate_mode(ExperimentConfig cfg, const std::string& variants_csv) {
    if (!cfg.world) throw ConfigError("ablate needs a world spec");
    NamedPolicy base;
    if (!cfg.policies.empty()) base = cfg.policies.front();
    std::vector<NamedPolicy> suite = ablation_suite(base);
    if (!variants_csv.empty()) {
        std::vector<NamedPolicy> kept;
        std::stringstream ss(variants_csv);
        std::string name;
        while (std::getline(ss, name, ',')) {
            bool found = false;
            for (const NamedPolicy& p : suite)
                if (p.name == name) {
                    kept.push_back(p);
                    found = true;
                }
            if (!found) throw ConfigError("unknown ablation variant: " + name);
        }
        suite = kept;
    }
    if (suite.empty()) throw ConfigError("no ablation variants selected");
    cfg.policies = suite;
    return run_replay_mode(std::move(cfg));
}

int run_theorem_check(const ExperimentConfig& cfg, const std::string& out_path) {
    std::int64_t nets = cfg.check_networks;
    std::int64_t passed = 0;
    nlohmann::json rows = nlohmann::json::array();
    for (std::int64_t i = 0; i < nets; ++i) {
        std::uint64_t net_seed = derive_seed(cfg.master_seed, tag("check_net"), i);
        NetworkParams net = make_network(32, 8, 4, 2, std::vector<int>{16, 8}, net_seed);
        Rng rng(derive_seed(cfg.master_seed, tag("check_input"), i));
        SparseFeatureVector x{{static_cast<std::int32_t>(rng.below(16)),
                               static_cast<std::int32_t>(16 + rng.below(16))},
                              static_cast<std::int32_t>(rng.below(8))};
        double f = forward(net, x);
        // Keep the target CTR clear of f so the sign is well defined.
        double p = f < 0.5 ? f + 0.25 * (1.0 - f) : 0.75 * f;
        Collinearity col = expected_update_collinearity(net, x, p, 1e-5);
        bool sign_ok = (p > f) == (col.cosine > 0.0);
        bool ok = !col.degenerate && sign_ok && std::abs(col.cosine) >= 0.999;
        passed += ok ? 1 : 0;
        rows.push_back(nlohmann::json{{"network", i},
                                      {"cosine", col.cosine},
                                      {"degenerate", col.degenerate},
                                      {"pass", ok}});
        log_debug("network %lld: cosine %.12f %s", static_cast<long long>(i), col.cosine,
                  ok ? "ok" : "FAIL");
    }
    std::printf("theorem-check: %lld/%lld networks collinear (threshold 0.999)\n",
                static_cast<long long>(passed), static_cast<long long>(nets));
    if (!out_path.empty()) {
        nlohmann::json j{{"networks", nets}, {"passed", passed}, {"results", rows}};
        write_text_file(out_path, j.dump(2) + "\n");
    }
    return passed == nets ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Exploration policies for neural CTR bandits: synthetic worlds, offline "
                 "replay, live simulation"};
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "Generate a uniform-random logged stream");
    std::string gen_config, gen_world, gen_out = "log.jsonl";
    std::int64_t gen_events = -1, gen_pool = -1;
    gen->add_option("--config", gen_config, "experiment config JSON");
    gen->add_option("--world", gen_world, "world spec JSON");
    gen->add_option("--events", gen_events, "number of events");
    gen->add_option("--pool-size", gen_pool, "candidates per event");
    gen->add_option("--out", gen_out, "output log path (.jsonl or .jsonl.gz)");

    // replay
    auto* replay = app.add_subcommand("replay", "Replay-evaluate policies on a logged stream");
    std::string rp_config, rp_world, rp_log, rp_policies, rp_dims, rp_out;
    std::int64_t rp_seeds = -1, rp_warm = -1, rp_max = -2, rp_events = -1, rp_pool = -1;
    int rp_jobs = -1;
    replay->add_option("--config", rp_config, "experiment config JSON");
    replay->add_option("--world", rp_world, "world spec JSON (dimensions and generated logs)");
    replay->add_option("--log", rp_log, "logged stream (.jsonl, .gz accepted)");
    replay->add_option("--policies", rp_policies, "policy list JSON");
    replay->add_option("--dims", rp_dims, "importer sidecar JSON with model dimensions");
    replay->add_option("--seeds", rp_seeds, "number of seeds (1..N)");
    replay->add_option("--warm-n", rp_warm, "warm-start event count");
    replay->add_option("--max-events", rp_max, "cap on evaluated events (-1 = all)");
    replay->add_option("--events", rp_events, "generated log length when no --log");
    replay->add_option("--pool-size", rp_pool, "generated pool size when no --log");
    replay->add_option("--jobs", rp_jobs, "parallel (policy, seed) runs");
    replay->add_option("--out", rp_out, "output directory");

    // live
    auto* live = app.add_subcommand("live", "Simulate policies against the ground-truth world");
    std::string lv_config, lv_world, lv_policies, lv_out;
    std::int64_t lv_seeds = -1, lv_steps = -1, lv_pool = -1, lv_warm = -1;
    int lv_jobs = -1;
    live->add_option("--config", lv_config, "experiment config JSON");
    live->add_option("--world", lv_world, "world spec JSON");
    live->add_option("--policies", lv_policies, "policy list JSON");
    live->add_option("--seeds", lv_seeds, "number of seeds (1..N)");
    live->add_option("--steps", lv_steps, "simulation steps per run");
    live->add_option("--pool-size", lv_pool, "candidates per step");
    live->add_option("--warm-steps", lv_warm, "uniform-random warm steps");
    live->add_option("--jobs", lv_jobs, "parallel (policy, seed) runs");
    live->add_option("--out", lv_out, "output directory");

    // ablate
    auto* ablate = app.add_subcommand("ablate", "Run the component knock-out suite");
    std::string ab_config, ab_world, ab_out, ab_variants;
    std::int64_t ab_seeds = -1, ab_events = -1, ab_pool = -1, ab_warm = -1;
    int ab_jobs = -1;
    ablate->add_option("--config", ab_config, "experiment config JSON");
    ablate->add_option("--world", ab_world, "world spec JSON");
    ablate->add_option("--variants", ab_variants, "comma-separated variant names");
    ablate->add_option("--seeds", ab_seeds, "number of seeds (1..N)");
    ablate->add_option("--events", ab_events, "generated log length");
    ablate->add_option("--pool-size", ab_pool, "generated pool size");
    ablate->add_option("--warm-n", ab_warm, "warm-start event count");
    ablate->add_option("--jobs", ab_jobs, "parallel runs");
    ablate->add_option("--out", ab_out, "output directory");

    // theorem-check
    auto* check = app.add_subcommand("theorem-check",
                                     "Verify expected-update collinearity on random networks");
    std::string tc_config, tc_out;
    std::int64_t tc_networks = -1;
    std::uint64_t tc_seed = 0;
    bool tc_seed_set = false;
    check->add_option("--config", tc_config, "experiment config JSON");
    check->add_option("--networks", tc_networks, "number of random networks");
    check
        ->add_option_function<std::uint64_t>(
            "--seed",
            [&](std::uint64_t v) {
                tc_seed = v;
                tc_seed_set = true;
            },
            "master seed")
        ->expected(1);
    check->add_option("--out", tc_out, "JSON report path");

    // validate
    auto* validate = app.add_subcommand("validate", "Check a config without running it");
    std::string va_config;
    validate->add_option("--config", va_config, "experiment config JSON")->required();

    // import-r6b
    auto* import = app.add_subcommand("import-r6b",
                                      "Convert a space-delimited bandit log to the canonical "
                                      "format");
    std::string im_in, im_out = "imported.jsonl", im_sidecar = "imported.meta.json";
    int im_fields = 4;
    import->add_option("--in", im_in, "raw log path (.gz accepted)")->required();
    import->add_option("--fields", im_fields, "user feature fields to keep");
    import->add_option("--out", im_out, "canonical log output path");
    import->add_option("--sidecar", im_sidecar, "dimension/mapping JSON output path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (gen->parsed()) {
            ExperimentConfig cfg = base_config(gen_config, "gen");
            if (!gen_world.empty()) cfg.world = world_spec_from_json_file(gen_world);
            if (gen_events >= 0) cfg.events = gen_events;
            if (gen_pool >= 1) cfg.pool_size = gen_pool;
            if (!cfg.world) throw ConfigError("gen needs --world or a config with one");
            return run_gen_mode(cfg, gen_out);
        }
        if (replay->parsed()) {
            ExperimentConfig cfg = base_config(rp_config, "replay");
            if (!rp_world.empty()) cfg.world = world_spec_from_json_file(rp_world);
            if (!rp_dims.empty()) read_sidecar_dims(rp_dims, cfg);
            if (!rp_log.empty()) cfg.log_path = rp_log;
            if (!rp_policies.empty()) cfg.policies = load_policies_file(rp_policies);
            if (rp_seeds >= 1) cfg.seeds = seeds_from_count(rp_seeds);
            if (rp_warm >= 0) cfg.warm_n = rp_warm;
            if (rp_max >= -1) cfg.max_events = rp_max;
            if (rp_events >= 0) cfg.events = rp_events;
            if (rp_pool >= 1) cfg.pool_size = rp_pool;
            if (rp_jobs >= 1) cfg.jobs = rp_jobs;
            if (!rp_out.empty()) cfg.out_dir = rp_out;
            return run_replay_mode(std::move(cfg));
        }
        if (live->parsed()) {
            ExperimentConfig cfg = base_config(lv_config, "live");
            if (!lv_world.empty()) cfg.world = world_spec_from_json_file(lv_world);
            if (!lv_policies.empty()) cfg.policies = load_policies_file(lv_policies);
            if (lv_seeds >= 1) cfg.seeds = seeds_from_count(lv_seeds);
            if (lv_steps >= 0) cfg.live.n_steps = lv_steps;
            if (lv_pool >= 1) cfg.live.pool_size = lv_pool;
            if (lv_warm >= 0) cfg.live.warm_steps = lv_warm;
            if (lv_jobs >= 1) cfg.jobs = lv_jobs;
            if (!lv_out.empty()) cfg.out_dir = lv_out;
            return run_live_mode(std::move(cfg));
        }
        if (ablate->parsed()) {
            ExperimentConfig cfg = base_config(ab_config, "ablate");
            if (!ab_world.empty()) cfg.world = world_spec_from_json_file(ab_world);
            if (ab_seeds >= 1) cfg.seeds = seeds_from_count(ab_seeds);
            if (ab_events >= 0) cfg.events = ab_events;
            if (ab_pool >= 1) cfg.pool_size = ab_pool;
            if (ab_warm >= 0) cfg.warm_n = ab_warm;
            if (ab_jobs >= 1) cfg.jobs = ab_jobs;
            if (!ab_out.empty()) cfg.out_dir = ab_out;
            return run_ablate_mode(std::move(cfg), ab_variants);
        }
        if (check->parsed()) {
            ExperimentConfig cfg = base_config(tc_config, "theorem-check");
            if (tc_networks >= 1) cfg.check_networks = tc_networks;
            if (tc_seed_set) cfg.master_seed = tc_seed;
            return run_theorem_check(cfg, tc_out);
        }
        if (validate->parsed()) {
            ConfigParse parsed = load_experiment_config(va_config);
            if (parsed.diagnostics.empty()) {
                std::printf("ok\n");
                return 0;
            }
            print_diags(parsed.diagnostics);
            return 1;
        }
        if (import->parsed()) {
            ImportResult res = import_r6b(im_in, im_fields);
            write_import(res, im_out, im_sidecar);
            log_info("imported %zu events, %zu arms, feature space %lld", res.events.size(),
                     res.arm_names.size(), static_cast<long long>(res.feature_space));
            return 0;
        }
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
