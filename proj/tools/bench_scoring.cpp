// Times pool scoring with the serial loop against the OpenMP one. The two
// paths must agree bitwise, so the checksum column doubles as a self-check.
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "age/age_policy.hpp"
#include "age/model.hpp"
#include "age/parallel.hpp"
#include "age/rng.hpp"
#include "age/synth.hpp"

using namespace age;
using clock_type = std::chrono::steady_clock;

namespace {

double run_pass(const Model& model, const SyntheticWorld& world, const AgeConfig& cfg,
                int rounds, std::int64_t pool_size, Exec exec, double* checksum) {
    double sum = 0.0;
    auto start = clock_type::now();
    for (int r = 0; r < rounds; ++r) {
        std::uint64_t seed = derive_seed(99, tag("bench"), r);
        std::vector<std::int32_t> user = world.sample_user(derive_seed(seed, tag("user")));
        std::vector<std::int32_t> arms = world.sample_pool(pool_size, derive_seed(seed, tag("pool")));
        std::vector<SparseFeatureVector> pool;
        pool.reserve(arms.size());
        for (std::int32_t arm : arms) pool.push_back({user, arm});
        Selection sel = select_arm(model, pool, cfg, {}, seed, exec);
        sum += sel.breakdowns[static_cast<std::size_t>(sel.pool_index)].final_score;
    }
    auto stop = clock_type::now();
    *checksum = sum;
    return std::chrono::duration<double>(stop - start).count();
}

}  // namespace

int main(int argc, char** argv) {
    int rounds = 200;
    std::int64_t pool_size = 50;
    if (argc > 1) rounds = std::atoi(argv[1]);
    if (argc > 2) pool_size = std::atoll(argv[2]);
    if (rounds < 1 || pool_size < 1) {
        std::fprintf(stderr, "usage: bench_scoring [rounds] [pool_size]\n");
        return 1;
    }

    SyntheticWorldSpec spec;
    spec.num_arms = 500;
    SyntheticWorld world = build_world(spec);

    NetworkConfig net_cfg;
    Model model = make_model(spec.feature_space, spec.num_arms, spec.num_user_fields, net_cfg, 7);
    AgeConfig cfg;
    cfg.uncertainty.n_samples = 20;

    double sum_serial = 0.0, sum_parallel = 0.0;
    double t_serial = run_pass(model, world, cfg, rounds, pool_size, Exec::serial, &sum_serial);
    double t_parallel = run_pass(model, world, cfg, rounds, pool_size, Exec::parallel,
                                 &sum_parallel);

    std::printf("rounds %d, pool %lld, mlp %dx%d\n", rounds, static_cast<long long>(pool_size),
                net_cfg.hidden[0], net_cfg.hidden[1]);
    std::printf("%-10s %10s %14s %22s\n", "path", "seconds", "events/sec", "checksum");
    std::printf("%-10s %10.3f %14.1f %22.17g\n", "serial", t_serial, rounds / t_serial,
                sum_serial);
    std::printf("%-10s %10.3f %14.1f %22.17g\n", "parallel", t_parallel, rounds / t_parallel,
                sum_parallel);
    if (sum_serial != sum_parallel) {
        std::fprintf(stderr, "checksum mismatch: serial and parallel scoring disagree\n");
        return 2;
    }
    std::printf("speedup %.2fx\n", t_serial / t_parallel);
    return 0;
}
