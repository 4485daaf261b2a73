#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "age/model.hpp"
#include "age/nn.hpp"
#include "age/rng.hpp"
#include "helpers.hpp"

using namespace age;
using namespace testutil;

TEST_CASE("stable_sigmoid matches reference values and saturates inside (0,1)") {
    CHECK(stable_sigmoid(0.0) == 0.5);
    CHECK(stable_sigmoid(1.0) == doctest::Approx(0.7310585786300049).epsilon(1e-15));
    CHECK(stable_sigmoid(-1.0) == doctest::Approx(0.2689414213699951).epsilon(1e-15));
    CHECK(stable_sigmoid(2.5) == doctest::Approx(0.92414181997875655).epsilon(1e-15));
    CHECK(stable_sigmoid(800.0) < 1.0);
    CHECK(stable_sigmoid(-800.0) > 0.0);
    CHECK(stable_sigmoid(800.0) == 1.0 - 1e-15);
    CHECK(stable_sigmoid(-800.0) == 1e-15);
}

TEST_CASE("gather_embedding concatenates field rows then the arm row") {
    NetworkParams net = small_net(11);
    SparseFeatureVector x{{1, 7}, 4};
    std::vector<double> h = gather_embedding(net, x);
    REQUIRE(h.size() == static_cast<std::size_t>(net.input_width()));
    int d = net.emb.dim;
    for (int i = 0; i < d; ++i) {
        CHECK(h[static_cast<std::size_t>(i)] == net.emb.rows[static_cast<std::size_t>(1 * d + i)]);
        CHECK(h[static_cast<std::size_t>(d + i)] ==
              net.emb.rows[static_cast<std::size_t>(7 * d + i)]);
        CHECK(h[static_cast<std::size_t>(2 * d + i)] ==
              net.emb.rows[static_cast<std::size_t>((net.emb.feature_space + 4) * d + i)]);
    }

    SUBCASE("field count, ordering, and ranges are enforced") {
        CHECK_THROWS_AS(gather_embedding(net, {{1}, 4}), std::invalid_argument);
        CHECK_THROWS_AS(gather_embedding(net, {{7, 1}, 4}), std::invalid_argument);
        CHECK_THROWS_AS(gather_embedding(net, {{3, 3}, 4}), std::invalid_argument);
        CHECK_THROWS_AS(gather_embedding(net, {{1, 7}, 6}), std::invalid_argument);
        CHECK_THROWS_AS(gather_embedding(net, {{1, 12}, 4}), std::invalid_argument);
        CHECK_THROWS_AS(gather_embedding(net, {{-1, 7}, 4}), std::invalid_argument);
    }
}

TEST_CASE("forward reproduces a hand-computed two-layer chain") {
    // Input width 2, one hidden unit, fixed weights. pre = 0.5*2 + 0.25*4 = 2,
    // relu keeps it, logit = 2*0.5 - 1.5 = -0.5.
    Mlp mlp;
    mlp.widths = {2, 1, 1};
    mlp.weights = {{2.0, 4.0}, {0.5}};
    mlp.biases = {{0.0}, {-1.5}};
    std::vector<double> h = {0.5, 0.25};
    ForwardCache cache = forward_cache_at(mlp, h);
    CHECK(cache.logit == -0.5);
    CHECK(cache.prob == doctest::Approx(0.37754066879814541).epsilon(1e-15));

    SUBCASE("negative pre-activation is gated to zero") {
        std::vector<double> h2 = {-0.5, -0.25};
        ForwardCache c2 = forward_cache_at(mlp, h2);
        CHECK(c2.logit == -1.5);
        CHECK(c2.post[0][0] == 0.0);
    }
}

TEST_CASE("prediction gradient with respect to the input matches finite differences") {
    for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull}) {
        NetworkParams net = small_net(seed);
        SparseFeatureVector x = random_input(net, derive_seed(seed, tag("in")));
        std::vector<double> g = grad_wrt_embedding(net, x);
        std::vector<double> fd = fd_input_gradient(net, x);
        REQUIRE(g.size() == fd.size());
        CHECK(max_abs_diff(g, fd) < 1e-8);
    }
}

TEST_CASE("loss gradients match finite differences on every parameter block") {
    NetworkParams net = small_net(42, {.hidden = {5}});
    SparseFeatureVector x = random_input(net, 9);
    int label = 1;
    LossResult res = loss_and_grads(net, x, label);
    double eps = 1e-6;

    SUBCASE("mlp weights and biases") {
        for (int l = 0; l < net.mlp.num_layers(); ++l) {
            for (std::size_t i = 0; i < net.mlp.weights[l].size(); ++i) {
                NetworkParams plus = net, minus = net;
                plus.mlp.weights[l][i] += eps;
                minus.mlp.weights[l][i] -= eps;
                double fd = (cross_entropy(forward(plus, x), label) -
                             cross_entropy(forward(minus, x), label)) /
                            (2.0 * eps);
                CHECK(res.grads.mlp.weights[l][i] == doctest::Approx(fd).epsilon(1e-6));
            }
            for (std::size_t i = 0; i < net.mlp.biases[l].size(); ++i) {
                NetworkParams plus = net, minus = net;
                plus.mlp.biases[l][i] += eps;
                minus.mlp.biases[l][i] -= eps;
                double fd = (cross_entropy(forward(plus, x), label) -
                             cross_entropy(forward(minus, x), label)) /
                            (2.0 * eps);
                CHECK(res.grads.mlp.biases[l][i] == doctest::Approx(fd).epsilon(1e-6));
            }
        }
    }

    SUBCASE("touched embedding rows") {
        for (const auto& [row, g] : res.grads.emb_rows) {
            for (int i = 0; i < net.emb.dim; ++i) {
                NetworkParams plus = net, minus = net;
                std::size_t flat = static_cast<std::size_t>(row * net.emb.dim + i);
                plus.emb.rows[flat] += eps;
                minus.emb.rows[flat] -= eps;
                double fd = (cross_entropy(forward(plus, x), label) -
                             cross_entropy(forward(minus, x), label)) /
                            (2.0 * eps);
                CHECK(g[static_cast<std::size_t>(i)] == doctest::Approx(fd).epsilon(1e-6));
            }
        }
    }

    SUBCASE("only touched rows carry gradient") {
        REQUIRE(res.grads.emb_rows.size() ==
                static_cast<std::size_t>(net.num_user_fields) + 1);
        CHECK(res.grads.emb_rows.back().first == net.emb.arm_row(x.arm_id));
    }
}

TEST_CASE("adam takes the reference first and second step") {
    // Single linear weight, constant gradient 3. Bias correction makes the
    // first step lr * g / (|g| + eps).
    Mlp mlp;
    mlp.widths = {1, 1};
    mlp.weights = {{1.0}};
    mlp.biases = {{0.0}};
    AdamState st = make_adam_state(mlp, 0.1);
    MlpGrads grads;
    grads.weights = {{3.0}};
    grads.biases = {{0.0}};
    adam_step(mlp, grads, st);
    CHECK(mlp.weights[0][0] == doctest::Approx(0.90000000033333327).epsilon(1e-15));
    adam_step(mlp, grads, st);
    CHECK(mlp.weights[0][0] == doctest::Approx(0.80000000066666732).epsilon(1e-14));
    CHECK(st.step == 2);

    SUBCASE("zero gradient leaves parameters in place") {
        Mlp mlp2;
        mlp2.widths = {1, 1};
        mlp2.weights = {{1.0}};
        mlp2.biases = {{0.5}};
        AdamState st2 = make_adam_state(mlp2, 0.1);
        MlpGrads zero;
        zero.weights = {{0.0}};
        zero.biases = {{0.0}};
        adam_step(mlp2, zero, st2);
        CHECK(mlp2.weights[0][0] == 1.0);
        CHECK(mlp2.biases[0][0] == 0.5);
    }
}

TEST_CASE("adam on the full network updates only what the gradients touch") {
    NetworkParams net = small_net(3);
    NetworkParams before = net;
    AdamState st = make_adam_state(net, 1e-2);
    SparseFeatureVector x = random_input(net, 4);
    LossResult res = loss_and_grads(net, x, 0);
    adam_step(net, res.grads, st);

    int d = net.emb.dim;
    std::vector<bool> touched(static_cast<std::size_t>(net.emb.row_count()), false);
    for (const auto& [row, g] : res.grads.emb_rows) touched[static_cast<std::size_t>(row)] = true;
    for (std::int64_t row = 0; row < net.emb.row_count(); ++row) {
        bool same = true;
        for (int i = 0; i < d; ++i)
            same = same && net.emb.rows[static_cast<std::size_t>(row * d + i)] ==
                               before.emb.rows[static_cast<std::size_t>(row * d + i)];
        CHECK(same == !touched[static_cast<std::size_t>(row)]);
    }
}

TEST_CASE("dropout masks gate and rescale hidden activations") {
    Mlp mlp;
    mlp.widths = {2, 2, 1};
    mlp.weights = {{1.0, 0.0, 0.0, 1.0}, {1.0, 1.0}};
    mlp.biases = {{0.0, 0.0}, {0.0}};
    std::vector<double> h = {0.3, 0.4};

    DropoutMask mask;
    mask.keep_rate = 0.5;
    mask.scale = {{2.0, 0.0}};
    ForwardCache cache = forward_cache_at(mlp, h, &mask);
    CHECK(cache.post[0][0] == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(cache.post[0][1] == 0.0);
    CHECK(cache.logit == doctest::Approx(0.6).epsilon(1e-15));

    SUBCASE("sampled masks are deterministic in the seed and scale by 1/keep") {
        std::vector<int> widths = {64};
        DropoutMask a = sample_mask(0.25, widths, 7);
        DropoutMask b = sample_mask(0.25, widths, 7);
        CHECK(a.scale == b.scale);
        int kept = 0;
        for (double v : a.scale[0]) {
            CHECK((v == 0.0 || v == doctest::Approx(1.0 / 0.75).epsilon(1e-15)));
            kept += v != 0.0;
        }
        CHECK(kept > 0);
        CHECK(kept < 64);
        DropoutMask c = sample_mask(0.25, widths, 8);
        CHECK(a.scale != c.scale);
    }

    SUBCASE("rates outside (0,1) are rejected") {
        std::vector<int> widths = {4};
        CHECK_THROWS_AS(sample_mask(0.0, widths, 1), std::invalid_argument);
        CHECK_THROWS_AS(sample_mask(1.0, widths, 1), std::invalid_argument);
        CHECK_THROWS_AS(sample_mask(-0.1, widths, 1), std::invalid_argument);
    }
}

TEST_CASE("kept dropout fraction concentrates around the keep rate") {
    std::vector<int> widths = {1000};
    double rate = 0.3;
    int kept = 0;
    for (std::uint64_t s = 0; s < 20; ++s) {
        DropoutMask m = sample_mask(rate, widths, s);
        for (double v : m.scale[0]) kept += v != 0.0;
    }
    double frac = kept / 20000.0;
    CHECK(frac == doctest::Approx(0.7).epsilon(0.02));
}

TEST_CASE("digest tracks parameter content") {
    NetworkParams a = small_net(5);
    NetworkParams b = a;
    CHECK(digest(a) == digest(b));
    b.mlp.weights[0][0] += 1e-12;
    CHECK(digest(a) != digest(b));
    NetworkParams c = small_net(6);
    CHECK(digest(a) != digest(c));
}

TEST_CASE("model save and load round-trips every tensor") {
    NetworkConfig cfg;
    cfg.embedding_dim = 3;
    cfg.hidden = {8, 4};
    cfg.shallow_hidden = {4};
    Model m = make_model(12, 6, 2, cfg, 21);

    // Move the state off its initial values first.
    SparseFeatureVector x = random_input(m.net, 2);
    LossResult res = loss_and_grads(m.net, x, 1);
    adam_step(m.net, res.grads, m.net_state);

    std::filesystem::path path =
        std::filesystem::temp_directory_path() / "age_model_roundtrip.bin";
    save_model(path.string(), m);
    Model r = load_model(path.string());
    std::filesystem::remove(path);

    CHECK(digest(m) == digest(r));
    CHECK(digest(m.net_state) == digest(r.net_state));
    CHECK(m.net_state.step == r.net_state.step);
    SparseFeatureVector probe = random_input(m.net, 3);
    CHECK(forward(m.net, probe) == forward(r.net, probe));
    CHECK(shallow_forward(m, probe.arm_id) == shallow_forward(r, probe.arm_id));
}

TEST_CASE("forward is deterministic and mask-free by default") {
    NetworkParams net = small_net(8);
    SparseFeatureVector x = random_input(net, 1);
    CHECK(forward(net, x) == forward(net, x));
    std::vector<double> h = gather_embedding(net, x);
    CHECK(forward(net, x) == forward_at(net, h));
}
