#include "age/nn.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "age/rng.hpp"

namespace age {

namespace {

constexpr double kProbFloor = 1e-15;       // forward output stays inside (0,1)
constexpr double kLossClamp = 1e-7;        // clamp before log in cross-entropy

void check(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

void fnv1a_accum(std::uint64_t& h, const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
}

void hash_vec(std::uint64_t& h, const std::vector<double>& v) {
    fnv1a_accum(h, v.data(), v.size() * sizeof(double));
}

}  // namespace

double stable_sigmoid(double z) {
    double s;
    if (z >= 0.0) {
        s = 1.0 / (1.0 + std::exp(-z));
    } else {
        double e = std::exp(z);
        s = e / (1.0 + e);
    }
    if (s < kProbFloor) s = kProbFloor;
    if (s > 1.0 - kProbFloor) s = 1.0 - kProbFloor;
    return s;
}

Mlp make_mlp(int input_width, std::span<const int> hidden, std::uint64_t seed) {
    Mlp mlp;
    mlp.widths.push_back(input_width);
    for (int w : hidden) mlp.widths.push_back(w);
    mlp.widths.push_back(1);

    Rng rng(derive_seed(seed, tag("mlp_init")));
    for (std::size_t l = 0; l + 1 < mlp.widths.size(); ++l) {
        int fan_in = mlp.widths[l];
        int fan_out = mlp.widths[l + 1];
        bool output_layer = (l + 2 == mlp.widths.size());
        // He init on rectifier layers, smaller scale on the logit layer.
        double scale = output_layer ? 1.0 / std::sqrt(static_cast<double>(fan_in))
                                    : std::sqrt(2.0 / static_cast<double>(fan_in));
        std::vector<double> w(static_cast<std::size_t>(fan_in) * fan_out);
        for (double& v : w) v = scale * rng.normal();
        mlp.weights.push_back(std::move(w));
        mlp.biases.emplace_back(fan_out, 0.0);
    }
    return mlp;
}

NetworkParams make_network(std::int64_t feature_space, std::int64_t arm_space, int dim,
                           int num_user_fields, std::span<const int> hidden,
                           std::uint64_t seed) {
    check(feature_space >= 0 && arm_space >= 1 && dim >= 1, "make_network: bad shape");
    check(num_user_fields >= 0, "make_network: bad field count");
    NetworkParams net;
    net.emb.feature_space = feature_space;
    net.emb.arm_space = arm_space;
    net.emb.dim = dim;
    net.emb.rows.resize(static_cast<std::size_t>(net.emb.row_count()) * dim);
    Rng rng(derive_seed(seed, tag("emb_init")));
    for (double& v : net.emb.rows) v = 0.1 * rng.normal();
    net.num_user_fields = num_user_fields;
    net.mlp = make_mlp(net.input_width(), hidden, seed);
    return net;
}

AdamState make_adam_state(const NetworkParams& net, double learning_rate) {
    AdamState st = make_adam_state(net.mlp, learning_rate);
    st.emb_m.assign(net.emb.rows.size(), 0.0);
    st.emb_v.assign(net.emb.rows.size(), 0.0);
    return st;
}

AdamState make_adam_state(const Mlp& mlp, double learning_rate) {
    AdamState st;
    st.learning_rate = learning_rate;
    for (int l = 0; l < mlp.num_layers(); ++l) {
        st.w_m.emplace_back(mlp.weights[l].size(), 0.0);
        st.w_v.emplace_back(mlp.weights[l].size(), 0.0);
        st.b_m.emplace_back(mlp.biases[l].size(), 0.0);
        st.b_v.emplace_back(mlp.biases[l].size(), 0.0);
    }
    return st;
}

void validate_network(const NetworkParams& net) {
    check(net.emb.dim >= 1, "network: embedding dim");
    check(net.emb.rows.size() ==
              static_cast<std::size_t>(net.emb.row_count()) * net.emb.dim,
          "network: embedding row storage");
    check(!net.mlp.widths.empty() && net.mlp.widths.back() == 1, "network: output width");
    check(net.mlp.input_width() == net.input_width(), "network: input width chain");
    for (std::size_t l = 0; l + 1 < net.mlp.widths.size(); ++l) {
        check(net.mlp.weights[l].size() ==
                  static_cast<std::size_t>(net.mlp.widths[l]) * net.mlp.widths[l + 1],
              "network: layer shape chain");
        check(net.mlp.biases[l].size() == static_cast<std::size_t>(net.mlp.widths[l + 1]),
              "network: bias shape");
    }
    for (double v : net.emb.rows)
        if (!std::isfinite(v)) throw std::invalid_argument("network: non-finite embedding");
    for (const auto& w : net.mlp.weights)
        for (double v : w)
            if (!std::isfinite(v)) throw std::invalid_argument("network: non-finite weight");
}

std::vector<double> gather_embedding(const NetworkParams& net, const SparseFeatureVector& x) {
    check(static_cast<int>(x.active_indices.size()) == net.num_user_fields,
          "input: active index count must equal the field count");
    check(strictly_increasing(x.active_indices), "input: indices must be strictly increasing");
    check(x.arm_id >= 0 && x.arm_id < net.emb.arm_space, "input: arm id out of range");

    std::vector<double> h(net.input_width());
    double* out = h.data();
    for (std::int32_t idx : x.active_indices) {
        check(idx >= 0 && idx < net.emb.feature_space, "input: feature index out of range");
        std::memcpy(out, net.emb.row(idx), sizeof(double) * net.emb.dim);
        out += net.emb.dim;
    }
    std::memcpy(out, net.emb.row(net.emb.arm_row(x.arm_id)), sizeof(double) * net.emb.dim);
    return h;
}

ForwardCache forward_cache_at(const Mlp& mlp, std::span<const double> h,
                              const DropoutMask* mask) {
    check(h.size() == static_cast<std::size_t>(mlp.input_width()), "forward: input width");
    if (mask)
        check(static_cast<int>(mask->scale.size()) == mlp.num_hidden(),
              "forward: mask layer count");

    ForwardCache cache;
    cache.input.assign(h.begin(), h.end());
    const std::vector<double>* act = &cache.input;

    int layers = mlp.num_layers();
    cache.pre.resize(layers);
    cache.post.resize(layers - 1);
    for (int l = 0; l < layers; ++l) {
        int in_w = mlp.widths[l];
        int out_w = mlp.widths[l + 1];
        std::vector<double>& z = cache.pre[l];
        z.assign(mlp.biases[l].begin(), mlp.biases[l].end());
        const double* w = mlp.weights[l].data();
        const double* a = act->data();
        for (int o = 0; o < out_w; ++o) {
            const double* wrow = w + static_cast<std::size_t>(o) * in_w;
            double acc = z[o];
            for (int i = 0; i < in_w; ++i) acc += wrow[i] * a[i];
            z[o] = acc;
        }
        if (l + 1 < layers) {
            std::vector<double>& out = cache.post[l];
            out.resize(out_w);
            if (mask) {
                const std::vector<double>& m = mask->scale[l];
                check(m.size() == static_cast<std::size_t>(out_w), "forward: mask width");
                for (int o = 0; o < out_w; ++o) out[o] = (z[o] > 0.0 ? z[o] : 0.0) * m[o];
            } else {
                for (int o = 0; o < out_w; ++o) out[o] = z[o] > 0.0 ? z[o] : 0.0;
            }
            act = &out;
        }
    }
    cache.logit = cache.pre.back()[0];
    if (!std::isfinite(cache.logit)) throw std::domain_error("forward: non-finite logit");
    cache.prob = stable_sigmoid(cache.logit);
    return cache;
}

double forward(const NetworkParams& net, const SparseFeatureVector& x,
               const DropoutMask* mask) {
    std::vector<double> h = gather_embedding(net, x);
    return forward_cache_at(net.mlp, h, mask).prob;
}

double forward_at(const NetworkParams& net, std::span<const double> h,
                  const DropoutMask* mask) {
    return forward_cache_at(net.mlp, h, mask).prob;
}

void backprop(const Mlp& mlp, const ForwardCache& cache, double dlogit,
              MlpGrads* grads, std::vector<double>* input_grad,
              const DropoutMask* mask) {
    int layers = mlp.num_layers();
    if (grads) {
        grads->weights.resize(layers);
        grads->biases.resize(layers);
    }

    std::vector<double> delta{dlogit};  // gradient wrt pre[l]
    for (int l = layers - 1; l >= 0; --l) {
        int in_w = mlp.widths[l];
        int out_w = mlp.widths[l + 1];
        const std::vector<double>& below =
            (l == 0) ? cache.input : cache.post[l - 1];

        if (grads) {
            std::vector<double>& gw = grads->weights[l];
            std::vector<double>& gb = grads->biases[l];
            gw.assign(static_cast<std::size_t>(in_w) * out_w, 0.0);
            gb.assign(out_w, 0.0);
            for (int o = 0; o < out_w; ++o) {
                double d = delta[o];
                gb[o] = d;
                double* grow = gw.data() + static_cast<std::size_t>(o) * in_w;
                for (int i = 0; i < in_w; ++i) grow[i] = d * below[i];
            }
        }

        bool need_below = (l > 0) || (input_grad != nullptr);
        if (!need_below) break;

        std::vector<double> d_below(in_w, 0.0);
        const double* w = mlp.weights[l].data();
        for (int o = 0; o < out_w; ++o) {
            double d = delta[o];
            const double* wrow = w + static_cast<std::size_t>(o) * in_w;
            for (int i = 0; i < in_w; ++i) d_below[i] += d * wrow[i];
        }
        if (l > 0) {
            // through mask scaling and the rectifier of layer l-1
            const std::vector<double>& z = cache.pre[l - 1];
            if (mask) {
                const std::vector<double>& m = mask->scale[l - 1];
                for (int i = 0; i < in_w; ++i)
                    d_below[i] = z[i] > 0.0 ? d_below[i] * m[i] : 0.0;
            } else {
                for (int i = 0; i < in_w; ++i)
                    if (z[i] <= 0.0) d_below[i] = 0.0;
            }
        } else {
            *input_grad = d_below;
            break;
        }
        delta = std::move(d_below);
    }
}

std::vector<double> grad_wrt_embedding(const NetworkParams& net, const SparseFeatureVector& x,
                                       const DropoutMask* mask) {
    std::vector<double> h = gather_embedding(net, x);
    return grad_wrt_embedding_at(net.mlp, h, mask);
}

std::vector<double> grad_wrt_embedding_at(const Mlp& mlp, std::span<const double> h,
                                          const DropoutMask* mask) {
    ForwardCache cache = forward_cache_at(mlp, h, mask);
    double dlogit = cache.prob * (1.0 - cache.prob);  // sigmoid'
    std::vector<double> g;
    backprop(mlp, cache, dlogit, nullptr, &g, mask);
    return g;
}

double cross_entropy(double prob, int label) {
    check(label == 0 || label == 1, "loss: label must be 0 or 1");
    double f = prob;
    if (f < kLossClamp) f = kLossClamp;
    if (f > 1.0 - kLossClamp) f = 1.0 - kLossClamp;
    return label == 1 ? -std::log(f) : -std::log(1.0 - f);
}

LossResult loss_and_grads(const NetworkParams& net, const SparseFeatureVector& x,
                          int label, const DropoutMask* mask) {
    check(label == 0 || label == 1, "loss: label must be 0 or 1");
    std::vector<double> h = gather_embedding(net, x);
    ForwardCache cache = forward_cache_at(net.mlp, h, mask);

    LossResult res;
    res.prob = cache.prob;
    res.loss = cross_entropy(cache.prob, label);

    double dlogit = cache.prob - static_cast<double>(label);
    std::vector<double> dh;
    backprop(net.mlp, cache, dlogit, &res.grads.mlp, &dh, mask);

    // Scatter the input gradient back onto the touched embedding rows.
    int d = net.emb.dim;
    const double* src = dh.data();
    for (std::int32_t idx : x.active_indices) {
        res.grads.emb_rows.emplace_back(idx, std::vector<double>(src, src + d));
        src += d;
    }
    res.grads.emb_rows.emplace_back(net.emb.arm_row(x.arm_id),
                                    std::vector<double>(src, src + d));
    return res;
}

std::vector<double> loss_grad_wrt_embedding(const NetworkParams& net,
                                            const SparseFeatureVector& x, int label) {
    check(label == 0 || label == 1, "loss: label must be 0 or 1");
    std::vector<double> h = gather_embedding(net, x);
    ForwardCache cache = forward_cache_at(net.mlp, h, nullptr);
    double dlogit = cache.prob - static_cast<double>(label);
    std::vector<double> g;
    backprop(net.mlp, cache, dlogit, nullptr, &g, nullptr);
    return g;
}

namespace {

// One dense Adam sweep over a parameter block. Gradients default to zero;
// `add` scatters the nonzero entries beforehand.
void adam_block(std::span<double> params, std::span<double> m, std::span<double> v,
                std::span<const double> grad, const AdamState& st, double corr1,
                double corr2) {
    double lr = st.learning_rate;
    for (std::size_t i = 0; i < params.size(); ++i) {
        double g = grad.empty() ? 0.0 : grad[i];
        m[i] = st.beta1 * m[i] + (1.0 - st.beta1) * g;
        v[i] = st.beta2 * v[i] + (1.0 - st.beta2) * g * g;
        double mh = m[i] / corr1;
        double vh = v[i] / corr2;
        params[i] -= lr * mh / (std::sqrt(vh) + st.epsilon);
    }
}

void adam_mlp(Mlp& mlp, const MlpGrads& grads, AdamState& st, double corr1, double corr2) {
    for (int l = 0; l < mlp.num_layers(); ++l) {
        if (mlp.weights[l].size() != grads.weights[l].size() ||
            mlp.biases[l].size() != grads.biases[l].size())
            throw std::invalid_argument("adam: gradient shape mismatch");
        adam_block(mlp.weights[l], st.w_m[l], st.w_v[l], grads.weights[l], st, corr1, corr2);
        adam_block(mlp.biases[l], st.b_m[l], st.b_v[l], grads.biases[l], st, corr1, corr2);
    }
}

}  // namespace

void adam_step(NetworkParams& net, const Gradients& grads, AdamState& state) {
    if (state.emb_m.size() != net.emb.rows.size())
        throw std::invalid_argument("adam: state does not cover the embedding table");
    state.step += 1;
    double corr1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    double corr2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));

    std::vector<double> dense(net.emb.rows.size(), 0.0);
    int d = net.emb.dim;
    for (const auto& [row, g] : grads.emb_rows) {
        if (row < 0 || row >= net.emb.row_count() || static_cast<int>(g.size()) != d)
            throw std::invalid_argument("adam: embedding gradient shape mismatch");
        double* dst = dense.data() + row * d;
        for (int i = 0; i < d; ++i) dst[i] += g[i];
    }
    adam_block(net.emb.rows, state.emb_m, state.emb_v, dense, state, corr1, corr2);
    adam_mlp(net.mlp, grads.mlp, state, corr1, corr2);
}

void adam_step(Mlp& mlp, const MlpGrads& grads, AdamState& state) {
    state.step += 1;
    double corr1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    double corr2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    adam_mlp(mlp, grads, state, corr1, corr2);
}

DropoutMask sample_mask(double rate, std::span<const int> hidden_widths, std::uint64_t seed) {
    if (!(rate > 0.0 && rate < 1.0))
        throw std::invalid_argument("sample_mask: rate must lie in (0,1)");
    DropoutMask mask;
    mask.keep_rate = 1.0 - rate;
    double inv_keep = 1.0 / mask.keep_rate;
    Rng rng(derive_seed(seed, tag("dropout")));
    for (int w : hidden_widths) {
        std::vector<double> layer(w);
        for (double& v : layer) v = rng.bernoulli(rate) ? 0.0 : inv_keep;
        mask.scale.push_back(std::move(layer));
    }
    return mask;
}

std::uint64_t digest(const Mlp& mlp) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (int w : mlp.widths) fnv1a_accum(h, &w, sizeof(w));
    for (const auto& w : mlp.weights) hash_vec(h, w);
    for (const auto& b : mlp.biases) hash_vec(h, b);
    return h;
}

std::uint64_t digest(const NetworkParams& net) {
    std::uint64_t h = digest(net.mlp);
    fnv1a_accum(h, &net.num_user_fields, sizeof(net.num_user_fields));
    hash_vec(h, net.emb.rows);
    return h;
}

std::uint64_t digest(const AdamState& st) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    fnv1a_accum(h, &st.step, sizeof(st.step));
    fnv1a_accum(h, &st.learning_rate, sizeof(double));
    hash_vec(h, st.emb_m);
    hash_vec(h, st.emb_v);
    for (const auto& v : st.w_m) hash_vec(h, v);
    for (const auto& v : st.w_v) hash_vec(h, v);
    for (const auto& v : st.b_m) hash_vec(h, v);
    for (const auto& v : st.b_v) hash_vec(h, v);
    return h;
}

}  // namespace age
