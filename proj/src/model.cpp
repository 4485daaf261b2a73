#include "age/model.hpp"

#include <cstdint>
#include <fstream>
#include <stdexcept>

#include "age/rng.hpp"

namespace age {

Model make_model(std::int64_t feature_space, std::int64_t arm_space, int num_user_fields,
                 const NetworkConfig& cfg, std::uint64_t seed) {
    Model m;
    m.net = make_network(feature_space, arm_space, cfg.embedding_dim, num_user_fields,
                         cfg.hidden, derive_seed(seed, tag("main_net")));
    m.shallow = make_mlp(cfg.embedding_dim, cfg.shallow_hidden, derive_seed(seed, tag("shallow_net")));
    m.net_state = make_adam_state(m.net, cfg.learning_rate);
    m.shallow_state = make_adam_state(m.shallow, cfg.shallow_learning_rate);
    return m;
}

std::uint64_t digest(const Model& model) {
    std::uint64_t h = digest(model.net);
    h ^= digest(model.shallow) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    h ^= digest(model.net_state) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    h ^= digest(model.shallow_state) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h;
}

double shallow_forward(const Model& model, std::int32_t arm_id) {
    const EmbeddingTable& emb = model.net.emb;
    if (arm_id < 0 || arm_id >= emb.arm_space)
        throw std::invalid_argument("shallow_forward: arm id out of range");
    std::span<const double> h(emb.row(emb.arm_row(arm_id)), static_cast<std::size_t>(emb.dim));
    return forward_cache_at(model.shallow, h).prob;
}

namespace {

constexpr char kMagic[8] = {'A', 'G', 'E', 'C', 'K', 'P', 'T', '1'};

void write_bytes(std::ostream& os, const void* p, std::size_t n) {
    os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

void read_bytes(std::istream& is, void* p, std::size_t n) {
    if (!is.read(static_cast<char*>(p), static_cast<std::streamsize>(n)))
        throw std::runtime_error("checkpoint: truncated file");
}

template <typename T>
void write_pod(std::ostream& os, const T& v) {
    write_bytes(os, &v, sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
    T v;
    read_bytes(is, &v, sizeof(T));
    return v;
}

void write_vec(std::ostream& os, const std::vector<double>& v) {
    write_pod<std::uint64_t>(os, v.size());
    write_bytes(os, v.data(), v.size() * sizeof(double));
}

std::vector<double> read_vec(std::istream& is) {
    auto n = read_pod<std::uint64_t>(is);
    std::vector<double> v(n);
    read_bytes(is, v.data(), n * sizeof(double));
    return v;
}

void write_mlp(std::ostream& os, const Mlp& mlp) {
    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(mlp.widths.size()));
    for (int w : mlp.widths) write_pod<std::int32_t>(os, w);
    for (const auto& w : mlp.weights) write_vec(os, w);
    for (const auto& b : mlp.biases) write_vec(os, b);
}

Mlp read_mlp(std::istream& is) {
    Mlp mlp;
    auto n = read_pod<std::uint32_t>(is);
    mlp.widths.resize(n);
    for (auto& w : mlp.widths) w = read_pod<std::int32_t>(is);
    for (std::uint32_t l = 0; l + 1 < n; ++l) mlp.weights.push_back(read_vec(is));
    for (std::uint32_t l = 0; l + 1 < n; ++l) mlp.biases.push_back(read_vec(is));
    return mlp;
}

void write_adam(std::ostream& os, const AdamState& st) {
    write_pod(os, st.learning_rate);
    write_pod(os, st.beta1);
    write_pod(os, st.beta2);
    write_pod(os, st.epsilon);
    write_pod(os, st.step);
    write_vec(os, st.emb_m);
    write_vec(os, st.emb_v);
    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(st.w_m.size()));
    for (std::size_t l = 0; l < st.w_m.size(); ++l) {
        write_vec(os, st.w_m[l]);
        write_vec(os, st.w_v[l]);
        write_vec(os, st.b_m[l]);
        write_vec(os, st.b_v[l]);
    }
}

AdamState read_adam(std::istream& is) {
    AdamState st;
    st.learning_rate = read_pod<double>(is);
    st.beta1 = read_pod<double>(is);
    st.beta2 = read_pod<double>(is);
    st.epsilon = read_pod<double>(is);
    st.step = read_pod<std::int64_t>(is);
    st.emb_m = read_vec(is);
    st.emb_v = read_vec(is);
    auto layers = read_pod<std::uint32_t>(is);
    for (std::uint32_t l = 0; l < layers; ++l) {
        st.w_m.push_back(read_vec(is));
        st.w_v.push_back(read_vec(is));
        st.b_m.push_back(read_vec(is));
        st.b_v.push_back(read_vec(is));
    }
    return st;
}

}  // namespace

void save_model(const std::string& path, const Model& model) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("checkpoint: cannot open " + path + " for writing");
    write_bytes(os, kMagic, sizeof(kMagic));
    write_pod<std::int64_t>(os, model.net.emb.feature_space);
    write_pod<std::int64_t>(os, model.net.emb.arm_space);
    write_pod<std::int32_t>(os, model.net.emb.dim);
    write_pod<std::int32_t>(os, model.net.num_user_fields);
    write_vec(os, model.net.emb.rows);
    write_mlp(os, model.net.mlp);
    write_mlp(os, model.shallow);
    write_adam(os, model.net_state);
    write_adam(os, model.shallow_state);
    if (!os) throw std::runtime_error("checkpoint: write failed for " + path);
}

Model load_model(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("checkpoint: cannot open " + path);
    char magic[8];
    read_bytes(is, magic, sizeof(magic));
    for (std::size_t i = 0; i < sizeof(magic); ++i)
        if (magic[i] != kMagic[i]) throw std::runtime_error("checkpoint: bad header in " + path);

    Model m;
    m.net.emb.feature_space = read_pod<std::int64_t>(is);
    m.net.emb.arm_space = read_pod<std::int64_t>(is);
    m.net.emb.dim = read_pod<std::int32_t>(is);
    m.net.num_user_fields = read_pod<std::int32_t>(is);
    m.net.emb.rows = read_vec(is);
    m.net.mlp = read_mlp(is);
    m.shallow = read_mlp(is);
    m.net_state = read_adam(is);
    m.shallow_state = read_adam(is);
    validate_network(m.net);
    return m;
}

}  // namespace age
