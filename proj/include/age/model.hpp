#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "age/nn.hpp"

namespace age {

/// Network sizes shared by every policy in an experiment.
struct NetworkConfig {
    int embedding_dim = 8;
    std::vector<int> hidden = {256, 64};
    std::vector<int> shallow_hidden = {32};
    double learning_rate = 1e-5;
    double shallow_learning_rate = 1e-5;
};

/// Main CTR network plus the shallow gating net that shares its embedding
/// table, with one optimizer state per net.
struct Model {
    NetworkParams net;
    Mlp shallow;  // input: the arm embedding row (width net.emb.dim)
    AdamState net_state;
    AdamState shallow_state;
};

Model make_model(std::int64_t feature_space, std::int64_t arm_space, int num_user_fields,
                 const NetworkConfig& cfg, std::uint64_t seed);

std::uint64_t digest(const Model& model);

/// Shallow-net prediction for one arm, computed on the shared embedding.
double shallow_forward(const Model& model, std::int32_t arm_id);

// Versioned binary checkpoint; round-trips bit-exactly.
void save_model(const std::string& path, const Model& model);
Model load_model(const std::string& path);

}  // namespace age
