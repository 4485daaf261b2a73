#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "age/features.hpp"

namespace age {

/// Embedding rows for feature indices [0, feature_space) followed by one row
/// per arm id in [0, arm_space). Row-major, width `dim`.
struct EmbeddingTable {
    std::int64_t feature_space = 0;
    std::int64_t arm_space = 0;
    int dim = 0;

    std::vector<double> rows;

    std::int64_t row_count() const { return feature_space + arm_space; }
    double* row(std::int64_t r) { return rows.data() + r * dim; }
    const double* row(std::int64_t r) const { return rows.data() + r * dim; }
    std::int64_t arm_row(std::int32_t arm_id) const { return feature_space + arm_id; }
};

/// Fully connected stack: rectifier on hidden layers, raw logit out.
/// widths = {input, hidden..., 1}; zero hidden layers is allowed.
struct Mlp {
    std::vector<int> widths;
    std::vector<std::vector<double>> weights;  // weights[l]: widths[l+1] x widths[l], row-major
    std::vector<std::vector<double>> biases;   // biases[l]: widths[l+1]

    int num_layers() const { return static_cast<int>(weights.size()); }
    int num_hidden() const { return num_layers() - 1; }
    int input_width() const { return widths.front(); }
    std::vector<int> hidden_widths() const {
        return {widths.begin() + 1, widths.end() - 1};
    }
};

/// Main CTR network: shared embedding table plus the MLP over the
/// concatenation of `num_user_fields` user-field embeddings and one arm
/// embedding. Valid inputs carry exactly num_user_fields active indices.
struct NetworkParams {
    EmbeddingTable emb;
    Mlp mlp;
    int num_user_fields = 0;

    int input_width() const { return (num_user_fields + 1) * emb.dim; }
};

/// Inverted-dropout scaling per hidden unit: entries are 0 or 1/keep_rate.
struct DropoutMask {
    std::vector<std::vector<double>> scale;  // one vector per hidden layer
    double keep_rate = 1.0;
};

/// Per-layer gradients for an Mlp, same shapes as weights/biases.
struct MlpGrads {
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;
};

/// Gradients of a scalar loss with respect to a full NetworkParams.
/// Embedding gradients are sparse: only rows touched by the input appear.
struct Gradients {
    std::vector<std::pair<std::int64_t, std::vector<double>>> emb_rows;
    MlpGrads mlp;
};

/// Intermediate activations kept for backprop. `post` holds post-rectifier,
/// post-mask activations; `pre` the pre-activation sums.
struct ForwardCache {
    std::vector<double> input;               // concatenated embedding h
    std::vector<std::vector<double>> pre;    // pre[l], l = 0..L-1 (last is the logit)
    std::vector<std::vector<double>> post;   // post[l], hidden layers only
    double logit = 0.0;
    double prob = 0.0;                       // clamped sigmoid of logit
};

/// Adam accumulators shaped like one Mlp plus (optionally) one embedding table.
struct AdamState {
    double learning_rate = 1e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::int64_t step = 0;

    std::vector<double> emb_m, emb_v;                 // empty when no embedding is owned
    std::vector<std::vector<double>> w_m, w_v, b_m, b_v;
};

double stable_sigmoid(double z);

// --- construction -----------------------------------------------------------

Mlp make_mlp(int input_width, std::span<const int> hidden, std::uint64_t seed);
NetworkParams make_network(std::int64_t feature_space, std::int64_t arm_space, int dim,
                           int num_user_fields, std::span<const int> hidden,
                           std::uint64_t seed);
AdamState make_adam_state(const NetworkParams& net, double learning_rate);
AdamState make_adam_state(const Mlp& mlp, double learning_rate);

/// Throws std::invalid_argument when shapes do not chain or entries are not finite.
void validate_network(const NetworkParams& net);

// --- forward / gradients ----------------------------------------------------

/// Concatenated input embedding h for a valid input. Throws on index range or
/// field-count violations.
std::vector<double> gather_embedding(const NetworkParams& net, const SparseFeatureVector& x);

/// Forward pass from an explicit embedding vector.
ForwardCache forward_cache_at(const Mlp& mlp, std::span<const double> h,
                              const DropoutMask* mask = nullptr);

/// Prediction in (0,1). Deterministic given (params, x, mask).
double forward(const NetworkParams& net, const SparseFeatureVector& x,
               const DropoutMask* mask = nullptr);
double forward_at(const NetworkParams& net, std::span<const double> h,
                  const DropoutMask* mask = nullptr);

/// Backward pass for d(logit)=dlogit. Fills per-layer grads and, when
/// input_grad is non-null, the gradient with respect to the input vector.
void backprop(const Mlp& mlp, const ForwardCache& cache, double dlogit,
              MlpGrads* grads, std::vector<double>* input_grad,
              const DropoutMask* mask = nullptr);

/// d f / d h at the concatenated input embedding, reverse-mode exact.
std::vector<double> grad_wrt_embedding(const NetworkParams& net, const SparseFeatureVector& x,
                                       const DropoutMask* mask = nullptr);
std::vector<double> grad_wrt_embedding_at(const Mlp& mlp, std::span<const double> h,
                                          const DropoutMask* mask = nullptr);

/// Cross-entropy with the prediction clamped to [1e-7, 1-1e-7] before the log.
/// The returned gradient with respect to the logit is (f - y).
double cross_entropy(double prob, int label);

struct LossResult {
    double loss = 0.0;
    double prob = 0.0;
    Gradients grads;
};

/// Loss plus exact gradients with respect to embeddings (touched rows only)
/// and all MLP weights.
LossResult loss_and_grads(const NetworkParams& net, const SparseFeatureVector& x,
                          int label, const DropoutMask* mask = nullptr);

/// Gradient of the cross-entropy loss with respect to the input embedding h.
std::vector<double> loss_grad_wrt_embedding(const NetworkParams& net,
                                            const SparseFeatureVector& x, int label);

// --- updates ----------------------------------------------------------------

/// Bias-corrected Adam over every parameter; sparse embedding gradients are
/// treated as zero elsewhere. Increments state.step.
void adam_step(NetworkParams& net, const Gradients& grads, AdamState& state);
void adam_step(Mlp& mlp, const MlpGrads& grads, AdamState& state);

/// Independent drop with probability `rate` per hidden unit, kept entries
/// scaled by 1/(1-rate). rate must lie strictly inside (0,1).
DropoutMask sample_mask(double rate, std::span<const int> hidden_widths, std::uint64_t seed);

// --- utilities ---------------------------------------------------------------

/// FNV-1a digest over all parameter and optimizer bytes; used to assert that
/// an operation left the state untouched.
std::uint64_t digest(const NetworkParams& net);
std::uint64_t digest(const Mlp& mlp);
std::uint64_t digest(const AdamState& st);

}  // namespace age
