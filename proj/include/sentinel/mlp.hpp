#pragma once

#include <cstdint>
#include <vector>

#include "sentinel/common.hpp"
#include "sentinel/features.hpp"

namespace sentinel {

enum class Activation : std::uint8_t { relu, leaky_relu };
enum class RunMode : std::uint8_t { train, infer };

struct MlpConfig {
    std::vector<std::uint32_t> hidden_sizes{256, 32, 256};
    Activation activation = Activation::leaky_relu;
    double leaky_slope = 0.01;
    double dropout_rate = 0.70;
    double pos_class_weight = 8.5;
    double learning_rate = 0.001;
    double weight_decay = 0.00246;
    double adam_beta1 = 0.99;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    std::uint32_t epochs = 10;
    std::uint32_t batch_size = 32;
    std::uint64_t seed = 0;

    void validate() const;
};

/// One dense layer: weights row-major with shape (in x out), so w[i*out+j]
/// connects input i to unit j. Also reused as a gradient container.
struct Layer {
    std::uint32_t in = 0;
    std::uint32_t out = 0;
    std::vector<double> w;
    std::vector<double> b;

    static Layer zeros(std::uint32_t in, std::uint32_t out);
};

struct AdamState {
    std::vector<Layer> m;
    std::vector<Layer> v;
    std::uint64_t step_count = 0;
};

struct MlpModel {
    MlpConfig config;
    std::uint32_t input_dim = 0;
    std::vector<Layer> layers;  // hidden layers then the single-unit output layer
    AdamState adam;
    double best_val_f1 = 0.0;  // validation F1 of the selected checkpoint

    std::size_t n_hidden() const { return layers.empty() ? 0 : layers.size() - 1; }
    void validate_shapes() const;
};

struct ForwardTrace {
    RunMode mode = RunMode::infer;
    std::vector<double> input;              // dense x
    std::vector<std::vector<double>> pre;   // per layer incl. output
    std::vector<std::vector<double>> post;  // per hidden layer, after dropout
    std::vector<std::vector<double>> mask;  // dropout scale per hidden layer; empty in infer
    double logit = 0.0;
    double probability = 0.5;

    /// Post-activation of the last hidden layer.
    const std::vector<double>& embedding() const { return post.back(); }
};

struct Grads {
    std::vector<Layer> theta;
    std::vector<double> input;  // dense, length d
};

struct Prediction {
    double probability = 0.0;
    double logit = 0.0;
    std::vector<double> embedding;
};

MlpModel init_params(const MlpConfig& config, std::uint32_t input_dim);

/// rng is consumed only in train mode (one draw per hidden unit for the
/// dropout mask, regardless of dropout_rate).
ForwardTrace forward(const MlpModel& model, const SparseBinaryVector& x, RunMode mode,
                     Rng* rng = nullptr);

double loss_weighted_bce(double probability, double target, double pos_class_weight);

Grads backward(const MlpModel& model, const ForwardTrace& trace, double target);

void adam_step(MlpModel& model, const std::vector<Layer>& grad_theta);

/// Hook that lets the adversarial trainer share the exact training loop of
/// train(): per batch the loop runs replay_steps() passes, transforming
/// each sample before the forward pass and observing the batch-averaged
/// input gradient after each pass. rng_delta is a dedicated stream, so a
/// driver that never draws from it leaves the main loop's randomness
/// untouched.
class ReplayDriver {
public:
    virtual ~ReplayDriver() = default;
    virtual std::uint32_t replay_steps() const = 0;
    virtual void batch_begin() {}
    virtual SparseBinaryVector transform(const SparseBinaryVector& x) = 0;
    virtual void after_replay(const std::vector<double>& batch_avg_input_grad, Rng& rng_delta) = 0;
};

/// Shared mini-batch loop: outer iterations = ceil(epochs / replay_steps),
/// validation (clean inputs, infer mode) after each outer iteration, best-F1
/// checkpoint returned (ties keep the earlier one). driver may be null.
MlpModel train_core(const LabeledDataset& dataset, const MlpConfig& config, ReplayDriver* driver);

MlpModel train(const LabeledDataset& dataset, const MlpConfig& config);

std::vector<Prediction> predict_batch(const MlpModel& model,
                                      const std::vector<SparseBinaryVector>& samples);

}  // namespace sentinel
