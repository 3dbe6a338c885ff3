#include "sentinel/mlp.hpp"

#include <algorithm>
#include <cmath>

#include "sentinel/eval.hpp"

namespace sentinel {

namespace {

double sigmoid(double z) {
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double activate(double z, const MlpConfig& cfg) {
    if (z > 0.0) return z;
    return cfg.activation == Activation::relu ? 0.0 : cfg.leaky_slope * z;
}

double activate_deriv(double z, const MlpConfig& cfg) {
    if (z > 0.0) return 1.0;
    return cfg.activation == Activation::relu ? 0.0 : cfg.leaky_slope;
}

constexpr double kProbEps = 1e-7;

std::vector<Layer> zero_like(const std::vector<Layer>& layers) {
    std::vector<Layer> out;
    out.reserve(layers.size());
    for (const auto& l : layers) out.push_back(Layer::zeros(l.in, l.out));
    return out;
}

void accumulate(std::vector<Layer>& acc, const std::vector<Layer>& g) {
    for (std::size_t l = 0; l < acc.size(); ++l) {
        for (std::size_t i = 0; i < acc[l].w.size(); ++i) acc[l].w[i] += g[l].w[i];
        for (std::size_t i = 0; i < acc[l].b.size(); ++i) acc[l].b[i] += g[l].b[i];
    }
}

void scale(std::vector<Layer>& acc, double s) {
    for (auto& l : acc) {
        for (auto& v : l.w) v *= s;
        for (auto& v : l.b) v *= s;
    }
}

int harden(double label) { return label >= 0.5 ? 1 : 0; }

double validation_f1(const MlpModel& model, const LabeledDataset& ds,
                     const std::vector<std::size_t>& idx) {
    std::vector<int> pred;
    std::vector<int> truth;
    pred.reserve(idx.size());
    truth.reserve(idx.size());
    for (const std::size_t i : idx) {
        const auto trace = forward(model, ds.samples[i], RunMode::infer);
        pred.push_back(trace.probability >= 0.5 ? 1 : 0);
        truth.push_back(harden(ds.labels[i]));
    }
    return f1(confusion(pred, truth)).value;
}

}  // namespace

void MlpConfig::validate() const {
    if (hidden_sizes.empty()) throw ValidationError("mlp config: need at least one hidden layer");
    for (const auto h : hidden_sizes) {
        if (h == 0) throw ValidationError("mlp config: hidden sizes must be positive");
    }
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
        throw ValidationError("mlp config: dropout must lie in [0,1)");
    if (!(pos_class_weight > 0.0))
        throw ValidationError("mlp config: pos_class_weight must be positive");
    if (!(learning_rate > 0.0)) throw ValidationError("mlp config: learning_rate must be positive");
    if (!(weight_decay >= 0.0)) throw ValidationError("mlp config: weight_decay must be >= 0");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0))
        throw ValidationError("mlp config: adam betas must lie in [0,1)");
    if (!(adam_epsilon > 0.0)) throw ValidationError("mlp config: adam_epsilon must be positive");
    if (batch_size == 0) throw ValidationError("mlp config: batch_size must be positive");
    if (!(leaky_slope >= 0.0)) throw ValidationError("mlp config: leaky_slope must be >= 0");
}

Layer Layer::zeros(std::uint32_t in, std::uint32_t out) {
    Layer l;
    l.in = in;
    l.out = out;
    l.w.assign(static_cast<std::size_t>(in) * out, 0.0);
    l.b.assign(out, 0.0);
    return l;
}

void MlpModel::validate_shapes() const {
    if (layers.empty()) throw ValidationError("mlp model: no layers");
    std::uint32_t prev = input_dim;
    for (const auto& l : layers) {
        if (l.in != prev) throw ValidationError("mlp model: layer input size mismatch");
        if (l.w.size() != static_cast<std::size_t>(l.in) * l.out || l.b.size() != l.out)
            throw ValidationError("mlp model: parameter buffer size mismatch");
        prev = l.out;
    }
    if (layers.back().out != 1) throw ValidationError("mlp model: output layer must have one unit");
}

MlpModel init_params(const MlpConfig& config, std::uint32_t input_dim) {
    config.validate();
    if (input_dim == 0) throw ValidationError("init_params: input dimension must be positive");
    MlpModel model;
    model.config = config;
    model.input_dim = input_dim;
    Rng rng(seed_stream(config.seed, streams::kInit));
    std::vector<std::uint32_t> dims;
    dims.push_back(input_dim);
    dims.insert(dims.end(), config.hidden_sizes.begin(), config.hidden_sizes.end());
    dims.push_back(1);
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        Layer layer = Layer::zeros(dims[l], dims[l + 1]);
        const double limit = std::sqrt(6.0 / static_cast<double>(dims[l]));
        for (auto& v : layer.w) v = rng.uniform(-limit, limit);
        model.layers.push_back(std::move(layer));
    }
    model.adam.m = zero_like(model.layers);
    model.adam.v = zero_like(model.layers);
    model.adam.step_count = 0;
    model.validate_shapes();
    return model;
}

ForwardTrace forward(const MlpModel& model, const SparseBinaryVector& x, RunMode mode,
                     Rng* rng) {
    if (x.dim != model.input_dim) throw ValidationError("forward: input dimension mismatch");
    if (mode == RunMode::train && rng == nullptr)
        throw ValidationError("forward: train mode needs an rng for dropout");

    ForwardTrace trace;
    trace.mode = mode;
    trace.input = to_dense(x);

    const std::size_t n_hidden = model.n_hidden();
    trace.pre.resize(model.layers.size());
    trace.post.resize(n_hidden);
    if (mode == RunMode::train) trace.mask.resize(n_hidden);

    const MlpConfig& cfg = model.config;
    const double keep = 1.0 - cfg.dropout_rate;

    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        const Layer& layer = model.layers[l];
        std::vector<double>& z = trace.pre[l];
        z = layer.b;
        if (l == 0) {
            // first layer: accumulate rows for active (binary) inputs only
            for (const std::uint32_t i : x.active) {
                const double* row = layer.w.data() + static_cast<std::size_t>(i) * layer.out;
                for (std::uint32_t j = 0; j < layer.out; ++j) z[j] += row[j];
            }
        } else {
            const std::vector<double>& a_prev = trace.post[l - 1];
            for (std::uint32_t i = 0; i < layer.in; ++i) {
                const double a = a_prev[i];
                if (a == 0.0) continue;
                const double* row = layer.w.data() + static_cast<std::size_t>(i) * layer.out;
                for (std::uint32_t j = 0; j < layer.out; ++j) z[j] += a * row[j];
            }
        }
        if (l < n_hidden) {
            std::vector<double>& a = trace.post[l];
            a.resize(layer.out);
            if (mode == RunMode::train) {
                std::vector<double>& m = trace.mask[l];
                m.resize(layer.out);
                for (std::uint32_t j = 0; j < layer.out; ++j) {
                    m[j] = rng->bernoulli(keep) ? 1.0 / keep : 0.0;
                    a[j] = activate(z[j], cfg) * m[j];
                }
            } else {
                for (std::uint32_t j = 0; j < layer.out; ++j) a[j] = activate(z[j], cfg);
            }
        }
    }

    trace.logit = trace.pre.back()[0];
    double p = sigmoid(trace.logit);
    if (p <= 0.0) p = 1e-300;
    if (p >= 1.0) p = 1.0 - 1e-16;
    trace.probability = p;
    return trace;
}

double loss_weighted_bce(double probability, double target, double pos_class_weight) {
    const double p = std::clamp(probability, kProbEps, 1.0 - kProbEps);
    return -(pos_class_weight * target * std::log(p) + (1.0 - target) * std::log(1.0 - p));
}

Grads backward(const MlpModel& model, const ForwardTrace& trace, double target) {
    if (trace.mode != RunMode::train)
        throw ValidationError("backward: trace must come from a train-mode forward");
    if (trace.input.size() != model.input_dim || trace.pre.size() != model.layers.size() ||
        trace.mask.size() != model.n_hidden())
        throw ValidationError("backward: trace does not match model shapes");
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        if (trace.pre[l].size() != model.layers[l].out)
            throw ValidationError("backward: trace does not match model shapes");
    }
    if (!(target >= 0.0 && target <= 1.0))
        throw ValidationError("backward: target must lie in [0,1]");

    const MlpConfig& cfg = model.config;
    const std::size_t n_layers = model.layers.size();

    Grads g;
    g.theta = zero_like(model.layers);
    g.input.assign(model.input_dim, 0.0);

    // d(loss)/d(logit) for weighted bce on a sigmoid output
    const double p = trace.probability;
    const double w = cfg.pos_class_weight;
    std::vector<double> delta{(1.0 - target) * p - w * target * (1.0 - p)};

    for (std::size_t l = n_layers; l-- > 0;) {
        const Layer& layer = model.layers[l];
        Layer& gl = g.theta[l];
        const std::vector<double>* a_prev = l == 0 ? &trace.input : &trace.post[l - 1];

        for (std::uint32_t j = 0; j < layer.out; ++j) gl.b[j] = delta[j];
        for (std::uint32_t i = 0; i < layer.in; ++i) {
            const double a = (*a_prev)[i];
            if (a == 0.0) continue;
            double* grow = gl.w.data() + static_cast<std::size_t>(i) * layer.out;
            for (std::uint32_t j = 0; j < layer.out; ++j) grow[j] = a * delta[j];
        }

        std::vector<double> below(layer.in, 0.0);
        for (std::uint32_t i = 0; i < layer.in; ++i) {
            const double* row = layer.w.data() + static_cast<std::size_t>(i) * layer.out;
            double acc = 0.0;
            for (std::uint32_t j = 0; j < layer.out; ++j) acc += row[j] * delta[j];
            below[i] = acc;
        }

        if (l == 0) {
            g.input = std::move(below);
        } else {
            const std::size_t h = l - 1;
            for (std::uint32_t i = 0; i < layer.in; ++i)
                below[i] *= trace.mask[h][i] * activate_deriv(trace.pre[h][i], cfg);
            delta = std::move(below);
        }
    }
    return g;
}

void adam_step(MlpModel& model, const std::vector<Layer>& grad_theta) {
    if (grad_theta.size() != model.layers.size())
        throw ValidationError("adam_step: gradient layer count mismatch");
    for (std::size_t l = 0; l < grad_theta.size(); ++l) {
        if (grad_theta[l].w.size() != model.layers[l].w.size() ||
            grad_theta[l].b.size() != model.layers[l].b.size())
            throw ValidationError("adam_step: gradient shape mismatch");
    }

    const MlpConfig& cfg = model.config;
    model.adam.step_count += 1;
    const double t = static_cast<double>(model.adam.step_count);
    const double bc1 = 1.0 - std::pow(cfg.adam_beta1, t);
    const double bc2 = 1.0 - std::pow(cfg.adam_beta2, t);
    const double decay = 1.0 - cfg.learning_rate * cfg.weight_decay;

    const auto update = [&](double& theta, double& m, double& v, double grad) {
        theta *= decay;
        m = cfg.adam_beta1 * m + (1.0 - cfg.adam_beta1) * grad;
        v = cfg.adam_beta2 * v + (1.0 - cfg.adam_beta2) * grad * grad;
        const double mhat = m / bc1;
        const double vhat = v / bc2;
        theta -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.adam_epsilon);
    };

    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        Layer& layer = model.layers[l];
        for (std::size_t i = 0; i < layer.w.size(); ++i)
            update(layer.w[i], model.adam.m[l].w[i], model.adam.v[l].w[i], grad_theta[l].w[i]);
        for (std::size_t i = 0; i < layer.b.size(); ++i)
            update(layer.b[i], model.adam.m[l].b[i], model.adam.v[l].b[i], grad_theta[l].b[i]);
    }
}

MlpModel train_core(const LabeledDataset& dataset, const MlpConfig& config, ReplayDriver* driver) {
    config.validate();
    dataset.validate();
    if (dataset.size() == 0) throw ValidationError("train: empty dataset");
    if (dataset.size() < 2) throw ValidationError("train: need at least 2 samples to split");

    const SplitIndices split = train_val_split(dataset.size(), config.seed);
    bool saw_pos = false;
    bool saw_neg = false;
    for (const std::size_t i : split.train) {
        (harden(dataset.labels[i]) == 1 ? saw_pos : saw_neg) = true;
    }
    if (!saw_pos || !saw_neg)
        throw ValidationError("train: training split contains a single class");

    MlpModel model = init_params(config, dataset.dim);
    Rng rng_loop(seed_stream(config.seed, streams::kTrainLoop));
    Rng rng_delta(seed_stream(config.seed, streams::kDeltaUpdate));

    const std::uint32_t m = driver ? driver->replay_steps() : 1;
    SENTINEL_CHECK(m >= 1, "replay steps must be >= 1");
    const std::uint32_t outer = (config.epochs + m - 1) / m;

    std::vector<Layer> best_layers = model.layers;
    double best_f1 = -1.0;

    std::vector<std::size_t> order = split.train;
    for (std::uint32_t it = 0; it < outer; ++it) {
        rng_loop.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t end = std::min(order.size(), start + config.batch_size);
            const double inv = 1.0 / static_cast<double>(end - start);
            if (driver) driver->batch_begin();
            for (std::uint32_t rep = 0; rep < m; ++rep) {
                std::vector<Layer> gsum = zero_like(model.layers);
                std::vector<double> gin_sum(model.input_dim, 0.0);
                for (std::size_t bi = start; bi < end; ++bi) {
                    const std::size_t idx = order[bi];
                    const SparseBinaryVector x =
                        driver ? driver->transform(dataset.samples[idx]) : dataset.samples[idx];
                    const ForwardTrace trace = forward(model, x, RunMode::train, &rng_loop);
                    const Grads g = backward(model, trace, dataset.labels[idx]);
                    accumulate(gsum, g.theta);
                    for (std::size_t i = 0; i < gin_sum.size(); ++i) gin_sum[i] += g.input[i];
                }
                scale(gsum, inv);
                for (auto& v : gin_sum) v *= inv;
                adam_step(model, gsum);
                if (driver) driver->after_replay(gin_sum, rng_delta);
            }
        }
        const double val = validation_f1(model, dataset, split.val);
        if (val > best_f1) {
            best_f1 = val;
            best_layers = model.layers;
        }
    }

    model.layers = std::move(best_layers);
    model.best_val_f1 = std::max(best_f1, 0.0);
    return model;
}

MlpModel train(const LabeledDataset& dataset, const MlpConfig& config) {
    return train_core(dataset, config, nullptr);
}

std::vector<Prediction> predict_batch(const MlpModel& model,
                                      const std::vector<SparseBinaryVector>& samples) {
    std::vector<Prediction> out;
    out.reserve(samples.size());
    for (const auto& x : samples) {
        ForwardTrace trace = forward(model, x, RunMode::infer);
        Prediction p;
        p.probability = trace.probability;
        p.logit = trace.logit;
        p.embedding = trace.embedding();
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace sentinel
