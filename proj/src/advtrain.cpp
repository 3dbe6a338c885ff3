#include "sentinel/advtrain.hpp"

#include <algorithm>
#include <cmath>

namespace sentinel {

namespace {

int sign_of(double v) { return v > 0.0 ? 1 : (v < 0.0 ? -1 : 0); }

class AdvDriver : public ReplayDriver {
public:
    AdvDriver(const AdvTrainConfig& cfg, std::uint32_t dim,
              const std::function<void(const Perturbation&)>& observer)
        : cfg_(cfg), observer_(observer) {
        delta_.dim = dim;
    }

    std::uint32_t replay_steps() const override { return cfg_.m; }

    void batch_begin() override {
        if (cfg_.reset_delta_per_batch) delta_.entries.clear();
    }

    SparseBinaryVector transform(const SparseBinaryVector& x) override {
        return apply_perturbation(x, delta_);
    }

    void after_replay(const std::vector<double>& batch_avg_input_grad, Rng& rng_delta) override {
        if (cfg_.strategy != SelectionStrategy::none) {
            const SelectionMask mask = select_features(cfg_.strategy, cfg_.gamma,
                                                       batch_avg_input_grad, cfg_.k, rng_delta);
            delta_ = update_delta(delta_, batch_avg_input_grad, mask, cfg_.k, rng_delta);
            SENTINEL_CHECK(delta_.nonzero_count() <= cfg_.k,
                           "perturbation budget exceeded after update");
        }
        if (observer_) observer_(delta_);
    }

    const Perturbation& delta() const { return delta_; }

private:
    const AdvTrainConfig& cfg_;
    std::function<void(const Perturbation&)> observer_;
    Perturbation delta_;
};

}  // namespace

void AdvTrainConfig::validate(std::uint32_t dim) const {
    if (m < 1) throw ValidationError("advtrain config: m must be >= 1");
    if (k < 1) throw ValidationError("advtrain config: k must be >= 1");
    gamma.validate(dim);
    if (gamma.size() == 0) throw ValidationError("advtrain config: eligible index set is empty");
    if (k > gamma.size())
        throw ValidationError("advtrain config: k exceeds the eligible index count");
}

SelectionMask select_features(SelectionStrategy strategy, const ManipulabilityMask& gamma,
                              const std::vector<double>& g_adv, std::uint32_t k, Rng& rng) {
    if (gamma.size() == 0) throw ValidationError("select_features: empty eligible set");
    SelectionMask mask;
    if (strategy == SelectionStrategy::none) return mask;

    const std::size_t take = std::min<std::size_t>(k, gamma.size());
    if (strategy == SelectionStrategy::topk) {
        for (const std::uint32_t idx : gamma.indices) {
            if (idx >= g_adv.size())
                throw ValidationError("select_features: gradient shorter than eligible indices");
        }
        std::vector<std::uint32_t> order = gamma.indices;
        std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
            const double ga = std::abs(g_adv[a]);
            const double gb = std::abs(g_adv[b]);
            if (ga != gb) return ga > gb;
            return a < b;
        });
        mask.indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take));
    } else {
        const auto picks = rng.pick_distinct(gamma.size(), take);
        mask.indices.reserve(take);
        for (const std::size_t p : picks) mask.indices.push_back(gamma.indices[p]);
    }
    std::sort(mask.indices.begin(), mask.indices.end());
    SENTINEL_CHECK(mask.indices.size() == take, "selection mask size mismatch");
    return mask;
}

Perturbation update_delta(const Perturbation& delta, const std::vector<double>& g_adv,
                          const SelectionMask& mask, std::uint32_t k, Rng& rng) {
    delta.validate();
    // additive step in the raw integer domain, values temporarily in -2..2
    std::vector<std::pair<std::uint32_t, std::int8_t>> raw = delta.entries;
    for (const std::uint32_t idx : mask.indices) {
        if (idx >= delta.dim) throw ValidationError("update_delta: mask index out of range");
        if (idx >= g_adv.size())
            throw ValidationError("update_delta: gradient shorter than mask indices");
        const int s = sign_of(g_adv[idx]);
        if (s == 0) continue;
        const auto it = std::lower_bound(
            raw.begin(), raw.end(), idx,
            [](const auto& e, std::uint32_t v) { return e.first < v; });
        if (it != raw.end() && it->first == idx) {
            it->second = static_cast<std::int8_t>(it->second + s);
            if (it->second == 0) raw.erase(it);
        } else {
            raw.insert(it, {idx, static_cast<std::int8_t>(s)});
        }
    }

    // enforce the budget: uniformly drop excess nonzero entries
    if (raw.size() > k) {
        const std::size_t excess = raw.size() - k;
        const auto drop = rng.pick_distinct(raw.size(), excess);
        std::vector<bool> dead(raw.size(), false);
        for (const std::size_t d : drop) dead[d] = true;
        std::vector<std::pair<std::uint32_t, std::int8_t>> kept;
        kept.reserve(k);
        for (std::size_t i = 0; i < raw.size(); ++i) {
            if (!dead[i]) kept.push_back(raw[i]);
        }
        raw = std::move(kept);
    }

    // clip last
    Perturbation out;
    out.dim = delta.dim;
    out.entries.reserve(raw.size());
    for (auto& [idx, v] : raw) {
        const std::int8_t clipped = static_cast<std::int8_t>(std::clamp<int>(v, -1, 1));
        out.entries.push_back({idx, clipped});
    }
    out.validate();
    SENTINEL_CHECK(out.nonzero_count() <= k, "perturbation budget exceeded after update");
    return out;
}

MlpModel adv_train(const LabeledDataset& dataset, const MlpConfig& mlp_config,
                   const AdvTrainConfig& adv_config, Perturbation* out_delta,
                   const std::function<void(const Perturbation&)>& replay_observer) {
    adv_config.validate(dataset.dim);
    MlpConfig cfg = mlp_config;
    cfg.epochs = adv_config.total_epochs;
    cfg.seed = adv_config.seed;
    AdvDriver driver(adv_config, dataset.dim, replay_observer);
    MlpModel model = train_core(dataset, cfg, &driver);
    if (out_delta != nullptr) *out_delta = driver.delta();
    return model;
}

}  // namespace sentinel
