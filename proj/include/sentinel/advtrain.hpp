#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "sentinel/common.hpp"
#include "sentinel/features.hpp"
#include "sentinel/mlp.hpp"

namespace sentinel {

/// Feature-selection strategy for perturbation updates. `none` is the
/// degenerate no-op: it never selects anything, so the perturbation stays
/// zero and training reduces to the standard loop.
enum class SelectionStrategy : std::uint8_t { topk, random, none };

struct AdvTrainConfig {
    std::uint32_t m = 10;                  // batch replay steps
    std::uint32_t k = 100;                 // max simultaneously modified features
    SelectionStrategy strategy = SelectionStrategy::topk;
    std::uint32_t total_epochs = 10;       // outer loop runs ceil(total_epochs / m) times
    bool reset_delta_per_batch = false;
    ManipulabilityMask gamma;              // eligible indices
    std::uint64_t seed = 0;

    /// total_epochs and seed drive the training loop, overriding the
    /// network config's epochs/seed so the two cannot drift apart.
    void validate(std::uint32_t dim) const;
};

/// Index-set form of the binary mask gamma; sorted, subset of the eligible
/// indices, size at most k.
struct SelectionMask {
    std::vector<std::uint32_t> indices;
};

/// topk: the min(k, |gamma|) eligible indices with largest |g_adv|, ties
/// resolved toward the lower index. random: uniform subset of that size,
/// ignoring g_adv. none: empty mask. rng is consumed only by random.
SelectionMask select_features(SelectionStrategy strategy, const ManipulabilityMask& gamma,
                              const std::vector<double>& g_adv, std::uint32_t k, Rng& rng);

/// delta' = clip(delta + sign(g_adv) (.) mask, -1, 1), with sign(0) = 0.
/// If the additive step leaves more than k nonzero entries, uniformly
/// random entries (among all nonzeros) are zeroed until k remain; clipping
/// happens last. rng is consumed only when entries must be dropped.
Perturbation update_delta(const Perturbation& delta, const std::vector<double>& g_adv,
                          const SelectionMask& mask, std::uint32_t k, Rng& rng);

/// Adversarial training: the standard mini-batch loop where every batch is
/// replayed m times against inputs shifted by the accumulated global
/// perturbation, which is refreshed from the batch-averaged input gradient
/// after each replay. Validation (model selection) always sees clean
/// inputs. When out_delta is non-null it receives the final perturbation;
/// replay_observer (if set) sees the perturbation after every replay step.
MlpModel adv_train(const LabeledDataset& dataset, const MlpConfig& mlp_config,
                   const AdvTrainConfig& adv_config, Perturbation* out_delta = nullptr,
                   const std::function<void(const Perturbation&)>& replay_observer = {});

}  // namespace sentinel
