#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "sentinel/common.hpp"

namespace sentinel {

enum class SearchObjective : std::uint8_t { val_f1, objective_j };

/// Hyperparameter ranges for the staged tuning harness. Grid-valued ranges
/// are sampled uniformly over their grid points.
struct SearchSpace {
    std::vector<std::uint32_t> layer_counts{2, 3};
    std::vector<std::uint32_t> hidden_choices{32, 64, 128, 256};
    double dropout_min = 0.0;
    double dropout_max = 0.75;
    double dropout_step = 0.05;
    std::uint32_t m_min = 2;
    std::uint32_t m_max = 20;
    std::vector<std::uint32_t> k_choices{25, 75, 125, 175};
    std::uint32_t teacher_trees_min = 25;
    std::uint32_t teacher_trees_max = 100;
    std::uint32_t teacher_trees_step = 5;
    std::uint32_t min_leaf_min = 1;
    std::uint32_t min_leaf_max = 501;
    std::uint32_t min_leaf_step = 50;
    std::uint32_t trials = 20;
    SearchObjective objective = SearchObjective::val_f1;

    void validate() const;
};

/// One uniformly drawn configuration across all searchable knobs; stages use
/// the subset they care about.
struct TrialParams {
    std::vector<std::uint32_t> hidden_sizes;
    double dropout = 0.0;
    std::uint32_t m = 2;
    std::uint32_t k = 25;
    std::uint32_t teacher_trees = 25;
    std::uint32_t min_samples_leaf = 1;

    bool operator==(const TrialParams&) const = default;
};

TrialParams sample_params(const SearchSpace& space, Rng& rng);

struct TrialRecord {
    std::size_t index = 0;
    std::uint64_t trial_seed = 0;
    TrialParams params;
    double objective = 0.0;
};

struct SearchOutcome {
    std::size_t best_index = 0;
    TrialParams best_params;
    double best_objective = 0.0;
    std::vector<TrialRecord> log;
};

using TrialObjective = std::function<double(const TrialParams&, std::uint64_t trial_seed)>;

/// Uniform random search: samples `trials` configurations, evaluates each,
/// and returns the argmax (ties keep the earliest trial). Fully determined
/// by `seed`.
SearchOutcome random_search(const SearchSpace& space, const TrialObjective& objective,
                            std::uint32_t trials, std::uint64_t seed);

}  // namespace sentinel
