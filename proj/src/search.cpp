#include "sentinel/search.hpp"

#include <algorithm>
#include <cmath>

namespace sentinel {

namespace {

/// Number of points on the inclusive grid {lo, lo+step, ..., <= hi}.
std::size_t grid_points(double lo, double hi, double step) {
    return static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
}

std::size_t grid_points(std::uint32_t lo, std::uint32_t hi, std::uint32_t step) {
    return static_cast<std::size_t>((hi - lo) / step) + 1;
}

}  // namespace

void SearchSpace::validate() const {
    if (layer_counts.empty()) throw ValidationError("search space: layer_counts is empty");
    for (const std::uint32_t n : layer_counts) {
        if (n == 0) throw ValidationError("search space: layer count must be positive");
    }
    if (hidden_choices.empty()) throw ValidationError("search space: hidden_choices is empty");
    for (const std::uint32_t h : hidden_choices) {
        if (h == 0) throw ValidationError("search space: hidden width must be positive");
    }
    if (!(dropout_min >= 0.0 && dropout_max < 1.0 && dropout_min <= dropout_max)) {
        throw ValidationError("search space: dropout range must satisfy 0 <= min <= max < 1");
    }
    if (dropout_min < dropout_max && !(dropout_step > 0.0)) {
        throw ValidationError("search space: dropout_step must be positive");
    }
    if (m_min == 0 || m_min > m_max) {
        throw ValidationError("search space: replay range must satisfy 1 <= m_min <= m_max");
    }
    if (k_choices.empty()) throw ValidationError("search space: k_choices is empty");
    for (const std::uint32_t k : k_choices) {
        if (k == 0) throw ValidationError("search space: perturbation budget k must be positive");
    }
    if (teacher_trees_min == 0 || teacher_trees_min > teacher_trees_max) {
        throw ValidationError("search space: teacher tree range must satisfy 1 <= min <= max");
    }
    if (teacher_trees_min < teacher_trees_max && teacher_trees_step == 0) {
        throw ValidationError("search space: teacher_trees_step must be positive");
    }
    if (min_leaf_min == 0 || min_leaf_min > min_leaf_max) {
        throw ValidationError("search space: leaf size range must satisfy 1 <= min <= max");
    }
    if (min_leaf_min < min_leaf_max && min_leaf_step == 0) {
        throw ValidationError("search space: min_leaf_step must be positive");
    }
    if (trials == 0) throw ValidationError("search space: trials must be at least 1");
}

TrialParams sample_params(const SearchSpace& space, Rng& rng) {
    space.validate();
    TrialParams p;
    const std::uint32_t n_layers = space.layer_counts[rng.index(space.layer_counts.size())];
    p.hidden_sizes.reserve(n_layers);
    for (std::uint32_t i = 0; i < n_layers; ++i) {
        p.hidden_sizes.push_back(space.hidden_choices[rng.index(space.hidden_choices.size())]);
    }
    if (space.dropout_min == space.dropout_max) {
        p.dropout = space.dropout_min;
    } else {
        const std::size_t steps = grid_points(space.dropout_min, space.dropout_max, space.dropout_step);
        p.dropout = space.dropout_min + static_cast<double>(rng.index(steps)) * space.dropout_step;
    }
    p.m = static_cast<std::uint32_t>(rng.range(space.m_min, space.m_max));
    p.k = space.k_choices[rng.index(space.k_choices.size())];
    if (space.teacher_trees_min == space.teacher_trees_max) {
        p.teacher_trees = space.teacher_trees_min;
    } else {
        const std::size_t steps =
            grid_points(space.teacher_trees_min, space.teacher_trees_max, space.teacher_trees_step);
        p.teacher_trees =
            space.teacher_trees_min + static_cast<std::uint32_t>(rng.index(steps)) * space.teacher_trees_step;
    }
    if (space.min_leaf_min == space.min_leaf_max) {
        p.min_samples_leaf = space.min_leaf_min;
    } else {
        const std::size_t steps = grid_points(space.min_leaf_min, space.min_leaf_max, space.min_leaf_step);
        p.min_samples_leaf =
            space.min_leaf_min + static_cast<std::uint32_t>(rng.index(steps)) * space.min_leaf_step;
    }
    return p;
}

SearchOutcome random_search(const SearchSpace& space, const TrialObjective& objective,
                            std::uint32_t trials, std::uint64_t seed) {
    space.validate();
    if (trials == 0) throw ValidationError("random_search: trials must be at least 1");
    if (!objective) throw ValidationError("random_search: objective callback is empty");

    SearchOutcome out;
    out.log.reserve(trials);
    for (std::uint32_t t = 0; t < trials; ++t) {
        const std::uint64_t trial_base = seed_stream(seed_stream(seed, streams::kSearchTrial), t);
        Rng rng(seed_stream(trial_base, 0));
        TrialRecord rec;
        rec.index = t;
        rec.trial_seed = seed_stream(trial_base, 1);
        rec.params = sample_params(space, rng);
        rec.objective = objective(rec.params, rec.trial_seed);
        if (!std::isfinite(rec.objective)) {
            throw ValidationError("random_search: objective returned a non-finite value");
        }
        // Strict > keeps the earliest trial on ties.
        if (out.log.empty() || rec.objective > out.best_objective) {
            out.best_index = t;
            out.best_params = rec.params;
            out.best_objective = rec.objective;
        }
        out.log.push_back(std::move(rec));
    }
    return out;
}

}  // namespace sentinel
