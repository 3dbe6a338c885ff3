#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include "sentinel/cascade.hpp"
#include "sentinel/common.hpp"
#include "sentinel/features.hpp"

namespace sentinel {

/// Signed manipulation gene: +(index + 1) sets the feature, -(index + 1)
/// clears it. The offset keeps index 0 unambiguous.
using Gene = std::int64_t;

inline Gene make_add_gene(std::uint32_t index) { return static_cast<Gene>(index) + 1; }
inline Gene make_remove_gene(std::uint32_t index) { return -(static_cast<Gene>(index) + 1); }
inline bool gene_is_add(Gene g) { return g > 0; }
inline std::uint32_t gene_index(Gene g) {
    return static_cast<std::uint32_t>((g > 0 ? g : -g) - 1);
}

/// Moves the attacker may legally make against one target sample: features it
/// can switch on (drawn from a goodware pool) and features of the target it
/// can switch off (only where the category permits removal).
struct ManipulationSpace {
    std::uint32_t dim = 0;
    std::vector<std::uint32_t> addable;    // sorted, unique, none active in the target
    std::vector<std::uint32_t> removable;  // sorted, unique, all active in the target

    std::size_t size() const { return addable.size() + removable.size(); }
    bool valid_gene(Gene g) const;
    void validate() const;
};

struct Individual {
    std::vector<Gene> genes;  // fixed length = budget; duplicates and no-ops allowed
};

struct GaConfig {
    std::uint32_t population_size = 100;
    std::uint32_t generations = 50;
    std::uint32_t tournament_size = 3;
    double crossover_prob = 0.7;
    double mutation_prob = 1.0;
    // Per-position replacement chance; any value <= 0 resolves to 1/budget at
    // attack time.
    double per_gene_mutation_prob = 0.0;
    std::uint64_t seed = 1;
    bool early_stop = true;

    void validate() const;
};

struct AttackResult {
    Individual best;
    double best_score = 0.0;
    bool evaded = false;
    std::uint32_t generations_run = 0;
    std::uint64_t query_count = 0;
    SparseBinaryVector adversarial;
    std::vector<double> best_by_generation;  // best-ever score after each generation
};

using Oracle = std::function<double(const SparseBinaryVector&)>;
using Labeler = std::function<Verdict(const SparseBinaryVector&)>;

ManipulationSpace build_manipulation_space(const std::vector<SparseBinaryVector>& goodware,
                                           const FeatureSpace& feature_space,
                                           const SparseBinaryVector& x);

std::vector<Individual> init_population(const ManipulationSpace& space, std::uint32_t budget,
                                        const GaConfig& config, Rng& rng);

SparseBinaryVector apply_manipulations(const SparseBinaryVector& x, const Individual& individual);

/// Scores one candidate: applies the genes, enforces the budget, queries the
/// oracle once, and bumps the query counter.
double fitness(const Oracle& oracle, const SparseBinaryVector& x, const Individual& individual,
               std::uint32_t budget, std::uint64_t& query_count);

std::pair<Individual, Individual> crossover(const Individual& a, const Individual& b,
                                            double crossover_prob, Rng& rng);

Individual mutate(const Individual& individual, const ManipulationSpace& space,
                  double per_gene_mutation_prob, Rng& rng);

Individual tournament_select(const std::vector<Individual>& population,
                             const std::vector<double>& fitnesses, std::uint32_t size, Rng& rng);

/// Generational minimization of the oracle's malware confidence. Requires the
/// target to be labeled malware up front; an empty space yields a no-op
/// failure result instead of an error.
AttackResult run_attack(const Oracle& oracle, const Labeler& labeler, const SparseBinaryVector& x,
                        std::uint32_t budget, const ManipulationSpace& space,
                        const GaConfig& config);

struct AttackTarget {
    Oracle score;
    Labeler label;
};

struct SampleAttackRecord {
    std::size_t sample_index = 0;
    std::uint32_t budget = 0;
    bool evaded = false;
    double final_score = 0.0;
    std::uint64_t queries = 0;
    std::uint32_t generations = 0;
};

struct AttackSweep {
    std::map<std::uint32_t, double> tpr_by_budget;  // fraction still detected
    std::vector<SampleAttackRecord> records;
};

/// Attacks every sample at every budget; budget 0 reports the clean detection
/// rate without running the search.
AttackSweep attack_dataset(const AttackTarget& system,
                           const std::vector<SparseBinaryVector>& malware_samples,
                           const std::vector<std::uint32_t>& budgets,
                           const std::vector<SparseBinaryVector>& goodware_pool,
                           const FeatureSpace& feature_space, const GaConfig& config);

}  // namespace sentinel
