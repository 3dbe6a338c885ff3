#include "sentinel/attack.hpp"

#include <algorithm>
#include <limits>
#include <string>
#include <utility>

namespace sentinel {

bool ManipulationSpace::valid_gene(Gene g) const {
    if (g == 0) return false;
    const std::uint32_t idx = gene_index(g);
    if (idx >= dim) return false;
    const auto& pool = gene_is_add(g) ? addable : removable;
    return std::binary_search(pool.begin(), pool.end(), idx);
}

void ManipulationSpace::validate() const {
    if (dim == 0) throw ValidationError("manipulation space dimension must be positive");
    auto check_pool = [this](const std::vector<std::uint32_t>& pool, const char* what) {
        for (std::size_t i = 0; i < pool.size(); ++i) {
            if (pool[i] >= dim)
                throw ValidationError(std::string(what) + " gene index " +
                                      std::to_string(pool[i]) + " outside [0, " +
                                      std::to_string(dim) + ")");
            if (i > 0 && pool[i] <= pool[i - 1])
                throw ValidationError(std::string(what) +
                                      " gene indices must be strictly increasing");
        }
    };
    check_pool(addable, "addable");
    check_pool(removable, "removable");
}

void GaConfig::validate() const {
    if (population_size < 2) throw ValidationError("population_size must be at least 2");
    if (generations < 1) throw ValidationError("generations must be at least 1");
    if (tournament_size < 1 || tournament_size > population_size)
        throw ValidationError("tournament_size must lie in [1, population_size]");
    if (!(crossover_prob >= 0.0 && crossover_prob <= 1.0))
        throw ValidationError("crossover_prob must lie in [0, 1]");
    if (!(mutation_prob >= 0.0 && mutation_prob <= 1.0))
        throw ValidationError("mutation_prob must lie in [0, 1]");
    if (per_gene_mutation_prob > 1.0)
        throw ValidationError("per_gene_mutation_prob must not exceed 1");
}

ManipulationSpace build_manipulation_space(const std::vector<SparseBinaryVector>& goodware,
                                           const FeatureSpace& feature_space,
                                           const SparseBinaryVector& x) {
    feature_space.validate();
    x.validate();
    if (goodware.empty()) throw ValidationError("goodware pool must not be empty");
    if (x.dim != feature_space.dim)
        throw ValidationError("target dimension does not match the feature space");

    std::vector<std::uint32_t> pool_union;
    for (const SparseBinaryVector& g : goodware) {
        g.validate();
        if (g.dim != feature_space.dim)
            throw ValidationError("goodware sample dimension does not match the feature space");
        pool_union.insert(pool_union.end(), g.active.begin(), g.active.end());
    }
    std::sort(pool_union.begin(), pool_union.end());
    pool_union.erase(std::unique(pool_union.begin(), pool_union.end()), pool_union.end());

    ManipulationSpace space;
    space.dim = feature_space.dim;
    for (std::uint32_t idx : pool_union)
        if (!x.contains(idx)) space.addable.push_back(idx);
    for (std::uint32_t idx : x.active)
        if (feature_space.removal_allowed(idx)) space.removable.push_back(idx);

    if (space.size() == 0)
        throw ValidationError(
            "manipulation space is empty: the target already carries every pool feature and "
            "none of its own features are removable");
    return space;
}

std::vector<Individual> init_population(const ManipulationSpace& space, std::uint32_t budget,
                                        const GaConfig& config, Rng& rng) {
    space.validate();
    config.validate();
    if (budget == 0) throw ValidationError("attack budget must be at least 1");
    if (space.size() == 0) throw ValidationError("manipulation space must not be empty");

    const bool both = !space.addable.empty() && !space.removable.empty();
    std::vector<Individual> population(config.population_size);
    for (Individual& ind : population) {
        ind.genes.reserve(budget);
        for (std::uint32_t g = 0; g < budget; ++g) {
            bool add = both ? rng.bernoulli(0.9) : !space.addable.empty();
            const auto& pool = add ? space.addable : space.removable;
            const std::uint32_t idx = pool[rng.index(pool.size())];
            ind.genes.push_back(add ? make_add_gene(idx) : make_remove_gene(idx));
        }
    }
    return population;
}

SparseBinaryVector apply_manipulations(const SparseBinaryVector& x, const Individual& individual) {
    std::vector<std::uint32_t> adds, removes;
    for (Gene g : individual.genes) {
        if (g == 0) throw ValidationError("gene 0 is not a manipulation");
        (gene_is_add(g) ? adds : removes).push_back(gene_index(g));
    }
    std::sort(adds.begin(), adds.end());
    adds.erase(std::unique(adds.begin(), adds.end()), adds.end());
    std::sort(removes.begin(), removes.end());
    removes.erase(std::unique(removes.begin(), removes.end()), removes.end());

    SparseBinaryVector out;
    out.dim = x.dim;
    out.active.reserve(x.active.size() + adds.size());
    std::set_union(x.active.begin(), x.active.end(), adds.begin(), adds.end(),
                   std::back_inserter(out.active));
    std::vector<std::uint32_t> kept;
    kept.reserve(out.active.size());
    std::set_difference(out.active.begin(), out.active.end(), removes.begin(), removes.end(),
                        std::back_inserter(kept));
    out.active = std::move(kept);
    out.validate();
    return out;
}

double fitness(const Oracle& oracle, const SparseBinaryVector& x, const Individual& individual,
               std::uint32_t budget, std::uint64_t& query_count) {
    SparseBinaryVector candidate = apply_manipulations(x, individual);
    SENTINEL_CHECK(hamming_distance(x, candidate) <= budget,
                   "attack candidate exceeds the manipulation budget");
    ++query_count;
    return oracle(candidate);
}

std::pair<Individual, Individual> crossover(const Individual& a, const Individual& b,
                                            double crossover_prob, Rng& rng) {
    if (a.genes.size() != b.genes.size())
        throw ValidationError("crossover requires equal-length individuals");
    if (!rng.bernoulli(crossover_prob)) return {a, b};
    Individual ca = a, cb = b;
    for (std::size_t i = 0; i < ca.genes.size(); ++i)
        if (rng.bernoulli(0.5)) std::swap(ca.genes[i], cb.genes[i]);
    return {std::move(ca), std::move(cb)};
}

Individual mutate(const Individual& individual, const ManipulationSpace& space,
                  double per_gene_mutation_prob, Rng& rng) {
    Individual out = individual;
    if (space.size() < 2) return out;  // no different gene exists to switch to
    for (Gene& g : out.genes) {
        if (!rng.bernoulli(per_gene_mutation_prob)) continue;
        Gene replacement = g;
        while (replacement == g) {
            const std::size_t pick = rng.index(space.size());
            replacement = pick < space.addable.size()
                              ? make_add_gene(space.addable[pick])
                              : make_remove_gene(space.removable[pick - space.addable.size()]);
        }
        g = replacement;
    }
    return out;
}

Individual tournament_select(const std::vector<Individual>& population,
                             const std::vector<double>& fitnesses, std::uint32_t size, Rng& rng) {
    if (population.empty() || population.size() != fitnesses.size())
        throw ValidationError("tournament needs matching population and fitness lists");
    if (size < 1) throw ValidationError("tournament size must be at least 1");
    std::size_t best = rng.index(population.size());
    for (std::uint32_t i = 1; i < size; ++i) {
        const std::size_t contender = rng.index(population.size());
        if (fitnesses[contender] < fitnesses[best]) best = contender;
    }
    return population[best];
}

AttackResult run_attack(const Oracle& oracle, const Labeler& labeler, const SparseBinaryVector& x,
                        std::uint32_t budget, const ManipulationSpace& space,
                        const GaConfig& config) {
    config.validate();
    x.validate();
    if (budget == 0) throw ValidationError("attack budget must be at least 1");
    if (labeler(x) != Verdict::malware)
        throw ValidationError("attack target must be labeled malware to begin with");

    AttackResult result;
    if (space.size() == 0) {
        result.adversarial = x;
        result.best_score = oracle(x);
        result.query_count = 1;
        return result;
    }
    space.validate();
    if (x.dim != space.dim)
        throw ValidationError("target dimension does not match the manipulation space");

    const double per_gene = config.per_gene_mutation_prob > 0.0
                                ? config.per_gene_mutation_prob
                                : 1.0 / static_cast<double>(budget);

    Rng rng(seed_stream(config.seed, streams::kAttackSample));
    std::vector<Individual> population = init_population(space, budget, config, rng);

    double best_score = std::numeric_limits<double>::infinity();
    Individual best;
    std::uint64_t queries = 0;
    bool stopped_early = false;

    std::vector<double> fits(population.size());
    for (std::uint32_t gen = 1; gen <= config.generations && !stopped_early; ++gen) {
        for (std::size_t i = 0; i < population.size(); ++i) {
            for (Gene g : population[i].genes)
                SENTINEL_CHECK(space.valid_gene(g), "attack gene left the manipulation space");
            SparseBinaryVector candidate = apply_manipulations(x, population[i]);
            SENTINEL_CHECK(hamming_distance(x, candidate) <= budget,
                           "attack candidate exceeds the manipulation budget");
            ++queries;
            fits[i] = oracle(candidate);
            if (fits[i] < best_score) {
                best_score = fits[i];
                best = population[i];
            }
            if (config.early_stop && labeler(candidate) == Verdict::goodware) {
                stopped_early = true;
                break;
            }
        }
        result.generations_run = gen;
        result.best_by_generation.push_back(best_score);
        if (stopped_early || gen == config.generations) break;

        std::vector<Individual> next;
        next.reserve(population.size());
        while (next.size() < population.size()) {
            Individual pa = tournament_select(population, fits, config.tournament_size, rng);
            Individual pb = tournament_select(population, fits, config.tournament_size, rng);
            auto [ca, cb] = crossover(pa, pb, config.crossover_prob, rng);
            if (rng.bernoulli(config.mutation_prob)) ca = mutate(ca, space, per_gene, rng);
            if (rng.bernoulli(config.mutation_prob)) cb = mutate(cb, space, per_gene, rng);
            next.push_back(std::move(ca));
            if (next.size() < population.size()) next.push_back(std::move(cb));
        }
        population = std::move(next);
    }

    result.best = std::move(best);
    result.best_score = best_score;
    result.query_count = queries;
    result.adversarial = apply_manipulations(x, result.best);
    result.evaded = labeler(result.adversarial) == Verdict::goodware;
    return result;
}

AttackSweep attack_dataset(const AttackTarget& system,
                           const std::vector<SparseBinaryVector>& malware_samples,
                           const std::vector<std::uint32_t>& budgets,
                           const std::vector<SparseBinaryVector>& goodware_pool,
                           const FeatureSpace& feature_space, const GaConfig& config) {
    config.validate();
    feature_space.validate();
    if (malware_samples.empty()) throw ValidationError("need at least one sample to attack");
    if (budgets.empty()) throw ValidationError("need at least one budget");
    for (std::size_t i = 1; i < budgets.size(); ++i)
        for (std::size_t j = 0; j < i; ++j)
            if (budgets[i] == budgets[j]) throw ValidationError("budgets must be distinct");

    AttackSweep sweep;
    for (std::uint32_t budget : budgets) {
        std::size_t detected = 0;
        for (std::size_t s = 0; s < malware_samples.size(); ++s) {
            const SparseBinaryVector& x = malware_samples[s];
            SampleAttackRecord rec;
            rec.sample_index = s;
            rec.budget = budget;

            const bool clean_detected = system.label(x) == Verdict::malware;
            if (budget == 0 || !clean_detected) {
                rec.final_score = system.score(x);
                rec.queries = 1;
                rec.evaded = !clean_detected;
            } else {
                GaConfig per_sample = config;
                per_sample.seed = seed_stream(seed_stream(config.seed, budget), s);
                AttackResult res;
                try {
                    ManipulationSpace space = build_manipulation_space(goodware_pool,
                                                                       feature_space, x);
                    res = run_attack(system.score, system.label, x, budget, space, per_sample);
                } catch (const ValidationError&) {
                    // Unattackable target (saturated space): stands as detected.
                    res.adversarial = x;
                    res.best_score = system.score(x);
                    res.query_count = 1;
                    res.evaded = false;
                }
                rec.evaded = res.evaded;
                rec.final_score = res.best_score;
                rec.queries = res.query_count;
                rec.generations = res.generations_run;
            }
            if (!rec.evaded) ++detected;
            sweep.records.push_back(rec);
        }
        sweep.tpr_by_budget[budget] =
            static_cast<double>(detected) / static_cast<double>(malware_samples.size());
    }
    return sweep;
}

}  // namespace sentinel
