#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sentinel/common.hpp"

namespace sentinel {

/// How an attacker (or the defender's perturbation budget) may touch a
/// feature: additions only, or both additions and removals.
enum class Manipulability : std::uint8_t {
    add_only,
    add_and_remove,
};

struct FeatureCategory {
    std::string name;
    std::uint32_t lo = 0;  // inclusive
    std::uint32_t hi = 0;  // exclusive
    Manipulability manip = Manipulability::add_only;
};

/// Sparse binary feature space: a dimension plus named, contiguous
/// categories that partition [0, d) and carry manipulability semantics.
struct FeatureSpace {
    std::uint32_t dim = 0;
    std::vector<FeatureCategory> categories;

    /// Two-block default: first half "manifest" (add-only), second half
    /// "code" (add-and-remove).
    static FeatureSpace two_block(std::uint32_t dim);

    void validate() const;
    const FeatureCategory& category_of(std::uint32_t idx) const;
    bool removal_allowed(std::uint32_t idx) const;
};

/// x in {0,1}^d stored as the sorted set of active indices.
struct SparseBinaryVector {
    std::uint32_t dim = 0;
    std::vector<std::uint32_t> active;

    bool contains(std::uint32_t idx) const;
    void validate() const;
};

/// delta in {-1,0,+1}^d stored sparsely; absent index means 0.
struct Perturbation {
    std::uint32_t dim = 0;
    // Sorted by index; values are only -1 or +1.
    std::vector<std::pair<std::uint32_t, std::int8_t>> entries;

    std::size_t nonzero_count() const { return entries.size(); }
    std::int8_t value_at(std::uint32_t idx) const;
    /// v in {-1, 0, +1}; 0 erases the entry.
    void set(std::uint32_t idx, std::int8_t v);
    void validate() const;
};

struct LabeledDataset {
    std::uint32_t dim = 0;
    std::vector<SparseBinaryVector> samples;
    std::vector<double> labels;  // in [0,1]; discrete iff all in {0,1}
    std::vector<std::int32_t> rounds;  // empty, or one tag per sample

    std::size_t size() const { return samples.size(); }
    bool has_rounds() const { return !rounds.empty(); }
    bool is_discrete() const;
    void validate() const;
};

/// Eligible perturbation indices (Gamma) with per-index direction
/// constraints. Parallel arrays sorted by index.
struct ManipulabilityMask {
    std::vector<std::uint32_t> indices;
    std::vector<std::uint8_t> add_only;  // 1 = additions only

    std::size_t size() const { return indices.size(); }
    void validate(std::uint32_t dim) const;

    /// Mask over every index of the space, directions per category.
    static ManipulabilityMask from_space(const FeatureSpace& space);
    /// Mask restricted to the named categories.
    static ManipulabilityMask from_categories(const FeatureSpace& space,
                                              const std::vector<std::string>& names);
};

LabeledDataset parse_sparse_stream(std::istream& in);
LabeledDataset read_sparse_file(const std::string& path);
void write_sparse_stream(std::ostream& out, const LabeledDataset& ds);
void write_sparse_file(const std::string& path, const LabeledDataset& ds);

SparseBinaryVector apply_perturbation(const SparseBinaryVector& x, const Perturbation& delta);
std::size_t hamming_distance(const SparseBinaryVector& a, const SparseBinaryVector& b);

std::vector<double> to_dense(const SparseBinaryVector& x);

struct SynthSpec {
    std::uint32_t d = 200;
    std::size_t n_samples = 1000;
    double malware_ratio = 0.1;
    std::uint32_t n_signature_features = 10;
    double noise_rate = 0.02;
};

/// Planted-signature generator. Malware turns each index of the
/// "malicious" block [0, nsig) on with prob 0.9 and each index of the
/// "benign" block [nsig, 2*nsig) on with prob 0.1; goodware the reverse.
/// Indices >= 2*nsig fire independently at noise_rate for both classes.
LabeledDataset synth_generate(const SynthSpec& spec, std::uint64_t seed);

/// Deterministic train/validation index split; n_val = max(1, n/5).
struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
};
SplitIndices train_val_split(std::size_t n, std::uint64_t seed);

LabeledDataset subset(const LabeledDataset& ds, const std::vector<std::size_t>& idx);

}  // namespace sentinel
