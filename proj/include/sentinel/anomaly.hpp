#pragma once

#include <cstdint>
#include <vector>

#include "sentinel/common.hpp"

namespace sentinel {

struct IsolationForestConfig {
    std::uint32_t n_trees = 100;
    std::uint32_t subsample_size = 256;
    double contamination = 0.14;
    /// Polarity of the gate signal: true means the signal fires for
    /// inliers (embedding looks like known training data), false for
    /// anomalies.
    bool signal_on_inlier = true;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Axis-aligned random split; leaves record their point count for the
/// standard path-length adjustment.
struct IsoNode {
    std::int32_t feature = -1;  // -1 marks a leaf
    double value = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::uint32_t size = 0;

    bool is_leaf() const { return feature < 0; }
    bool operator==(const IsoNode&) const = default;
};

struct IsoTree {
    std::vector<IsoNode> nodes;  // root at index 0

    bool operator==(const IsoTree&) const = default;
};

struct IsolationForestModel {
    std::uint32_t embedding_dim = 0;
    std::uint32_t subsample_size = 0;
    double score_threshold = 0.0;
    bool signal_on_inlier = true;
    std::vector<IsoTree> trees;
};

/// Expected path length of an unsuccessful binary search among n points:
/// c(n) = 2 H(n-1) - 2(n-1)/n with H(i) = ln(i) + 0.5772156649;
/// c(0) = c(1) = 0.
double average_path_length(std::size_t n);

/// Trains on embeddings (typically of benign samples) and calibrates the
/// score threshold to the (1 - contamination) quantile of training scores.
IsolationForestModel iforest_train(const std::vector<std::vector<double>>& embeddings,
                                   const IsolationForestConfig& config);

/// Anomaly score 2^(-E[h]/c(psi)); higher is more anomalous.
double iforest_score(const IsolationForestModel& model, const std::vector<double>& e);

/// Strictly above the calibrated threshold; ties count as inliers.
bool iforest_is_anomalous(const IsolationForestModel& model, const std::vector<double>& e);

/// The gate bit consumed by cascade conditions, honoring the polarity flag.
bool iforest_signal(const IsolationForestModel& model, const std::vector<double>& e);

}  // namespace sentinel
