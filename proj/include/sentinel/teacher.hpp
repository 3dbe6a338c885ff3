#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "sentinel/common.hpp"
#include "sentinel/features.hpp"

namespace sentinel {

enum class SplitCriterion : std::uint8_t { gini, entropy };

struct RandomForestConfig {
    std::uint32_t n_trees = 60;
    SplitCriterion criterion = SplitCriterion::gini;
    std::uint32_t min_samples_leaf = 50;
    std::optional<std::uint32_t> max_depth;  // absent = grow until other stops
    std::uint32_t features_per_split = 0;    // 0 = floor(sqrt(d)), at least 1
    double pos_class_weight = 1.0;
    bool bootstrap = true;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Binary-feature decision tree node. Internal nodes split on feature
/// presence: x_i = 1 goes right. Leaves carry the class-weighted positive
/// fraction.
struct TreeNode {
    std::int32_t feature = -1;  // -1 marks a leaf
    std::int32_t left = -1;
    std::int32_t right = -1;
    double prob = 0.0;

    bool is_leaf() const { return feature < 0; }
    bool operator==(const TreeNode&) const = default;
};

struct DecisionTree {
    std::vector<TreeNode> nodes;  // root at index 0

    bool operator==(const DecisionTree&) const = default;
};

struct RandomForestModel {
    RandomForestConfig config;
    std::uint32_t input_dim = 0;
    std::vector<DecisionTree> trees;
};

RandomForestModel rf_train(const LabeledDataset& dataset, const RandomForestConfig& config);

double rf_predict_proba(const RandomForestModel& model, const SparseBinaryVector& x);

/// Convex blend (1 - lambda) * y + lambda * teacher_prob, clamped to [0,1].
double blend_label(double y, double teacher_prob, double lambda);

/// Blends discrete labels toward teacher probabilities via blend_label.
/// Samples are unchanged.
LabeledDataset smooth_labels(const LabeledDataset& dataset, const RandomForestModel& teacher,
                             double lambda);

}  // namespace sentinel
