#include "sentinel/teacher.hpp"

#include <algorithm>
#include <cmath>

namespace sentinel {

namespace {

struct TreeBuilder {
    const LabeledDataset& ds;
    const RandomForestConfig& cfg;
    std::uint32_t n_candidates;
    Rng& rng;
    DecisionTree tree;

    double impurity(double wpos, double wneg) const {
        const double total = wpos + wneg;
        if (total <= 0.0) return 0.0;
        const double p = wpos / total;
        if (cfg.criterion == SplitCriterion::gini) return 2.0 * p * (1.0 - p);
        double h = 0.0;
        if (p > 0.0) h -= p * std::log2(p);
        if (p < 1.0) h -= (1.0 - p) * std::log2(1.0 - p);
        return h;
    }

    void weighted_counts(const std::vector<std::size_t>& idx, double& wpos, double& wneg) const {
        wpos = 0.0;
        wneg = 0.0;
        for (const std::size_t i : idx) {
            if (ds.labels[i] == 1.0) {
                wpos += cfg.pos_class_weight;
            } else {
                wneg += 1.0;
            }
        }
    }

    std::int32_t build(const std::vector<std::size_t>& idx, std::uint32_t depth) {
        double wpos = 0.0;
        double wneg = 0.0;
        weighted_counts(idx, wpos, wneg);
        const double node_impurity = impurity(wpos, wneg);

        const bool pure = wpos == 0.0 || wneg == 0.0;
        const bool depth_capped = cfg.max_depth && depth >= *cfg.max_depth;

        std::int32_t best_feature = -1;
        std::vector<std::size_t> best_left;
        std::vector<std::size_t> best_right;
        if (!pure && !depth_capped) {
            auto candidates = rng.pick_distinct(ds.dim, n_candidates);
            std::sort(candidates.begin(), candidates.end());
            double best_gain = 0.0;
            for (const std::size_t f : candidates) {
                std::vector<std::size_t> left;
                std::vector<std::size_t> right;
                for (const std::size_t i : idx) {
                    (ds.samples[i].contains(static_cast<std::uint32_t>(f)) ? right : left)
                        .push_back(i);
                }
                if (left.size() < cfg.min_samples_leaf || right.size() < cfg.min_samples_leaf)
                    continue;
                double lp = 0.0;
                double ln = 0.0;
                double rp = 0.0;
                double rn = 0.0;
                weighted_counts(left, lp, ln);
                weighted_counts(right, rp, rn);
                const double wl = lp + ln;
                const double wr = rp + rn;
                const double child =
                    (wl * impurity(lp, ln) + wr * impurity(rp, rn)) / (wl + wr);
                const double gain = node_impurity - child;
                if (gain > best_gain) {
                    best_gain = gain;
                    best_feature = static_cast<std::int32_t>(f);
                    best_left = std::move(left);
                    best_right = std::move(right);
                }
            }
        }

        const std::int32_t id = static_cast<std::int32_t>(tree.nodes.size());
        tree.nodes.emplace_back();
        if (best_feature < 0) {
            tree.nodes[static_cast<std::size_t>(id)].prob =
                wpos + wneg > 0.0 ? wpos / (wpos + wneg) : 0.0;
            return id;
        }
        const std::int32_t left_id = build(best_left, depth + 1);
        const std::int32_t right_id = build(best_right, depth + 1);
        TreeNode& node = tree.nodes[static_cast<std::size_t>(id)];
        node.feature = best_feature;
        node.left = left_id;
        node.right = right_id;
        return id;
    }
};

}  // namespace

void RandomForestConfig::validate() const {
    if (n_trees < 1) throw ValidationError("forest config: n_trees must be >= 1");
    if (min_samples_leaf < 1)
        throw ValidationError("forest config: min_samples_leaf must be >= 1");
    if (!(pos_class_weight > 0.0))
        throw ValidationError("forest config: pos_class_weight must be positive");
}

RandomForestModel rf_train(const LabeledDataset& dataset, const RandomForestConfig& config) {
    config.validate();
    dataset.validate();
    if (dataset.size() == 0) throw ValidationError("rf_train: empty dataset");
    if (!dataset.is_discrete())
        throw ValidationError("rf_train: teacher training needs discrete labels");

    std::uint32_t n_candidates = config.features_per_split;
    if (n_candidates == 0) {
        n_candidates = static_cast<std::uint32_t>(
            std::max(1.0, std::floor(std::sqrt(static_cast<double>(dataset.dim)))));
    }
    n_candidates = std::min(n_candidates, dataset.dim);

    RandomForestModel model;
    model.config = config;
    model.input_dim = dataset.dim;
    model.trees.reserve(config.n_trees);

    const std::uint64_t base = seed_stream(config.seed, streams::kTeacherTree);
    for (std::uint32_t t = 0; t < config.n_trees; ++t) {
        Rng rng(seed_stream(base, t));
        std::vector<std::size_t> idx;
        idx.reserve(dataset.size());
        if (config.bootstrap) {
            for (std::size_t i = 0; i < dataset.size(); ++i) idx.push_back(rng.index(dataset.size()));
        } else {
            for (std::size_t i = 0; i < dataset.size(); ++i) idx.push_back(i);
        }
        TreeBuilder builder{dataset, config, n_candidates, rng, {}};
        builder.build(idx, 0);
        model.trees.push_back(std::move(builder.tree));
    }
    return model;
}

double rf_predict_proba(const RandomForestModel& model, const SparseBinaryVector& x) {
    if (x.dim != model.input_dim) throw ValidationError("rf_predict: dimension mismatch");
    if (model.trees.empty()) throw ValidationError("rf_predict: empty forest");
    double sum = 0.0;
    for (const auto& tree : model.trees) {
        std::size_t node = 0;
        while (!tree.nodes[node].is_leaf()) {
            const TreeNode& n = tree.nodes[node];
            node = static_cast<std::size_t>(
                x.contains(static_cast<std::uint32_t>(n.feature)) ? n.right : n.left);
        }
        sum += tree.nodes[node].prob;
    }
    return sum / static_cast<double>(model.trees.size());
}

double blend_label(double y, double teacher_prob, double lambda) {
    if (!(lambda >= 0.0 && lambda <= 1.0))
        throw ValidationError("blend_label: lambda must lie in [0,1]");
    // convex combination; clamp guards the <= 1 ulp float overshoot
    return std::clamp((1.0 - lambda) * y + lambda * teacher_prob, 0.0, 1.0);
}

LabeledDataset smooth_labels(const LabeledDataset& dataset, const RandomForestModel& teacher,
                             double lambda) {
    if (!(lambda >= 0.0 && lambda <= 1.0))
        throw ValidationError("smooth_labels: lambda must lie in [0,1]");
    dataset.validate();
    if (!dataset.is_discrete())
        throw ValidationError("smooth_labels: input labels must be discrete");

    LabeledDataset out = dataset;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double y = dataset.labels[i];
        const double fs = rf_predict_proba(teacher, dataset.samples[i]);
        out.labels[i] = blend_label(y, fs, lambda);
    }
    return out;
}

}  // namespace sentinel
