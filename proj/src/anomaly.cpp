#include "sentinel/anomaly.hpp"

#include <algorithm>
#include <cmath>

namespace sentinel {

namespace {

constexpr double kEulerMascheroni = 0.5772156649;

std::uint32_t height_cap(std::uint32_t psi) {
    std::uint32_t h = 0;
    std::uint32_t v = 1;
    while (v < psi) {
        v *= 2;
        ++h;
    }
    return h;  // ceil(log2(psi))
}

struct IsoBuilder {
    const std::vector<std::vector<double>>& points;
    std::uint32_t dim;
    std::uint32_t cap;
    Rng& rng;
    IsoTree tree;

    std::int32_t build(const std::vector<std::size_t>& idx, std::uint32_t depth) {
        const std::int32_t id = static_cast<std::int32_t>(tree.nodes.size());
        tree.nodes.emplace_back();

        bool splittable = idx.size() >= 2 && depth < cap;
        std::vector<std::uint32_t> usable;
        if (splittable) {
            for (std::uint32_t f = 0; f < dim; ++f) {
                double lo = points[idx[0]][f];
                double hi = lo;
                for (const std::size_t i : idx) {
                    lo = std::min(lo, points[i][f]);
                    hi = std::max(hi, points[i][f]);
                }
                if (hi > lo) usable.push_back(f);
            }
            splittable = !usable.empty();
        }
        if (!splittable) {
            tree.nodes[static_cast<std::size_t>(id)].size =
                static_cast<std::uint32_t>(idx.size());
            return id;
        }

        const std::uint32_t f = usable[rng.index(usable.size())];
        double lo = points[idx[0]][f];
        double hi = lo;
        for (const std::size_t i : idx) {
            lo = std::min(lo, points[i][f]);
            hi = std::max(hi, points[i][f]);
        }
        double split = rng.uniform(lo, hi);
        if (split <= lo || split >= hi) split = lo + (hi - lo) * 0.5;

        std::vector<std::size_t> left;
        std::vector<std::size_t> right;
        for (const std::size_t i : idx) {
            (points[i][f] < split ? left : right).push_back(i);
        }
        const std::int32_t left_id = build(left, depth + 1);
        const std::int32_t right_id = build(right, depth + 1);
        IsoNode& node = tree.nodes[static_cast<std::size_t>(id)];
        node.feature = static_cast<std::int32_t>(f);
        node.value = split;
        node.left = left_id;
        node.right = right_id;
        return id;
    }
};

double path_length(const IsoTree& tree, const std::vector<double>& e) {
    std::size_t node = 0;
    double depth = 0.0;
    while (!tree.nodes[node].is_leaf()) {
        const IsoNode& n = tree.nodes[node];
        node = static_cast<std::size_t>(
            e[static_cast<std::size_t>(n.feature)] < n.value ? n.left : n.right);
        depth += 1.0;
    }
    return depth + average_path_length(tree.nodes[node].size);
}

}  // namespace

void IsolationForestConfig::validate() const {
    if (n_trees < 1) throw ValidationError("iforest config: n_trees must be >= 1");
    if (subsample_size < 2) throw ValidationError("iforest config: subsample_size must be >= 2");
    if (!(contamination > 0.0 && contamination <= 0.5))
        throw ValidationError("iforest config: contamination must lie in (0, 0.5]");
}

double average_path_length(std::size_t n) {
    if (n < 2) return 0.0;
    const double nd = static_cast<double>(n);
    const double harmonic = std::log(nd - 1.0) + kEulerMascheroni;
    return 2.0 * harmonic - 2.0 * (nd - 1.0) / nd;
}

IsolationForestModel iforest_train(const std::vector<std::vector<double>>& embeddings,
                                   const IsolationForestConfig& config) {
    config.validate();
    if (embeddings.size() < config.subsample_size)
        throw ValidationError("iforest_train: fewer embeddings than subsample_size");
    const std::size_t dim = embeddings[0].size();
    if (dim == 0) throw ValidationError("iforest_train: empty embedding vectors");
    for (const auto& e : embeddings) {
        if (e.size() != dim) throw ValidationError("iforest_train: ragged embedding lengths");
    }

    IsolationForestModel model;
    model.embedding_dim = static_cast<std::uint32_t>(dim);
    model.subsample_size = config.subsample_size;
    model.signal_on_inlier = config.signal_on_inlier;
    model.trees.reserve(config.n_trees);

    const std::uint32_t cap = height_cap(config.subsample_size);
    const std::uint64_t base = seed_stream(config.seed, streams::kIsolationTree);
    for (std::uint32_t t = 0; t < config.n_trees; ++t) {
        Rng rng(seed_stream(base, t));
        const auto sample = rng.pick_distinct(embeddings.size(), config.subsample_size);
        IsoBuilder builder{embeddings, static_cast<std::uint32_t>(dim), cap, rng, {}};
        builder.build(sample, 0);
        model.trees.push_back(std::move(builder.tree));
    }

    std::vector<double> scores;
    scores.reserve(embeddings.size());
    for (const auto& e : embeddings) scores.push_back(iforest_score(model, e));
    std::sort(scores.begin(), scores.end());
    const double q = (1.0 - config.contamination) * static_cast<double>(scores.size());
    std::size_t pos = static_cast<std::size_t>(std::ceil(q));
    pos = std::min(std::max<std::size_t>(pos, 1), scores.size());
    model.score_threshold = scores[pos - 1];
    return model;
}

double iforest_score(const IsolationForestModel& model, const std::vector<double>& e) {
    if (e.size() != model.embedding_dim) throw ValidationError("iforest_score: length mismatch");
    if (model.trees.empty()) throw ValidationError("iforest_score: empty model");
    double total = 0.0;
    for (const auto& tree : model.trees) total += path_length(tree, e);
    const double mean = total / static_cast<double>(model.trees.size());
    return std::pow(2.0, -mean / average_path_length(model.subsample_size));
}

bool iforest_is_anomalous(const IsolationForestModel& model, const std::vector<double>& e) {
    return iforest_score(model, e) > model.score_threshold;
}

bool iforest_signal(const IsolationForestModel& model, const std::vector<double>& e) {
    const bool anomalous = iforest_is_anomalous(model, e);
    return model.signal_on_inlier ? !anomalous : anomalous;
}

}  // namespace sentinel
