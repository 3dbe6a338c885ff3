#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "sentinel/features.hpp"
#include "sentinel/teacher.hpp"

using namespace sentinel;

namespace {

SparseBinaryVector sv(std::uint32_t dim, std::vector<std::uint32_t> idx) {
    SparseBinaryVector x;
    x.dim = dim;
    x.active = std::move(idx);
    return x;
}

// feature 0 mirrors the label exactly; features 1..d-1 are coin flips
LabeledDataset separable_by_feature0(std::size_t n, std::uint32_t d, std::uint64_t seed) {
    LabeledDataset ds;
    ds.dim = d;
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        const bool pos = rng.bernoulli(0.4);
        SparseBinaryVector x;
        x.dim = d;
        if (pos) x.active.push_back(0);
        for (std::uint32_t f = 1; f < d; ++f) {
            if (rng.bernoulli(0.5)) x.active.push_back(f);
        }
        ds.samples.push_back(std::move(x));
        ds.labels.push_back(pos ? 1.0 : 0.0);
    }
    return ds;
}

RandomForestModel leaf_forest(std::uint32_t dim, std::vector<double> probs) {
    RandomForestModel m;
    m.input_dim = dim;
    for (const double p : probs) {
        DecisionTree t;
        TreeNode leaf;
        leaf.prob = p;
        t.nodes.push_back(leaf);
        m.trees.push_back(t);
    }
    return m;
}

double gini(double wpos, double wneg) {
    const double tot = wpos + wneg;
    if (tot == 0.0) return 0.0;
    const double p = wpos / tot;
    return 2.0 * p * (1.0 - p);
}

}  // namespace

TEST_CASE("rf_train: perfect separator becomes a depth-1 stump in every tree") {
    const auto ds = separable_by_feature0(200, 10, 3);

    // oracle: exhaustively confirm feature 0 has the strictly largest
    // impurity decrease at the root
    double parent_pos = 0.0;
    double parent_neg = 0.0;
    for (const double y : ds.labels) (y == 1.0 ? parent_pos : parent_neg) += 1.0;
    const double parent = gini(parent_pos, parent_neg);
    double best_gain = -1.0;
    std::uint32_t best_feature = 99;
    for (std::uint32_t f = 0; f < 10; ++f) {
        double lp = 0.0;
        double ln = 0.0;
        double rp = 0.0;
        double rn = 0.0;
        for (std::size_t i = 0; i < ds.size(); ++i) {
            const bool has = ds.samples[i].contains(f);
            if (ds.labels[i] == 1.0) {
                (has ? rp : lp) += 1.0;
            } else {
                (has ? rn : ln) += 1.0;
            }
        }
        const double wl = lp + ln;
        const double wr = rp + rn;
        const double gain = parent - (wl * gini(lp, ln) + wr * gini(rp, rn)) / (wl + wr);
        if (gain > best_gain) {
            best_gain = gain;
            best_feature = f;
        }
    }
    REQUIRE(best_feature == 0);

    RandomForestConfig cfg;
    cfg.n_trees = 5;
    cfg.min_samples_leaf = 1;
    cfg.features_per_split = 10;
    cfg.bootstrap = false;
    cfg.seed = 1;
    const auto model = rf_train(ds, cfg);
    for (const auto& tree : model.trees) {
        REQUIRE(tree.nodes.size() == 3);
        CHECK(tree.nodes[0].feature == 0);
        const auto& left = tree.nodes[static_cast<std::size_t>(tree.nodes[0].left)];
        const auto& right = tree.nodes[static_cast<std::size_t>(tree.nodes[0].right)];
        CHECK(left.is_leaf());
        CHECK(right.is_leaf());
        CHECK(left.prob == 0.0);
        CHECK(right.prob == 1.0);
    }

    std::size_t correct = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const int pred = rf_predict_proba(model, ds.samples[i]) >= 0.5 ? 1 : 0;
        if (pred == (ds.labels[i] == 1.0 ? 1 : 0)) ++correct;
    }
    CHECK(correct == ds.size());
}

TEST_CASE("rf_train: entropy criterion also nails the separable dataset") {
    const auto ds = separable_by_feature0(150, 8, 5);
    RandomForestConfig cfg;
    cfg.n_trees = 3;
    cfg.criterion = SplitCriterion::entropy;
    cfg.min_samples_leaf = 1;
    cfg.features_per_split = 8;
    cfg.bootstrap = false;
    const auto model = rf_train(ds, cfg);
    for (const auto& tree : model.trees) CHECK(tree.nodes[0].feature == 0);
}

TEST_CASE("rf_train: single-class dataset gives one-leaf trees") {
    LabeledDataset ds;
    ds.dim = 6;
    for (int i = 0; i < 30; ++i) {
        ds.samples.push_back(sv(6, {static_cast<std::uint32_t>(i % 6)}));
        ds.labels.push_back(0.0);
    }
    RandomForestConfig cfg;
    cfg.n_trees = 4;
    cfg.min_samples_leaf = 1;
    const auto model = rf_train(ds, cfg);
    for (const auto& tree : model.trees) {
        REQUIRE(tree.nodes.size() == 1);
        CHECK(tree.nodes[0].is_leaf());
        CHECK(tree.nodes[0].prob == 0.0);
    }
}

TEST_CASE("rf_train: determinism and seed sensitivity") {
    const auto ds = separable_by_feature0(120, 12, 9);
    RandomForestConfig cfg;
    cfg.n_trees = 6;
    cfg.min_samples_leaf = 2;
    cfg.features_per_split = 3;
    cfg.seed = 42;
    const auto a = rf_train(ds, cfg);
    const auto b = rf_train(ds, cfg);
    CHECK(a.trees == b.trees);

    cfg.seed = 43;
    const auto c = rf_train(ds, cfg);
    CHECK_FALSE(a.trees == c.trees);
}

TEST_CASE("rf_train: stopping rules") {
    const auto ds = separable_by_feature0(100, 6, 11);

    RandomForestConfig no_split;
    no_split.n_trees = 2;
    no_split.min_samples_leaf = 100;  // neither child can satisfy this
    no_split.bootstrap = false;
    const auto flat = rf_train(ds, no_split);
    for (const auto& tree : flat.trees) CHECK(tree.nodes.size() == 1);

    RandomForestConfig depth0;
    depth0.n_trees = 2;
    depth0.min_samples_leaf = 1;
    depth0.max_depth = 0;
    const auto stumps = rf_train(ds, depth0);
    for (const auto& tree : stumps.trees) CHECK(tree.nodes.size() == 1);

    RandomForestConfig depth1;
    depth1.n_trees = 2;
    depth1.min_samples_leaf = 1;
    depth1.max_depth = 1;
    depth1.features_per_split = 6;
    const auto shallow = rf_train(ds, depth1);
    for (const auto& tree : shallow.trees) CHECK(tree.nodes.size() <= 3);
}

TEST_CASE("rf_train: positive class weight shifts leaf probabilities") {
    LabeledDataset ds;
    ds.dim = 4;
    for (int i = 0; i < 10; ++i) {
        ds.samples.push_back(sv(4, {}));
        ds.labels.push_back(i == 0 ? 1.0 : 0.0);
    }
    RandomForestConfig cfg;
    cfg.n_trees = 1;
    cfg.max_depth = 0;
    cfg.pos_class_weight = 9.0;
    cfg.bootstrap = false;
    const auto model = rf_train(ds, cfg);
    CHECK(model.trees[0].nodes[0].prob == doctest::Approx(0.5));
}

TEST_CASE("rf_train: rejects empty or smoothed datasets") {
    LabeledDataset empty;
    empty.dim = 3;
    CHECK_THROWS_AS(rf_train(empty, RandomForestConfig{}), ValidationError);

    LabeledDataset smooth;
    smooth.dim = 3;
    smooth.samples.push_back(sv(3, {0}));
    smooth.labels.push_back(0.4);
    CHECK_THROWS_AS(rf_train(smooth, RandomForestConfig{}), ValidationError);
}

TEST_CASE("rf_predict_proba: means, identical trees, dimension checks") {
    const auto hand = leaf_forest(5, {1.0, 0.0, 0.5});
    CHECK(rf_predict_proba(hand, sv(5, {1})) == doctest::Approx(0.5));

    const auto ones = leaf_forest(5, {1.0, 1.0});
    CHECK(rf_predict_proba(ones, sv(5, {})) == 1.0);

    const auto ds = separable_by_feature0(100, 8, 2);
    RandomForestConfig cfg;
    cfg.n_trees = 4;
    cfg.min_samples_leaf = 1;
    cfg.features_per_split = 8;
    cfg.bootstrap = false;  // all trees identical
    const auto model = rf_train(ds, cfg);
    auto single = model;
    single.trees.resize(1);
    for (const auto& x : ds.samples)
        CHECK(rf_predict_proba(model, x) == rf_predict_proba(single, x));

    CHECK_THROWS_AS(rf_predict_proba(model, sv(9, {})), ValidationError);
}

TEST_CASE("rf_predict_proba: invariant under tree order permutation") {
    const auto ds = separable_by_feature0(80, 10, 7);
    RandomForestConfig cfg;
    cfg.n_trees = 7;
    cfg.min_samples_leaf = 2;
    cfg.features_per_split = 3;
    const auto model = rf_train(ds, cfg);
    auto shuffled = model;
    std::reverse(shuffled.trees.begin(), shuffled.trees.end());
    std::swap(shuffled.trees[0], shuffled.trees[3]);
    for (const auto& x : ds.samples) {
        CHECK(rf_predict_proba(model, x) ==
              doctest::Approx(rf_predict_proba(shuffled, x)).epsilon(1e-15));
    }
}

TEST_CASE("smooth_labels: endpoints and hand value") {
    LabeledDataset ds;
    ds.dim = 4;
    ds.samples.push_back(sv(4, {0}));
    ds.samples.push_back(sv(4, {1, 2}));
    ds.labels = {1.0, 0.0};

    const auto teacher = leaf_forest(4, {0.6});

    const auto same = smooth_labels(ds, teacher, 0.0);
    CHECK(same.labels == ds.labels);

    const auto all_teacher = smooth_labels(ds, teacher, 1.0);
    CHECK(all_teacher.labels[0] == doctest::Approx(0.6));
    CHECK(all_teacher.labels[1] == doctest::Approx(0.6));

    const auto half = smooth_labels(ds, teacher, 0.5);
    CHECK(half.labels[0] == doctest::Approx(0.8));  // (1-.5)*1 + .5*.6
    CHECK(half.labels[1] == doctest::Approx(0.3));

    for (std::size_t i = 0; i < ds.size(); ++i)
        CHECK(half.samples[i].active == ds.samples[i].active);
}

TEST_CASE("smooth_labels: convex combination bounds on a trained teacher") {
    const auto ds = separable_by_feature0(120, 10, 13);
    RandomForestConfig cfg;
    cfg.n_trees = 5;
    cfg.min_samples_leaf = 5;
    cfg.features_per_split = 3;
    const auto teacher = rf_train(ds, cfg);
    const auto smoothed = smooth_labels(ds, teacher, 0.37);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const double y = ds.labels[i];
        const double fs = rf_predict_proba(teacher, ds.samples[i]);
        CHECK(smoothed.labels[i] >= std::min(y, fs) - 1e-12);
        CHECK(smoothed.labels[i] <= std::max(y, fs) + 1e-12);
        CHECK(smoothed.labels[i] >= 0.0);
        CHECK(smoothed.labels[i] <= 1.0);
    }
}

TEST_CASE("smooth_labels: affine in lambda") {
    LabeledDataset ds;
    ds.dim = 3;
    ds.samples.push_back(sv(3, {0, 2}));
    ds.labels = {1.0};
    const auto teacher = leaf_forest(3, {0.25});
    for (const double lam : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        const auto s = smooth_labels(ds, teacher, lam);
        CHECK(s.labels[0] == doctest::Approx((1.0 - lam) * 1.0 + lam * 0.25).epsilon(1e-15));
    }
}

TEST_CASE("smooth_labels: validation") {
    LabeledDataset ds;
    ds.dim = 3;
    ds.samples.push_back(sv(3, {0}));
    ds.labels = {1.0};
    const auto teacher = leaf_forest(3, {0.5});
    CHECK_THROWS_AS(smooth_labels(ds, teacher, -0.1), ValidationError);
    CHECK_THROWS_AS(smooth_labels(ds, teacher, 1.1), ValidationError);

    LabeledDataset frac = ds;
    frac.labels = {0.7};
    CHECK_THROWS_AS(smooth_labels(frac, teacher, 0.5), ValidationError);
}
