#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "sentinel/search.hpp"

using namespace sentinel;

namespace {

bool on_grid(double value, double lo, double step) {
    const double steps = (value - lo) / step;
    return std::abs(steps - std::round(steps)) < 1e-9;
}

bool is_choice(std::uint32_t v, const std::vector<std::uint32_t>& choices) {
    return std::find(choices.begin(), choices.end(), v) != choices.end();
}

}  // namespace

TEST_CASE("sampled parameters always fall inside the space") {
    const SearchSpace space;  // defaults
    Rng rng(99);
    for (int i = 0; i < 500; ++i) {
        const TrialParams p = sample_params(space, rng);
        CHECK(is_choice(static_cast<std::uint32_t>(p.hidden_sizes.size()), space.layer_counts));
        for (const std::uint32_t h : p.hidden_sizes) CHECK(is_choice(h, space.hidden_choices));
        CHECK(p.dropout >= space.dropout_min - 1e-12);
        CHECK(p.dropout <= space.dropout_max + 1e-12);
        CHECK(on_grid(p.dropout, space.dropout_min, space.dropout_step));
        CHECK(p.m >= space.m_min);
        CHECK(p.m <= space.m_max);
        CHECK(is_choice(p.k, space.k_choices));
        CHECK(p.teacher_trees >= space.teacher_trees_min);
        CHECK(p.teacher_trees <= space.teacher_trees_max);
        CHECK((p.teacher_trees - space.teacher_trees_min) % space.teacher_trees_step == 0);
        CHECK(p.min_samples_leaf >= space.min_leaf_min);
        CHECK(p.min_samples_leaf <= space.min_leaf_max);
        CHECK((p.min_samples_leaf - space.min_leaf_min) % space.min_leaf_step == 0);
    }
}

TEST_CASE("sampling covers the space rather than collapsing to one point") {
    const SearchSpace space;
    Rng rng(3);
    std::set<std::size_t> layer_counts;
    std::set<std::uint32_t> ks;
    std::set<double> dropouts;
    for (int i = 0; i < 400; ++i) {
        const TrialParams p = sample_params(space, rng);
        layer_counts.insert(p.hidden_sizes.size());
        ks.insert(p.k);
        dropouts.insert(p.dropout);
    }
    CHECK(layer_counts.size() == 2);
    CHECK(ks.size() == 4);
    CHECK(dropouts.size() >= 10);
}

TEST_CASE("single-point ranges are honored without a step") {
    SearchSpace space;
    space.dropout_min = space.dropout_max = 0.3;
    space.dropout_step = 0.0;  // irrelevant when the range is one point
    space.m_min = space.m_max = 7;
    space.teacher_trees_min = space.teacher_trees_max = 40;
    space.min_leaf_min = space.min_leaf_max = 5;
    space.layer_counts = {2};
    space.hidden_choices = {64};
    space.k_choices = {25};
    Rng rng(1);
    const TrialParams p = sample_params(space, rng);
    CHECK(p.dropout == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(p.m == 7);
    CHECK(p.teacher_trees == 40);
    CHECK(p.min_samples_leaf == 5);
    CHECK(p.hidden_sizes == std::vector<std::uint32_t>{64, 64});
    CHECK(p.k == 25);
}

TEST_CASE("random_search is deterministic in the seed") {
    const SearchSpace space;
    const TrialObjective obj = [](const TrialParams& p, std::uint64_t) {
        return static_cast<double>(p.m) + 0.01 * static_cast<double>(p.k);
    };
    const SearchOutcome a = random_search(space, obj, 12, 77);
    const SearchOutcome b = random_search(space, obj, 12, 77);
    REQUIRE(a.log.size() == 12);
    REQUIRE(b.log.size() == 12);
    CHECK(a.best_index == b.best_index);
    CHECK(a.best_objective == b.best_objective);
    CHECK(a.best_params == b.best_params);
    for (std::size_t i = 0; i < 12; ++i) {
        CHECK(a.log[i].params == b.log[i].params);
        CHECK(a.log[i].objective == b.log[i].objective);
        CHECK(a.log[i].trial_seed == b.log[i].trial_seed);
    }
    const SearchOutcome c = random_search(space, obj, 12, 78);
    bool any_different = false;
    for (std::size_t i = 0; i < 12; ++i) {
        any_different = any_different || !(c.log[i].params == a.log[i].params);
    }
    CHECK(any_different);
}

TEST_CASE("argmax is returned and ties keep the earliest trial") {
    const SearchSpace space;
    SUBCASE("constant objective picks trial 0") {
        const SearchOutcome out = random_search(space, [](const TrialParams&, std::uint64_t) { return 1.0; }, 9, 5);
        CHECK(out.best_index == 0);
        CHECK(out.best_objective == 1.0);
        CHECK(out.best_params == out.log[0].params);
    }
    SUBCASE("coarse objective with collisions") {
        const TrialObjective obj = [](const TrialParams& p, std::uint64_t) {
            return static_cast<double>(p.m % 3);
        };
        const SearchOutcome out = random_search(space, obj, 30, 11);
        std::size_t expected = 0;
        double best = -1.0;
        for (const TrialRecord& r : out.log) {
            if (r.objective > best) {
                best = r.objective;
                expected = r.index;
            }
        }
        CHECK(out.best_index == expected);
        CHECK(out.best_objective == best);
        for (const TrialRecord& r : out.log) CHECK(out.best_objective >= r.objective);
    }
}

TEST_CASE("trials=1 returns that single configuration") {
    const SearchSpace space;
    const SearchOutcome out =
        random_search(space, [](const TrialParams& p, std::uint64_t) { return p.dropout; }, 1, 123);
    REQUIRE(out.log.size() == 1);
    CHECK(out.best_index == 0);
    CHECK(out.best_params == out.log[0].params);
    CHECK(out.best_objective == out.log[0].objective);
}

TEST_CASE("trial seeds are distinct and passed to the objective") {
    const SearchSpace space;
    std::vector<std::uint64_t> seen;
    const TrialObjective obj = [&seen](const TrialParams&, std::uint64_t trial_seed) {
        seen.push_back(trial_seed);
        return 0.0;
    };
    const SearchOutcome out = random_search(space, obj, 16, 2024);
    REQUIRE(seen.size() == 16);
    for (std::size_t i = 0; i < 16; ++i) CHECK(out.log[i].trial_seed == seen[i]);
    std::set<std::uint64_t> unique(seen.begin(), seen.end());
    CHECK(unique.size() == 16);
}

TEST_CASE("invalid spaces and arguments are rejected") {
    const SearchSpace good;
    const TrialObjective obj = [](const TrialParams&, std::uint64_t) { return 0.0; };
    CHECK_THROWS_AS(random_search(good, obj, 0, 1), ValidationError);
    CHECK_THROWS_AS(random_search(good, TrialObjective{}, 3, 1), ValidationError);
    {
        SearchSpace s;
        s.layer_counts.clear();
        CHECK_THROWS_AS(random_search(s, obj, 3, 1), ValidationError);
    }
    {
        SearchSpace s;
        s.dropout_min = 0.5;
        s.dropout_max = 0.4;
        CHECK_THROWS_AS(random_search(s, obj, 3, 1), ValidationError);
    }
    {
        SearchSpace s;
        s.dropout_step = 0.0;
        CHECK_THROWS_AS(random_search(s, obj, 3, 1), ValidationError);
    }
    {
        SearchSpace s;
        s.m_min = 5;
        s.m_max = 4;
        CHECK_THROWS_AS(random_search(s, obj, 3, 1), ValidationError);
    }
    {
        SearchSpace s;
        s.k_choices = {25, 0};
        CHECK_THROWS_AS(random_search(s, obj, 3, 1), ValidationError);
    }
    {
        SearchSpace s;
        s.trials = 0;
        CHECK_THROWS_AS(s.validate(), ValidationError);
    }
    const TrialObjective nan_obj = [](const TrialParams&, std::uint64_t) {
        return std::numeric_limits<double>::quiet_NaN();
    };
    CHECK_THROWS_AS(random_search(good, nan_obj, 2, 1), ValidationError);
}
