#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "sentinel/features.hpp"

using namespace sentinel;

namespace {

SparseBinaryVector make_vec(std::uint32_t dim, std::vector<std::uint32_t> idx) {
    SparseBinaryVector x;
    x.dim = dim;
    x.active = std::move(idx);
    x.validate();
    return x;
}

Perturbation make_delta(std::uint32_t dim,
                        std::vector<std::pair<std::uint32_t, std::int8_t>> entries) {
    Perturbation d;
    d.dim = dim;
    d.entries = std::move(entries);
    d.validate();
    return d;
}

}  // namespace

TEST_CASE("parse: basic line") {
    std::istringstream in("#d=4\n1 0:1 3:1\n");
    const auto ds = parse_sparse_stream(in);
    CHECK(ds.dim == 4);
    REQUIRE(ds.size() == 1);
    CHECK(ds.labels[0] == 1.0);
    CHECK(ds.samples[0].active == std::vector<std::uint32_t>{0, 3});
}

TEST_CASE("parse: label with no indices is the all-zeros sample") {
    std::istringstream in("#d=3\n0\n");
    const auto ds = parse_sparse_stream(in);
    REQUIRE(ds.size() == 1);
    CHECK(ds.labels[0] == 0.0);
    CHECK(ds.samples[0].active.empty());
}

TEST_CASE("parse: non-increasing indices rejected") {
    std::istringstream in("1 3:1 2:1\n");
    CHECK_THROWS_AS(parse_sparse_stream(in), FormatError);
    std::istringstream in2("1 3:1 3:1\n");
    CHECK_THROWS_AS(parse_sparse_stream(in2), FormatError);
}

TEST_CASE("parse: errors carry line numbers") {
    std::istringstream in("#d=4\n1 0:1\n1 5:1\n");
    try {
        parse_sparse_stream(in);
        FAIL("expected a format error");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
}

TEST_CASE("parse: malformed tokens rejected") {
    std::istringstream a("1 0:2\n");
    CHECK_THROWS_AS(parse_sparse_stream(a), FormatError);
    std::istringstream b("x 0:1\n");
    CHECK_THROWS_AS(parse_sparse_stream(b), FormatError);
    std::istringstream c("1.5 0:1\n");
    CHECK_THROWS_AS(parse_sparse_stream(c), FormatError);
    std::istringstream d("1 a:1\n");
    CHECK_THROWS_AS(parse_sparse_stream(d), FormatError);
}

TEST_CASE("parse: smoothed labels accepted") {
    std::istringstream in("#d=2\n0.25 1:1\n0.875\n");
    const auto ds = parse_sparse_stream(in);
    CHECK(ds.labels == std::vector<double>{0.25, 0.875});
    CHECK_FALSE(ds.is_discrete());
}

TEST_CASE("parse: dimension inferred when header absent") {
    std::istringstream in("1 0:1 7:1\n0 2:1\n");
    const auto ds = parse_sparse_stream(in);
    CHECK(ds.dim == 8);
}

TEST_CASE("parse: round tags") {
    std::istringstream in("#d=4\n1 0:1 # round=2\n0 1:1 # round=-1\n");
    const auto ds = parse_sparse_stream(in);
    CHECK(ds.rounds == std::vector<std::int32_t>{2, -1});

    std::istringstream mixed("#d=4\n1 0:1 # round=2\n0 1:1\n");
    CHECK_THROWS_AS(parse_sparse_stream(mixed), FormatError);
}

TEST_CASE("write/parse round-trip is the identity") {
    const auto ds = synth_generate({60, 40, 0.3, 8, 0.05}, 11);
    std::ostringstream out;
    write_sparse_stream(out, ds);
    std::istringstream in(out.str());
    const auto back = parse_sparse_stream(in);
    CHECK(back.dim == ds.dim);
    REQUIRE(back.size() == ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        CHECK(back.labels[i] == ds.labels[i]);
        CHECK(back.samples[i].active == ds.samples[i].active);
    }

    LabeledDataset tagged = ds;
    tagged.rounds.assign(ds.size(), 0);
    for (std::size_t i = 0; i < ds.size(); ++i)
        tagged.rounds[i] = static_cast<std::int32_t>(i % 4);
    std::ostringstream out2;
    write_sparse_stream(out2, tagged);
    std::istringstream in2(out2.str());
    CHECK(parse_sparse_stream(in2).rounds == tagged.rounds);
}

TEST_CASE("write: smoothed labels round-trip bit-exactly") {
    LabeledDataset ds;
    ds.dim = 3;
    ds.samples = {make_vec(3, {0}), make_vec(3, {1, 2})};
    ds.labels = {1.0 / 3.0, 0.2 + 1e-17};
    std::ostringstream out;
    write_sparse_stream(out, ds);
    std::istringstream in(out.str());
    const auto back = parse_sparse_stream(in);
    CHECK(back.labels[0] == ds.labels[0]);
    CHECK(back.labels[1] == ds.labels[1]);
}

TEST_CASE("write: empty dataset emits header only") {
    LabeledDataset ds;
    ds.dim = 5;
    std::ostringstream out;
    write_sparse_stream(out, ds);
    CHECK(out.str() == "#d=5\n");
}

TEST_CASE("apply_perturbation: zero perturbation is identity") {
    const auto x = make_vec(3, {0, 2});
    const auto out = apply_perturbation(x, make_delta(3, {}));
    CHECK(out.active == x.active);
}

TEST_CASE("apply_perturbation: add and remove") {
    const auto x = make_vec(3, {0, 2});
    const auto out = apply_perturbation(x, make_delta(3, {{0, -1}, {1, +1}}));
    CHECK(out.active == std::vector<std::uint32_t>{1, 2});
}

TEST_CASE("apply_perturbation: saturation clips") {
    const auto x = make_vec(2, {0});
    const auto out = apply_perturbation(x, make_delta(2, {{0, +1}, {1, -1}}));
    CHECK(out.active == std::vector<std::uint32_t>{0});
}

TEST_CASE("apply_perturbation: dimension mismatch throws") {
    const auto x = make_vec(3, {0});
    CHECK_THROWS_AS(apply_perturbation(x, make_delta(4, {})), ValidationError);
}

TEST_CASE("apply_perturbation distance never exceeds perturbation size") {
    Rng r(77);
    for (int trial = 0; trial < 50; ++trial) {
        const std::uint32_t dim = 30;
        SparseBinaryVector x;
        x.dim = dim;
        for (std::uint32_t i = 0; i < dim; ++i)
            if (r.bernoulli(0.3)) x.active.push_back(i);
        Perturbation d;
        d.dim = dim;
        for (std::uint32_t i = 0; i < dim; ++i) {
            if (r.bernoulli(0.2)) d.entries.push_back({i, r.bernoulli(0.5) ? std::int8_t{1} : std::int8_t{-1}});
        }
        const auto out = apply_perturbation(x, d);
        out.validate();
        CHECK(hamming_distance(x, out) <= d.nonzero_count());
    }
}

TEST_CASE("hamming_distance basics") {
    CHECK(hamming_distance(make_vec(5, {0, 1}), make_vec(5, {0, 1})) == 0);
    CHECK(hamming_distance(make_vec(5, {0, 1}), make_vec(5, {1, 2})) == 2);
    CHECK(hamming_distance(make_vec(5, {}), make_vec(5, {0, 1, 2})) == 3);
    CHECK_THROWS_AS(hamming_distance(make_vec(5, {}), make_vec(6, {})), ValidationError);
}

TEST_CASE("perturbation set/value semantics") {
    Perturbation d;
    d.dim = 10;
    d.set(4, +1);
    d.set(2, -1);
    CHECK(d.value_at(4) == 1);
    CHECK(d.value_at(2) == -1);
    CHECK(d.value_at(3) == 0);
    CHECK(d.nonzero_count() == 2);
    d.set(4, 0);
    CHECK(d.value_at(4) == 0);
    CHECK(d.nonzero_count() == 1);
    CHECK_THROWS_AS(d.set(10, 1), ValidationError);
    CHECK_THROWS_AS(d.set(0, 2), ValidationError);
}

TEST_CASE("synth: forced class ratio") {
    const auto ds = synth_generate({200, 1000, 0.1, 10, 0.02}, 7);
    std::size_t mal = 0;
    for (const double y : ds.labels) mal += y == 1.0 ? 1 : 0;
    CHECK(mal == 100);
    CHECK(ds.dim == 200);
    CHECK(ds.size() == 1000);
}

TEST_CASE("synth: zero noise stays inside signature blocks") {
    const auto ds = synth_generate({100, 200, 0.4, 6, 0.0}, 3);
    for (const auto& x : ds.samples) {
        for (const auto idx : x.active) CHECK(idx < 12);
    }
}

TEST_CASE("synth: deterministic in spec and seed") {
    const SynthSpec spec{150, 300, 0.25, 12, 0.03};
    const auto a = synth_generate(spec, 21);
    const auto b = synth_generate(spec, 21);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a.labels[i] == b.labels[i]);
        CHECK(a.samples[i].active == b.samples[i].active);
    }
    const auto c = synth_generate(spec, 22);
    bool any_diff = false;
    for (std::size_t i = 0; i < a.size() && !any_diff; ++i)
        any_diff = a.samples[i].active != c.samples[i].active || a.labels[i] != c.labels[i];
    CHECK(any_diff);
}

TEST_CASE("synth: signature statistics near planted rates") {
    const auto ds = synth_generate({80, 4000, 0.5, 8, 0.0}, 13);
    double mal_on = 0.0;
    double good_on = 0.0;
    std::size_t n_mal = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        std::size_t hits = 0;
        for (const auto idx : ds.samples[i].active)
            if (idx < 8) ++hits;
        if (ds.labels[i] == 1.0) {
            mal_on += static_cast<double>(hits) / 8.0;
            ++n_mal;
        } else {
            good_on += static_cast<double>(hits) / 8.0;
        }
    }
    CHECK(std::abs(mal_on / static_cast<double>(n_mal) - 0.9) < 0.02);
    CHECK(std::abs(good_on / static_cast<double>(ds.size() - n_mal) - 0.1) < 0.02);
}

TEST_CASE("synth: infeasible specs rejected") {
    CHECK_THROWS_AS(synth_generate({30, 100, 0.1, 10, 0.0}, 1), ValidationError);
    CHECK_THROWS_AS(synth_generate({200, 100, 0.0, 10, 0.0}, 1), ValidationError);
    CHECK_THROWS_AS(synth_generate({200, 100, 1.0, 10, 0.0}, 1), ValidationError);
    CHECK_THROWS_AS(synth_generate({200, 0, 0.5, 10, 0.0}, 1), ValidationError);
}

TEST_CASE("feature space: two-block default and category queries") {
    const auto fs = FeatureSpace::two_block(100);
    CHECK(fs.categories.size() == 2);
    CHECK(fs.category_of(0).name == "manifest");
    CHECK(fs.category_of(49).name == "manifest");
    CHECK(fs.category_of(50).name == "code");
    CHECK_FALSE(fs.removal_allowed(10));
    CHECK(fs.removal_allowed(60));
    CHECK_THROWS_AS(fs.category_of(100), ValidationError);
}

TEST_CASE("feature space: invalid layouts rejected") {
    FeatureSpace gap;
    gap.dim = 10;
    gap.categories = {{"a", 0, 4, Manipulability::add_only},
                      {"b", 5, 10, Manipulability::add_and_remove}};
    CHECK_THROWS_AS(gap.validate(), ValidationError);

    FeatureSpace dup;
    dup.dim = 10;
    dup.categories = {{"a", 0, 5, Manipulability::add_only},
                      {"a", 5, 10, Manipulability::add_only}};
    CHECK_THROWS_AS(dup.validate(), ValidationError);

    FeatureSpace shortcover;
    shortcover.dim = 10;
    shortcover.categories = {{"a", 0, 9, Manipulability::add_only}};
    CHECK_THROWS_AS(shortcover.validate(), ValidationError);
}

TEST_CASE("manipulability mask from space and categories") {
    const auto fs = FeatureSpace::two_block(10);
    const auto all = ManipulabilityMask::from_space(fs);
    CHECK(all.size() == 10);
    CHECK(all.add_only[0] == 1);
    CHECK(all.add_only[9] == 0);

    const auto code = ManipulabilityMask::from_categories(fs, {"code"});
    CHECK(code.indices == std::vector<std::uint32_t>{5, 6, 7, 8, 9});
    CHECK_THROWS_AS(ManipulabilityMask::from_categories(fs, {"nope"}), ValidationError);
}

TEST_CASE("train/val split is disjoint, covering, and deterministic") {
    const auto s = train_val_split(10, 3);
    CHECK(s.val.size() == 2);
    CHECK(s.train.size() == 8);
    std::set<std::size_t> seen(s.train.begin(), s.train.end());
    seen.insert(s.val.begin(), s.val.end());
    CHECK(seen.size() == 10);

    const auto s2 = train_val_split(10, 3);
    CHECK(s.train == s2.train);
    CHECK(s.val == s2.val);

    const auto tiny = train_val_split(2, 0);
    CHECK(tiny.val.size() == 1);
    CHECK(tiny.train.size() == 1);
    CHECK_THROWS_AS(train_val_split(1, 0), ValidationError);
}

TEST_CASE("subset gathers samples, labels, rounds") {
    auto ds = synth_generate({40, 20, 0.5, 5, 0.0}, 9);
    ds.rounds.resize(20);
    for (std::size_t i = 0; i < 20; ++i) ds.rounds[i] = static_cast<std::int32_t>(i);
    const auto sub = subset(ds, {3, 7, 19});
    CHECK(sub.size() == 3);
    CHECK(sub.labels[1] == ds.labels[7]);
    CHECK(sub.samples[2].active == ds.samples[19].active);
    CHECK(sub.rounds == std::vector<std::int32_t>{3, 7, 19});
    CHECK_THROWS_AS(subset(ds, {20}), ValidationError);
}
