#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "sentinel/anomaly.hpp"
#include "sentinel/cascade.hpp"
#include "sentinel/common.hpp"
#include "sentinel/features.hpp"
#include "sentinel/mlp.hpp"
#include "sentinel/model_io.hpp"
#include "sentinel/teacher.hpp"

using namespace sentinel;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path dir;

    explicit TempDir(const std::string& tag) {
        dir = fs::temp_directory_path() / ("sentinel_io_" + tag);
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~TempDir() { fs::remove_all(dir); }

    std::string file(const std::string& name) const { return (dir / name).string(); }
};

SparseBinaryVector vec(std::uint32_t dim, std::vector<std::uint32_t> active) {
    SparseBinaryVector x;
    x.dim = dim;
    x.active = std::move(active);
    return x;
}

std::vector<SparseBinaryVector> random_inputs(std::uint32_t dim, std::size_t n,
                                              std::uint64_t seed) {
    Rng rng(seed);
    std::vector<SparseBinaryVector> out;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::uint32_t> active;
        for (std::uint32_t f = 0; f < dim; ++f)
            if (rng.bernoulli(0.3)) active.push_back(f);
        out.push_back(vec(dim, std::move(active)));
    }
    return out;
}

MlpModel small_trained_mlp(std::uint64_t seed) {
    SynthSpec spec;
    spec.d = 30;
    spec.n_samples = 120;
    spec.malware_ratio = 0.3;
    spec.n_signature_features = 4;
    LabeledDataset ds = synth_generate(spec, seed);
    MlpConfig cfg;
    cfg.hidden_sizes = {16, 8};
    cfg.dropout_rate = 0.2;
    cfg.epochs = 3;
    cfg.seed = seed;
    return train(ds, cfg);
}

LabeledDataset forest_fixture() {
    LabeledDataset ds;
    ds.dim = 12;
    Rng rng(9);
    for (int i = 0; i < 80; ++i) {
        const bool pos = i % 2 == 0;
        std::vector<std::uint32_t> active;
        if (pos) active.push_back(0);
        for (std::uint32_t f = 1; f < 12; ++f)
            if (rng.bernoulli(0.25)) active.push_back(f);
        ds.samples.push_back(vec(12, std::move(active)));
        ds.labels.push_back(pos ? 1.0 : 0.0);
    }
    return ds;
}

IsolationForestModel iforest_fixture(std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::vector<double>> cloud(100, std::vector<double>(3));
    for (auto& e : cloud)
        for (double& v : e) v = rng.normal();
    IsolationForestConfig cfg;
    cfg.n_trees = 25;
    cfg.subsample_size = 32;
    cfg.seed = seed;
    return iforest_train(cloud, cfg);
}

// Corrupt one payload byte while leaving length intact.
void flip_byte(const std::string& path, std::size_t offset) {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    REQUIRE(f.good());
    f.seekg(static_cast<std::streamoff>(offset));
    char c = 0;
    f.read(&c, 1);
    c = static_cast<char>(c ^ 0x5a);
    f.seekp(static_cast<std::streamoff>(offset));
    f.write(&c, 1);
}

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    REQUIRE(f.good());
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

void dump(const std::string& path, const std::string& bytes) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    REQUIRE(f.good());
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::uint64_t read_trailer(const std::string& bytes) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
        v |= static_cast<std::uint64_t>(
                 static_cast<unsigned char>(bytes[bytes.size() - 8 + static_cast<std::size_t>(i)]))
             << (8 * i);
    return v;
}

void write_trailer(std::string& bytes, std::uint64_t v) {
    for (int i = 0; i < 8; ++i)
        bytes[bytes.size() - 8 + static_cast<std::size_t>(i)] =
            static_cast<char>((v >> (8 * i)) & 0xff);
}

}  // namespace

TEST_CASE("mlp models survive a save/load round trip bit-exactly") {
    TempDir tmp("mlp");
    MlpModel model = small_trained_mlp(7);
    const std::string path = tmp.file("net.model");
    save_mlp_model(path, model);
    MlpModel loaded = load_mlp_model(path);

    CHECK(loaded.input_dim == model.input_dim);
    CHECK(loaded.config.hidden_sizes == model.config.hidden_sizes);
    CHECK(loaded.config.dropout_rate == model.config.dropout_rate);
    CHECK(loaded.config.adam_beta1 == model.config.adam_beta1);
    CHECK(loaded.config.seed == model.config.seed);
    CHECK(loaded.best_val_f1 == model.best_val_f1);
    REQUIRE(loaded.layers.size() == model.layers.size());
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        CHECK(loaded.layers[l].w == model.layers[l].w);
        CHECK(loaded.layers[l].b == model.layers[l].b);
    }

    for (const SparseBinaryVector& x : random_inputs(model.input_dim, 100, 31)) {
        ForwardTrace a = forward(model, x, RunMode::infer);
        ForwardTrace b = forward(loaded, x, RunMode::infer);
        REQUIRE(a.logit == b.logit);
        REQUIRE(a.probability == b.probability);
    }
    CHECK(peek_model_kind(path) == "mlp");
}

TEST_CASE("random forests survive a save/load round trip") {
    TempDir tmp("forest");
    RandomForestConfig cfg;
    cfg.n_trees = 12;
    cfg.min_samples_leaf = 4;
    cfg.max_depth = 5;
    cfg.pos_class_weight = 2.5;
    cfg.seed = 3;
    RandomForestModel model = rf_train(forest_fixture(), cfg);

    const std::string path = tmp.file("teacher.model");
    save_forest_model(path, model);
    RandomForestModel loaded = load_forest_model(path);

    CHECK(loaded.input_dim == model.input_dim);
    CHECK(loaded.config.n_trees == model.config.n_trees);
    CHECK(loaded.config.max_depth == model.config.max_depth);
    CHECK(loaded.config.pos_class_weight == model.config.pos_class_weight);
    CHECK(loaded.trees == model.trees);
    for (const SparseBinaryVector& x : random_inputs(12, 50, 17))
        REQUIRE(rf_predict_proba(loaded, x) == rf_predict_proba(model, x));
    CHECK(peek_model_kind(path) == "forest");

    RandomForestConfig unbounded = cfg;
    unbounded.max_depth.reset();
    RandomForestModel deep = rf_train(forest_fixture(), unbounded);
    const std::string path2 = tmp.file("teacher2.model");
    save_forest_model(path2, deep);
    CHECK_FALSE(load_forest_model(path2).config.max_depth.has_value());
}

TEST_CASE("isolation forests survive a save/load round trip") {
    TempDir tmp("iforest");
    IsolationForestModel model = iforest_fixture(11);
    const std::string path = tmp.file("gate.model");
    save_iforest_model(path, model);
    IsolationForestModel loaded = load_iforest_model(path);

    CHECK(loaded.embedding_dim == model.embedding_dim);
    CHECK(loaded.subsample_size == model.subsample_size);
    CHECK(loaded.score_threshold == model.score_threshold);
    CHECK(loaded.signal_on_inlier == model.signal_on_inlier);
    CHECK(loaded.trees == model.trees);

    Rng rng(4);
    for (int i = 0; i < 50; ++i) {
        std::vector<double> e = {rng.normal() * 2, rng.normal() * 2, rng.normal() * 2};
        REQUIRE(iforest_score(loaded, e) == iforest_score(model, e));
        REQUIRE(iforest_signal(loaded, e) == iforest_signal(model, e));
    }
    CHECK(peek_model_kind(path) == "iforest");
}

TEST_CASE("cascade plans round-trip and materialize with aliasing intact") {
    TempDir tmp("cascade");
    MlpModel strong = small_trained_mlp(21);
    MlpModel weak = small_trained_mlp(22);

    // Gate trained on the weak net's embeddings of benign-ish inputs.
    std::vector<std::vector<double>> embeddings;
    for (const SparseBinaryVector& x : random_inputs(30, 80, 5))
        embeddings.push_back(forward(weak, x, RunMode::infer).embedding());
    IsolationForestConfig fc;
    fc.n_trees = 20;
    fc.subsample_size = 32;
    fc.seed = 6;
    IsolationForestModel gate = iforest_train(embeddings, fc);

    save_mlp_model(tmp.file("strong.model"), strong);
    save_mlp_model(tmp.file("weak.model"), weak);
    save_iforest_model(tmp.file("gate.model"), gate);

    CascadePlan plan;
    plan.slots = {CascadeSlotRef{-1, "strong.model"}, CascadeSlotRef{-1, "weak.model"},
                  CascadeSlotRef{0, ""}};
    ConditionSpec c1;
    c1.kind = Condition::Kind::threshold_ge;
    c1.slot = 1;
    c1.sigma = 0.78;
    ConditionSpec c2a;
    c2a.kind = Condition::Kind::threshold_ge;
    c2a.slot = 2;
    c2a.sigma = 0.5;
    ConditionSpec c2b;
    c2b.kind = Condition::Kind::inlier_gate;
    c2b.slot = 2;
    c2b.anomaly_path = "gate.model";
    ConditionSpec c2;
    c2.kind = Condition::Kind::composite;
    c2.combinator = Condition::Combinator::any_of;
    c2.children = {c2a, c2b};
    plan.conditions = {c1, c2};
    plan.threshold = 0.5;

    const std::string path = tmp.file("deeptrust.cascade");
    save_cascade_plan(path, plan);
    CHECK(peek_model_kind(path) == "cascade");
    CHECK(read_cascade_plan(path) == plan);

    CascadeConfig loaded = load_cascade(path);
    REQUIRE(loaded.slots.size() == 3);
    CHECK(loaded.slots[0].get() == loaded.slots[2].get());  // alias restored
    CHECK(loaded.threshold == 0.5);
    CHECK(loaded.conditions[0].sigma == 0.78);

    // The loaded cascade must agree with the directly wired one everywhere.
    auto strong_det = std::make_shared<MlpDetector>(std::make_shared<MlpModel>(strong));
    auto weak_det = std::make_shared<MlpDetector>(std::make_shared<MlpModel>(weak));
    CascadeConfig direct = build_deeptrust(
        strong_det, weak_det, std::make_shared<IsolationForestModel>(gate));
    for (const SparseBinaryVector& x : random_inputs(30, 200, 77)) {
        CascadeDecision a = evaluate(loaded, x);
        CascadeDecision b = evaluate(direct, x);
        REQUIRE(a.score == b.score);
        REQUIRE(a.deciding_stage == b.deciding_stage);
        REQUIRE(a.label == b.label);
    }
}

TEST_CASE("slots naming the same file share one loaded model") {
    TempDir tmp("shared");
    MlpModel m = small_trained_mlp(13);
    save_mlp_model(tmp.file("net.model"), m);

    CascadePlan plan;
    plan.slots = {CascadeSlotRef{-1, "net.model"}, CascadeSlotRef{-1, "net.model"}};
    ConditionSpec c;
    c.slot = 1;
    c.sigma = 0.9;
    plan.conditions = {c};
    const std::string path = tmp.file("pair.cascade");
    save_cascade_plan(path, plan);

    CascadeConfig loaded = load_cascade(path);
    CHECK(loaded.slots[0].get() == loaded.slots[1].get());
}

TEST_CASE("absolute slot paths are honored as written") {
    TempDir tmp("abs");
    MlpModel m = small_trained_mlp(14);
    const std::string model_path = tmp.file("net.model");
    save_mlp_model(model_path, m);

    TempDir other("abs_other");
    CascadePlan plan;
    plan.slots = {CascadeSlotRef{-1, model_path}};  // absolute, lives elsewhere
    const std::string path = other.file("solo.cascade");
    save_cascade_plan(path, plan);
    CascadeConfig loaded = load_cascade(path);
    CHECK(loaded.slots.size() == 1);
    CHECK(loaded.slots[0]->input_dim() == 30);
}

TEST_CASE("loading the wrong kind raises a dedicated error") {
    TempDir tmp("kinds");
    MlpModel m = small_trained_mlp(3);
    save_mlp_model(tmp.file("net.model"), m);
    save_iforest_model(tmp.file("gate.model"), iforest_fixture(2));

    CHECK_THROWS_AS(load_forest_model(tmp.file("net.model")), WrongModelKindError);
    CHECK_THROWS_AS(load_mlp_model(tmp.file("gate.model")), WrongModelKindError);
    CHECK_THROWS_AS(load_iforest_model(tmp.file("net.model")), WrongModelKindError);
    CHECK_THROWS_AS(read_cascade_plan(tmp.file("net.model")), WrongModelKindError);
    // The kind error is still a format error for coarse-grained handling.
    CHECK_THROWS_AS(load_forest_model(tmp.file("net.model")), FormatError);
}

TEST_CASE("corrupt, truncated, and alien files are rejected with format errors") {
    TempDir tmp("corrupt");
    const std::string path = tmp.file("net.model");
    save_mlp_model(path, small_trained_mlp(5));
    const std::string original = slurp(path);

    SUBCASE("flipped payload byte breaks the checksum") {
        flip_byte(path, original.size() / 2);
        CHECK_THROWS_AS(load_mlp_model(path), FormatError);
        CHECK_THROWS_WITH_AS(load_mlp_model(path),
                             doctest::Contains("checksum"), FormatError);
    }

    SUBCASE("mid-file truncation breaks the checksum") {
        dump(path, original.substr(0, original.size() / 2));
        CHECK_THROWS_AS(load_mlp_model(path), FormatError);
    }

    SUBCASE("header-level truncation is reported as truncation") {
        dump(path, original.substr(0, 10));
        CHECK_THROWS_WITH_AS(load_mlp_model(path),
                             doctest::Contains("truncated"), FormatError);
    }

    SUBCASE("bad magic is not a model file") {
        std::string bad = original;
        bad[0] = 'X';
        write_trailer(bad, fnv1a(std::string_view(bad.data(), bad.size() - 8)));
        dump(path, bad);
        CHECK_THROWS_WITH_AS(load_mlp_model(path), doctest::Contains("magic"), FormatError);
    }

    SUBCASE("future version is called out explicitly") {
        std::string bumped = original;
        bumped[8] = 2;  // version field follows the 8-byte magic
        write_trailer(bumped, fnv1a(std::string_view(bumped.data(), bumped.size() - 8)));
        dump(path, bumped);
        CHECK_THROWS_WITH_AS(load_mlp_model(path), doctest::Contains("version"), FormatError);
    }

    SUBCASE("trailing bytes after the payload are rejected") {
        std::string padded = original.substr(0, original.size() - 8);
        padded.append(4, '\0');
        padded.append(8, '\0');
        write_trailer(padded, fnv1a(std::string_view(padded.data(), padded.size() - 8)));
        dump(path, padded);
        CHECK_THROWS_WITH_AS(load_mlp_model(path), doctest::Contains("trailing"), FormatError);
    }

    SUBCASE("missing file is an io error") {
        CHECK_THROWS_AS(load_mlp_model(tmp.file("nowhere.model")), IoError);
        CHECK_THROWS_AS(peek_model_kind(tmp.file("nowhere.model")), IoError);
    }

    CHECK(read_trailer(original) == fnv1a(std::string_view(original.data(),
                                                           original.size() - 8)));
}

TEST_CASE("cascade plan validation rejects malformed wiring") {
    CascadePlan empty;
    CHECK_THROWS_AS(empty.validate(), ValidationError);

    CascadePlan forward_alias;
    forward_alias.slots = {CascadeSlotRef{1, ""}, CascadeSlotRef{-1, "net.model"}};
    forward_alias.conditions.resize(1);
    CHECK_THROWS_AS(forward_alias.validate(), ValidationError);

    CascadePlan self_alias;
    self_alias.slots = {CascadeSlotRef{0, ""}};
    CHECK_THROWS_AS(self_alias.validate(), ValidationError);

    CascadePlan pathless;
    pathless.slots = {CascadeSlotRef{-1, ""}};
    CHECK_THROWS_AS(pathless.validate(), ValidationError);

    CascadePlan miscounted;
    miscounted.slots = {CascadeSlotRef{-1, "a"}, CascadeSlotRef{-1, "b"}};
    CHECK_THROWS_AS(miscounted.validate(), ValidationError);
}

TEST_CASE("saving is deterministic byte-for-byte") {
    TempDir tmp("determinism");
    MlpModel m = small_trained_mlp(9);
    save_mlp_model(tmp.file("a.model"), m);
    save_mlp_model(tmp.file("b.model"), m);
    CHECK(slurp(tmp.file("a.model")) == slurp(tmp.file("b.model")));
}
