#include "sentinel/model_io.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <utility>

namespace sentinel {

namespace {

constexpr char kMagic[8] = {'S', 'N', 'T', 'L', 'M', 'O', 'D', 'L'};

void put_u8(std::string& out, std::uint8_t v) { out.push_back(static_cast<char>(v)); }

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

void put_str(std::string& out, const std::string& s) {
    put_u32(out, static_cast<std::uint32_t>(s.size()));
    out.append(s);
}

class ByteReader {
public:
    ByteReader(const std::string& buf, std::size_t pos, std::size_t end, std::string path)
        : buf_(buf), pos_(pos), end_(end), path_(std::move(path)) {}

    std::uint8_t u8() {
        need(1);
        return static_cast<std::uint8_t>(buf_[pos_++]);
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
        pos_ += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
        pos_ += 8;
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string str() {
        const std::uint32_t n = u32();
        need(n);
        std::string s = buf_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    bool exhausted() const { return pos_ == end_; }
    void expect_end() const {
        if (!exhausted())
            throw FormatError(path_ + ": trailing bytes after the model payload");
    }

private:
    void need(std::size_t n) const {
        if (pos_ + n > end_) throw FormatError(path_ + ": model file is truncated");
    }

    const std::string& buf_;
    std::size_t pos_;
    std::size_t end_;
    std::string path_;
};

void write_container(const std::string& path, const std::string& kind,
                     const std::string& payload) {
    std::string out;
    out.reserve(payload.size() + 64);
    out.append(kMagic, sizeof(kMagic));
    put_u32(out, kModelFormatVersion);
    put_str(out, kind);
    out.append(payload);
    put_u64(out, fnv1a(out));

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open " + path + " for writing");
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw IoError("failed writing " + path);
}

std::string read_file_bytes(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path + " for reading");
    std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (f.bad()) throw IoError("failed reading " + path);
    return buf;
}

/// Verifies magic, version, and checksum; returns a reader positioned at the
/// payload plus the kind string found in the file.
std::pair<ByteReader, std::string> open_container(const std::string& buf,
                                                  const std::string& path) {
    if (buf.size() < sizeof(kMagic) + 4 + 4 + 8)
        throw FormatError(path + ": model file is truncated");
    if (std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0)
        throw FormatError(path + ": not a model file (bad magic)");

    const std::uint64_t stored = [&] {
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(
                     static_cast<unsigned char>(buf[buf.size() - 8 + static_cast<std::size_t>(i)]))
                 << (8 * i);
        return v;
    }();
    const std::uint64_t computed = fnv1a(std::string_view(buf.data(), buf.size() - 8));
    if (stored != computed)
        throw FormatError(path + ": checksum mismatch, the model file is corrupt");

    ByteReader r(buf, sizeof(kMagic), buf.size() - 8, path);
    const std::uint32_t version = r.u32();
    if (version != kModelFormatVersion)
        throw FormatError(path + ": unsupported model format version " +
                          std::to_string(version) + " (expected " +
                          std::to_string(kModelFormatVersion) + ")");
    std::string kind = r.str();
    return {r, std::move(kind)};
}

ByteReader open_as(const std::string& buf, const std::string& path, const std::string& want) {
    auto [reader, kind] = open_container(buf, path);
    if (kind != want)
        throw WrongModelKindError(path + ": holds a \"" + kind + "\" model, expected \"" + want +
                                  "\"");
    return reader;
}

void put_condition(std::string& out, const ConditionSpec& c) {
    put_u8(out, static_cast<std::uint8_t>(c.kind));
    put_u64(out, c.slot);
    put_f64(out, c.sigma);
    put_str(out, c.anomaly_path);
    put_u8(out, static_cast<std::uint8_t>(c.combinator));
    put_u32(out, static_cast<std::uint32_t>(c.children.size()));
    for (const ConditionSpec& child : c.children) put_condition(out, child);
}

ConditionSpec read_condition(ByteReader& r, const std::string& path, int depth) {
    if (depth > 64) throw FormatError(path + ": condition tree is nested too deeply");
    ConditionSpec c;
    const std::uint8_t kind = r.u8();
    if (kind > static_cast<std::uint8_t>(Condition::Kind::composite))
        throw FormatError(path + ": unknown condition kind " + std::to_string(kind));
    c.kind = static_cast<Condition::Kind>(kind);
    c.slot = r.u64();
    c.sigma = r.f64();
    c.anomaly_path = r.str();
    const std::uint8_t comb = r.u8();
    if (comb > static_cast<std::uint8_t>(Condition::Combinator::all_of))
        throw FormatError(path + ": unknown condition combinator " + std::to_string(comb));
    c.combinator = static_cast<Condition::Combinator>(comb);
    const std::uint32_t n_children = r.u32();
    c.children.reserve(n_children);
    for (std::uint32_t i = 0; i < n_children; ++i)
        c.children.push_back(read_condition(r, path, depth + 1));
    return c;
}

std::string resolve_relative(const std::string& cascade_path, const std::string& ref) {
    std::filesystem::path p(ref);
    if (p.is_absolute()) return ref;
    return (std::filesystem::path(cascade_path).parent_path() / p).string();
}

Condition materialize_condition(
    const ConditionSpec& spec, const std::string& cascade_path,
    std::map<std::string, std::shared_ptr<const IsolationForestModel>>& forest_cache) {
    Condition c;
    c.kind = spec.kind;
    c.slot = static_cast<std::size_t>(spec.slot);
    c.sigma = spec.sigma;
    c.combinator = spec.combinator;
    if (spec.kind == Condition::Kind::inlier_gate) {
        if (spec.anomaly_path.empty())
            throw FormatError(cascade_path + ": inlier gate is missing its anomaly model path");
        const std::string resolved = resolve_relative(cascade_path, spec.anomaly_path);
        auto it = forest_cache.find(resolved);
        if (it == forest_cache.end()) {
            it = forest_cache
                     .emplace(resolved, std::make_shared<IsolationForestModel>(
                                            load_iforest_model(resolved)))
                     .first;
        }
        c.anomaly = it->second;
    }
    for (const ConditionSpec& child : spec.children)
        c.children.push_back(materialize_condition(child, cascade_path, forest_cache));
    return c;
}

}  // namespace

std::string peek_model_kind(const std::string& path) {
    const std::string buf = read_file_bytes(path);
    auto [reader, kind] = open_container(buf, path);
    return kind;
}

void save_mlp_model(const std::string& path, const MlpModel& model) {
    model.validate_shapes();
    std::string p;
    put_u32(p, model.input_dim);
    put_u32(p, static_cast<std::uint32_t>(model.config.hidden_sizes.size()));
    for (std::uint32_t h : model.config.hidden_sizes) put_u32(p, h);
    put_u8(p, static_cast<std::uint8_t>(model.config.activation));
    put_f64(p, model.config.leaky_slope);
    put_f64(p, model.config.dropout_rate);
    put_f64(p, model.config.pos_class_weight);
    put_f64(p, model.config.learning_rate);
    put_f64(p, model.config.weight_decay);
    put_f64(p, model.config.adam_beta1);
    put_f64(p, model.config.adam_beta2);
    put_f64(p, model.config.adam_epsilon);
    put_u32(p, model.config.epochs);
    put_u32(p, model.config.batch_size);
    put_u64(p, model.config.seed);
    put_f64(p, model.best_val_f1);
    put_u32(p, static_cast<std::uint32_t>(model.layers.size()));
    for (const Layer& l : model.layers) {
        put_u32(p, l.in);
        put_u32(p, l.out);
        for (double w : l.w) put_f64(p, w);
        for (double b : l.b) put_f64(p, b);
    }
    write_container(path, "mlp", p);
}

MlpModel load_mlp_model(const std::string& path) {
    const std::string buf = read_file_bytes(path);
    ByteReader r = open_as(buf, path, "mlp");

    MlpModel model;
    model.input_dim = r.u32();
    const std::uint32_t n_hidden = r.u32();
    model.config.hidden_sizes.clear();
    for (std::uint32_t i = 0; i < n_hidden; ++i) model.config.hidden_sizes.push_back(r.u32());
    const std::uint8_t act = r.u8();
    if (act > static_cast<std::uint8_t>(Activation::leaky_relu))
        throw FormatError(path + ": unknown activation tag " + std::to_string(act));
    model.config.activation = static_cast<Activation>(act);
    model.config.leaky_slope = r.f64();
    model.config.dropout_rate = r.f64();
    model.config.pos_class_weight = r.f64();
    model.config.learning_rate = r.f64();
    model.config.weight_decay = r.f64();
    model.config.adam_beta1 = r.f64();
    model.config.adam_beta2 = r.f64();
    model.config.adam_epsilon = r.f64();
    model.config.epochs = r.u32();
    model.config.batch_size = r.u32();
    model.config.seed = r.u64();
    model.best_val_f1 = r.f64();
    const std::uint32_t n_layers = r.u32();
    for (std::uint32_t i = 0; i < n_layers; ++i) {
        Layer l;
        l.in = r.u32();
        l.out = r.u32();
        const std::size_t n_w = static_cast<std::size_t>(l.in) * l.out;
        l.w.reserve(n_w);
        for (std::size_t j = 0; j < n_w; ++j) l.w.push_back(r.f64());
        l.b.reserve(l.out);
        for (std::uint32_t j = 0; j < l.out; ++j) l.b.push_back(r.f64());
        model.layers.push_back(std::move(l));
    }
    r.expect_end();

    // Fresh optimizer state: persisted models carry parameters, not momentum.
    for (const Layer& l : model.layers) {
        model.adam.m.push_back(Layer::zeros(l.in, l.out));
        model.adam.v.push_back(Layer::zeros(l.in, l.out));
    }
    model.validate_shapes();
    return model;
}

void save_forest_model(const std::string& path, const RandomForestModel& model) {
    std::string p;
    put_u32(p, model.input_dim);
    put_u32(p, model.config.n_trees);
    put_u8(p, static_cast<std::uint8_t>(model.config.criterion));
    put_u32(p, model.config.min_samples_leaf);
    put_u8(p, model.config.max_depth.has_value() ? 1 : 0);
    put_u32(p, model.config.max_depth.value_or(0));
    put_u32(p, model.config.features_per_split);
    put_f64(p, model.config.pos_class_weight);
    put_u8(p, model.config.bootstrap ? 1 : 0);
    put_u64(p, model.config.seed);
    put_u32(p, static_cast<std::uint32_t>(model.trees.size()));
    for (const DecisionTree& t : model.trees) {
        put_u32(p, static_cast<std::uint32_t>(t.nodes.size()));
        for (const TreeNode& n : t.nodes) {
            put_u32(p, static_cast<std::uint32_t>(n.feature));
            put_u32(p, static_cast<std::uint32_t>(n.left));
            put_u32(p, static_cast<std::uint32_t>(n.right));
            put_f64(p, n.prob);
        }
    }
    write_container(path, "forest", p);
}

RandomForestModel load_forest_model(const std::string& path) {
    const std::string buf = read_file_bytes(path);
    ByteReader r = open_as(buf, path, "forest");

    RandomForestModel model;
    model.input_dim = r.u32();
    model.config.n_trees = r.u32();
    const std::uint8_t crit = r.u8();
    if (crit > static_cast<std::uint8_t>(SplitCriterion::entropy))
        throw FormatError(path + ": unknown split criterion tag " + std::to_string(crit));
    model.config.criterion = static_cast<SplitCriterion>(crit);
    model.config.min_samples_leaf = r.u32();
    const bool has_depth = r.u8() != 0;
    const std::uint32_t depth = r.u32();
    model.config.max_depth = has_depth ? std::optional<std::uint32_t>(depth) : std::nullopt;
    model.config.features_per_split = r.u32();
    model.config.pos_class_weight = r.f64();
    model.config.bootstrap = r.u8() != 0;
    model.config.seed = r.u64();
    const std::uint32_t n_trees = r.u32();
    for (std::uint32_t t = 0; t < n_trees; ++t) {
        DecisionTree tree;
        const std::uint32_t n_nodes = r.u32();
        tree.nodes.reserve(n_nodes);
        for (std::uint32_t i = 0; i < n_nodes; ++i) {
            TreeNode n;
            n.feature = static_cast<std::int32_t>(r.u32());
            n.left = static_cast<std::int32_t>(r.u32());
            n.right = static_cast<std::int32_t>(r.u32());
            n.prob = r.f64();
            tree.nodes.push_back(n);
        }
        model.trees.push_back(std::move(tree));
    }
    r.expect_end();
    return model;
}

void save_iforest_model(const std::string& path, const IsolationForestModel& model) {
    std::string p;
    put_u32(p, model.embedding_dim);
    put_u32(p, model.subsample_size);
    put_f64(p, model.score_threshold);
    put_u8(p, model.signal_on_inlier ? 1 : 0);
    put_u32(p, static_cast<std::uint32_t>(model.trees.size()));
    for (const IsoTree& t : model.trees) {
        put_u32(p, static_cast<std::uint32_t>(t.nodes.size()));
        for (const IsoNode& n : t.nodes) {
            put_u32(p, static_cast<std::uint32_t>(n.feature));
            put_f64(p, n.value);
            put_u32(p, static_cast<std::uint32_t>(n.left));
            put_u32(p, static_cast<std::uint32_t>(n.right));
            put_u32(p, n.size);
        }
    }
    write_container(path, "iforest", p);
}

IsolationForestModel load_iforest_model(const std::string& path) {
    const std::string buf = read_file_bytes(path);
    ByteReader r = open_as(buf, path, "iforest");

    IsolationForestModel model;
    model.embedding_dim = r.u32();
    model.subsample_size = r.u32();
    model.score_threshold = r.f64();
    model.signal_on_inlier = r.u8() != 0;
    const std::uint32_t n_trees = r.u32();
    for (std::uint32_t t = 0; t < n_trees; ++t) {
        IsoTree tree;
        const std::uint32_t n_nodes = r.u32();
        tree.nodes.reserve(n_nodes);
        for (std::uint32_t i = 0; i < n_nodes; ++i) {
            IsoNode n;
            n.feature = static_cast<std::int32_t>(r.u32());
            n.value = r.f64();
            n.left = static_cast<std::int32_t>(r.u32());
            n.right = static_cast<std::int32_t>(r.u32());
            n.size = r.u32();
            tree.nodes.push_back(n);
        }
        model.trees.push_back(std::move(tree));
    }
    r.expect_end();
    return model;
}

void CascadePlan::validate() const {
    if (slots.empty()) throw ValidationError("cascade plan needs at least one slot");
    if (conditions.size() + 1 != slots.size())
        throw ValidationError("cascade plan with " + std::to_string(slots.size()) +
                              " slots needs exactly " + std::to_string(slots.size() - 1) +
                              " conditions");
    for (std::size_t i = 0; i < slots.size(); ++i) {
        const CascadeSlotRef& s = slots[i];
        if (s.alias_of >= 0) {
            if (static_cast<std::size_t>(s.alias_of) >= i)
                throw ValidationError("cascade plan: slot " + std::to_string(i) +
                                      " aliases a non-earlier slot");
        } else if (s.path.empty()) {
            throw ValidationError("cascade plan: slot " + std::to_string(i) +
                                  " has neither a path nor an alias");
        }
    }
}

void save_cascade_plan(const std::string& path, const CascadePlan& plan) {
    plan.validate();
    std::string p;
    put_f64(p, plan.threshold);
    put_u32(p, static_cast<std::uint32_t>(plan.slots.size()));
    for (const CascadeSlotRef& s : plan.slots) {
        put_u32(p, static_cast<std::uint32_t>(s.alias_of));
        put_str(p, s.alias_of >= 0 ? std::string() : s.path);
    }
    put_u32(p, static_cast<std::uint32_t>(plan.conditions.size()));
    for (const ConditionSpec& c : plan.conditions) put_condition(p, c);
    write_container(path, "cascade", p);
}

CascadePlan read_cascade_plan(const std::string& path) {
    const std::string buf = read_file_bytes(path);
    ByteReader r = open_as(buf, path, "cascade");

    CascadePlan plan;
    plan.threshold = r.f64();
    const std::uint32_t n_slots = r.u32();
    for (std::uint32_t i = 0; i < n_slots; ++i) {
        CascadeSlotRef s;
        s.alias_of = static_cast<std::int32_t>(r.u32());
        s.path = r.str();
        plan.slots.push_back(std::move(s));
    }
    const std::uint32_t n_conditions = r.u32();
    for (std::uint32_t i = 0; i < n_conditions; ++i)
        plan.conditions.push_back(read_condition(r, path, 0));
    r.expect_end();
    plan.validate();
    return plan;
}

CascadeConfig load_cascade(const std::string& path) {
    const CascadePlan plan = read_cascade_plan(path);

    std::map<std::string, std::shared_ptr<const Detector>> detector_cache;
    std::map<std::string, std::shared_ptr<const IsolationForestModel>> forest_cache;

    CascadeConfig cascade;
    cascade.threshold = plan.threshold;
    for (const CascadeSlotRef& s : plan.slots) {
        if (s.alias_of >= 0) {
            cascade.slots.push_back(cascade.slots[static_cast<std::size_t>(s.alias_of)]);
            continue;
        }
        const std::string resolved = resolve_relative(path, s.path);
        auto it = detector_cache.find(resolved);
        if (it == detector_cache.end()) {
            auto model = std::make_shared<MlpModel>(load_mlp_model(resolved));
            it = detector_cache.emplace(resolved, std::make_shared<MlpDetector>(model)).first;
        }
        cascade.slots.push_back(it->second);
    }
    for (const ConditionSpec& c : plan.conditions)
        cascade.conditions.push_back(materialize_condition(c, path, forest_cache));
    cascade.validate();
    return cascade;
}

}  // namespace sentinel
