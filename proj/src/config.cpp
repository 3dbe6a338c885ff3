#include "sentinel/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <string_view>

namespace sentinel {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

/// Where a key/value pair came from, for error messages: "file.cfg:12" or
/// "override 'mlp.lr=x'".
struct Origin {
    std::string text;
};

[[noreturn]] void fail(const Origin& org, const std::string& what) {
    throw FormatError(org.text + ": " + what);
}

std::uint64_t parse_u64(std::string_view v, const Origin& org) {
    std::uint64_t out = 0;
    const char* end = v.data() + v.size();
    const auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc{} || ptr != end || v.empty()) {
        fail(org, "expected a non-negative integer, got '" + std::string(v) + "'");
    }
    return out;
}

std::uint32_t parse_u32(std::string_view v, const Origin& org) {
    const std::uint64_t wide = parse_u64(v, org);
    if (wide > 0xffffffffULL) fail(org, "integer out of range: '" + std::string(v) + "'");
    return static_cast<std::uint32_t>(wide);
}

double parse_f64(std::string_view v, const Origin& org) {
    double out = 0.0;
    const char* end = v.data() + v.size();
    const auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc{} || ptr != end || v.empty()) {
        fail(org, "expected a number, got '" + std::string(v) + "'");
    }
    return out;
}

bool parse_bool(std::string_view v, const Origin& org) {
    if (v == "true") return true;
    if (v == "false") return false;
    fail(org, "expected true or false, got '" + std::string(v) + "'");
}

std::vector<std::string> split_list(std::string_view v) {
    std::vector<std::string> parts;
    while (!v.empty()) {
        const std::size_t comma = v.find(',');
        parts.emplace_back(trim(v.substr(0, comma)));
        if (comma == std::string_view::npos) break;
        v.remove_prefix(comma + 1);
    }
    return parts;
}

std::vector<std::uint32_t> parse_u32_list(std::string_view v, const Origin& org) {
    std::vector<std::uint32_t> out;
    if (trim(v).empty()) return out;
    for (const std::string& part : split_list(v)) {
        if (part.empty()) fail(org, "empty element in list");
        out.push_back(parse_u32(part, org));
    }
    return out;
}

SelectionStrategy parse_strategy(std::string_view v, const Origin& org) {
    if (v == "topk") return SelectionStrategy::topk;
    if (v == "random") return SelectionStrategy::random;
    if (v == "none") return SelectionStrategy::none;
    fail(org, "expected topk, random, or none, got '" + std::string(v) + "'");
}

std::string strategy_name(SelectionStrategy s) {
    switch (s) {
        case SelectionStrategy::topk: return "topk";
        case SelectionStrategy::random: return "random";
        case SelectionStrategy::none: return "none";
    }
    SENTINEL_CHECK(false, "unreachable strategy");
}

Activation parse_activation(std::string_view v, const Origin& org) {
    if (v == "leaky_relu") return Activation::leaky_relu;
    if (v == "relu") return Activation::relu;
    fail(org, "expected leaky_relu or relu, got '" + std::string(v) + "'");
}

std::string activation_name(Activation a) {
    return a == Activation::leaky_relu ? "leaky_relu" : "relu";
}

SplitCriterion parse_criterion(std::string_view v, const Origin& org) {
    if (v == "gini") return SplitCriterion::gini;
    if (v == "entropy") return SplitCriterion::entropy;
    fail(org, "expected gini or entropy, got '" + std::string(v) + "'");
}

std::string criterion_name(SplitCriterion c) {
    return c == SplitCriterion::gini ? "gini" : "entropy";
}

SearchObjective parse_objective(std::string_view v, const Origin& org) {
    if (v == "val_f1") return SearchObjective::val_f1;
    if (v == "objective_j") return SearchObjective::objective_j;
    fail(org, "expected val_f1 or objective_j, got '" + std::string(v) + "'");
}

std::string objective_name(SearchObjective o) {
    return o == SearchObjective::val_f1 ? "val_f1" : "objective_j";
}

void apply_adv_key(AdvNetSection& s, std::string_view key, std::string_view value, const Origin& org) {
    if (key == "m") s.m = parse_u32(value, org);
    else if (key == "k") s.k = parse_u32(value, org);
    else if (key == "strategy") s.strategy = parse_strategy(value, org);
    else if (key == "epochs") s.epochs = parse_u32(value, org);
    else if (key == "reset_delta") s.reset_delta_per_batch = parse_bool(value, org);
    else if (key == "lambda") s.lambda = parse_f64(value, org);
    else fail(org, "unknown key '" + std::string(key) + "'");
}

/// Single point of truth for the file format: routes one section.key to its
/// field. Both the file parser and flag overrides land here.
void apply_kv(ExperimentConfig& c, std::string_view section, std::string_view key,
              std::string_view value, const Origin& org) {
    if (section.empty()) {
        if (key == "seed") c.seed = parse_u64(value, org);
        else fail(org, "only 'seed' may appear before the first section, got '" + std::string(key) + "'");
    } else if (section == "features") {
        if (key == "dim") c.feature_dim = parse_u32(value, org);
        else if (key == "gamma") {
            c.gamma_categories.clear();
            if (trim(value) != "all") c.gamma_categories = split_list(value);
        } else fail(org, "unknown key '" + std::string(key) + "'");
    } else if (section == "data") {
        if (key == "synth") c.synth = parse_bool(value, org);
        else if (key == "train") c.train_path = std::string(value);
        else if (key == "eval") c.eval_path = std::string(value);
        else if (key == "samples") c.synth_train_samples = parse_u64(value, org);
        else if (key == "eval_samples") c.synth_eval_samples = parse_u64(value, org);
        else if (key == "malware_ratio") c.synth_malware_ratio = parse_f64(value, org);
        else if (key == "signature_features") c.synth_signature_features = parse_u32(value, org);
        else if (key == "noise") c.synth_noise_rate = parse_f64(value, org);
        else fail(org, "unknown key '" + std::string(key) + "'");
    } else if (section == "mlp") {
        if (key == "hidden") c.mlp.hidden_sizes = parse_u32_list(value, org);
        else if (key == "activation") c.mlp.activation = parse_activation(value, org);
        else if (key == "leaky_slope") c.mlp.leaky_slope = parse_f64(value, org);
        else if (key == "dropout") c.mlp.dropout_rate = parse_f64(value, org);
        else if (key == "pos_weight") c.mlp.pos_class_weight = parse_f64(value, org);
        else if (key == "lr") c.mlp.learning_rate = parse_f64(value, org);
        else if (key == "weight_decay") c.mlp.weight_decay = parse_f64(value, org);
        else if (key == "beta1") c.mlp.adam_beta1 = parse_f64(value, org);
        else if (key == "beta2") c.mlp.adam_beta2 = parse_f64(value, org);
        else if (key == "epsilon") c.mlp.adam_epsilon = parse_f64(value, org);
        else if (key == "epochs") c.mlp.epochs = parse_u32(value, org);
        else if (key == "batch") c.mlp.batch_size = parse_u32(value, org);
        else fail(org, "unknown key '" + std::string(key) + "'");
    } else if (section == "strong") {
        apply_adv_key(c.strong, key, value, org);
    } else if (section == "weak") {
        apply_adv_key(c.weak, key, value, org);
    } else if (section == "teacher") {
        if (key == "trees") c.teacher.n_trees = parse_u32(value, org);
        else if (key == "criterion") c.teacher.criterion = parse_criterion(value, org);
        else if (key == "min_leaf") c.teacher.min_samples_leaf = parse_u32(value, org);
        else if (key == "max_depth") {
            if (value == "none") c.teacher.max_depth.reset();
            else c.teacher.max_depth = parse_u32(value, org);
        } else if (key == "features_per_split") c.teacher.features_per_split = parse_u32(value, org);
        else if (key == "pos_weight") c.teacher.pos_class_weight = parse_f64(value, org);
        else if (key == "bootstrap") c.teacher.bootstrap = parse_bool(value, org);
        else fail(org, "unknown key '" + std::string(key) + "'");
    } else if (section == "anomaly") {
        if (key == "trees") c.anomaly.n_trees = parse_u32(value, org);
        else if (key == "subsample") c.anomaly.subsample_size = parse_u32(value, org);
        else if (key == "contamination") c.anomaly.contamination = parse_f64(value, org);
        else if (key == "signal_on_inlier") c.anomaly.signal_on_inlier = parse_bool(value, org);
        else fail(org, "unknown key '" + std::string(key) + "'");
    } else if (section == "cascade") {
        if (key == "sigma1") c.sigma1 = parse_f64(value, org);
        else if (key == "t") c.threshold = parse_f64(value, org);
        else fail(org, "unknown key '" + std::string(key) + "'");
    } else if (section == "attack") {
        if (key == "budgets") c.attack_budgets = parse_u32_list(value, org);
        else if (key == "population") c.ga.population_size = parse_u32(value, org);
        else if (key == "generations") c.ga.generations = parse_u32(value, org);
        else if (key == "tournament") c.ga.tournament_size = parse_u32(value, org);
        else if (key == "crossover") c.ga.crossover_prob = parse_f64(value, org);
        else if (key == "mutation") c.ga.mutation_prob = parse_f64(value, org);
        else if (key == "per_gene_mutation") c.ga.per_gene_mutation_prob = parse_f64(value, org);
        else if (key == "early_stop") c.ga.early_stop = parse_bool(value, org);
        else fail(org, "unknown key '" + std::string(key) + "'");
    } else if (section == "eval") {
        if (key == "attack_samples") c.attack_max_samples = parse_u64(value, org);
        else fail(org, "unknown key '" + std::string(key) + "'");
    } else if (section == "search") {
        if (key == "trials") c.search.trials = parse_u32(value, org);
        else if (key == "objective") c.search.objective = parse_objective(value, org);
        else if (key == "layers") c.search.layer_counts = parse_u32_list(value, org);
        else if (key == "hidden") c.search.hidden_choices = parse_u32_list(value, org);
        else if (key == "dropout_min") c.search.dropout_min = parse_f64(value, org);
        else if (key == "dropout_max") c.search.dropout_max = parse_f64(value, org);
        else if (key == "dropout_step") c.search.dropout_step = parse_f64(value, org);
        else if (key == "m_min") c.search.m_min = parse_u32(value, org);
        else if (key == "m_max") c.search.m_max = parse_u32(value, org);
        else if (key == "k") c.search.k_choices = parse_u32_list(value, org);
        else if (key == "teacher_trees_min") c.search.teacher_trees_min = parse_u32(value, org);
        else if (key == "teacher_trees_max") c.search.teacher_trees_max = parse_u32(value, org);
        else if (key == "teacher_trees_step") c.search.teacher_trees_step = parse_u32(value, org);
        else if (key == "min_leaf_min") c.search.min_leaf_min = parse_u32(value, org);
        else if (key == "min_leaf_max") c.search.min_leaf_max = parse_u32(value, org);
        else if (key == "min_leaf_step") c.search.min_leaf_step = parse_u32(value, org);
        else fail(org, "unknown key '" + std::string(key) + "'");
    } else {
        fail(org, "unknown section '[" + std::string(section) + "]'");
    }
}

constexpr std::string_view kKnownSections[] = {
    "features", "data", "mlp", "strong", "weak", "teacher",
    "anomaly",  "cascade", "attack", "eval", "search",
};

bool known_section(std::string_view name) {
    for (const std::string_view s : kKnownSections) {
        if (s == name) return true;
    }
    return false;
}

/// Strips a trailing comment: '#' at line start or preceded by whitespace.
std::string_view strip_comment(std::string_view line) {
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '#' && (i == 0 || line[i - 1] == ' ' || line[i - 1] == '\t')) {
            return line.substr(0, i);
        }
    }
    return line;
}

std::string join_u32(const std::vector<std::uint32_t>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i > 0) out += ",";
        out += std::to_string(v[i]);
    }
    return out;
}

std::string join_strings(const std::vector<std::string>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i > 0) out += ",";
        out += v[i];
    }
    return out;
}

}  // namespace

FeatureSpace ExperimentConfig::feature_space() const {
    return FeatureSpace::two_block(feature_dim);
}

ManipulabilityMask ExperimentConfig::gamma() const {
    const FeatureSpace space = feature_space();
    if (gamma_categories.empty()) return ManipulabilityMask::from_space(space);
    return ManipulabilityMask::from_categories(space, gamma_categories);
}

SynthSpec ExperimentConfig::train_synth_spec() const {
    SynthSpec spec;
    spec.d = feature_dim;
    spec.n_samples = synth_train_samples;
    spec.malware_ratio = synth_malware_ratio;
    spec.n_signature_features = synth_signature_features;
    spec.noise_rate = synth_noise_rate;
    return spec;
}

SynthSpec ExperimentConfig::eval_synth_spec() const {
    SynthSpec spec = train_synth_spec();
    spec.n_samples = synth_eval_samples;
    return spec;
}

void ExperimentConfig::validate() const {
    if (feature_dim < 2) throw ValidationError("config: features.dim must be at least 2");
    if (!synth && train_path.empty()) {
        throw ValidationError("config: data.synth=false requires data.train to name a dataset file");
    }
    if (synth_train_samples == 0 || synth_eval_samples == 0) {
        throw ValidationError("config: synthetic sample counts must be positive");
    }
    if (!(synth_malware_ratio > 0.0 && synth_malware_ratio < 1.0)) {
        throw ValidationError("config: data.malware_ratio must lie strictly between 0 and 1");
    }
    if (synth_signature_features == 0 || 2 * synth_signature_features > feature_dim) {
        throw ValidationError("config: data.signature_features must satisfy 1 <= 2*nsig <= dim");
    }
    if (!(synth_noise_rate >= 0.0 && synth_noise_rate < 1.0)) {
        throw ValidationError("config: data.noise must lie in [0, 1)");
    }
    mlp.validate();
    const ManipulabilityMask mask = gamma();  // resolves category names
    for (const AdvNetSection* s : {&strong, &weak}) {
        if (s->m == 0) throw ValidationError("config: adversarial replay count m must be positive");
        if (s->k == 0) throw ValidationError("config: perturbation budget k must be positive");
        if (s->k > mask.size()) {
            throw ValidationError("config: perturbation budget k exceeds the eligible feature count");
        }
        if (!(s->lambda >= 0.0 && s->lambda <= 1.0)) {
            throw ValidationError("config: lambda must lie in [0, 1]");
        }
    }
    teacher.validate();
    anomaly.validate();
    if (!(sigma1 >= 0.0 && sigma1 <= 1.0)) throw ValidationError("config: cascade.sigma1 must lie in [0, 1]");
    if (!(threshold >= 0.0 && threshold <= 1.0)) throw ValidationError("config: cascade.t must lie in [0, 1]");
    for (std::size_t i = 0; i < attack_budgets.size(); ++i) {
        for (std::size_t j = i + 1; j < attack_budgets.size(); ++j) {
            if (attack_budgets[i] == attack_budgets[j]) {
                throw ValidationError("config: attack.budgets contains a duplicate");
            }
        }
    }
    ga.validate();
    search.validate();
}

ExperimentConfig default_config() { return ExperimentConfig{}; }

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin) {
    ExperimentConfig config = default_config();
    std::istringstream in(text);
    std::string raw;
    std::string section;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const Origin org{origin + ":" + std::to_string(line_no)};
        const std::string_view line = trim(strip_comment(raw));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']' || line.size() < 3) fail(org, "malformed section header");
            const std::string_view name = trim(line.substr(1, line.size() - 2));
            if (!known_section(name)) fail(org, "unknown section '[" + std::string(name) + "]'");
            section = std::string(name);
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos) fail(org, "expected 'key = value'");
        const std::string_view key = trim(line.substr(0, eq));
        const std::string_view value = trim(line.substr(eq + 1));
        if (key.empty()) fail(org, "empty key");
        apply_kv(config, section, key, value, org);
    }
    return config;
}

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IoError("failed reading config file: " + path);
    return parse_config_text(buf.str(), path);
}

void apply_override(ExperimentConfig& config, const std::string& assignment) {
    const Origin org{"override '" + assignment + "'"};
    const std::size_t eq = assignment.find('=');
    if (eq == std::string::npos) fail(org, "expected section.key=value");
    const std::string_view lhs = trim(std::string_view(assignment).substr(0, eq));
    const std::string_view value = trim(std::string_view(assignment).substr(eq + 1));
    const std::size_t dot = lhs.find('.');
    if (dot == std::string_view::npos) {
        apply_kv(config, "", lhs, value, org);
        return;
    }
    const std::string_view section = lhs.substr(0, dot);
    const std::string_view key = lhs.substr(dot + 1);
    if (section.empty() || key.empty()) fail(org, "expected section.key=value");
    apply_kv(config, section, key, value, org);
}

std::string config_to_text(const ExperimentConfig& c) {
    std::ostringstream out;
    out << "seed = " << c.seed << "\n\n";

    out << "[features]\n";
    out << "dim = " << c.feature_dim << "\n";
    out << "gamma = " << (c.gamma_categories.empty() ? "all" : join_strings(c.gamma_categories)) << "\n\n";

    out << "[data]\n";
    out << "synth = " << (c.synth ? "true" : "false") << "\n";
    out << "train = " << c.train_path << "\n";
    out << "eval = " << c.eval_path << "\n";
    out << "samples = " << c.synth_train_samples << "\n";
    out << "eval_samples = " << c.synth_eval_samples << "\n";
    out << "malware_ratio = " << format_double(c.synth_malware_ratio) << "\n";
    out << "signature_features = " << c.synth_signature_features << "\n";
    out << "noise = " << format_double(c.synth_noise_rate) << "\n\n";

    out << "[mlp]\n";
    out << "hidden = " << join_u32(c.mlp.hidden_sizes) << "\n";
    out << "activation = " << activation_name(c.mlp.activation) << "\n";
    out << "leaky_slope = " << format_double(c.mlp.leaky_slope) << "\n";
    out << "dropout = " << format_double(c.mlp.dropout_rate) << "\n";
    out << "pos_weight = " << format_double(c.mlp.pos_class_weight) << "\n";
    out << "lr = " << format_double(c.mlp.learning_rate) << "\n";
    out << "weight_decay = " << format_double(c.mlp.weight_decay) << "\n";
    out << "beta1 = " << format_double(c.mlp.adam_beta1) << "\n";
    out << "beta2 = " << format_double(c.mlp.adam_beta2) << "\n";
    out << "epsilon = " << format_double(c.mlp.adam_epsilon) << "\n";
    out << "epochs = " << c.mlp.epochs << "\n";
    out << "batch = " << c.mlp.batch_size << "\n\n";

    const auto put_adv = [&out](const char* name, const AdvNetSection& s) {
        out << "[" << name << "]\n";
        out << "m = " << s.m << "\n";
        out << "k = " << s.k << "\n";
        out << "strategy = " << strategy_name(s.strategy) << "\n";
        out << "epochs = " << s.epochs << "\n";
        out << "reset_delta = " << (s.reset_delta_per_batch ? "true" : "false") << "\n";
        out << "lambda = " << format_double(s.lambda) << "\n\n";
    };
    put_adv("strong", c.strong);
    put_adv("weak", c.weak);

    out << "[teacher]\n";
    out << "trees = " << c.teacher.n_trees << "\n";
    out << "criterion = " << criterion_name(c.teacher.criterion) << "\n";
    out << "min_leaf = " << c.teacher.min_samples_leaf << "\n";
    out << "max_depth = " << (c.teacher.max_depth ? std::to_string(*c.teacher.max_depth) : "none") << "\n";
    out << "features_per_split = " << c.teacher.features_per_split << "\n";
    out << "pos_weight = " << format_double(c.teacher.pos_class_weight) << "\n";
    out << "bootstrap = " << (c.teacher.bootstrap ? "true" : "false") << "\n\n";

    out << "[anomaly]\n";
    out << "trees = " << c.anomaly.n_trees << "\n";
    out << "subsample = " << c.anomaly.subsample_size << "\n";
    out << "contamination = " << format_double(c.anomaly.contamination) << "\n";
    out << "signal_on_inlier = " << (c.anomaly.signal_on_inlier ? "true" : "false") << "\n\n";

    out << "[cascade]\n";
    out << "sigma1 = " << format_double(c.sigma1) << "\n";
    out << "t = " << format_double(c.threshold) << "\n\n";

    out << "[attack]\n";
    out << "budgets = " << join_u32(c.attack_budgets) << "\n";
    out << "population = " << c.ga.population_size << "\n";
    out << "generations = " << c.ga.generations << "\n";
    out << "tournament = " << c.ga.tournament_size << "\n";
    out << "crossover = " << format_double(c.ga.crossover_prob) << "\n";
    out << "mutation = " << format_double(c.ga.mutation_prob) << "\n";
    out << "per_gene_mutation = " << format_double(c.ga.per_gene_mutation_prob) << "\n";
    out << "early_stop = " << (c.ga.early_stop ? "true" : "false") << "\n\n";

    out << "[eval]\n";
    out << "attack_samples = " << c.attack_max_samples << "\n\n";

    out << "[search]\n";
    out << "trials = " << c.search.trials << "\n";
    out << "objective = " << objective_name(c.search.objective) << "\n";
    out << "layers = " << join_u32(c.search.layer_counts) << "\n";
    out << "hidden = " << join_u32(c.search.hidden_choices) << "\n";
    out << "dropout_min = " << format_double(c.search.dropout_min) << "\n";
    out << "dropout_max = " << format_double(c.search.dropout_max) << "\n";
    out << "dropout_step = " << format_double(c.search.dropout_step) << "\n";
    out << "m_min = " << c.search.m_min << "\n";
    out << "m_max = " << c.search.m_max << "\n";
    out << "k = " << join_u32(c.search.k_choices) << "\n";
    out << "teacher_trees_min = " << c.search.teacher_trees_min << "\n";
    out << "teacher_trees_max = " << c.search.teacher_trees_max << "\n";
    out << "teacher_trees_step = " << c.search.teacher_trees_step << "\n";
    out << "min_leaf_min = " << c.search.min_leaf_min << "\n";
    out << "min_leaf_max = " << c.search.min_leaf_max << "\n";
    out << "min_leaf_step = " << c.search.min_leaf_step << "\n";
    return std::move(out).str();
}

std::uint64_t config_fingerprint(const ExperimentConfig& config) {
    return fnv1a(config_to_text(config));
}

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
    return config_to_text(a) == config_to_text(b);
}

}  // namespace sentinel
