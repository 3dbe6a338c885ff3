#include "sentinel/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <memory>
#include <set>

#include <json.hpp>

#include "sentinel/advtrain.hpp"
#include "sentinel/anomaly.hpp"
#include "sentinel/teacher.hpp"

namespace sentinel {

namespace {

namespace fs = std::filesystem;

// Frozen stream tags for the per-component seeds; disjoint from the
// in-library streams:: tags by construction (those stay below 100).
constexpr std::uint64_t kSeedSynthTrain = 100;
constexpr std::uint64_t kSeedSynthEval = 101;
constexpr std::uint64_t kSeedTeacher = 102;
constexpr std::uint64_t kSeedStrong = 103;
constexpr std::uint64_t kSeedWeak = 104;
constexpr std::uint64_t kSeedVanilla = 105;
constexpr std::uint64_t kSeedAnomaly = 106;
constexpr std::uint64_t kSeedAttack = 107;
constexpr std::uint64_t kSeedSearch = 108;

void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << text;
    if (!out) throw IoError("failed writing: " + path.string());
}

nlohmann::json config_json(const ExperimentConfig& c) {
    nlohmann::json j;
    j["seed"] = c.seed;
    j["features"] = {{"dim", c.feature_dim},
                     {"gamma", c.gamma_categories.empty()
                                   ? nlohmann::json("all")
                                   : nlohmann::json(c.gamma_categories)}};
    j["data"] = {{"synth", c.synth},
                 {"train", c.train_path},
                 {"eval", c.eval_path},
                 {"samples", c.synth_train_samples},
                 {"eval_samples", c.synth_eval_samples},
                 {"malware_ratio", c.synth_malware_ratio},
                 {"signature_features", c.synth_signature_features},
                 {"noise", c.synth_noise_rate}};
    j["mlp"] = {{"hidden", c.mlp.hidden_sizes},
                {"activation", c.mlp.activation == Activation::leaky_relu ? "leaky_relu" : "relu"},
                {"leaky_slope", c.mlp.leaky_slope},
                {"dropout", c.mlp.dropout_rate},
                {"pos_weight", c.mlp.pos_class_weight},
                {"lr", c.mlp.learning_rate},
                {"weight_decay", c.mlp.weight_decay},
                {"beta1", c.mlp.adam_beta1},
                {"beta2", c.mlp.adam_beta2},
                {"epsilon", c.mlp.adam_epsilon},
                {"epochs", c.mlp.epochs},
                {"batch", c.mlp.batch_size}};
    const auto adv_json = [](const AdvNetSection& s) {
        const char* strategy = s.strategy == SelectionStrategy::topk     ? "topk"
                               : s.strategy == SelectionStrategy::random ? "random"
                                                                         : "none";
        return nlohmann::json{{"m", s.m},
                              {"k", s.k},
                              {"strategy", strategy},
                              {"epochs", s.epochs},
                              {"reset_delta", s.reset_delta_per_batch},
                              {"lambda", s.lambda}};
    };
    j["strong"] = adv_json(c.strong);
    j["weak"] = adv_json(c.weak);
    j["teacher"] = {{"trees", c.teacher.n_trees},
                    {"criterion", c.teacher.criterion == SplitCriterion::gini ? "gini" : "entropy"},
                    {"min_leaf", c.teacher.min_samples_leaf},
                    {"max_depth", c.teacher.max_depth ? nlohmann::json(*c.teacher.max_depth)
                                                      : nlohmann::json(nullptr)},
                    {"features_per_split", c.teacher.features_per_split},
                    {"pos_weight", c.teacher.pos_class_weight},
                    {"bootstrap", c.teacher.bootstrap}};
    j["anomaly"] = {{"trees", c.anomaly.n_trees},
                    {"subsample", c.anomaly.subsample_size},
                    {"contamination", c.anomaly.contamination},
                    {"signal_on_inlier", c.anomaly.signal_on_inlier}};
    j["cascade"] = {{"sigma1", c.sigma1}, {"t", c.threshold}};
    j["attack"] = {{"budgets", c.attack_budgets},
                   {"population", c.ga.population_size},
                   {"generations", c.ga.generations},
                   {"tournament", c.ga.tournament_size},
                   {"crossover", c.ga.crossover_prob},
                   {"mutation", c.ga.mutation_prob},
                   {"per_gene_mutation", c.ga.per_gene_mutation_prob},
                   {"early_stop", c.ga.early_stop}};
    j["eval"] = {{"attack_samples", c.attack_max_samples}};
    j["search"] = {{"trials", c.search.trials},
                   {"objective", c.search.objective == SearchObjective::val_f1 ? "val_f1" : "objective_j"},
                   {"layers", c.search.layer_counts},
                   {"hidden", c.search.hidden_choices},
                   {"dropout_min", c.search.dropout_min},
                   {"dropout_max", c.search.dropout_max},
                   {"dropout_step", c.search.dropout_step},
                   {"m_min", c.search.m_min},
                   {"m_max", c.search.m_max},
                   {"k", c.search.k_choices},
                   {"teacher_trees_min", c.search.teacher_trees_min},
                   {"teacher_trees_max", c.search.teacher_trees_max},
                   {"teacher_trees_step", c.search.teacher_trees_step},
                   {"min_leaf_min", c.search.min_leaf_min},
                   {"min_leaf_max", c.search.min_leaf_max},
                   {"min_leaf_step", c.search.min_leaf_step}};
    return j;
}

int verdict_as_int(Verdict v) { return v == Verdict::malware ? 1 : 0; }

std::vector<int> truth_labels(const LabeledDataset& ds) {
    std::vector<int> truth;
    truth.reserve(ds.size());
    for (const double y : ds.labels) truth.push_back(y >= 0.5 ? 1 : 0);
    return truth;
}

}  // namespace

DerivedSeeds derive_seeds(std::uint64_t experiment_seed) {
    DerivedSeeds s;
    s.synth_train = seed_stream(experiment_seed, kSeedSynthTrain);
    s.synth_eval = seed_stream(experiment_seed, kSeedSynthEval);
    s.teacher = seed_stream(experiment_seed, kSeedTeacher);
    s.strong = seed_stream(experiment_seed, kSeedStrong);
    s.weak = seed_stream(experiment_seed, kSeedWeak);
    s.vanilla = seed_stream(experiment_seed, kSeedVanilla);
    s.anomaly = seed_stream(experiment_seed, kSeedAnomaly);
    s.attack = seed_stream(experiment_seed, kSeedAttack);
    s.search = seed_stream(experiment_seed, kSeedSearch);
    return s;
}

AdvTrainConfig resolve_adv_config(const ExperimentConfig& config, const AdvNetSection& section,
                                  std::uint64_t seed) {
    AdvTrainConfig adv;
    adv.m = section.m;
    adv.k = section.k;
    adv.strategy = section.strategy;
    adv.total_epochs = section.epochs == 0 ? config.mlp.epochs : section.epochs;
    adv.reset_delta_per_batch = section.reset_delta_per_batch;
    adv.gamma = config.gamma();
    adv.seed = seed;
    return adv;
}

LabeledDataset obtain_train_data(const ExperimentConfig& config, const DerivedSeeds& seeds) {
    LabeledDataset ds;
    if (config.synth) {
        ds = synth_generate(config.train_synth_spec(), seeds.synth_train);
    } else {
        if (!fs::exists(config.train_path)) {
            throw ValidationError("training dataset does not exist: " + config.train_path);
        }
        ds = read_sparse_file(config.train_path);
    }
    if (ds.dim != config.feature_dim) {
        throw ValidationError("training data dimension " + std::to_string(ds.dim) +
                              " does not match features.dim " + std::to_string(config.feature_dim));
    }
    return ds;
}

std::optional<LabeledDataset> obtain_eval_data(const ExperimentConfig& config,
                                               const DerivedSeeds& seeds, bool required) {
    LabeledDataset ds;
    if (config.synth) {
        ds = synth_generate(config.eval_synth_spec(), seeds.synth_eval);
    } else if (!config.eval_path.empty()) {
        if (!fs::exists(config.eval_path)) {
            throw ValidationError("evaluation dataset does not exist: " + config.eval_path);
        }
        ds = read_sparse_file(config.eval_path);
    } else if (required) {
        throw ValidationError("config: data.eval is required when data.synth=false");
    } else {
        return std::nullopt;
    }
    if (ds.dim != config.feature_dim) {
        throw ValidationError("evaluation data dimension " + std::to_string(ds.dim) +
                              " does not match features.dim " + std::to_string(config.feature_dim));
    }
    return ds;
}

std::vector<std::vector<double>> benign_embeddings(const MlpModel& model,
                                                   const LabeledDataset& dataset) {
    dataset.validate();
    std::vector<std::vector<double>> embeddings;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        if (dataset.labels[i] >= 0.5) continue;
        embeddings.push_back(forward(model, dataset.samples[i], RunMode::infer).embedding());
    }
    return embeddings;
}

AttackTarget cascade_target(std::shared_ptr<const CascadeConfig> cascade) {
    if (!cascade) throw ValidationError("cascade_target: null cascade");
    AttackTarget t;
    t.score = [cascade](const SparseBinaryVector& x) { return evaluate(*cascade, x).score; };
    t.label = [cascade](const SparseBinaryVector& x) { return classify(*cascade, x); };
    return t;
}

AttackTarget mlp_target(std::shared_ptr<const MlpModel> model, double t) {
    if (!model) throw ValidationError("mlp_target: null model");
    AttackTarget target;
    target.score = [model](const SparseBinaryVector& x) {
        return forward(*model, x, RunMode::infer).probability;
    };
    target.label = [model, t](const SparseBinaryVector& x) {
        return forward(*model, x, RunMode::infer).probability >= t ? Verdict::malware
                                                                   : Verdict::goodware;
    };
    return target;
}

CleanMetrics clean_metrics(const CascadeConfig& cascade, const LabeledDataset& dataset) {
    dataset.validate();
    std::vector<int> predicted;
    predicted.reserve(dataset.size());
    for (const SparseBinaryVector& x : dataset.samples) {
        predicted.push_back(verdict_as_int(classify(cascade, x)));
    }
    CleanMetrics m;
    m.counts = confusion(predicted, truth_labels(dataset));
    m.tnr_value = tnr(m.counts).value;
    m.tpr_value = tpr(m.counts).value;
    m.f1_value = f1(m.counts).value;
    return m;
}

std::optional<double> cascade_aut(const CascadeConfig& cascade, const LabeledDataset& dataset) {
    if (!dataset.has_rounds()) return std::nullopt;
    std::set<std::int32_t> rounds(dataset.rounds.begin(), dataset.rounds.end());
    if (rounds.size() < 2) return std::nullopt;
    std::vector<double> series;
    for (const std::int32_t round : rounds) {
        std::vector<int> predicted;
        std::vector<int> truth;
        for (std::size_t i = 0; i < dataset.size(); ++i) {
            if (dataset.rounds[i] != round) continue;
            predicted.push_back(verdict_as_int(classify(cascade, dataset.samples[i])));
            truth.push_back(dataset.labels[i] >= 0.5 ? 1 : 0);
        }
        series.push_back(f1(confusion(predicted, truth)).value);
    }
    return aut(series);
}

std::uint64_t file_fingerprint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for hashing: " + path);
    std::uint64_t h = kFnvOffset;
    char buf[4096];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        h = fnv1a(std::string_view(buf, static_cast<std::size_t>(in.gcount())), h);
        if (in.eof()) break;
    }
    if (in.bad()) throw IoError("failed reading for hashing: " + path);
    return h;
}

void write_manifest(const fs::path& manifest_path, const std::string& command,
                    const ExperimentConfig& config, const DerivedSeeds& seeds,
                    const std::vector<ManifestEntry>& outputs,
                    const std::map<std::string, std::string>& inputs) {
    nlohmann::json doc;
    doc["manifest_version"] = 1;
    doc["command"] = command;
    doc["seed"] = config.seed;
    doc["config_fingerprint"] = "0x" + to_hex(config_fingerprint(config));
    doc["config"] = config_json(config);
    doc["seeds"] = {{"synth_train", seeds.synth_train}, {"synth_eval", seeds.synth_eval},
                    {"teacher", seeds.teacher},         {"strong", seeds.strong},
                    {"weak", seeds.weak},               {"vanilla", seeds.vanilla},
                    {"anomaly", seeds.anomaly},         {"attack", seeds.attack},
                    {"search", seeds.search}};
    nlohmann::json ins = nlohmann::json::object();
    for (const auto& [name, value] : inputs) ins[name] = value;
    doc["inputs"] = ins;
    nlohmann::json outs = nlohmann::json::object();
    for (const ManifestEntry& entry : outputs) {
        const fs::path full = manifest_path.parent_path() / entry.path;
        outs[entry.name] = {{"path", entry.path},
                            {"fnv1a", "0x" + to_hex(file_fingerprint(full.string()))}};
    }
    doc["outputs"] = outs;
    write_text_file(manifest_path, doc.dump(2) + "\n");
}

PipelineLayout pipeline_layout(const fs::path& out_dir) {
    PipelineLayout l;
    l.out_dir = out_dir;
    l.train_data = out_dir / "train.txt";
    l.eval_data = out_dir / "eval.txt";
    l.teacher_model = out_dir / "teacher.model";
    l.strong_model = out_dir / "strong.model";
    l.weak_model = out_dir / "weak.model";
    l.vanilla_model = out_dir / "vanilla.model";
    l.anomaly_model = out_dir / "anomaly.model";
    l.cascade_file = out_dir / "deeptrust.cascade";
    l.attacks_log = out_dir / "attacks.jsonl";
    l.report_json = out_dir / "report.json";
    l.report_table = out_dir / "report.txt";
    l.manifest = out_dir / "manifest.json";
    return l;
}

PipelineResult run_pipeline(const ExperimentConfig& config, const fs::path& out_dir) {
    config.validate();
    const DerivedSeeds seeds = derive_seeds(config.seed);
    const PipelineLayout layout = pipeline_layout(out_dir);
    fs::create_directories(out_dir);

    // Stage 0: data. Synthesized datasets are persisted so the run is
    // inspectable; preexisting datasets stay where they are.
    const LabeledDataset train_ds = obtain_train_data(config, seeds);
    const LabeledDataset eval_ds = *obtain_eval_data(config, seeds, /*required=*/true);
    std::vector<ManifestEntry> outputs;
    if (config.synth) {
        write_sparse_file(layout.train_data.string(), train_ds);
        write_sparse_file(layout.eval_data.string(), eval_ds);
        outputs.push_back({"train_data", layout.train_data.filename().string()});
        outputs.push_back({"eval_data", layout.eval_data.filename().string()});
    }

    // Stage 1: random-forest teacher.
    RandomForestConfig teacher_cfg = config.teacher;
    teacher_cfg.seed = seeds.teacher;
    {
        const RandomForestModel teacher = rf_train(train_ds, teacher_cfg);
        save_forest_model(layout.teacher_model.string(), teacher);
    }
    const RandomForestModel teacher = load_forest_model(layout.teacher_model.string());
    outputs.push_back({"teacher_model", layout.teacher_model.filename().string()});

    // Stage 2: the strong network trains on teacher-smoothed labels.
    MlpConfig mlp_cfg = config.mlp;
    {
        const LabeledDataset smoothed = smooth_labels(train_ds, teacher, config.strong.lambda);
        mlp_cfg.seed = seeds.strong;
        const MlpModel strong =
            adv_train(smoothed, mlp_cfg, resolve_adv_config(config, config.strong, seeds.strong));
        save_mlp_model(layout.strong_model.string(), strong);
    }
    outputs.push_back({"strong_model", layout.strong_model.filename().string()});

    // Stage 3: the weak network (lambda defaults to 0 = raw labels).
    {
        const LabeledDataset smoothed = smooth_labels(train_ds, teacher, config.weak.lambda);
        mlp_cfg.seed = seeds.weak;
        const MlpModel weak =
            adv_train(smoothed, mlp_cfg, resolve_adv_config(config, config.weak, seeds.weak));
        save_mlp_model(layout.weak_model.string(), weak);
    }
    const MlpModel weak = load_mlp_model(layout.weak_model.string());
    outputs.push_back({"weak_model", layout.weak_model.filename().string()});

    // A conventionally trained peer for the logit-correlation diagnostics.
    {
        mlp_cfg.seed = seeds.vanilla;
        const MlpModel vanilla = train(train_ds, mlp_cfg);
        save_mlp_model(layout.vanilla_model.string(), vanilla);
    }
    const MlpModel vanilla = load_mlp_model(layout.vanilla_model.string());
    outputs.push_back({"vanilla_model", layout.vanilla_model.filename().string()});

    // Stage 4: anomaly gate on benign weak-net embeddings. The subsample is
    // clamped to the available pool, matching common isolation-forest
    // implementations.
    {
        const std::vector<std::vector<double>> embeddings = benign_embeddings(weak, train_ds);
        IsolationForestConfig anomaly_cfg = config.anomaly;
        anomaly_cfg.seed = seeds.anomaly;
        anomaly_cfg.subsample_size = static_cast<std::uint32_t>(
            std::min<std::size_t>(anomaly_cfg.subsample_size, embeddings.size()));
        const IsolationForestModel gate = iforest_train(embeddings, anomaly_cfg);
        save_iforest_model(layout.anomaly_model.string(), gate);
    }
    outputs.push_back({"anomaly_model", layout.anomaly_model.filename().string()});

    // Stage 5: the cascade plan wires the persisted artifacts together; the
    // runtime system is loaded back from that file.
    {
        CascadePlan plan;
        plan.slots = {{-1, layout.strong_model.filename().string()},
                      {-1, layout.weak_model.filename().string()},
                      {0, ""}};
        ConditionSpec first;
        first.kind = Condition::Kind::threshold_ge;
        first.slot = 1;
        first.sigma = config.sigma1;
        ConditionSpec confident;
        confident.kind = Condition::Kind::threshold_ge;
        confident.slot = 2;
        confident.sigma = 0.5;
        ConditionSpec inlier;
        inlier.kind = Condition::Kind::inlier_gate;
        inlier.slot = 2;
        inlier.anomaly_path = layout.anomaly_model.filename().string();
        ConditionSpec second;
        second.kind = Condition::Kind::composite;
        second.combinator = Condition::Combinator::any_of;
        second.children = {confident, inlier};
        plan.conditions = {first, second};
        plan.threshold = config.threshold;
        save_cascade_plan(layout.cascade_file.string(), plan);
    }
    outputs.push_back({"cascade", layout.cascade_file.filename().string()});
    const auto system = std::make_shared<CascadeConfig>(load_cascade(layout.cascade_file.string()));

    PipelineResult result;
    result.layout = layout;

    // Stage 6: clean rates on the held-out set.
    result.clean = clean_metrics(*system, eval_ds);

    // Stage 7: the attack sweep, skipped entirely when no budgets are
    // configured.
    std::map<int, double> tpr_fsa;
    {
        std::vector<SparseBinaryVector> malware;
        std::vector<SparseBinaryVector> goodware;
        for (std::size_t i = 0; i < eval_ds.size(); ++i) {
            if (eval_ds.labels[i] >= 0.5) {
                if (config.attack_max_samples == 0 || malware.size() < config.attack_max_samples) {
                    malware.push_back(eval_ds.samples[i]);
                }
            } else {
                goodware.push_back(eval_ds.samples[i]);
            }
        }
        if (!config.attack_budgets.empty() && !malware.empty()) {
            GaConfig ga = config.ga;
            ga.seed = seeds.attack;
            result.sweep = attack_dataset(cascade_target(system), malware, config.attack_budgets,
                                          goodware, config.feature_space(), ga);
            for (const auto& [budget, value] : result.sweep.tpr_by_budget) {
                tpr_fsa[static_cast<int>(budget)] = value;
            }
        }
        std::string log_text;
        for (const SampleAttackRecord& rec : result.sweep.records) {
            const nlohmann::json line = {{"budget", rec.budget},
                                         {"sample", rec.sample_index},
                                         {"evaded", rec.evaded},
                                         {"final_score", rec.final_score},
                                         {"queries", rec.queries},
                                         {"generations", rec.generations}};
            log_text += line.dump() + "\n";
        }
        write_text_file(layout.attacks_log, log_text);
        outputs.push_back({"attacks_log", layout.attacks_log.filename().string()});
    }

    // Stage 8: logit correlations between the three networks. Degenerate
    // logit series (constant output) simply omit their pair.
    std::map<std::string, double> rho;
    {
        const MlpModel strong = load_mlp_model(layout.strong_model.string());
        const auto put_rho = [&rho, &eval_ds](const std::string& name, const MlpModel& a,
                                              const MlpModel& b) {
            try {
                rho[name] = pearson_logits(a, b, eval_ds);
            } catch (const ValidationError&) {
            }
        };
        put_rho("strong_weak", strong, weak);
        put_rho("strong_vanilla", strong, vanilla);
        put_rho("weak_vanilla", weak, vanilla);
    }

    // Stage 9: report assembly and the run manifest.
    result.report = assemble_report(result.clean.tnr_value, result.clean.tpr_value, tpr_fsa, rho,
                                    cascade_aut(*system, eval_ds));
    write_text_file(layout.report_json, result.report.to_json());
    write_text_file(layout.report_table, result.report.to_table());
    outputs.push_back({"report", layout.report_json.filename().string()});
    outputs.push_back({"report_table", layout.report_table.filename().string()});

    std::map<std::string, std::string> inputs;
    if (!config.synth) {
        inputs["train_data"] = config.train_path;
        inputs["eval_data"] = config.eval_path;
    }
    write_manifest(layout.manifest, "pipeline", config, seeds, outputs, inputs);
    return result;
}

}  // namespace sentinel
