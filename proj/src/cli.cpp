#include "sentinel/cli.hpp"

#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sentinel/advtrain.hpp"
#include "sentinel/anomaly.hpp"
#include "sentinel/attack.hpp"
#include "sentinel/cascade.hpp"
#include "sentinel/config.hpp"
#include "sentinel/eval.hpp"
#include "sentinel/model_io.hpp"
#include "sentinel/pipeline.hpp"
#include "sentinel/search.hpp"
#include "sentinel/teacher.hpp"

namespace sentinel {

namespace {

namespace fs = std::filesystem;

struct CliOptions {
    std::string config_path;
    std::string out_dir = "out";
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    std::string data_path;
    std::string model_path;
    std::string pool_path;
    std::string embedder_path;
    std::string strong_path;
    std::string weak_path;
    std::string gate_path;
    std::string net = "strong";
};

void require_exists(const std::string& path, const char* what) {
    if (!fs::exists(path)) {
        throw ValidationError(std::string(what) + " does not exist: " + path);
    }
}

ExperimentConfig resolve_config(const CliOptions& opts) {
    ExperimentConfig cfg = default_config();
    if (!opts.config_path.empty()) {
        require_exists(opts.config_path, "config file");
        cfg = load_config_file(opts.config_path);
    }
    for (const std::string& kv : opts.overrides) apply_override(cfg, kv);
    if (opts.seed) cfg.seed = *opts.seed;
    cfg.validate();
    return cfg;
}

LabeledDataset read_dataset(const std::string& path) {
    require_exists(path, "dataset");
    return read_sparse_file(path);
}

LabeledDataset primary_train_data(const CliOptions& opts, const ExperimentConfig& cfg,
                                  const DerivedSeeds& seeds) {
    if (!opts.data_path.empty()) return read_dataset(opts.data_path);
    return obtain_train_data(cfg, seeds);
}

LabeledDataset primary_eval_data(const CliOptions& opts, const ExperimentConfig& cfg,
                                 const DerivedSeeds& seeds) {
    if (!opts.data_path.empty()) return read_dataset(opts.data_path);
    return *obtain_eval_data(cfg, seeds, /*required=*/true);
}

fs::path ensure_out_dir(const CliOptions& opts) {
    const fs::path out(opts.out_dir);
    fs::create_directories(out);
    return out;
}

void command_manifest(const fs::path& out, const std::string& command,
                      const ExperimentConfig& cfg, const DerivedSeeds& seeds,
                      const std::vector<ManifestEntry>& outputs,
                      const std::map<std::string, std::string>& inputs = {}) {
    write_manifest(out / (command + "_manifest.json"), command, cfg, seeds, outputs, inputs);
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for writing: " + path.string());
    f << text;
    if (!f) throw IoError("failed writing: " + path.string());
}

/// Slot/gate reference stored in a cascade plan: a bare filename when the
/// model already lives in this plan's directory, an absolute path otherwise.
std::string plan_ref(const std::string& model_path, const fs::path& out_dir) {
    const fs::path p(model_path);
    std::error_code ec;
    if (fs::equivalent(p.parent_path().empty() ? fs::path(".") : p.parent_path(), out_dir, ec)) {
        return p.filename().string();
    }
    return fs::absolute(p).string();
}

const AdvNetSection& net_section(const ExperimentConfig& cfg, const std::string& net) {
    if (net == "strong") return cfg.strong;
    if (net == "weak") return cfg.weak;
    throw ValidationError("--net must be strong or weak, got '" + net + "'");
}

int cmd_synth(const CliOptions& opts) {
    const ExperimentConfig cfg = resolve_config(opts);
    const DerivedSeeds seeds = derive_seeds(cfg.seed);
    const fs::path out = ensure_out_dir(opts);
    const LabeledDataset train_ds = synth_generate(cfg.train_synth_spec(), seeds.synth_train);
    const LabeledDataset eval_ds = synth_generate(cfg.eval_synth_spec(), seeds.synth_eval);
    write_sparse_file((out / "train.txt").string(), train_ds);
    write_sparse_file((out / "eval.txt").string(), eval_ds);
    command_manifest(out, "synth", cfg, seeds, {{"train_data", "train.txt"}, {"eval_data", "eval.txt"}});
    std::cout << "wrote " << (out / "train.txt").string() << " (" << train_ds.size()
              << " samples) and " << (out / "eval.txt").string() << " (" << eval_ds.size()
              << " samples)\n";
    return 0;
}

int cmd_train(const CliOptions& opts) {
    const ExperimentConfig cfg = resolve_config(opts);
    const DerivedSeeds seeds = derive_seeds(cfg.seed);
    const fs::path out = ensure_out_dir(opts);
    const LabeledDataset ds = primary_train_data(opts, cfg, seeds);
    MlpConfig mlp_cfg = cfg.mlp;
    mlp_cfg.seed = seeds.vanilla;
    const MlpModel model = train(ds, mlp_cfg);
    save_mlp_model((out / "mlp.model").string(), model);
    std::map<std::string, std::string> inputs;
    if (!opts.data_path.empty()) inputs["data"] = opts.data_path;
    command_manifest(out, "train", cfg, seeds, {{"model", "mlp.model"}}, inputs);
    std::cout << "wrote " << (out / "mlp.model").string()
              << " (val_f1 = " << format_double(model.best_val_f1) << ")\n";
    return 0;
}

int cmd_advtrain(const CliOptions& opts) {
    const ExperimentConfig cfg = resolve_config(opts);
    const DerivedSeeds seeds = derive_seeds(cfg.seed);
    const fs::path out = ensure_out_dir(opts);
    const AdvNetSection& section = net_section(cfg, opts.net);
    const std::uint64_t seed = opts.net == "strong" ? seeds.strong : seeds.weak;
    const LabeledDataset ds = primary_train_data(opts, cfg, seeds);
    MlpConfig mlp_cfg = cfg.mlp;
    mlp_cfg.seed = seed;
    const MlpModel model = adv_train(ds, mlp_cfg, resolve_adv_config(cfg, section, seed));
    const std::string file = opts.net + ".model";
    save_mlp_model((out / file).string(), model);
    std::map<std::string, std::string> inputs;
    if (!opts.data_path.empty()) inputs["data"] = opts.data_path;
    command_manifest(out, "advtrain", cfg, seeds, {{"model", file}}, inputs);
    std::cout << "wrote " << (out / file).string()
              << " (val_f1 = " << format_double(model.best_val_f1) << ")\n";
    return 0;
}

int cmd_smooth(const CliOptions& opts) {
    const ExperimentConfig cfg = resolve_config(opts);
    const DerivedSeeds seeds = derive_seeds(cfg.seed);
    const fs::path out = ensure_out_dir(opts);
    const AdvNetSection& section = net_section(cfg, opts.net);
    const LabeledDataset ds = primary_train_data(opts, cfg, seeds);
    RandomForestConfig teacher_cfg = cfg.teacher;
    teacher_cfg.seed = seeds.teacher;
    const RandomForestModel teacher = rf_train(ds, teacher_cfg);
    save_forest_model((out / "teacher.model").string(), teacher);
    const LabeledDataset smoothed = smooth_labels(ds, teacher, section.lambda);
    write_sparse_file((out / "smoothed.txt").string(), smoothed);
    std::map<std::string, std::string> inputs;
    if (!opts.data_path.empty()) inputs["data"] = opts.data_path;
    command_manifest(out, "smooth", cfg, seeds,
                     {{"teacher_model", "teacher.model"}, {"smoothed_data", "smoothed.txt"}}, inputs);
    std::cout << "wrote " << (out / "teacher.model").string() << " and "
              << (out / "smoothed.txt").string() << " (lambda = " << format_double(section.lambda)
              << ")\n";
    return 0;
}

int cmd_anomaly(const CliOptions& opts) {
    const ExperimentConfig cfg = resolve_config(opts);
    const DerivedSeeds seeds = derive_seeds(cfg.seed);
    const fs::path out = ensure_out_dir(opts);
    require_exists(opts.embedder_path, "embedder model");
    const MlpModel embedder = load_mlp_model(opts.embedder_path);
    const LabeledDataset ds = primary_train_data(opts, cfg, seeds);
    const std::vector<std::vector<double>> embeddings = benign_embeddings(embedder, ds);
    IsolationForestConfig anomaly_cfg = cfg.anomaly;
    anomaly_cfg.seed = seeds.anomaly;
    anomaly_cfg.subsample_size = static_cast<std::uint32_t>(
        std::min<std::size_t>(anomaly_cfg.subsample_size, embeddings.size()));
    const IsolationForestModel gate = iforest_train(embeddings, anomaly_cfg);
    save_iforest_model((out / "anomaly.model").string(), gate);
    std::map<std::string, std::string> inputs{{"embedder", opts.embedder_path}};
    if (!opts.data_path.empty()) inputs["data"] = opts.data_path;
    command_manifest(out, "anomaly", cfg, seeds, {{"anomaly_model", "anomaly.model"}}, inputs);
    std::cout << "wrote " << (out / "anomaly.model").string() << " (trained on "
              << embeddings.size() << " benign embeddings)\n";
    return 0;
}

int cmd_cascade(const CliOptions& opts) {
    const ExperimentConfig cfg = resolve_config(opts);
    const DerivedSeeds seeds = derive_seeds(cfg.seed);
    const fs::path out = ensure_out_dir(opts);
    require_exists(opts.strong_path, "stage-1 model");
    require_exists(opts.weak_path, "stage-2 model");
    require_exists(opts.gate_path, "anomaly model");
    // Check mutual consistency up front so the written file is usable.
    const MlpModel weak = load_mlp_model(opts.weak_path);
    const IsolationForestModel gate = load_iforest_model(opts.gate_path);
    if (weak.config.hidden_sizes.back() != gate.embedding_dim) {
        throw ValidationError("anomaly model expects embeddings of length " +
                              std::to_string(gate.embedding_dim) + " but the stage-2 model emits " +
                              std::to_string(weak.config.hidden_sizes.back()));
    }
    CascadePlan plan;
    plan.slots = {{-1, plan_ref(opts.strong_path, out)},
                  {-1, plan_ref(opts.weak_path, out)},
                  {0, ""}};
    ConditionSpec first;
    first.kind = Condition::Kind::threshold_ge;
    first.slot = 1;
    first.sigma = cfg.sigma1;
    ConditionSpec confident;
    confident.kind = Condition::Kind::threshold_ge;
    confident.slot = 2;
    confident.sigma = 0.5;
    ConditionSpec inlier;
    inlier.kind = Condition::Kind::inlier_gate;
    inlier.slot = 2;
    inlier.anomaly_path = plan_ref(opts.gate_path, out);
    ConditionSpec second;
    second.kind = Condition::Kind::composite;
    second.combinator = Condition::Combinator::any_of;
    second.children = {confident, inlier};
    plan.conditions = {first, second};
    plan.threshold = cfg.threshold;
    const fs::path file = out / "deeptrust.cascade";
    save_cascade_plan(file.string(), plan);
    load_cascade(file.string());  // proves the artifact loads as written
    command_manifest(out, "cascade", cfg, seeds, {{"cascade", "deeptrust.cascade"}},
                     {{"strong", opts.strong_path},
                      {"weak", opts.weak_path},
                      {"gate", opts.gate_path}});
    std::cout << "wrote " << file.string() << " (sigma1 = " << format_double(cfg.sigma1)
              << ", t = " << format_double(cfg.threshold) << ")\n";
    return 0;
}

/// Score/label closures for an eval or attack subject: a single network or
/// a full cascade, chosen by the container's kind tag.
AttackTarget load_target(const std::string& model_path, double threshold) {
    const std::string kind = peek_model_kind(model_path);
    if (kind == "mlp") {
        return mlp_target(std::make_shared<MlpModel>(load_mlp_model(model_path)), threshold);
    }
    if (kind == "cascade") {
        return cascade_target(std::make_shared<CascadeConfig>(load_cascade(model_path)));
    }
    throw ValidationError("expected an mlp or cascade model, got kind '" + kind + "': " +
                          model_path);
}

int cmd_attack(const CliOptions& opts) {
    const ExperimentConfig cfg = resolve_config(opts);
    const DerivedSeeds seeds = derive_seeds(cfg.seed);
    const fs::path out = ensure_out_dir(opts);
    require_exists(opts.model_path, "model file");
    const AttackTarget target = load_target(opts.model_path, cfg.threshold);
    const LabeledDataset ds = primary_eval_data(opts, cfg, seeds);
    std::vector<SparseBinaryVector> malware;
    std::vector<SparseBinaryVector> goodware;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (ds.labels[i] >= 0.5) {
            if (cfg.attack_max_samples == 0 || malware.size() < cfg.attack_max_samples) {
                malware.push_back(ds.samples[i]);
            }
        } else {
            goodware.push_back(ds.samples[i]);
        }
    }
    if (!opts.pool_path.empty()) {
        const LabeledDataset pool = read_dataset(opts.pool_path);
        goodware.clear();
        for (std::size_t i = 0; i < pool.size(); ++i) {
            if (pool.labels[i] < 0.5) goodware.push_back(pool.samples[i]);
        }
    }
    GaConfig ga = cfg.ga;
    ga.seed = seeds.attack;
    const AttackSweep sweep =
        attack_dataset(target, malware, cfg.attack_budgets, goodware, cfg.feature_space(), ga);
    std::string log_text;
    for (const SampleAttackRecord& rec : sweep.records) {
        const nlohmann::json line = {{"budget", rec.budget},       {"sample", rec.sample_index},
                                     {"evaded", rec.evaded},       {"final_score", rec.final_score},
                                     {"queries", rec.queries},     {"generations", rec.generations}};
        log_text += line.dump() + "\n";
    }
    write_text(out / "attacks.jsonl", log_text);
    nlohmann::json fsa;
    fsa["n_samples"] = malware.size();
    fsa["tpr_by_budget"] = nlohmann::json::object();
    for (const auto& [budget, value] : sweep.tpr_by_budget) {
        fsa["tpr_by_budget"][std::to_string(budget)] = value;
    }
    write_text(out / "fsa.json", fsa.dump(2) + "\n");
    std::map<std::string, std::string> inputs{{"model", opts.model_path}};
    if (!opts.data_path.empty()) inputs["data"] = opts.data_path;
    if (!opts.pool_path.empty()) inputs["pool"] = opts.pool_path;
    command_manifest(out, "attack", cfg, seeds,
                     {{"attacks_log", "attacks.jsonl"}, {"fsa", "fsa.json"}}, inputs);
    for (const auto& [budget, value] : sweep.tpr_by_budget) {
        std::cout << "tpr@" << budget << " = " << format_double(value) << "\n";
    }
    return 0;
}

int cmd_eval(const CliOptions& opts) {
    const ExperimentConfig cfg = resolve_config(opts);
    const DerivedSeeds seeds = derive_seeds(cfg.seed);
    const fs::path out = ensure_out_dir(opts);
    require_exists(opts.model_path, "model file");
    const std::string kind = peek_model_kind(opts.model_path);
    const AttackTarget target = load_target(opts.model_path, cfg.threshold);
    const LabeledDataset ds = primary_eval_data(opts, cfg, seeds);
    std::vector<int> predicted;
    std::vector<int> truth;
    predicted.reserve(ds.size());
    truth.reserve(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        predicted.push_back(target.label(ds.samples[i]) == Verdict::malware ? 1 : 0);
        truth.push_back(ds.labels[i] >= 0.5 ? 1 : 0);
    }
    const ConfusionCounts counts = confusion(predicted, truth);
    nlohmann::json doc;
    doc["model_kind"] = kind;
    doc["n"] = counts.total();
    doc["tnr"] = tnr(counts).value;
    doc["tpr"] = tpr(counts).value;
    doc["f1"] = f1(counts).value;
    write_text(out / "eval.json", doc.dump(2) + "\n");
    std::map<std::string, std::string> inputs{{"model", opts.model_path}};
    if (!opts.data_path.empty()) inputs["data"] = opts.data_path;
    command_manifest(out, "eval", cfg, seeds, {{"eval", "eval.json"}}, inputs);
    std::cout << "tnr = " << format_double(tnr(counts).value)
              << ", tpr = " << format_double(tpr(counts).value)
              << ", f1 = " << format_double(f1(counts).value) << " (" << counts.total()
              << " samples)\n";
    return 0;
}

int cmd_pipeline(const CliOptions& opts) {
    const ExperimentConfig cfg = resolve_config(opts);
    const PipelineResult result = run_pipeline(cfg, fs::path(opts.out_dir));
    std::cout << result.report.to_table();
    return 0;
}

int cmd_search(const CliOptions& opts) {
    const ExperimentConfig cfg = resolve_config(opts);
    const DerivedSeeds seeds = derive_seeds(cfg.seed);
    const fs::path out = ensure_out_dir(opts);
    const LabeledDataset train_ds = primary_train_data(opts, cfg, seeds);

    TrialObjective objective;
    if (cfg.search.objective == SearchObjective::val_f1) {
        objective = [&cfg, &train_ds](const TrialParams& p, std::uint64_t trial_seed) {
            MlpConfig m = cfg.mlp;
            m.hidden_sizes = p.hidden_sizes;
            m.dropout_rate = p.dropout;
            m.seed = trial_seed;
            return train(train_ds, m).best_val_f1;
        };
    } else {
        // objective_j scores the replay/budget knobs of one adversarially
        // trained network: clean rates plus attack TPR at budgets 25/50/100.
        const auto eval_ds =
            std::make_shared<LabeledDataset>(*obtain_eval_data(cfg, seeds, /*required=*/true));
        objective = [&cfg, &train_ds, eval_ds](const TrialParams& p, std::uint64_t trial_seed) {
            MlpConfig m = cfg.mlp;
            m.seed = trial_seed;
            AdvNetSection section = cfg.strong;
            section.m = p.m;
            section.k = p.k;
            const auto net = std::make_shared<MlpModel>(
                adv_train(train_ds, m, resolve_adv_config(cfg, section, trial_seed)));
            const AttackTarget target = mlp_target(net, cfg.threshold);
            std::vector<SparseBinaryVector> malware;
            std::vector<SparseBinaryVector> goodware;
            std::vector<int> predicted;
            std::vector<int> truth;
            for (std::size_t i = 0; i < eval_ds->size(); ++i) {
                predicted.push_back(target.label(eval_ds->samples[i]) == Verdict::malware ? 1 : 0);
                truth.push_back(eval_ds->labels[i] >= 0.5 ? 1 : 0);
                if (eval_ds->labels[i] >= 0.5) {
                    if (cfg.attack_max_samples == 0 || malware.size() < cfg.attack_max_samples) {
                        malware.push_back(eval_ds->samples[i]);
                    }
                } else {
                    goodware.push_back(eval_ds->samples[i]);
                }
            }
            const ConfusionCounts counts = confusion(predicted, truth);
            GaConfig ga = cfg.ga;
            ga.seed = seed_stream(trial_seed, 1);
            const AttackSweep sweep = attack_dataset(target, malware, {25, 50, 100}, goodware,
                                                     cfg.feature_space(), ga);
            return objective_j(tnr(counts).value, tpr(counts).value, sweep.tpr_by_budget.at(25),
                               sweep.tpr_by_budget.at(50), sweep.tpr_by_budget.at(100));
        };
    }

    const SearchOutcome outcome =
        random_search(cfg.search, objective, cfg.search.trials, seeds.search);

    const auto params_json = [](const TrialParams& p) {
        return nlohmann::json{{"hidden", p.hidden_sizes}, {"dropout", p.dropout},
                              {"m", p.m},                 {"k", p.k},
                              {"teacher_trees", p.teacher_trees},
                              {"min_leaf", p.min_samples_leaf}};
    };
    std::string log_text;
    for (const TrialRecord& rec : outcome.log) {
        const nlohmann::json line = {{"index", rec.index},
                                     {"trial_seed", rec.trial_seed},
                                     {"params", params_json(rec.params)},
                                     {"objective", rec.objective}};
        log_text += line.dump() + "\n";
    }
    write_text(out / "search_trials.jsonl", log_text);
    const nlohmann::json best = {{"best_index", outcome.best_index},
                                 {"best_objective", outcome.best_objective},
                                 {"params", params_json(outcome.best_params)}};
    write_text(out / "search_best.json", best.dump(2) + "\n");
    std::map<std::string, std::string> inputs;
    if (!opts.data_path.empty()) inputs["data"] = opts.data_path;
    command_manifest(out, "search", cfg, seeds,
                     {{"trials", "search_trials.jsonl"}, {"best", "search_best.json"}}, inputs);
    std::cout << "best trial " << outcome.best_index << ": objective = "
              << format_double(outcome.best_objective) << "\n";
    return 0;
}

void add_common_options(CLI::App* sub, CliOptions& opts) {
    sub->add_option("--config", opts.config_path, "experiment config file");
    sub->add_option("--seed", opts.seed, "override the experiment seed");
    sub->add_option("--out", opts.out_dir, "output directory (default: out)");
    sub->add_option("overrides", opts.overrides, "section.key=value config overrides");
}

int run_cli_impl(int argc, char** argv) {
    CLI::App app{"sentinel: staged adversarially robust malware-detection toolkit"};
    app.require_subcommand(1);
    CliOptions opts;

    CLI::App* synth = app.add_subcommand("synth", "generate synthetic train/eval datasets");
    add_common_options(synth, opts);

    CLI::App* train_cmd = app.add_subcommand("train", "train the plain network");
    add_common_options(train_cmd, opts);
    train_cmd->add_option("--data", opts.data_path, "training dataset (default: [data] section)");

    CLI::App* advtrain_cmd = app.add_subcommand("advtrain", "adversarially train a network");
    add_common_options(advtrain_cmd, opts);
    advtrain_cmd->add_option("--data", opts.data_path, "training dataset (default: [data] section)");
    advtrain_cmd->add_option("--net", opts.net, "which section to train: strong or weak");

    CLI::App* smooth = app.add_subcommand("smooth", "train the teacher and smooth labels");
    add_common_options(smooth, opts);
    smooth->add_option("--data", opts.data_path, "training dataset (default: [data] section)");
    smooth->add_option("--net", opts.net, "whose lambda to apply: strong or weak");

    CLI::App* anomaly = app.add_subcommand("anomaly", "train the anomaly gate on benign embeddings");
    add_common_options(anomaly, opts);
    anomaly->add_option("--data", opts.data_path, "training dataset (default: [data] section)");
    anomaly->add_option("--embedder", opts.embedder_path, "network whose embeddings feed the gate")
        ->required();

    CLI::App* cascade = app.add_subcommand("cascade", "wire saved models into a cascade file");
    add_common_options(cascade, opts);
    cascade->add_option("--strong", opts.strong_path, "stage-1 model file")->required();
    cascade->add_option("--weak", opts.weak_path, "stage-2 model file")->required();
    cascade->add_option("--gate", opts.gate_path, "anomaly model file")->required();

    CLI::App* attack = app.add_subcommand("attack", "run the evasion attack sweep");
    add_common_options(attack, opts);
    attack->add_option("--model", opts.model_path, "subject model or cascade file")->required();
    attack->add_option("--data", opts.data_path, "dataset to attack (default: eval data)");
    attack->add_option("--pool", opts.pool_path, "goodware pool dataset (default: benign eval)");

    CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a model or cascade on a dataset");
    add_common_options(eval_cmd, opts);
    eval_cmd->add_option("--model", opts.model_path, "model or cascade file")->required();
    eval_cmd->add_option("--data", opts.data_path, "dataset (default: eval data)");

    CLI::App* pipeline = app.add_subcommand("pipeline", "run the full staged build");
    add_common_options(pipeline, opts);

    CLI::App* search = app.add_subcommand("search", "seeded random hyperparameter search");
    add_common_options(search, opts);
    search->add_option("--data", opts.data_path, "training dataset (default: [data] section)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (synth->parsed()) return cmd_synth(opts);
    if (train_cmd->parsed()) return cmd_train(opts);
    if (advtrain_cmd->parsed()) return cmd_advtrain(opts);
    if (smooth->parsed()) return cmd_smooth(opts);
    if (anomaly->parsed()) return cmd_anomaly(opts);
    if (cascade->parsed()) return cmd_cascade(opts);
    if (attack->parsed()) return cmd_attack(opts);
    if (eval_cmd->parsed()) return cmd_eval(opts);
    if (pipeline->parsed()) return cmd_pipeline(opts);
    if (search->parsed()) return cmd_search(opts);
    return 2;
}

}  // namespace

int run_cli(int argc, char** argv) {
    try {
        return run_cli_impl(argc, argv);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace sentinel
