#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sentinel/attack.hpp"
#include "sentinel/cascade.hpp"
#include "sentinel/config.hpp"
#include "sentinel/eval.hpp"
#include "sentinel/model_io.hpp"

namespace sentinel {

/// Per-component seeds, each an independent stream of the experiment seed,
/// so one integer pins the whole build and no two components share state.
struct DerivedSeeds {
    std::uint64_t synth_train = 0;
    std::uint64_t synth_eval = 0;
    std::uint64_t teacher = 0;
    std::uint64_t strong = 0;
    std::uint64_t weak = 0;
    std::uint64_t vanilla = 0;
    std::uint64_t anomaly = 0;
    std::uint64_t attack = 0;
    std::uint64_t search = 0;
};

DerivedSeeds derive_seeds(std::uint64_t experiment_seed);

/// Expands an [strong]/[weak] section into a runnable adversarial-training
/// config: epochs 0 inherits the [mlp] epoch count, gamma comes from the
/// feature section, and the seed is the caller's derived stream.
AdvTrainConfig resolve_adv_config(const ExperimentConfig& config, const AdvNetSection& section,
                                  std::uint64_t seed);

/// Training dataset per the [data] section: synthesized or read from disk.
LabeledDataset obtain_train_data(const ExperimentConfig& config, const DerivedSeeds& seeds);

/// Held-out dataset per the [data] section. `required` controls whether a
/// missing eval path (when synth=false) is an error or an empty optional.
std::optional<LabeledDataset> obtain_eval_data(const ExperimentConfig& config,
                                               const DerivedSeeds& seeds, bool required);

/// Embeddings of the benign samples (label < 0.5) under a network.
std::vector<std::vector<double>> benign_embeddings(const MlpModel& model,
                                                   const LabeledDataset& dataset);

/// Score/label closures over a loaded cascade (shared ownership keeps the
/// models alive inside the closures).
AttackTarget cascade_target(std::shared_ptr<const CascadeConfig> cascade);

/// Score/label closures over a single network with decision threshold t.
AttackTarget mlp_target(std::shared_ptr<const MlpModel> model, double t);

/// Confusion rates of a cascade over a labeled dataset.
struct CleanMetrics {
    double tnr_value = 0.0;
    double tpr_value = 0.0;
    double f1_value = 0.0;
    ConfusionCounts counts;
};

CleanMetrics clean_metrics(const CascadeConfig& cascade, const LabeledDataset& dataset);

/// Per-round F1 trapezoid over a dataset's round tags; absent when the
/// dataset carries fewer than two rounds.
std::optional<double> cascade_aut(const CascadeConfig& cascade, const LabeledDataset& dataset);

/// One named output artifact, path relative to the manifest's directory.
struct ManifestEntry {
    std::string name;
    std::string path;
};

/// FNV-1a over a file's bytes (IoError if unreadable).
std::uint64_t file_fingerprint(const std::string& path);

/// Writes a JSON manifest recording the command, the full resolved config,
/// its fingerprint, every derived seed, and each output with a content
/// hash. Deterministic byte-for-byte for equal inputs.
void write_manifest(const std::filesystem::path& manifest_path, const std::string& command,
                    const ExperimentConfig& config, const DerivedSeeds& seeds,
                    const std::vector<ManifestEntry>& outputs,
                    const std::map<std::string, std::string>& inputs = {});

/// Fixed filenames of one pipeline run under its output directory.
struct PipelineLayout {
    std::filesystem::path out_dir;
    std::filesystem::path train_data;
    std::filesystem::path eval_data;
    std::filesystem::path teacher_model;
    std::filesystem::path strong_model;
    std::filesystem::path weak_model;
    std::filesystem::path vanilla_model;
    std::filesystem::path anomaly_model;
    std::filesystem::path cascade_file;
    std::filesystem::path attacks_log;
    std::filesystem::path report_json;
    std::filesystem::path report_table;
    std::filesystem::path manifest;
};

PipelineLayout pipeline_layout(const std::filesystem::path& out_dir);

struct PipelineResult {
    PipelineLayout layout;
    RobustnessReport report;
    CleanMetrics clean;
    AttackSweep sweep;  // empty when [attack] budgets is empty
};

/// The staged build: teacher -> strong net on smoothed labels -> weak net
/// -> anomaly gate on benign weak-net embeddings -> cascade -> attack sweep
/// -> report. Every stage artifact lands under out_dir and is re-loaded
/// from disk before use downstream, so the persisted files are the system.
PipelineResult run_pipeline(const ExperimentConfig& config, const std::filesystem::path& out_dir);

}  // namespace sentinel
