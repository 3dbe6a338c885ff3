#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sentinel/advtrain.hpp"
#include "sentinel/anomaly.hpp"
#include "sentinel/attack.hpp"
#include "sentinel/common.hpp"
#include "sentinel/features.hpp"
#include "sentinel/mlp.hpp"
#include "sentinel/search.hpp"
#include "sentinel/teacher.hpp"

namespace sentinel {

/// One adversarially trained network in the experiment: the replay/budget
/// knobs plus the teacher blend weight applied to its training labels.
struct AdvNetSection {
    std::uint32_t m = 10;
    std::uint32_t k = 100;
    SelectionStrategy strategy = SelectionStrategy::topk;
    std::uint32_t epochs = 0;  // 0 = inherit [mlp] epochs
    bool reset_delta_per_batch = false;
    double lambda = 0.5;
};

/// Full experiment configuration. Defaults reproduce the shipped
/// configuration table: hidden (256,32,256), dropout 0.70, lr 0.001,
/// weight decay 0.00246, positive class weight 8.5, strong net m=10 k=100
/// topk lambda=0.5, weak net m=2 k=75 topk lambda=0, sigma1=0.78,
/// contamination 0.14, decision threshold t=0.5.
struct ExperimentConfig {
    std::uint64_t seed = 42;

    // [features]
    std::uint32_t feature_dim = 200;
    std::vector<std::string> gamma_categories;  // empty = every category

    // [data]
    bool synth = true;
    std::string train_path;
    std::string eval_path;
    std::size_t synth_train_samples = 1000;
    std::size_t synth_eval_samples = 500;
    double synth_malware_ratio = 0.1;
    std::uint32_t synth_signature_features = 10;
    double synth_noise_rate = 0.02;

    // [mlp]
    MlpConfig mlp;

    // [strong] / [weak]
    AdvNetSection strong{10, 100, SelectionStrategy::topk, 0, false, 0.5};
    AdvNetSection weak{2, 75, SelectionStrategy::topk, 0, false, 0.0};

    // [teacher]
    RandomForestConfig teacher;

    // [anomaly]
    IsolationForestConfig anomaly;

    // [cascade]
    double sigma1 = 0.78;
    double threshold = 0.5;

    // [attack]
    std::vector<std::uint32_t> attack_budgets{25, 50, 100};
    GaConfig ga;

    // [eval]
    std::size_t attack_max_samples = 25;  // 0 = attack every malware sample

    // [search]
    SearchSpace search;

    FeatureSpace feature_space() const;
    ManipulabilityMask gamma() const;
    SynthSpec train_synth_spec() const;
    SynthSpec eval_synth_spec() const;

    void validate() const;
};

/// The built-in defaults (the configuration table above), before any file
/// or flag overrides.
ExperimentConfig default_config();

/// Parses sectioned key/value text over the defaults. Lines are `key =
/// value` under `[section]` headers; `#` starts a comment; `seed` may
/// appear before any section. Unknown sections/keys and malformed lines
/// raise FormatError naming `origin` and the line number; out-of-range
/// values raise ValidationError.
ExperimentConfig parse_config_text(const std::string& text, const std::string& origin);

/// Reads and parses a config file (FormatError/ValidationError as above,
/// IoError if unreadable).
ExperimentConfig load_config_file(const std::string& path);

/// Applies one `section.key=value` override (same keys as the file).
void apply_override(ExperimentConfig& config, const std::string& assignment);

/// Canonical text rendering: every key in a fixed order, values in
/// shortest round-trip form. parse_config_text(config_to_text(c)) == c.
std::string config_to_text(const ExperimentConfig& config);

/// FNV-1a over the canonical rendering; recorded in manifests.
std::uint64_t config_fingerprint(const ExperimentConfig& config);

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);

}  // namespace sentinel
