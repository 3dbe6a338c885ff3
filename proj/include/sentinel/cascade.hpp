#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "sentinel/anomaly.hpp"
#include "sentinel/common.hpp"
#include "sentinel/features.hpp"
#include "sentinel/mlp.hpp"

namespace sentinel {

struct DetectorOutput {
    double probability = 0.0;
    std::vector<double> embedding;
};

/// A scoring component a cascade slot can point at. Slots holding the same
/// Detector instance alias each other and share one evaluation per input.
class Detector {
public:
    virtual ~Detector() = default;
    virtual DetectorOutput evaluate(const SparseBinaryVector& x) const = 0;
    virtual std::uint32_t input_dim() const = 0;
    virtual std::uint32_t embedding_dim() const = 0;
};

class MlpDetector : public Detector {
public:
    explicit MlpDetector(std::shared_ptr<const MlpModel> model);
    DetectorOutput evaluate(const SparseBinaryVector& x) const override;
    std::uint32_t input_dim() const override;
    std::uint32_t embedding_dim() const override;
    const MlpModel& model() const { return *model_; }

private:
    std::shared_ptr<const MlpModel> model_;
};

/// Activation condition over slot scores (slots are 1-based). inlier_gate
/// fires when the slot's score is below one half while the slot's embedding
/// looks like known training data to the anomaly model.
struct Condition {
    enum class Kind : std::uint8_t { threshold_ge, neg_threshold, inlier_gate, composite };
    enum class Combinator : std::uint8_t { any_of, all_of };

    Kind kind = Kind::threshold_ge;
    std::size_t slot = 1;
    double sigma = 0.5;
    std::shared_ptr<const IsolationForestModel> anomaly;
    Combinator combinator = Combinator::any_of;
    std::vector<Condition> children;

    static Condition threshold_ge(std::size_t slot, double sigma);
    static Condition neg_threshold(std::size_t slot, double sigma);
    static Condition inlier_gate(std::size_t slot,
                                 std::shared_ptr<const IsolationForestModel> anomaly);
    static Condition any_of(std::vector<Condition> children);
    static Condition all_of(std::vector<Condition> children);

    void validate(std::size_t n_slots) const;
};

struct CascadeConfig {
    std::vector<std::shared_ptr<const Detector>> slots;  // F, in evaluation order
    std::vector<Condition> conditions;                   // C, one per slot except the last
    double threshold = 0.5;                              // t

    void validate() const;
};

enum class Verdict : std::uint8_t { goodware, malware };

struct CascadeDecision {
    double score = 0.0;
    std::size_t deciding_stage = 1;  // 1-based
    Verdict label = Verdict::goodware;
    // Scores for the stages whose model ran for this input; aliased slots
    // share one run and therefore all carry its score.
    std::vector<std::optional<double>> stage_scores;
};

CascadeDecision evaluate(const CascadeConfig& cascade, const SparseBinaryVector& x);
Verdict classify(const CascadeConfig& cascade, const SparseBinaryVector& x);

/// F = [strong, weak, strong] with the third slot aliasing the first;
/// C1: f1 >= sigma1, C2: f2 >= 0.5 or (f2 < 0.5 and the gate accepts f2's
/// embedding).
CascadeConfig build_deeptrust(std::shared_ptr<const Detector> f_strong,
                              std::shared_ptr<const Detector> f_weak,
                              std::shared_ptr<const IsolationForestModel> anomaly_model,
                              double sigma1 = 0.78, double t = 0.5);

struct EnsembleDecision {
    double score = 0.0;
    Verdict label = Verdict::goodware;
};

EnsembleDecision ensemble_average(const std::vector<std::shared_ptr<const Detector>>& models,
                                  const SparseBinaryVector& x, double t);

}  // namespace sentinel
