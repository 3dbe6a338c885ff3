#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sentinel/common.hpp"

namespace sentinel {

struct ConfusionCounts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;

    std::size_t total() const { return tp + fp + tn + fn; }
};

/// Rate with a degenerate flag: zero-denominator inputs yield value 0 and
/// degenerate=true instead of failing, so batch evaluation stays total.
struct Rate {
    double value = 0.0;
    bool degenerate = false;
};

ConfusionCounts confusion(const std::vector<int>& predicted, const std::vector<int>& truth);

Rate tnr(const ConfusionCounts& c);
Rate tpr(const ConfusionCounts& c);
Rate f1(const ConfusionCounts& c);

/// Trapezoidal average of a chronologically ordered series:
/// (1/(N-1)) * sum_j (s_j + s_{j+1})/2. Needs at least two values.
double aut(const std::vector<double>& scores);

/// Tuning objective: max(0, (tnr - 0.95)/0.05) * (tpr_clean * tpr_25 *
/// tpr_50 * tpr_100)^(1/4). All inputs must lie in [0,1].
double objective_j(double tnr_value, double tpr_clean, double tpr_25, double tpr_50,
                   double tpr_100);

/// Sample Pearson correlation. Requires >= 2 points and nonzero variance on
/// both sides.
double pearson(const std::vector<double>& a, const std::vector<double>& b);

struct MlpModel;
struct LabeledDataset;

/// Pearson correlation of the two models' logits over a dataset.
double pearson_logits(const MlpModel& a, const MlpModel& b, const LabeledDataset& ds);

struct RobustnessReport {
    double tnr_value = 0.0;
    double tpr_clean = 0.0;
    std::map<int, double> tpr_fsa;         // attack budget -> TPR under attack
    std::optional<double> j;               // absent when a required budget is missing
    std::map<std::string, double> rho;     // per-model logit correlation
    std::optional<double> aut_value;

    std::string to_json() const;
    static RobustnessReport from_json(const std::string& text);
    std::string to_table() const;
};

/// Computes j iff budgets 25, 50 and 100 are all present.
RobustnessReport assemble_report(double tnr_value, double tpr_clean,
                                 const std::map<int, double>& tpr_fsa,
                                 const std::map<std::string, double>& rho,
                                 std::optional<double> aut_value);

}  // namespace sentinel
