#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sentinel/anomaly.hpp"
#include "sentinel/cascade.hpp"
#include "sentinel/mlp.hpp"
#include "sentinel/teacher.hpp"

namespace sentinel {

inline constexpr std::uint32_t kModelFormatVersion = 1;

/// Reads just enough of a model file to report its kind string
/// ("mlp" | "forest" | "iforest" | "cascade").
std::string peek_model_kind(const std::string& path);

void save_mlp_model(const std::string& path, const MlpModel& model);
MlpModel load_mlp_model(const std::string& path);

void save_forest_model(const std::string& path, const RandomForestModel& model);
RandomForestModel load_forest_model(const std::string& path);

void save_iforest_model(const std::string& path, const IsolationForestModel& model);
IsolationForestModel load_iforest_model(const std::string& path);

/// Slot reference in a saved cascade: either a model file path (relative
/// paths resolve against the cascade file's directory) or an alias of an
/// earlier slot.
struct CascadeSlotRef {
    std::int32_t alias_of = -1;  // >= 0: index of the aliased earlier slot
    std::string path;            // used when alias_of < 0

    bool operator==(const CascadeSlotRef&) const = default;
};

struct ConditionSpec {
    Condition::Kind kind = Condition::Kind::threshold_ge;
    std::uint64_t slot = 1;
    double sigma = 0.5;
    std::string anomaly_path;  // inlier_gate only
    Condition::Combinator combinator = Condition::Combinator::any_of;
    std::vector<ConditionSpec> children;

    bool operator==(const ConditionSpec&) const = default;
};

struct CascadePlan {
    std::vector<CascadeSlotRef> slots;
    std::vector<ConditionSpec> conditions;
    double threshold = 0.5;

    bool operator==(const CascadePlan&) const = default;
    void validate() const;
};

void save_cascade_plan(const std::string& path, const CascadePlan& plan);
CascadePlan read_cascade_plan(const std::string& path);

/// Loads the plan and materializes every referenced model. Aliased slots and
/// repeated paths share one detector instance, so the cascade's evaluation
/// economy survives a round trip.
CascadeConfig load_cascade(const std::string& path);

}  // namespace sentinel
