#include "sentinel/cascade.hpp"

#include <string>
#include <unordered_map>
#include <utility>

namespace sentinel {

MlpDetector::MlpDetector(std::shared_ptr<const MlpModel> model) : model_(std::move(model)) {
    if (!model_) throw ValidationError("MlpDetector: model must not be null");
    model_->validate_shapes();
}

DetectorOutput MlpDetector::evaluate(const SparseBinaryVector& x) const {
    ForwardTrace trace = forward(*model_, x, RunMode::infer);
    return DetectorOutput{trace.probability, trace.embedding()};
}

std::uint32_t MlpDetector::input_dim() const { return model_->input_dim; }

std::uint32_t MlpDetector::embedding_dim() const {
    return model_->config.hidden_sizes.back();
}

Condition Condition::threshold_ge(std::size_t slot, double sigma) {
    Condition c;
    c.kind = Kind::threshold_ge;
    c.slot = slot;
    c.sigma = sigma;
    return c;
}

Condition Condition::neg_threshold(std::size_t slot, double sigma) {
    Condition c;
    c.kind = Kind::neg_threshold;
    c.slot = slot;
    c.sigma = sigma;
    return c;
}

Condition Condition::inlier_gate(std::size_t slot,
                                 std::shared_ptr<const IsolationForestModel> anomaly) {
    Condition c;
    c.kind = Kind::inlier_gate;
    c.slot = slot;
    c.anomaly = std::move(anomaly);
    return c;
}

Condition Condition::any_of(std::vector<Condition> children) {
    Condition c;
    c.kind = Kind::composite;
    c.combinator = Combinator::any_of;
    c.children = std::move(children);
    return c;
}

Condition Condition::all_of(std::vector<Condition> children) {
    Condition c;
    c.kind = Kind::composite;
    c.combinator = Combinator::all_of;
    c.children = std::move(children);
    return c;
}

void Condition::validate(std::size_t n_slots) const {
    switch (kind) {
        case Kind::threshold_ge:
        case Kind::neg_threshold:
            if (slot < 1 || slot > n_slots)
                throw ValidationError("condition references slot " + std::to_string(slot) +
                                      " outside [1, " + std::to_string(n_slots) + "]");
            if (!(sigma >= 0.0 && sigma <= 1.0))
                throw ValidationError("condition threshold must lie in [0, 1]");
            break;
        case Kind::inlier_gate:
            if (slot < 1 || slot > n_slots)
                throw ValidationError("condition references slot " + std::to_string(slot) +
                                      " outside [1, " + std::to_string(n_slots) + "]");
            if (!anomaly) throw ValidationError("inlier gate requires an anomaly model");
            if (anomaly->trees.empty())
                throw ValidationError("inlier gate requires a trained anomaly model");
            break;
        case Kind::composite:
            if (children.empty())
                throw ValidationError("composite condition must have at least one child");
            for (const Condition& child : children) child.validate(n_slots);
            break;
    }
}

void CascadeConfig::validate() const {
    if (slots.empty()) throw ValidationError("cascade needs at least one model slot");
    if (conditions.size() + 1 != slots.size())
        throw ValidationError("cascade with " + std::to_string(slots.size()) +
                              " slots needs exactly " + std::to_string(slots.size() - 1) +
                              " conditions, got " + std::to_string(conditions.size()));
    const std::uint32_t dim = slots.front() ? slots.front()->input_dim() : 0;
    for (const auto& slot : slots) {
        if (!slot) throw ValidationError("cascade slot must not be null");
        if (slot->input_dim() != dim)
            throw ValidationError("cascade slots disagree on input dimension");
    }
    for (const Condition& c : conditions) c.validate(slots.size());
    if (!std::isfinite(threshold)) throw ValidationError("cascade threshold must be finite");
}

namespace {

class SlotCache {
public:
    SlotCache(const CascadeConfig& cascade, const SparseBinaryVector& x)
        : cascade_(cascade), x_(x) {}

    const DetectorOutput& get(std::size_t slot_1based) {
        const Detector* key = cascade_.slots[slot_1based - 1].get();
        auto it = memo_.find(key);
        if (it == memo_.end()) it = memo_.emplace(key, key->evaluate(x_)).first;
        return it->second;
    }

    const DetectorOutput* peek(const Detector* key) const {
        auto it = memo_.find(key);
        return it == memo_.end() ? nullptr : &it->second;
    }

private:
    const CascadeConfig& cascade_;
    const SparseBinaryVector& x_;
    std::unordered_map<const Detector*, DetectorOutput> memo_;
};

bool condition_holds(const Condition& c, SlotCache& cache) {
    switch (c.kind) {
        case Condition::Kind::threshold_ge:
            return cache.get(c.slot).probability >= c.sigma;
        case Condition::Kind::neg_threshold:
            return cache.get(c.slot).probability < c.sigma;
        case Condition::Kind::inlier_gate: {
            const DetectorOutput& out = cache.get(c.slot);
            if (!(out.probability < 0.5)) return false;
            return iforest_signal(*c.anomaly, out.embedding);
        }
        case Condition::Kind::composite:
            if (c.combinator == Condition::Combinator::any_of) {
                for (const Condition& child : c.children)
                    if (condition_holds(child, cache)) return true;
                return false;
            }
            for (const Condition& child : c.children)
                if (!condition_holds(child, cache)) return false;
            return true;
    }
    throw std::logic_error("unreachable condition kind");
}

}  // namespace

CascadeDecision evaluate(const CascadeConfig& cascade, const SparseBinaryVector& x) {
    cascade.validate();
    x.validate();
    if (x.dim != cascade.slots.front()->input_dim())
        throw ValidationError("input dimension " + std::to_string(x.dim) +
                              " does not match cascade models (" +
                              std::to_string(cascade.slots.front()->input_dim()) + ")");

    const std::size_t n = cascade.slots.size();
    SlotCache cache(cascade, x);

    CascadeDecision decision;
    decision.stage_scores.assign(n, std::nullopt);
    std::size_t deciding = n;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (condition_holds(cascade.conditions[i], cache)) {
            deciding = i + 1;
            break;
        }
    }
    decision.deciding_stage = deciding;
    decision.score = cache.get(deciding).probability;
    for (std::size_t i = 0; i < n; ++i)
        if (const DetectorOutput* out = cache.peek(cascade.slots[i].get()))
            decision.stage_scores[i] = out->probability;
    decision.label = decision.score >= cascade.threshold ? Verdict::malware : Verdict::goodware;
    return decision;
}

Verdict classify(const CascadeConfig& cascade, const SparseBinaryVector& x) {
    return evaluate(cascade, x).label;
}

CascadeConfig build_deeptrust(std::shared_ptr<const Detector> f_strong,
                              std::shared_ptr<const Detector> f_weak,
                              std::shared_ptr<const IsolationForestModel> anomaly_model,
                              double sigma1, double t) {
    if (!f_strong || !f_weak) throw ValidationError("cascade needs both detectors");
    if (!anomaly_model) throw ValidationError("cascade needs an anomaly model");
    if (f_weak->embedding_dim() != anomaly_model->embedding_dim)
        throw ValidationError("anomaly model expects embeddings of length " +
                              std::to_string(anomaly_model->embedding_dim) +
                              " but the stage-2 model emits " +
                              std::to_string(f_weak->embedding_dim()));

    CascadeConfig cascade;
    cascade.slots = {f_strong, f_weak, f_strong};
    cascade.conditions = {
        Condition::threshold_ge(1, sigma1),
        Condition::any_of({Condition::threshold_ge(2, 0.5),
                           Condition::inlier_gate(2, std::move(anomaly_model))}),
    };
    cascade.threshold = t;
    cascade.validate();
    return cascade;
}

EnsembleDecision ensemble_average(const std::vector<std::shared_ptr<const Detector>>& models,
                                  const SparseBinaryVector& x, double t) {
    if (models.empty()) throw ValidationError("ensemble needs at least one model");
    x.validate();
    double sum = 0.0;
    for (const auto& model : models) {
        if (!model) throw ValidationError("ensemble model must not be null");
        if (model->input_dim() != x.dim)
            throw ValidationError("ensemble input dimension mismatch");
        sum += model->evaluate(x).probability;
    }
    EnsembleDecision decision;
    decision.score = sum / static_cast<double>(models.size());
    decision.label = decision.score >= t ? Verdict::malware : Verdict::goodware;
    return decision;
}

}  // namespace sentinel
