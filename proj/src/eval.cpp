#include "sentinel/eval.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "sentinel/mlp.hpp"

namespace sentinel {

namespace {

constexpr int kReportVersion = 1;

std::string fixed6(double v) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(6);
    os << v;
    return os.str();
}

}  // namespace

ConfusionCounts confusion(const std::vector<int>& predicted, const std::vector<int>& truth) {
    if (predicted.size() != truth.size())
        throw ValidationError("confusion: prediction/label length mismatch");
    ConfusionCounts c;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const int p = predicted[i];
        const int t = truth[i];
        if ((p != 0 && p != 1) || (t != 0 && t != 1))
            throw ValidationError("confusion: labels must be 0 or 1");
        if (t == 1) {
            p == 1 ? ++c.tp : ++c.fn;
        } else {
            p == 1 ? ++c.fp : ++c.tn;
        }
    }
    return c;
}

Rate tnr(const ConfusionCounts& c) {
    const std::size_t den = c.tn + c.fp;
    if (den == 0) return {0.0, true};
    return {static_cast<double>(c.tn) / static_cast<double>(den), false};
}

Rate tpr(const ConfusionCounts& c) {
    const std::size_t den = c.tp + c.fn;
    if (den == 0) return {0.0, true};
    return {static_cast<double>(c.tp) / static_cast<double>(den), false};
}

Rate f1(const ConfusionCounts& c) {
    const std::size_t den = 2 * c.tp + c.fp + c.fn;
    if (den == 0) return {0.0, true};
    return {2.0 * static_cast<double>(c.tp) / static_cast<double>(den), false};
}

double aut(const std::vector<double>& scores) {
    if (scores.size() < 2) throw ValidationError("aut: need at least two rounds");
    double acc = 0.0;
    for (std::size_t j = 0; j + 1 < scores.size(); ++j) acc += (scores[j] + scores[j + 1]) / 2.0;
    return acc / static_cast<double>(scores.size() - 1);
}

double objective_j(double tnr_value, double tpr_clean, double tpr_25, double tpr_50,
                   double tpr_100) {
    for (const double v : {tnr_value, tpr_clean, tpr_25, tpr_50, tpr_100}) {
        if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("objective_j: rates must lie in [0,1]");
    }
    const double hinge = std::max(0.0, (tnr_value - 0.95) / 0.05);
    const double product = tpr_clean * tpr_25 * tpr_50 * tpr_100;
    return hinge * std::pow(product, 0.25);
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw ValidationError("pearson: length mismatch");
    const std::size_t n = a.size();
    if (n < 2) throw ValidationError("pearson: need at least two samples");
    double ma = 0.0;
    double mb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double saa = 0.0;
    double sbb = 0.0;
    double sab = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double da = a[i] - ma;
        const double db = b[i] - mb;
        saa += da * da;
        sbb += db * db;
        sab += da * db;
    }
    if (saa == 0.0 || sbb == 0.0)
        throw ValidationError("pearson: zero variance on one side");
    return sab / std::sqrt(saa * sbb);
}

double pearson_logits(const MlpModel& a, const MlpModel& b, const LabeledDataset& ds) {
    const auto pa = predict_batch(a, ds.samples);
    const auto pb = predict_batch(b, ds.samples);
    std::vector<double> la(pa.size());
    std::vector<double> lb(pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) {
        la[i] = pa[i].logit;
        lb[i] = pb[i].logit;
    }
    return pearson(la, lb);
}

std::string RobustnessReport::to_json() const {
    nlohmann::json doc;
    doc["version"] = kReportVersion;
    doc["tnr"] = tnr_value;
    doc["tpr_clean"] = tpr_clean;
    nlohmann::json fsa = nlohmann::json::object();
    for (const auto& [budget, value] : tpr_fsa) fsa[std::to_string(budget)] = value;
    doc["tpr_fsa"] = fsa;
    doc["j"] = j ? nlohmann::json(*j) : nlohmann::json(nullptr);
    doc["rho"] = nlohmann::json::object();
    for (const auto& [name, value] : rho) doc["rho"][name] = value;
    doc["aut"] = aut_value ? nlohmann::json(*aut_value) : nlohmann::json(nullptr);
    return doc.dump(2) + "\n";
}

RobustnessReport RobustnessReport::from_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("report: invalid json: ") + e.what());
    }
    try {
        if (!doc.contains("version") || doc["version"].get<int>() != kReportVersion)
            throw FormatError("report: missing or unsupported version");
        RobustnessReport r;
        r.tnr_value = doc.at("tnr").get<double>();
        r.tpr_clean = doc.at("tpr_clean").get<double>();
        for (const auto& [key, value] : doc.at("tpr_fsa").items())
            r.tpr_fsa[std::stoi(key)] = value.get<double>();
        if (!doc.at("j").is_null()) r.j = doc["j"].get<double>();
        for (const auto& [key, value] : doc.at("rho").items())
            r.rho[key] = value.get<double>();
        if (!doc.at("aut").is_null()) r.aut_value = doc["aut"].get<double>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("report: bad field: ") + e.what());
    }
}

std::string RobustnessReport::to_table() const {
    std::ostringstream os;
    const auto row = [&os](const std::string& name, const std::string& value) {
        os << name;
        for (std::size_t i = name.size(); i < 20; ++i) os << ' ';
        os << value << "\n";
    };
    row("metric", "value");
    row("------", "-----");
    row("tnr", fixed6(tnr_value));
    row("tpr_clean", fixed6(tpr_clean));
    for (const auto& [budget, value] : tpr_fsa)
        row("tpr_fsa_" + std::to_string(budget), fixed6(value));
    row("j", j ? fixed6(*j) : "null");
    for (const auto& [name, value] : rho) row("rho_" + name, fixed6(value));
    row("aut", aut_value ? fixed6(*aut_value) : "null");
    return os.str();
}

RobustnessReport assemble_report(double tnr_value, double tpr_clean,
                                 const std::map<int, double>& tpr_fsa,
                                 const std::map<std::string, double>& rho,
                                 std::optional<double> aut_value) {
    RobustnessReport r;
    r.tnr_value = tnr_value;
    r.tpr_clean = tpr_clean;
    r.tpr_fsa = tpr_fsa;
    r.rho = rho;
    r.aut_value = aut_value;
    const bool complete = tpr_fsa.count(25) && tpr_fsa.count(50) && tpr_fsa.count(100);
    if (complete) {
        r.j = objective_j(tnr_value, tpr_clean, tpr_fsa.at(25), tpr_fsa.at(50), tpr_fsa.at(100));
    }
    return r;
}

}  // namespace sentinel
