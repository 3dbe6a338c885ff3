#include "sentinel/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

namespace sentinel {

namespace {

[[noreturn]] void line_error(std::size_t line_no, const std::string& what) {
    throw FormatError("line " + std::to_string(line_no) + ": " + what);
}

bool parse_u32(std::string_view tok, std::uint32_t& out) {
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    const auto res = std::from_chars(first, last, out);
    return res.ec == std::errc{} && res.ptr == last;
}

bool parse_i32(std::string_view tok, std::int32_t& out) {
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    const auto res = std::from_chars(first, last, out);
    return res.ec == std::errc{} && res.ptr == last;
}

bool parse_f64(std::string_view tok, double& out) {
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    const auto res = std::from_chars(first, last, out);
    return res.ec == std::errc{} && res.ptr == last;
}

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> toks;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
        if (j > i) toks.push_back(line.substr(i, j - i));
        i = j;
    }
    return toks;
}

}  // namespace

FeatureSpace FeatureSpace::two_block(std::uint32_t dim) {
    FeatureSpace fs;
    fs.dim = dim;
    fs.categories = {
        {"manifest", 0, dim / 2, Manipulability::add_only},
        {"code", dim / 2, dim, Manipulability::add_and_remove},
    };
    fs.validate();
    return fs;
}

void FeatureSpace::validate() const {
    if (dim < 1) throw ValidationError("feature space: dimension must be >= 1");
    if (categories.empty()) throw ValidationError("feature space: no categories");
    std::set<std::string> names;
    std::uint32_t cursor = 0;
    for (const auto& c : categories) {
        if (!names.insert(c.name).second)
            throw ValidationError("feature space: duplicate category name '" + c.name + "'");
        if (c.lo != cursor)
            throw ValidationError("feature space: categories must tile [0, d) in order");
        if (c.hi < c.lo) throw ValidationError("feature space: category range reversed");
        cursor = c.hi;
    }
    if (cursor != dim)
        throw ValidationError("feature space: categories must cover [0, d) exactly");
}

const FeatureCategory& FeatureSpace::category_of(std::uint32_t idx) const {
    for (const auto& c : categories) {
        if (idx >= c.lo && idx < c.hi) return c;
    }
    throw ValidationError("feature index " + std::to_string(idx) + " outside feature space");
}

bool FeatureSpace::removal_allowed(std::uint32_t idx) const {
    return category_of(idx).manip == Manipulability::add_and_remove;
}

bool SparseBinaryVector::contains(std::uint32_t idx) const {
    return std::binary_search(active.begin(), active.end(), idx);
}

void SparseBinaryVector::validate() const {
    for (std::size_t i = 0; i < active.size(); ++i) {
        if (active[i] >= dim) throw ValidationError("sample: feature index out of range");
        if (i > 0 && active[i] <= active[i - 1])
            throw ValidationError("sample: indices must be strictly increasing");
    }
}

std::int8_t Perturbation::value_at(std::uint32_t idx) const {
    const auto it = std::lower_bound(
        entries.begin(), entries.end(), idx,
        [](const auto& e, std::uint32_t v) { return e.first < v; });
    if (it != entries.end() && it->first == idx) return it->second;
    return 0;
}

void Perturbation::set(std::uint32_t idx, std::int8_t v) {
    if (idx >= dim) throw ValidationError("perturbation: index out of range");
    if (v < -1 || v > 1) throw ValidationError("perturbation: value must be -1, 0, or +1");
    const auto it = std::lower_bound(
        entries.begin(), entries.end(), idx,
        [](const auto& e, std::uint32_t val) { return e.first < val; });
    const bool present = it != entries.end() && it->first == idx;
    if (v == 0) {
        if (present) entries.erase(it);
    } else if (present) {
        it->second = v;
    } else {
        entries.insert(it, {idx, v});
    }
}

void Perturbation::validate() const {
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (entries[i].first >= dim) throw ValidationError("perturbation: index out of range");
        if (entries[i].second != -1 && entries[i].second != 1)
            throw ValidationError("perturbation: stored value must be -1 or +1");
        if (i > 0 && entries[i].first <= entries[i - 1].first)
            throw ValidationError("perturbation: entries must be strictly increasing");
    }
}

bool LabeledDataset::is_discrete() const {
    for (const double y : labels) {
        if (y != 0.0 && y != 1.0) return false;
    }
    return true;
}

void LabeledDataset::validate() const {
    if (samples.size() != labels.size())
        throw ValidationError("dataset: samples and labels differ in length");
    if (!rounds.empty() && rounds.size() != samples.size())
        throw ValidationError("dataset: round tags must cover all samples or none");
    for (const auto& x : samples) {
        if (x.dim != dim) throw ValidationError("dataset: sample dimension mismatch");
        x.validate();
    }
    for (const double y : labels) {
        if (!(y >= 0.0 && y <= 1.0))
            throw ValidationError("dataset: labels must lie in [0,1]");
    }
}

void ManipulabilityMask::validate(std::uint32_t dim) const {
    if (indices.size() != add_only.size())
        throw ValidationError("mask: parallel arrays differ in length");
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= dim) throw ValidationError("mask: index out of range");
        if (i > 0 && indices[i] <= indices[i - 1])
            throw ValidationError("mask: indices must be strictly increasing");
    }
}

ManipulabilityMask ManipulabilityMask::from_space(const FeatureSpace& space) {
    space.validate();
    ManipulabilityMask m;
    m.indices.reserve(space.dim);
    m.add_only.reserve(space.dim);
    for (const auto& c : space.categories) {
        for (std::uint32_t i = c.lo; i < c.hi; ++i) {
            m.indices.push_back(i);
            m.add_only.push_back(c.manip == Manipulability::add_only ? 1 : 0);
        }
    }
    return m;
}

ManipulabilityMask ManipulabilityMask::from_categories(const FeatureSpace& space,
                                                       const std::vector<std::string>& names) {
    space.validate();
    ManipulabilityMask m;
    for (const auto& name : names) {
        const auto it = std::find_if(space.categories.begin(), space.categories.end(),
                                     [&](const FeatureCategory& c) { return c.name == name; });
        if (it == space.categories.end())
            throw ValidationError("mask: unknown category '" + name + "'");
        for (std::uint32_t i = it->lo; i < it->hi; ++i) {
            m.indices.push_back(i);
            m.add_only.push_back(it->manip == Manipulability::add_only ? 1 : 0);
        }
    }
    std::vector<std::size_t> order(m.indices.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return m.indices[a] < m.indices[b]; });
    ManipulabilityMask sorted;
    sorted.indices.reserve(order.size());
    sorted.add_only.reserve(order.size());
    for (const std::size_t i : order) {
        sorted.indices.push_back(m.indices[i]);
        sorted.add_only.push_back(m.add_only[i]);
    }
    sorted.validate(space.dim);
    return sorted;
}

LabeledDataset parse_sparse_stream(std::istream& in) {
    LabeledDataset ds;
    std::optional<std::uint32_t> declared_dim;
    std::uint32_t max_index_plus_1 = 0;
    bool saw_sample = false;
    bool any_round = false;

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto toks = split_ws(line);
        if (toks.empty()) continue;

        if (toks[0].size() >= 1 && toks[0][0] == '#') {
            if (toks[0].rfind("#d=", 0) == 0 && toks.size() == 1) {
                if (saw_sample) line_error(line_no, "dimension header must precede samples");
                if (declared_dim) line_error(line_no, "duplicate dimension header");
                std::uint32_t d = 0;
                if (!parse_u32(toks[0].substr(3), d))
                    line_error(line_no, "malformed dimension header");
                declared_dim = d;
                continue;
            }
            line_error(line_no, "unrecognized directive");
        }

        saw_sample = true;
        double label = 0.0;
        if (!parse_f64(toks[0], label) || !(label >= 0.0 && label <= 1.0))
            line_error(line_no, "label must be a real in [0,1]");

        SparseBinaryVector x;
        std::optional<std::int32_t> round_tag;
        bool prev_set = false;
        std::uint32_t prev = 0;
        for (std::size_t t = 1; t < toks.size(); ++t) {
            if (toks[t] == "#") {
                if (t + 2 != toks.size())
                    line_error(line_no, "trailing comment must be exactly '# round=<int>'");
                const auto tail = toks[t + 1];
                if (tail.rfind("round=", 0) != 0)
                    line_error(line_no, "trailing comment must be exactly '# round=<int>'");
                std::int32_t r = 0;
                if (!parse_i32(tail.substr(6), r))
                    line_error(line_no, "malformed round tag");
                round_tag = r;
                break;
            }
            const auto colon = toks[t].find(':');
            if (colon == std::string_view::npos || toks[t].substr(colon + 1) != "1")
                line_error(line_no, "feature token must be '<idx>:1'");
            std::uint32_t idx = 0;
            if (!parse_u32(toks[t].substr(0, colon), idx))
                line_error(line_no, "malformed feature index");
            if (prev_set && idx <= prev)
                line_error(line_no, "indices must be strictly increasing");
            if (declared_dim && idx >= *declared_dim)
                line_error(line_no, "index exceeds declared dimension");
            x.active.push_back(idx);
            prev = idx;
            prev_set = true;
        }
        if (prev_set) max_index_plus_1 = std::max(max_index_plus_1, prev + 1);

        if (round_tag) {
            if (!any_round && !ds.samples.empty())
                line_error(line_no, "round tags must cover all samples or none");
            any_round = true;
            ds.rounds.push_back(*round_tag);
        } else if (any_round) {
            line_error(line_no, "round tags must cover all samples or none");
        }
        ds.samples.push_back(std::move(x));
        ds.labels.push_back(label);
    }

    ds.dim = declared_dim ? *declared_dim : max_index_plus_1;
    for (auto& x : ds.samples) x.dim = ds.dim;
    ds.validate();
    return ds;
}

LabeledDataset read_sparse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open for reading: " + path);
    return parse_sparse_stream(in);
}

void write_sparse_stream(std::ostream& out, const LabeledDataset& ds) {
    ds.validate();
    out << "#d=" << ds.dim << "\n";
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const double y = ds.labels[i];
        if (y == 0.0) {
            out << "0";
        } else if (y == 1.0) {
            out << "1";
        } else {
            out << format_double(y);
        }
        for (const std::uint32_t idx : ds.samples[i].active) out << " " << idx << ":1";
        if (ds.has_rounds()) out << " # round=" << ds.rounds[i];
        out << "\n";
    }
}

void write_sparse_file(const std::string& path, const LabeledDataset& ds) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    write_sparse_stream(out, ds);
    out.flush();
    if (!out) throw IoError("write failed: " + path);
}

SparseBinaryVector apply_perturbation(const SparseBinaryVector& x, const Perturbation& delta) {
    if (x.dim != delta.dim) throw ValidationError("apply_perturbation: dimension mismatch");
    SparseBinaryVector out;
    out.dim = x.dim;
    out.active.reserve(x.active.size() + delta.entries.size());
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < x.active.size() || j < delta.entries.size()) {
        if (j == delta.entries.size() ||
            (i < x.active.size() && x.active[i] < delta.entries[j].first)) {
            out.active.push_back(x.active[i]);
            ++i;
        } else if (i == x.active.size() || delta.entries[j].first < x.active[i]) {
            if (delta.entries[j].second > 0) out.active.push_back(delta.entries[j].first);
            ++j;
        } else {
            // index present in both: active + delta, clipped to {0,1}
            if (delta.entries[j].second > 0) out.active.push_back(x.active[i]);
            ++i;
            ++j;
        }
    }
    return out;
}

std::size_t hamming_distance(const SparseBinaryVector& a, const SparseBinaryVector& b) {
    if (a.dim != b.dim) throw ValidationError("hamming_distance: dimension mismatch");
    std::size_t count = 0;
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < a.active.size() || j < b.active.size()) {
        if (j == b.active.size() || (i < a.active.size() && a.active[i] < b.active[j])) {
            ++count;
            ++i;
        } else if (i == a.active.size() || b.active[j] < a.active[i]) {
            ++count;
            ++j;
        } else {
            ++i;
            ++j;
        }
    }
    return count;
}

std::vector<double> to_dense(const SparseBinaryVector& x) {
    std::vector<double> v(x.dim, 0.0);
    for (const std::uint32_t idx : x.active) v[idx] = 1.0;
    return v;
}

LabeledDataset synth_generate(const SynthSpec& spec, std::uint64_t seed) {
    if (spec.d < 1 || spec.d < 4u * spec.n_signature_features)
        throw ValidationError("synth: need d >= 4 * n_signature_features and d >= 1");
    if (!(spec.malware_ratio > 0.0 && spec.malware_ratio < 1.0))
        throw ValidationError("synth: malware_ratio must lie in (0,1)");
    if (spec.n_samples == 0) throw ValidationError("synth: n_samples must be >= 1");
    if (!(spec.noise_rate >= 0.0 && spec.noise_rate <= 1.0))
        throw ValidationError("synth: noise_rate must lie in [0,1]");

    Rng rng(seed_stream(seed, streams::kSynth));
    const std::size_t n = spec.n_samples;
    std::size_t n_mal = static_cast<std::size_t>(
        std::llround(spec.malware_ratio * static_cast<double>(n)));
    n_mal = std::min(n_mal, n);

    std::vector<double> labels(n, 0.0);
    for (std::size_t i = 0; i < n_mal; ++i) labels[i] = 1.0;
    rng.shuffle(labels);

    const std::uint32_t nsig = spec.n_signature_features;
    LabeledDataset ds;
    ds.dim = spec.d;
    ds.labels = labels;
    ds.samples.reserve(n);
    for (std::size_t s = 0; s < n; ++s) {
        const bool malware = labels[s] == 1.0;
        SparseBinaryVector x;
        x.dim = spec.d;
        for (std::uint32_t i = 0; i < nsig; ++i) {
            if (rng.bernoulli(malware ? 0.9 : 0.1)) x.active.push_back(i);
        }
        for (std::uint32_t i = nsig; i < 2 * nsig; ++i) {
            if (rng.bernoulli(malware ? 0.1 : 0.9)) x.active.push_back(i);
        }
        if (spec.noise_rate > 0.0) {
            for (std::uint32_t i = 2 * nsig; i < spec.d; ++i) {
                if (rng.bernoulli(spec.noise_rate)) x.active.push_back(i);
            }
        }
        ds.samples.push_back(std::move(x));
    }
    ds.validate();
    return ds;
}

SplitIndices train_val_split(std::size_t n, std::uint64_t seed) {
    if (n < 2) throw ValidationError("train_val_split: need at least 2 samples");
    Rng rng(seed_stream(seed, streams::kSplit));
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    rng.shuffle(perm);
    const std::size_t n_val = std::max<std::size_t>(1, n / 5);
    SplitIndices out;
    out.val.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_val));
    out.train.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_val), perm.end());
    std::sort(out.val.begin(), out.val.end());
    std::sort(out.train.begin(), out.train.end());
    return out;
}

LabeledDataset subset(const LabeledDataset& ds, const std::vector<std::size_t>& idx) {
    LabeledDataset out;
    out.dim = ds.dim;
    out.samples.reserve(idx.size());
    out.labels.reserve(idx.size());
    if (ds.has_rounds()) out.rounds.reserve(idx.size());
    for (const std::size_t i : idx) {
        if (i >= ds.size()) throw ValidationError("subset: index out of range");
        out.samples.push_back(ds.samples[i]);
        out.labels.push_back(ds.labels[i]);
        if (ds.has_rounds()) out.rounds.push_back(ds.rounds[i]);
    }
    return out;
}

}  // namespace sentinel
