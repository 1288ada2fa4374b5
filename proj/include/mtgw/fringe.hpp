#pragma once

// Fringe subtree counting, extended fringes with overflow, empirical laws at
// random vertices, and the ratio experiments against exact targets.

#include "mtgw/offspring_model.hpp"
#include "mtgw/sampler.hpp"
#include "mtgw/tree.hpp"

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace mtgw {

// map canonical key -> occurrence count, plus the normalizer
struct FringeTable {
    std::map<std::string, int64_t> counts;
    int64_t total = 0;
};

// All fringe subtrees rooted at vertices of root_type.
inline FringeTable fringe_table(const MultiTypeTree& t, TypeId root_type) {
    FringeTable tab;
    for (VertexId v = 0; v < static_cast<VertexId>(t.size()); ++v) {
        if (t.type_of(v) != root_type) continue;
        tab.counts[t.fringe_at(v).canonical_key()]++;
        tab.total++;
    }
    return tab;
}

// Number of occurrences of `pattern` as a fringe subtree.
inline int64_t count_fringe(const MultiTypeTree& t, const MultiTypeTree& pattern) {
    std::string key = pattern.canonical_key();
    TypeId rt = pattern.type_of(pattern.root());
    int64_t n = 0;
    for (VertexId v = 0; v < static_cast<VertexId>(t.size()); ++v)
        if (t.type_of(v) == rt && t.fringe_at(v).canonical_key() == key) ++n;
    return n;
}

// Exact probability P(T(kappa) = pattern) as the product over vertices of
// offspring-vector probabilities (finite-PMF models).
inline Rational tree_probability_exact(const OffspringModel& model, const MultiTypeTree& pattern) {
    Rational p = 1;
    for (VertexId v = 0; v < static_cast<VertexId>(pattern.size()); ++v) {
        OffspringVector ov;
        for (VertexId c : pattern.children_of(v))
            ov.set(pattern.type_of(c), ov.count(pattern.type_of(c)) + 1);
        p *= model.dist(pattern.type_of(v)).pmf_exact(ov);
        if (p == 0) return 0;
    }
    return p;
}

inline double tree_probability(const OffspringModel& model, const MultiTypeTree& pattern) {
    double p = 1;
    for (VertexId v = 0; v < static_cast<VertexId>(pattern.size()); ++v) {
        OffspringVector ov;
        for (VertexId c : pattern.children_of(v))
            ov.set(pattern.type_of(c), ov.count(pattern.type_of(c)) + 1);
        p *= model.dist(pattern.type_of(v)).pmf(ov);
        if (p == 0) return 0;
    }
    return p;
}

// f^{kappa,[h]} / f^{[h]}: fringe at the h-th (type-kappa or plain) ancestor
// of v, with v's location marked. Overflow is a value, not an error.
struct ExtendedFringe {
    PointedTree pointed;
    bool overflow = false;

    std::string key() const {
        return (overflow ? std::string("OV|") : std::string()) + pointed.canonical_key();
    }
};

inline ExtendedFringe extended_fringe(const MultiTypeTree& t, VertexId v, int h,
                                      std::optional<TypeId> kappa_mode = std::nullopt) {
    auto overflow_result = [&] {
        ExtendedFringe ef;
        VertexId mark;
        ef.pointed.tree = t.fringe_at(t.root(), v, &mark);
        ef.pointed.mark = mark;
        ef.overflow = true;
        return ef;
    };
    VertexId anc = v;
    if (kappa_mode) {
        // the fringe root is the (h+1)-th type-kappa vertex on the upward walk
        // from v (v included)
        int need = h + 1;
        while (true) {
            if (t.type_of(anc) == *kappa_mode && --need == 0) break;
            if (anc == t.root()) return overflow_result();
            anc = t.parent_of(anc);
        }
    } else {
        for (int i = 0; i < h; ++i) {
            if (anc == t.root()) return overflow_result();
            anc = t.parent_of(anc);
        }
    }
    ExtendedFringe ef;
    VertexId mark;
    ef.pointed.tree = t.fringe_at(anc, v, &mark);
    ef.pointed.mark = mark;
    return ef;
}

// Selector for random_vertex_law.
struct VertexSelector {
    std::vector<TypeId> types;  // eligible types
    bool eligible(TypeId t) const {
        for (TypeId u : types)
            if (u == t) return true;
        return false;
    }
};

// Exact law of f^{.,[h]} at a uniform eligible vertex (full sweep).
inline std::map<std::string, double> random_vertex_law(const MultiTypeTree& t,
                                                       const VertexSelector& sel, int h,
                                                       std::optional<TypeId> kappa_mode) {
    std::map<std::string, double> law;
    int64_t eligible = 0;
    for (VertexId v = 0; v < static_cast<VertexId>(t.size()); ++v) {
        if (!sel.eligible(t.type_of(v))) continue;
        ++eligible;
        law[extended_fringe(t, v, h, kappa_mode).key()] += 1.0;
    }
    if (eligible == 0) throw std::invalid_argument("no eligible vertex");
    for (auto& [k, m] : law) m /= static_cast<double>(eligible);
    return law;
}

// Total variation distance between finite distributions over keys.
inline double tv_distance(const std::map<std::string, double>& p,
                          const std::map<std::string, double>& q) {
    double s = 0;
    auto it = p.begin();
    auto jt = q.begin();
    while (it != p.end() || jt != q.end()) {
        if (jt == q.end() || (it != p.end() && it->first < jt->first)) {
            s += std::abs(it->second);
            ++it;
        } else if (it == p.end() || jt->first < it->first) {
            s += std::abs(jt->second);
            ++jt;
        } else {
            s += std::abs(it->second - jt->second);
            ++it;
            ++jt;
        }
    }
    return s / 2.0;
}

struct RatioReport {
    std::string pattern_key;
    double mean_ratio = 0;
    double stderr_ratio = 0;
    double target = 0;            // P(T(kappa) = pattern)
    Rational target_exact = 0;    // exact when the model is finite
    int64_t draws = 0;
};

// Lemma-style experiment: empirical mean of N_T / #_kappa over conditioned
// draws, against the exact product target.
inline std::vector<RatioReport> fringe_ratio_experiment(
    const OffspringModel& model, const RootLaw& root, const Conditioning& cond,
    const std::vector<MultiTypeTree>& patterns, TypeId kappa, int64_t draws, Rng& rng,
    const SamplerOptions& opt = {}) {
    std::vector<RatioReport> reports(patterns.size());
    std::vector<std::string> keys;
    for (size_t i = 0; i < patterns.size(); ++i) {
        keys.push_back(patterns[i].canonical_key());
        reports[i].pattern_key = keys.back();
        if (model.all_finite()) {
            reports[i].target_exact = tree_probability_exact(model, patterns[i]);
            reports[i].target = to_double(reports[i].target_exact);
        } else {
            reports[i].target = tree_probability(model, patterns[i]);
        }
        reports[i].draws = draws;
    }
    std::vector<double> sum(patterns.size(), 0.0), sum2(patterns.size(), 0.0);
    for (int64_t d = 0; d < draws; ++d) {
        MultiTypeTree t = sample_conditioned(model, root, cond, rng, opt);
        auto tab = fringe_table(t, kappa);
        for (size_t i = 0; i < patterns.size(); ++i) {
            auto it = tab.counts.find(keys[i]);
            double ratio = (it == tab.counts.end() ? 0.0 : static_cast<double>(it->second)) /
                           static_cast<double>(tab.total);
            sum[i] += ratio;
            sum2[i] += ratio * ratio;
        }
    }
    for (size_t i = 0; i < patterns.size(); ++i) {
        double mean = sum[i] / static_cast<double>(draws);
        double var = std::max(0.0, sum2[i] / static_cast<double>(draws) - mean * mean);
        reports[i].mean_ratio = mean;
        reports[i].stderr_ratio = std::sqrt(var / static_cast<double>(draws));
    }
    return reports;
}

}  // namespace mtgw
