#pragma once

// Limit objects: kappa-biased stopped trees, the gamma-marked variant, the
// truncated sin-tree with a backwards-growing spine, and the type mixture.
//
// Size-biasing is sampled exactly by a spine construction: along the path to
// the mark, offspring vectors are drawn biased by expected descendant mark
// counts (a rational linear solve on the model's mean matrix), and off-spine
// subtrees are plain stopped trees. This realizes the defining laws without
// enumerating the stopped-tree distribution.

#include "mtgw/offspring_model.hpp"
#include "mtgw/sampler.hpp"

#include <cmath>
#include <deque>
#include <memory>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

namespace mtgw {

struct BiasedStoppedTree {
    MultiTypeTree tree;
    VertexId mark = kNoVertex;
};

struct TruncatedSinTree {
    PointedTree pointed;
    std::vector<VertexId> spine;  // u_0 .. u_H (u_H is the tree root)
    int H = 0;
};

namespace detail {

// grafts the children of a freshly generated subtree under an existing vertex
inline void graft_children(MultiTypeTree& dst, VertexId at, const MultiTypeTree& src) {
    std::vector<std::pair<VertexId, VertexId>> stack;  // (src vertex, dst parent)
    const auto& rc = src.children_of(src.root());
    for (auto it = rc.rbegin(); it != rc.rend(); ++it) stack.push_back({*it, at});
    while (!stack.empty()) {
        auto [sv, dp] = stack.back();
        stack.pop_back();
        VertexId nv = dst.add_child(dp, src.type_of(sv));
        const auto& ch = src.children_of(sv);
        for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back({*it, nv});
    }
}

}  // namespace detail

// Exact sampler for the kappa-biased stopped tree (gamma == nullopt) or the
// (kappa, gamma)-biased variant (marked vertex of type gamma != kappa).
class BiasedStoppedSampler {
public:
    BiasedStoppedSampler(const OffspringModel& model, TypeId kappa,
                         std::optional<TypeId> gamma = std::nullopt,
                         SamplerOptions opt = {})
        : model_(model), kappa_(kappa), gamma_(gamma), opt_(opt) {
        if (gamma_ && *gamma_ == kappa_) gamma_.reset();  // remark: gamma == kappa is plain bias
        TypeId target = gamma_ ? *gamma_ : kappa_;
        if (model.all_finite()) {
            auto wx = model.stopped_expectations_exact(kappa_, target);
            for (auto& [t, v] : wx) w_[t] = to_double(v);
            if (!gamma_) {
                Rational crit = wx.at(kappa_);
                if (crit != 2)
                    throw std::invalid_argument("kappa-bias needs E[#_k T^k] = 2 exactly, got " +
                                                rational_to_string(crit));
            }
        } else {
            w_ = model.stopped_expectations(kappa_, target);
            if (!gamma_ && std::abs(w_.at(kappa_) - 2.0) > 1e-9)
                throw std::invalid_argument("kappa-bias needs E[#_k T^k] = 2 (within 1e-9)");
        }
        if (gamma_) {
            double z = w_.at(kappa_);
            if (!(z > 0) || !std::isfinite(z))
                throw std::invalid_argument("gamma-bias normalizer E[#_g T^k] must be in (0, inf)");
        }
    }

    // E[#_target T^kappa]; the bias normalizer (1 for kappa mode at criticality).
    double normalizer() const { return gamma_ ? w_.at(kappa_) : w_.at(kappa_) - 1.0; }

    BiasedStoppedTree sample(Rng& rng) const {
        BiasedStoppedTree out;
        grow_spine(out, kNoVertex, kappa_, true, rng);
        return out;
    }

private:
    double child_weight(TypeId i) const {
        if (i == kappa_) return gamma_ ? 0.0 : 1.0;
        return w_.at(i);
    }

    // spine step at a vertex of type j known to carry the mark in its subtree
    void grow_spine(BiasedStoppedTree& out, VertexId parent, TypeId j, bool top, Rng& rng) const {
        VertexId v = (parent == kNoVertex) ? out.tree.add_root(j) : out.tree.add_child(parent, j);
        double denom = top && !gamma_ ? w_.at(kappa_) - 1.0 : w_.at(j);
        bool self_eligible = gamma_ && j == *gamma_;
        if (self_eligible && rng.unit() < 1.0 / denom) {
            out.mark = v;
            // unbiased continuation below the mark
            auto sub = detail::generate(model_, j, rng, opt_, kappa_);
            detail::graft_children(out.tree, v, *sub);
            return;
        }
        auto [off, spine_type] = sample_biased_offspring(j, rng);
        // uniform slot among the spine_type children
        int32_t slots = off.count(spine_type);
        int32_t slot = static_cast<int32_t>(rng.below(static_cast<uint64_t>(slots)));
        int32_t seen = 0;
        for (auto& [ct, c] : off.entries()) {
            for (int32_t r = 0; r < c; ++r) {
                bool is_spine = (ct == spine_type) && (seen == slot);
                if (ct == spine_type) ++seen;
                if (is_spine) {
                    if (ct == kappa_ && !gamma_) {
                        out.mark = out.tree.add_child(v, ct);  // marked kappa leaf
                    } else {
                        grow_spine(out, v, ct, false, rng);
                    }
                } else if (ct == kappa_) {
                    out.tree.add_child(v, ct);  // stopped leaf
                } else {
                    VertexId c2 = out.tree.add_child(v, ct);
                    auto sub = detail::generate(model_, ct, rng, opt_, kappa_);
                    detail::graft_children(out.tree, c2, *sub);
                }
            }
        }
    }

    // offspring vector with law P(c) * score(c) / norm, plus the chosen spine
    // child type (prob proportional to c_i * child_weight(i))
    std::pair<OffspringVector, TypeId> sample_biased_offspring(TypeId j, Rng& rng) const {
        const auto& dist = model_.dist(j);
        switch (dist.kind()) {
            case OffspringDist::Kind::finite: {
                auto& tab = finite_table(j);
                size_t idx = rng.categorical_cdf(tab.cdf);
                const auto& ov = dist.atoms()[tab.atom_index[idx]].first;
                return {ov, pick_spine_type(ov, rng)};
            }
            case OffspringDist::Kind::geometric: {
                TypeId g = dist.geometric_child();
                if (child_weight(g) <= 0)
                    throw std::logic_error("size-biased geometric with zero child weight");
                // k with P(k) proportional to k q^k: 1 + G + G
                double p0 = to_double(dist.geometric_p0());
                auto geo = [&] {
                    double u = rng.unit();
                    int k = static_cast<int>(std::floor(std::log1p(-u) / std::log1p(-p0)));
                    return k < 0 ? 0 : k;
                };
                OffspringVector ov;
                ov.set(g, 1 + geo() + geo());
                return {ov, g};
            }
            case OffspringDist::Kind::face: {
                auto& tab = face_table(j);
                double u = rng.unit() * tab.total;
                size_t idx = tab.locate(u, dist, *this);
                return {tab.terms[idx], pick_spine_type(tab.terms[idx], rng)};
            }
        }
        throw std::logic_error("unreachable");
    }

    TypeId pick_spine_type(const OffspringVector& ov, Rng& rng) const {
        double total = 0;
        for (auto& [t, c] : ov.entries()) total += c * child_weight(t);
        double u = rng.unit() * total;
        for (auto& [t, c] : ov.entries()) {
            u -= c * child_weight(t);
            if (u <= 0) return t;
        }
        // numerically possible only through rounding; take the last positive one
        for (auto it = ov.entries().rbegin(); it != ov.entries().rend(); ++it)
            if (child_weight(it->first) > 0) return it->first;
        throw std::logic_error("offspring vector has zero spine weight");
    }

    struct FiniteTable {
        std::vector<size_t> atom_index;
        std::vector<double> cdf;
    };
    struct FaceTable {
        std::vector<OffspringVector> terms;
        std::vector<double> cum;
        int next_s = 0;
        double total = 0;  // w_a E[k] + w_b E[k']

        size_t locate(double u, const OffspringDist& dist, const BiasedStoppedSampler& s) {
            while (cum.empty() || cum.back() < u) {
                if (!extend(dist, s)) break;
            }
            size_t lo = 0, hi = cum.size() - 1;
            while (lo < hi) {
                size_t mid = (lo + hi) / 2;
                if (cum[mid] <= u)
                    lo = mid + 1;
                else
                    hi = mid;
            }
            return lo;
        }

        bool extend(const OffspringDist& dist, const BiasedStoppedSampler& s) {
            const auto& fp = dist.face_params();
            if (!fp.q.parametric() && (fp.bullet ? 2 : 1) + next_s > fp.q.max_degree())
                return false;
            if (fp.q.parametric()) {
                double wmax = std::max(s.child_weight(fp.child_a), s.child_weight(fp.child_b));
                double bound = (next_s + 2.0) * wmax *
                               face_tail_bound(fp.q, fp.bullet, fp.x, fp.y, next_s) / fp.norm;
                if (bound < 1e-18) return false;
            }
            int sdiag = next_s++;
            for (int k = 0; 2 * k <= sdiag; ++k) {
                int kp = sdiag - 2 * k;
                double p = face_term(fp.q, fp.bullet, k, kp, fp.x, fp.y) / fp.norm;
                if (p <= 0) continue;
                double wscore =
                    k * s.child_weight(fp.child_a) + kp * s.child_weight(fp.child_b);
                if (wscore <= 0) continue;
                OffspringVector ov;
                ov.set(fp.child_a, k);
                ov.set(fp.child_b, kp);
                terms.push_back(ov);
                cum.push_back((cum.empty() ? 0.0 : cum.back()) + p * wscore);
            }
            return true;
        }
    };

    const FiniteTable& finite_table(TypeId j) const {
        auto it = finite_tables_.find(j);
        if (it != finite_tables_.end()) return it->second;
        FiniteTable tab;
        const auto& atoms = model_.dist(j).atoms();
        double acc = 0;
        for (size_t i = 0; i < atoms.size(); ++i) {
            double score = 0;
            for (auto& [t, c] : atoms[i].first.entries()) score += c * child_weight(t);
            double wgt = to_double(atoms[i].second) * score;
            if (wgt <= 0) continue;
            acc += wgt;
            tab.atom_index.push_back(i);
            tab.cdf.push_back(acc);
        }
        if (tab.cdf.empty())
            throw std::logic_error("no offspring vector carries spine weight at type " +
                                   std::to_string(j));
        return finite_tables_.emplace(j, std::move(tab)).first->second;
    }

    FaceTable& face_table(TypeId j) const {
        auto it = face_tables_.find(j);
        if (it != face_tables_.end()) return it->second;
        FaceTable tab;
        const auto& fp = model_.dist(j).face_params();
        tab.total = model_.dist(j).mean(fp.child_a) * child_weight(fp.child_a) +
                    model_.dist(j).mean(fp.child_b) * child_weight(fp.child_b);
        if (!(tab.total > 0)) throw std::logic_error("face law carries no spine weight");
        return face_tables_.emplace(j, std::move(tab)).first->second;
    }

    const OffspringModel& model_;
    TypeId kappa_;
    std::optional<TypeId> gamma_;
    SamplerOptions opt_;
    std::map<TypeId, double> w_;
    mutable std::map<TypeId, FiniteTable> finite_tables_;
    mutable std::map<TypeId, FaceTable> face_tables_;
};

inline BiasedStoppedTree sample_biased_stopped(const OffspringModel& model, TypeId kappa,
                                               std::optional<TypeId> gamma, Rng& rng,
                                               const SamplerOptions& opt = {}) {
    BiasedStoppedSampler s(model, kappa, gamma, opt);
    return s.sample(rng);
}

// Truncated sin-tree: u_0 carries T(kappa) (kappa mode) or the gamma-biased
// stopped tree with T(kappa) grafted at its kappa leaves (gamma mode); each
// u_{i+1} carries an independent kappa-biased stopped tree glued at its mark;
// non-marked kappa leaves carry independent T(kappa) copies.
class SinTreeSampler {
public:
    SinTreeSampler(const OffspringModel& model, TypeId kappa,
                   std::optional<TypeId> gamma = std::nullopt, SamplerOptions opt = {})
        : model_(model),
          kappa_(kappa),
          gamma_(gamma && *gamma != kappa ? gamma : std::nullopt),
          opt_(opt),
          kappa_sampler_(model, kappa, std::nullopt, opt),
          gamma_sampler_(gamma_ ? std::make_unique<BiasedStoppedSampler>(model, kappa, gamma_, opt)
                                : nullptr) {}

    TruncatedSinTree sample(int H, Rng& rng) const {
        struct Piece {
            MultiTypeTree tree;
            VertexId mark = kNoVertex;  // mark vertex inside the piece
            bool graft_leaves = false;  // stopped tree: kappa leaves get T(kappa)
        };
        std::vector<Piece> pieces(static_cast<size_t>(H) + 1);
        if (gamma_) {
            auto bt = gamma_sampler_->sample(rng);
            pieces[0] = {std::move(bt.tree), bt.mark, true};
        } else {
            pieces[0] = {*detail::generate(model_, kappa_, rng, opt_), 0, false};
        }
        for (int i = 1; i <= H; ++i) {
            auto bt = kappa_sampler_.sample(rng);
            pieces[i] = {std::move(bt.tree), bt.mark, true};
        }

        TruncatedSinTree out;
        out.H = H;
        out.spine.assign(static_cast<size_t>(H) + 1, kNoVertex);
        // assemble from the top piece down; item: (piece index, src vertex, dst parent)
        struct Item {
            int pi;
            VertexId sv;
            VertexId dp;
        };
        std::deque<MultiTypeTree> arena;  // fresh T(kappa) copies
        std::vector<Item> stack{{H, 0, kNoVertex}};
        while (!stack.empty()) {
            auto [pi, sv, dp] = stack.back();
            stack.pop_back();
            const bool fresh = pi < 0;  // arena piece
            const MultiTypeTree& src = fresh ? arena[static_cast<size_t>(-pi - 1)]
                                             : pieces[static_cast<size_t>(pi)].tree;
            // splice the next piece at this stopped tree's mark
            if (!fresh && pi > 0 && sv == pieces[static_cast<size_t>(pi)].mark) {
                stack.push_back({pi - 1, 0, dp});
                continue;
            }
            VertexId nv = (dp == kNoVertex) ? out.pointed.tree.add_root(src.type_of(sv))
                                            : out.pointed.tree.add_child(dp, src.type_of(sv));
            if (!fresh) {
                int p = pi;
                if (sv == 0) out.spine[static_cast<size_t>(p)] = nv;
                if (p == 0) {
                    if (gamma_ && sv == pieces[0].mark) out.pointed.mark = nv;
                    if (!gamma_ && sv == 0) out.pointed.mark = nv;
                }
            }
            const auto& ch = src.children_of(sv);
            for (auto it = ch.rbegin(); it != ch.rend(); ++it)
                stack.push_back({pi, *it, nv});
            // kappa leaves of stopped pieces grow fresh T(kappa) progeny
            bool graftable = fresh ? false : pieces[static_cast<size_t>(pi)].graft_leaves;
            if (graftable && sv != 0 && src.type_of(sv) == kappa_ && ch.empty() &&
                !(pi > 0 && sv == pieces[static_cast<size_t>(pi)].mark)) {
                arena.push_back(*detail::generate(model_, kappa_, rng, opt_));
                const MultiTypeTree& f = arena.back();
                const auto& fc = f.children_of(f.root());
                int api = -static_cast<int>(arena.size());
                for (auto it = fc.rbegin(); it != fc.rend(); ++it)
                    stack.push_back({api, *it, nv});
            }
        }
        return out;
    }

private:
    const OffspringModel& model_;
    TypeId kappa_;
    std::optional<TypeId> gamma_;
    SamplerOptions opt_;
    BiasedStoppedSampler kappa_sampler_;
    std::unique_ptr<BiasedStoppedSampler> gamma_sampler_;
};

inline TruncatedSinTree sample_sin_tree(const OffspringModel& model, TypeId kappa,
                                        std::optional<TypeId> gamma, int H, Rng& rng,
                                        const SamplerOptions& opt = {}) {
    SinTreeSampler s(model, kappa, gamma, opt);
    return s.sample(H, rng);
}

// Mixture over marked types: p(kappa) = 1, p(gamma) = E[#_gamma T^kappa].
struct MixtureLaw {
    std::vector<TypeId> types;
    std::vector<double> probs;
};

inline MixtureLaw mixture_law(const OffspringModel& model, TypeId kappa,
                              const std::vector<TypeId>& g0) {
    MixtureLaw law;
    double total = 0;
    for (TypeId g : g0) {
        double p;
        if (g == kappa)
            p = 1.0;
        else
            p = model.all_finite() ? to_double(model.stopped_expectations_exact(kappa, g).at(kappa))
                                   : model.stopped_expectations(kappa, g).at(kappa);
        law.types.push_back(g);
        law.probs.push_back(p);
        total += p;
    }
    if (!(total > 0)) throw std::invalid_argument("all mixture weights are zero");
    for (auto& p : law.probs) p /= total;
    return law;
}

struct MixtureDraw {
    TypeId eta;
    TruncatedSinTree tree;
};

inline MixtureDraw sample_mixture(const OffspringModel& model, TypeId kappa,
                                  const std::vector<TypeId>& g0, int H, Rng& rng,
                                  const SamplerOptions& opt = {}) {
    auto law = mixture_law(model, kappa, g0);
    std::vector<double> cdf;
    double acc = 0;
    for (double p : law.probs) {
        acc += p;
        cdf.push_back(acc);
    }
    cdf.back() = 1.0;
    TypeId eta = law.types[rng.categorical_cdf(cdf)];
    std::optional<TypeId> gamma = (eta == kappa) ? std::nullopt : std::optional<TypeId>(eta);
    return {eta, sample_sin_tree(model, kappa, gamma, H, rng, opt)};
}

// Diagnostic for the open question on gamma recurrence along the spine: the
// rate of kappa-biased stopped trees with a type-gamma vertex on the
// root-to-mark path. Asserts nothing.
inline double spine_gamma_rate(const OffspringModel& model, TypeId kappa, TypeId gamma,
                               int64_t draws, Rng& rng) {
    BiasedStoppedSampler s(model, kappa);
    int64_t hits = 0;
    for (int64_t i = 0; i < draws; ++i) {
        auto bt = s.sample(rng);
        for (VertexId v = bt.mark; v != kNoVertex; v = bt.tree.parent_of(v))
            if (bt.tree.type_of(v) == gamma) {
                ++hits;
                break;
            }
    }
    return static_cast<double>(hits) / static_cast<double>(draws);
}

}  // namespace mtgw
