#pragma once

// Unconditioned and conditioned Galton-Watson sampling, the spinal
// decomposition at a distinguished type kappa, and the Xi expansion for
// reducible models.

#include "mtgw/offspring_model.hpp"
#include "mtgw/rng.hpp"
#include "mtgw/sesqui.hpp"
#include "mtgw/tree.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <variant>
#include <vector>

namespace mtgw {

struct NonExtinctError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BudgetError : std::runtime_error {
    BudgetError(const std::string& msg, double acceptance_rate_estimate)
        : std::runtime_error(msg), acceptance_rate(acceptance_rate_estimate) {}
    double acceptance_rate;
};

class RootLaw {
public:
    static RootLaw fixed(TypeId t) {
        RootLaw r;
        r.fixed_ = t;
        return r;
    }
    static RootLaw mixture(std::vector<std::pair<TypeId, Rational>> probs) {
        RootLaw r;
        Rational total = 0;
        for (auto& [t, p] : probs) total += p;
        if (total != 1) throw std::invalid_argument("root law must sum to 1");
        r.mix_ = std::move(probs);
        double acc = 0;
        for (auto& [t, p] : r.mix_) {
            acc += to_double(p);
            r.cdf_.push_back(acc);
        }
        r.cdf_.back() = 1.0;
        return r;
    }

    bool is_fixed() const { return mix_.empty(); }
    TypeId fixed_type() const { return fixed_; }

    TypeId sample(Rng& rng) const {
        if (mix_.empty()) return fixed_;
        return mix_[rng.categorical_cdf(cdf_)].first;
    }

    std::vector<TypeId> support() const {
        if (mix_.empty()) return {fixed_};
        std::vector<TypeId> out;
        for (auto& [t, p] : mix_)
            if (p > 0) out.push_back(t);
        return out;
    }

private:
    TypeId fixed_ = 0;
    std::vector<std::pair<TypeId, Rational>> mix_;
    std::vector<double> cdf_;
};

struct SamplerOptions {
    uint64_t vertex_cap = 10'000'000;  // per attempted tree
    uint64_t attempt_budget = 1'000'000;
    // uniform inter-type offspring ordering (needed for mobiles); default off
    bool uniform_interleave = false;
};

namespace detail {

// Core DFS generator. stop_kappa: non-root vertices of that type get no
// offspring. abort_gamma/abort_limit: abandon the draw (returns nullopt) as
// soon as the gamma-weighted size exceeds the limit.
inline std::optional<MultiTypeTree> generate(const OffspringModel& model, TypeId root_type,
                                             Rng& rng, const SamplerOptions& opt,
                                             std::optional<TypeId> stop_kappa = std::nullopt,
                                             const GammaWeights* abort_gamma = nullptr,
                                             std::optional<Rational> abort_limit = std::nullopt) {
    // integer fast path for the abort bookkeeping (the common case)
    bool int_gamma = false;
    std::vector<int64_t> iw;
    int64_t ilimit = 0, igsize = 0;
    Rational gsize = 0;
    if (abort_gamma) {
        int_gamma = denominator(*abort_limit) == 1;
        if (int_gamma)
            for (auto& [ty, w] : abort_gamma->weights())
                if (denominator(w) != 1) int_gamma = false;
        if (int_gamma) {
            int32_t maxt = 0;
            for (auto& [ty, w] : abort_gamma->weights()) maxt = std::max(maxt, ty);
            iw.assign(static_cast<size_t>(maxt) + 1, -1);
            for (auto& [ty, w] : abort_gamma->weights()) iw[ty] = w.convert_to<int64_t>();
            ilimit = abort_limit->convert_to<int64_t>();
        }
    }
    auto add_weight = [&](TypeId ty) -> bool {  // false = abort the draw
        if (int_gamma) {
            if (ty >= static_cast<TypeId>(iw.size()) || iw[ty] < 0)
                throw std::invalid_argument("gamma weight for unknown type " + std::to_string(ty));
            igsize += iw[ty];
            return igsize <= ilimit;
        }
        gsize += abort_gamma->weight(ty);
        return gsize <= *abort_limit;
    };

    MultiTypeTree t;
    VertexId root = t.add_root(root_type);
    if (abort_gamma && !add_weight(root_type)) return std::nullopt;
    std::vector<VertexId> stack{root};
    std::vector<TypeId> child_buf;
    while (!stack.empty()) {
        VertexId v = stack.back();
        stack.pop_back();
        TypeId vt = t.type_of(v);
        if (stop_kappa && v != root && vt == *stop_kappa) continue;
        OffspringVector off = model.dist(vt).sample(rng);
        child_buf.clear();
        for (auto& [ct, c] : off.entries())
            for (int32_t i = 0; i < c; ++i) child_buf.push_back(ct);
        if (opt.uniform_interleave) rng.shuffle(child_buf);
        for (TypeId ct : child_buf) {
            VertexId c = t.add_child(v, ct);
            stack.push_back(c);
            if (abort_gamma && !add_weight(ct)) return std::nullopt;
            if (t.size() > opt.vertex_cap)
                throw NonExtinctError("generation cap exceeded; possibly non-extinct model");
        }
    }
    return t;
}

}  // namespace detail

inline MultiTypeTree sample_tree(const OffspringModel& model, const RootLaw& root, Rng& rng,
                                 const SamplerOptions& opt = {}) {
    return *detail::generate(model, root.sample(rng), rng, opt);
}

// T^alpha / T^kappa: non-root vertices of type kappa receive no offspring.
inline MultiTypeTree sample_stopped(const OffspringModel& model, TypeId kappa, const RootLaw& root,
                                    Rng& rng, const SamplerOptions& opt = {}) {
    return *detail::generate(model, root.sample(rng), rng, opt, kappa);
}

// --- spinal decomposition ----------------------------------------------------

struct SpinalDecomposition {
    MultiTypeTree head;                // T^alpha: stopped tree from the root
    std::vector<MultiTypeTree> blocks; // T^kappa_i in DFS discovery order
    TypeId kappa = 0;

    int64_t L() const { return static_cast<int64_t>(blocks.size()); }
};

namespace detail {

// copy the kappa-stopped fringe at src_root
inline MultiTypeTree stopped_fringe(const MultiTypeTree& t, VertexId src_root, TypeId kappa) {
    MultiTypeTree out;
    std::vector<std::pair<VertexId, VertexId>> stack{{src_root, kNoVertex}};
    while (!stack.empty()) {
        auto [src, dst_parent] = stack.back();
        stack.pop_back();
        VertexId nv = (dst_parent == kNoVertex) ? out.add_root(t.type_of(src))
                                                : out.add_child(dst_parent, t.type_of(src));
        if (dst_parent != kNoVertex && t.type_of(src) == kappa) continue;  // stop here
        const auto& ch = t.children_of(src);
        for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back({*it, nv});
    }
    return out;
}

}  // namespace detail

inline SpinalDecomposition decompose(const MultiTypeTree& t, TypeId kappa) {
    SpinalDecomposition dec;
    dec.kappa = kappa;
    dec.head = detail::stopped_fringe(t, t.root(), kappa);
    for (VertexId v : t.preorder())
        if (v != t.root() && t.type_of(v) == kappa)
            dec.blocks.push_back(detail::stopped_fringe(t, v, kappa));
    return dec;
}

inline MultiTypeTree reassemble(const SpinalDecomposition& dec) {
    MultiTypeTree t;
    size_t next_block = 0;
    // Copy pieces depth-first; every non-root kappa vertex consumes the next
    // block, whose root is identified with that vertex. Block consumption
    // order is preorder of the final tree, matching decompose.
    auto expand = [&](auto&& self, const MultiTypeTree& piece, VertexId src, VertexId dst_parent,
                      bool is_piece_root) -> void {
        VertexId nv = (dst_parent == kNoVertex) ? t.add_root(piece.type_of(src))
                                                : t.add_child(dst_parent, piece.type_of(src));
        if (!is_piece_root && piece.type_of(src) == dec.kappa) {
            if (next_block >= dec.blocks.size())
                throw std::invalid_argument("reassemble: not enough blocks");
            const MultiTypeTree& block = dec.blocks[next_block++];
            if (block.type_of(block.root()) != dec.kappa)
                throw std::invalid_argument("reassemble: block root type mismatch");
            for (VertexId c : block.children_of(block.root())) self(self, block, c, nv, false);
            return;
        }
        for (VertexId c : piece.children_of(src)) self(self, piece, c, nv, false);
    };
    expand(expand, dec.head, dec.head.root(), kNoVertex, true);
    if (next_block != dec.blocks.size())
        throw std::invalid_argument("reassemble: unused blocks remain");
    return t;
}

// --- conditioning -------------------------------------------------------------

struct Conditioning {
    enum class Mode { total_size, gamma_size, type_vector };
    Mode mode = Mode::total_size;
    int64_t n = 0;
    GammaWeights gamma;                 // gamma_size only
    std::map<TypeId, int64_t> counts;   // type_vector only

    static Conditioning total_size(int64_t n) {
        Conditioning c;
        c.mode = Mode::total_size;
        c.n = n;
        return c;
    }
    static Conditioning gamma_size(GammaWeights g, int64_t n) {
        Conditioning c;
        c.mode = Mode::gamma_size;
        c.gamma = std::move(g);
        c.n = n;
        return c;
    }
    static Conditioning type_vector(std::map<TypeId, int64_t> k) {
        Conditioning c;
        c.mode = Mode::type_vector;
        c.counts = std::move(k);
        return c;
    }

    bool satisfied_by(const MultiTypeTree& t) const {
        switch (mode) {
            case Mode::total_size:
                return static_cast<int64_t>(t.size()) == n;
            case Mode::gamma_size:
                return t.weighted_size(gamma) == Rational(n);
            case Mode::type_vector: {
                auto tc = t.type_counts();
                for (auto& [ty, c] : counts)
                    if ((tc.count(ty) ? tc[ty] : 0) != c) return false;
                for (auto& [ty, c] : tc)
                    if (!counts.count(ty) && c != 0) return false;
                return true;
            }
        }
        return false;
    }
};

// Detect a sesqui-compatible model: exactly two types, the second infertile.
inline std::optional<SesquiModel> sesqui_view(const OffspringModel& model, TypeId fertile = 1,
                                              TypeId sterile = 2) {
    if (model.types().size() != 2) return std::nullopt;
    if (!model.types().contains(fertile) || !model.types().contains(sterile)) return std::nullopt;
    const auto& df = model.dist(fertile);
    const auto& ds = model.dist(sterile);
    if (!df.is_finite() || !ds.is_finite()) return std::nullopt;
    if (!ds.support_types().empty()) return std::nullopt;  // sterile type must be infertile
    std::vector<SesquiAtom> atoms;
    for (auto& [ov, p] : df.atoms()) {
        for (auto& [t, c] : ov.entries())
            if (t != fertile && t != sterile) return std::nullopt;
        atoms.push_back({ov.count(fertile), ov.count(sterile), p});
    }
    try {
        return SesquiModel(std::move(atoms));
    } catch (const std::invalid_argument&) {
        return std::nullopt;
    }
}

// Rejection sampling with early aborts; routes to the exact cycle-lemma
// sampler for sesqui models conditioned on total size.
inline MultiTypeTree sample_conditioned(const OffspringModel& model, const RootLaw& root,
                                        const Conditioning& cond, Rng& rng,
                                        const SamplerOptions& opt = {}) {
    if (cond.mode == Conditioning::Mode::total_size && root.is_fixed() &&
        root.fixed_type() == 1 && !opt.uniform_interleave) {
        if (auto sm = sesqui_view(model)) {
            SesquiExactSampler ex(*sm, cond.n);
            return ex.sample(rng);
        }
    }
    // early-abort gamma view of the conditioning
    std::optional<GammaWeights> gamma;
    std::optional<Rational> limit;
    if (cond.mode == Conditioning::Mode::total_size) {
        std::map<TypeId, Rational> w;
        for (TypeId t : model.types().labels()) w[t] = 1;
        gamma = GammaWeights(std::move(w));
        limit = Rational(cond.n);
    } else if (cond.mode == Conditioning::Mode::gamma_size) {
        gamma = cond.gamma;
        limit = Rational(cond.n);
    } else if (cond.mode == Conditioning::Mode::type_vector) {
        // a satisfying tree has total size sum(k_i); abort beyond that
        std::map<TypeId, Rational> w;
        int64_t total = 0;
        for (TypeId t : model.types().labels()) w[t] = 1;
        for (auto& [t, c] : cond.counts) total += c;
        gamma = GammaWeights(std::move(w));
        limit = Rational(total);
    }
    for (uint64_t attempt = 1; attempt <= opt.attempt_budget; ++attempt) {
        auto t = detail::generate(model, root.sample(rng), rng, opt, std::nullopt,
                                  gamma ? &*gamma : nullptr, limit);
        if (t && cond.satisfied_by(*t)) return *t;
    }
    throw BudgetError("rejection budget exhausted", 1.0 / static_cast<double>(opt.attempt_budget));
}

// --- Xi expansion (reducible case) --------------------------------------------
//
// Input: 2-type tree S (fertile type 1, sterile type 2) plus, for each
// type-1 vertex, a forest with one tree per type-2 child. Each type-2 child
// is deleted and the corresponding forest tree is grafted in its place.
inline MultiTypeTree xi_expand(const MultiTypeTree& s,
                               const std::map<VertexId, std::vector<MultiTypeTree>>& forests,
                               TypeId fertile = 1, TypeId sterile = 2) {
    for (VertexId v : s.preorder()) {
        if (s.type_of(v) != fertile) continue;
        size_t zeta = 0;
        for (VertexId c : s.children_of(v))
            if (s.type_of(c) == sterile) ++zeta;
        size_t have = forests.count(v) ? forests.at(v).size() : 0;
        if (zeta != have)
            throw std::invalid_argument("xi_expand: forest size mismatch at vertex " +
                                        std::to_string(v));
    }
    MultiTypeTree out;
    auto graft = [&](auto&& self, const MultiTypeTree& tree, VertexId src, VertexId dst_parent)
        -> void {
        VertexId nv = (dst_parent == kNoVertex) ? out.add_root(tree.type_of(src))
                                                : out.add_child(dst_parent, tree.type_of(src));
        for (VertexId c : tree.children_of(src)) self(self, tree, c, nv);
    };
    auto expand = [&](auto&& self, VertexId src, VertexId dst_parent) -> void {
        VertexId nv = (dst_parent == kNoVertex) ? out.add_root(s.type_of(src))
                                                : out.add_child(dst_parent, s.type_of(src));
        size_t forest_i = 0;
        for (VertexId c : s.children_of(src)) {
            if (s.type_of(src) == fertile && s.type_of(c) == sterile) {
                const auto& f = forests.at(src)[forest_i++];
                graft(graft, f, f.root(), nv);
            } else {
                self(self, c, nv);
            }
        }
    };
    expand(expand, s.root(), kNoVertex);
    return out;
}

}  // namespace mtgw
