#pragma once

// Exhaustive enumeration oracles: all trees of a finite-PMF model up to a
// size cap (with exact probabilities), their stopped variants, and all
// rooted pointed planar maps up to an edge cap. These are deliberately
// independent of the samplers and the cycle-lemma analytics they verify.

#include "mtgw/maps.hpp"
#include "mtgw/offspring_model.hpp"
#include "mtgw/tree.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>
#include <vector>

namespace mtgw {

struct EnumTree {
    MultiTypeTree tree;
    Rational prob;
};

// All trees with the given root type and exact size, finite-PMF models only.
// Children are materialized in canonical order (type-ascending blocks).
class TreeEnumerator {
public:
    TreeEnumerator(const OffspringModel& model, bool stopped_at = false, TypeId kappa = 0)
        : model_(model), stopped_(stopped_at), kappa_(kappa) {}

    const std::vector<EnumTree>& of_size(TypeId root_type, int size) {
        auto key = std::make_pair(root_type, size);
        auto it = memo_.find(key);
        if (it != memo_.end()) return it->second;
        std::vector<EnumTree> out;
        if (size >= 1) {
            for (auto& [ov, p] : model_.dist(root_type).atoms()) {
                if (p == 0) continue;
                std::vector<TypeId> child_types;
                for (auto& [ct, c] : ov.entries())
                    for (int32_t i = 0; i < c; ++i) child_types.push_back(ct);
                // within-type order matters; types come in ascending blocks
                if (child_types.empty()) {
                    if (size == 1) {
                        EnumTree et;
                        et.tree = MultiTypeTree::single(root_type);
                        et.prob = p;
                        out.push_back(std::move(et));
                    }
                    continue;
                }
                std::vector<const EnumTree*> parts(child_types.size());
                distribute(child_types, 0, size - 1, parts, p, root_type, out);
            }
        }
        return memo_.emplace(std::move(key), std::move(out)).first->second;
    }

    // all trees of size <= cap
    std::vector<EnumTree> up_to(TypeId root_type, int cap) {
        std::vector<EnumTree> all;
        for (int s = 1; s <= cap; ++s)
            for (auto& et : of_size(root_type, s)) all.push_back(et);
        return all;
    }

private:
    void distribute(const std::vector<TypeId>& child_types, size_t idx, int remaining,
                    std::vector<const EnumTree*>& parts, const Rational& base_prob,
                    TypeId root_type, std::vector<EnumTree>& out) {
        if (idx == child_types.size()) {
            if (remaining != 0) return;
            EnumTree et;
            et.tree.add_root(root_type);
            et.prob = base_prob;
            for (const EnumTree* part : parts) {
                graft(et.tree, 0, part->tree);
                et.prob *= part->prob;
            }
            out.push_back(std::move(et));
            return;
        }
        int slots_left = static_cast<int>(child_types.size() - idx - 1);
        TypeId ct = child_types[idx];
        // stopped kappa children are bare leaves
        if (stopped_ && ct == kappa_) {
            auto& lc = leaf_cache_[ct];
            if (lc.tree.empty()) {
                lc.tree = MultiTypeTree::single(ct);
                lc.prob = 1;
            }
            if (remaining - 1 < slots_left) return;
            parts[idx] = &lc;
            distribute(child_types, idx + 1, remaining - 1, parts, base_prob, root_type, out);
            return;
        }
        for (int s = 1; s <= remaining - slots_left; ++s) {
            for (auto& sub : of_size(ct, s)) {
                parts[idx] = &sub;
                distribute(child_types, idx + 1, remaining - s, parts, base_prob, root_type, out);
            }
        }
    }

    static void graft(MultiTypeTree& dst, VertexId at, const MultiTypeTree& src) {
        std::vector<std::pair<VertexId, VertexId>> stack{{src.root(), at}};
        while (!stack.empty()) {
            auto [sv, dp] = stack.back();
            stack.pop_back();
            VertexId nv = dst.add_child(dp, src.type_of(sv));
            const auto& ch = src.children_of(sv);
            for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back({*it, nv});
        }
    }

    const OffspringModel& model_;
    bool stopped_;
    TypeId kappa_;
    std::map<std::pair<TypeId, int>, std::vector<EnumTree>> memo_;
    std::map<TypeId, EnumTree> leaf_cache_;
};

// Highest-probability trees of the T(root_type) law among those with at most
// size_cap vertices, deterministic tie-break by canonical key.
inline std::vector<EnumTree> top_probability_trees(const OffspringModel& model, TypeId root_type,
                                                   int size_cap, size_t count) {
    TreeEnumerator en(model);
    auto all = en.up_to(root_type, size_cap);
    std::sort(all.begin(), all.end(), [](const EnumTree& a, const EnumTree& b) {
        if (a.prob != b.prob) return a.prob > b.prob;
        return a.tree.canonical_key() < b.tree.canonical_key();
    });
    if (all.size() > count) all.resize(count);
    return all;
}

// --- rooted pointed planar map enumeration ------------------------------------

// All rooted planar maps with exactly e edges (root = half-edge 0), deduped
// by canonical key. Built from raw rotation-involution pairs.
inline std::vector<PlanarMap> enumerate_rooted_maps(int e) {
    if (e == 0) return {PlanarMap::vertex_map(false)};
    int n = 2 * e;
    std::vector<PlanarMap> out;
    std::set<std::string> seen;

    std::vector<int> perm(n);
    for (int i = 0; i < n; ++i) perm[i] = i;

    // iterate over all fixed-point-free involutions
    std::vector<std::vector<HalfEdge>> involutions;
    std::vector<HalfEdge> inv(n, -1);
    auto gen_inv = [&](auto&& self, int) -> void {
        int a = -1;
        for (int i = 0; i < n; ++i)
            if (inv[i] < 0) {
                a = i;
                break;
            }
        if (a < 0) {
            involutions.push_back(inv);
            return;
        }
        for (int b = a + 1; b < n; ++b) {
            if (inv[b] >= 0) continue;
            inv[a] = b;
            inv[b] = a;
            self(self, 0);
            inv[a] = inv[b] = -1;
        }
    };
    gen_inv(gen_inv, 0);

    std::vector<HalfEdge> sigma(n);
    do {
        for (int i = 0; i < n; ++i) sigma[i] = perm[i];
        for (auto& alpha : involutions) {
            // connectivity
            std::vector<bool> vis(n, false);
            std::vector<int> stack{0};
            vis[0] = true;
            int cnt = 1;
            while (!stack.empty()) {
                int h = stack.back();
                stack.pop_back();
                for (int nb : {static_cast<int>(sigma[h]), static_cast<int>(alpha[h])})
                    if (!vis[nb]) {
                        vis[nb] = true;
                        ++cnt;
                        stack.push_back(nb);
                    }
            }
            if (cnt != n) continue;
            PlanarMap m(alpha, sigma, 0, -1);
            if (!m.euler_ok()) continue;  // keep genus 0 only
            std::string key = m.canonical_key();
            if (seen.insert(key).second) out.push_back(std::move(m));
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return out;
}

enum class PointedClass { positive, zero, negative };

struct EnumPointedMap {
    PlanarMap map;  // with marked vertex set
    PointedClass cls;
    double weight;  // W_q
};

// All pointed rooted maps with <= max_edges, classified and W_q-weighted.
// The vertex map is included (positive class, weight 1).
inline std::vector<EnumPointedMap> enumerate_pointed_maps(const WeightSequence& q, int max_edges) {
    std::vector<EnumPointedMap> out;
    {
        EnumPointedMap vm{PlanarMap::vertex_map(true), PointedClass::positive, 1.0};
        out.push_back(std::move(vm));
    }
    for (int e = 1; e <= max_edges; ++e) {
        for (auto& m : enumerate_rooted_maps(e)) {
            double w = 1.0;
            for (int32_t f = 0; f < m.face_count(); ++f) w *= q.q(static_cast<int>(m.face_degree(f)));
            if (w == 0) continue;
            int32_t origin = m.vertex_of(m.root());
            int32_t dest = m.vertex_of(m.alpha(m.root()));
            for (int32_t v = 0; v < m.vertex_count(); ++v) {
                auto dist = m.vertex_distances({v});
                PointedClass cls;
                if (dist[origin] < dist[dest])
                    cls = PointedClass::positive;
                else if (dist[origin] == dist[dest])
                    cls = PointedClass::zero;
                else
                    cls = PointedClass::negative;
                std::vector<HalfEdge> a(m.half_edges()), s(m.half_edges());
                for (size_t h = 0; h < m.half_edges(); ++h) {
                    a[h] = m.alpha(static_cast<HalfEdge>(h));
                    s[h] = m.sigma(static_cast<HalfEdge>(h));
                }
                out.push_back({PlanarMap(std::move(a), std::move(s), m.root(), v), cls, w});
            }
        }
    }
    return out;
}

}  // namespace mtgw
