#pragma once

// The mobile -> pointed planar map transformation and the quenched-stability
// experiment built on it.
//
// Corners are the angular sectors of type-1/2 vertices in counterclockwise
// contour order (the cyclic convention; a lone type-1 root maps to the vertex
// map). Each corner draws one arc to its successor: the next type-1 corner
// carrying label l-1 (type-1 corners) resp. l-1/2 (type-2 corners), or the
// extra vertex r labelled min-1. Arcs nest, so the rotation around each map
// vertex is recovered by sorting arc ends per corner by cyclic distance to
// the far endpoint. Type-2 vertices are erased by merging their two arcs.

#include "mtgw/fringe.hpp"
#include "mtgw/maps.hpp"
#include "mtgw/mobile.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mtgw {

enum class MobileFlavor { plus, zero };

namespace detail {

struct Corner {
    VertexId vertex;
    TypeId type;
    int32_t label2;
};

// cyclic contour corners of type-1/2 vertices; position 0 is the root's
// first corner (the sector before its first child)
inline std::vector<Corner> contour_corners(const Mobile& m) {
    const auto& t = m.tree;
    std::vector<Corner> out;
    // events: (vertex, next child index); a vertex of degree k has k angular
    // sectors: the root emits before each child (the wrap sector first),
    // non-root vertices emit before each child and after the last
    std::vector<std::pair<VertexId, size_t>> stack{{t.root(), 0}};
    while (!stack.empty()) {
        auto& [v, ci] = stack.back();
        const auto& ch = t.children_of(v);
        bool is_root = v == t.root();
        bool emit = is_root ? ci < ch.size() : ci <= ch.size();
        if (emit && (t.type_of(v) == 1 || t.type_of(v) == 2))
            out.push_back({v, t.type_of(v), m.label2[v]});
        if (ci < ch.size()) {
            VertexId c = ch[ci];
            ++ci;
            stack.push_back({c, 0});
        } else {
            stack.pop_back();
        }
    }
    return out;
}

}  // namespace detail

struct BdfgOptions {
    // Rotation order around map vertices and r. The defaults are the unique
    // combination under which every output is genus 0 with face degrees
    // matching the per-face-vertex formula; the embedding tests pin them.
    bool corner_sort_ascending = false;  // arc ends per corner by forward distance, descending
    bool r_sort_ascending = false;       // rotation around r in reverse contour order
};

// Bouttier-Di Francesco-Guitter transformation. The mobile must be labelled.
inline PlanarMap bdfg(const Mobile& m, MobileFlavor flavor, const BdfgOptions& opt = {}) {
    const auto& t = m.tree;
    TypeId root_type = t.type_of(t.root());
    if (flavor == MobileFlavor::plus && root_type != 1)
        throw std::invalid_argument("plus flavor needs a type-1 root");
    if (flavor == MobileFlavor::zero && root_type != 2)
        throw std::invalid_argument("zero flavor needs a type-2 root");

    if (t.size() == 1) return PlanarMap::vertex_map(true);  // lone root -> vertex map

    auto corners = detail::contour_corners(m);
    int64_t p = static_cast<int64_t>(corners.size());
    if (p == 0) return PlanarMap::vertex_map(true);

    // label buckets over type-1 corners
    std::map<int32_t, std::vector<int64_t>> buckets;
    int32_t min1 = INT32_MAX;
    for (int64_t i = 0; i < p; ++i) {
        if (corners[i].type == 1) {
            buckets[corners[i].label2].push_back(i);
            min1 = std::min(min1, corners[i].label2);
        }
    }

    // arcs: one per corner; dst = corner position or -1 for r
    std::vector<int64_t> dst(p);
    for (int64_t i = 0; i < p; ++i) {
        int32_t target = corners[i].label2 - (corners[i].type == 1 ? 2 : 1);
        auto it = buckets.find(target);
        if (it == buckets.end()) {
            dst[i] = -1;
            continue;
        }
        const auto& pos = it->second;
        auto jt = std::upper_bound(pos.begin(), pos.end(), i);
        dst[i] = (jt != pos.end()) ? *jt : pos.front();
    }

    // half-edges: arc i has source end 2i and target end 2i+1
    auto fwd = [&](int64_t from, int64_t to) { return ((to - from) % p + p) % p; };
    std::vector<HalfEdge> sigma_raw(2 * p, -1);

    // per type-1 vertex: corner positions in contour order
    std::map<VertexId, std::vector<int64_t>> vert_corners;
    std::vector<std::vector<int64_t>> incoming(p);  // arcs by target corner
    std::vector<int64_t> r_arcs;
    for (int64_t i = 0; i < p; ++i) {
        if (corners[i].type == 1) vert_corners[corners[i].vertex].push_back(i);
        if (dst[i] < 0)
            r_arcs.push_back(i);
        else
            incoming[dst[i]].push_back(i);
    }

    auto chain = [&](const std::vector<HalfEdge>& cycle) {
        for (size_t k = 0; k < cycle.size(); ++k)
            sigma_raw[cycle[k]] = cycle[(k + 1) % cycle.size()];
    };

    for (auto& [v, cs] : vert_corners) {
        std::vector<HalfEdge> cyc;
        for (int64_t q : cs) {
            // ends at corner q: outgoing arc q plus incoming target-ends
            struct End {
                HalfEdge he;
                int64_t key;
            };
            std::vector<End> ends;
            // r acts as a just-forward endpoint: it hugs the forward side
            int64_t out_key = (dst[q] < 0) ? 0 : fwd(q, dst[q]);
            ends.push_back({static_cast<HalfEdge>(2 * q), out_key});
            for (int64_t a : incoming[q])
                ends.push_back({static_cast<HalfEdge>(2 * a + 1), fwd(q, a)});
            std::sort(ends.begin(), ends.end(), [&](const End& x, const End& y) {
                return opt.corner_sort_ascending ? x.key < y.key : x.key > y.key;
            });
            for (auto& e : ends) cyc.push_back(e.he);
        }
        chain(cyc);
    }
    {
        std::vector<HalfEdge> rc;
        std::vector<int64_t> order = r_arcs;
        if (!opt.r_sort_ascending) std::reverse(order.begin(), order.end());
        for (int64_t a : order) rc.push_back(static_cast<HalfEdge>(2 * a + 1));
        chain(rc);
    }

    // involution before type-2 erasure
    std::vector<HalfEdge> alpha_raw(2 * p);
    for (int64_t a = 0; a < p; ++a) {
        alpha_raw[2 * a] = static_cast<HalfEdge>(2 * a + 1);
        alpha_raw[2 * a + 1] = static_cast<HalfEdge>(2 * a);
    }

    // erase type-2 vertices: merge their two arcs end-to-end
    std::vector<bool> dead(2 * p, false);
    std::map<VertexId, std::vector<int64_t>> type2_arcs;
    for (int64_t i = 0; i < p; ++i)
        if (corners[i].type == 2) type2_arcs[corners[i].vertex].push_back(i);
    for (auto& [v, arcs] : type2_arcs) {
        if (arcs.size() != 2) throw std::logic_error("type-2 vertex without exactly two corners");
        alpha_raw[2 * arcs[0] + 1] = static_cast<HalfEdge>(2 * arcs[1] + 1);
        alpha_raw[2 * arcs[1] + 1] = static_cast<HalfEdge>(2 * arcs[0] + 1);
        dead[2 * arcs[0]] = dead[2 * arcs[1]] = true;
    }

    // root half-edge
    HalfEdge root_raw;
    if (flavor == MobileFlavor::plus) {
        root_raw = 1;  // target end of the first arc; edge points to the mobile root
    } else {
        const auto& arcs = type2_arcs.at(t.root());
        root_raw = static_cast<HalfEdge>(2 * arcs[1] + 1);  // points to succ of first corner
    }

    // compact
    std::vector<HalfEdge> remap(2 * p, -1);
    HalfEdge next = 0;
    for (int64_t h = 0; h < 2 * p; ++h)
        if (!dead[h]) remap[h] = next++;
    std::vector<HalfEdge> alpha(next), sigma(next);
    for (int64_t h = 0; h < 2 * p; ++h) {
        if (dead[h]) continue;
        alpha[remap[h]] = remap[alpha_raw[h]];
        sigma[remap[h]] = remap[sigma_raw[h]];
    }
    if (r_arcs.empty()) throw std::logic_error("no arcs to the marked vertex");
    PlanarMap probe(alpha, sigma, remap[root_raw], -1);
    int32_t rv = probe.vertex_of(remap[2 * r_arcs[0] + 1]);
    return PlanarMap(std::move(alpha), std::move(sigma), remap[root_raw], rv);
}

// --- quenched stability experiment ---------------------------------------------

enum class MapUnit { vertices, edges, faces };

inline GammaWeights map_unit_gamma(MapUnit unit) {
    switch (unit) {
        case MapUnit::vertices:
            return GammaWeights({{1, Rational(1)}, {2, Rational(0)}, {3, Rational(0)}, {4, Rational(0)}});
        case MapUnit::edges:
            return GammaWeights({{1, Rational(1)}, {2, Rational(0)}, {3, Rational(1)}, {4, Rational(1)}});
        case MapUnit::faces:
            return GammaWeights({{1, Rational(0)}, {2, Rational(0)}, {3, Rational(1)}, {4, Rational(1)}});
    }
    throw std::logic_error("unreachable");
}

// gamma-size of T(1) that makes the map have exactly n units, with the
// corrected counts V = 1+#1, E = #1+#3+#4-1, F = #3+#4
inline int64_t map_unit_target(MapUnit unit, int64_t n) {
    switch (unit) {
        case MapUnit::vertices:
            return n - 1;
        case MapUnit::edges:
            return n + 1;
        case MapUnit::faces:
            return n;
    }
    throw std::logic_error("unreachable");
}

struct QuenchedReport {
    int64_t n = 0;
    int radius = 0;
    int64_t draws = 0;
    double tv_halves = 0;
    int64_t distinct_keys = 0;
    std::map<std::string, int64_t> ball_counts[2];
    // zero-flavor diagnostic: mean fraction of gamma-size in the smaller block
    double mean_minor_block_fraction = -1;
};

// Samples conditioned mobiles, maps them through bdfg (and the dual, for the
// vertex-weight model), extracts radius-r balls at a uniformly chosen corner
// (uniform edge plus an independent fair coin flip for the half-edge), and
// reports the TV distance between the ball laws of the two halves.
inline QuenchedReport quenched_experiment(const OffspringModel& model4, MapUnit unit, int64_t n,
                                          MobileFlavor flavor, bool dualize, int radius,
                                          int64_t draws, uint64_t seed,
                                          const SamplerOptions& opt = {}) {
    QuenchedReport rep;
    rep.n = n;
    rep.radius = radius;
    rep.draws = draws;
    GammaWeights gamma = map_unit_gamma(unit);
    int64_t target = map_unit_target(unit, n);
    Rng rng(split_seed(seed, "quenched"));
    double minor_sum = 0;
    for (int64_t i = 0; i < draws; ++i) {
        Mobile mob;
        if (flavor == MobileFlavor::plus) {
            mob = sample_mobile_conditioned(model4, 1, gamma, target, rng, opt);
        } else {
            // glued pair conditioned on total gamma-size
            for (uint64_t attempt = 0;; ++attempt) {
                if (attempt >= opt.attempt_budget)
                    throw BudgetError("zero-flavor rejection budget exhausted", 0.0);
                SamplerOptions o2 = opt;
                o2.uniform_interleave = true;
                auto t1 = detail::generate(model4, 2, rng, o2, std::nullopt, &gamma,
                                           Rational(target));
                if (!t1) continue;
                Rational g1 = t1->weighted_size(gamma);
                auto t2 = detail::generate(model4, 2, rng, o2, std::nullopt, &gamma,
                                           Rational(target) - g1);
                if (!t2) continue;
                if (g1 + t2->weighted_size(gamma) != Rational(target)) continue;
                Mobile m1, m2;
                m1.tree = std::move(*t1);
                m2.tree = std::move(*t2);
                for (Mobile* mm : {&m1, &m2}) {
                    for (VertexId v = 0; v < static_cast<VertexId>(mm->tree.size()); ++v) {
                        TypeId vt = mm->tree.type_of(v);
                        if ((vt == 3 || vt == 4) && !mm->tree.children_of(v).empty()) {
                            std::vector<TypeId> cts;
                            for (VertexId c : mm->tree.children_of(v))
                                cts.push_back(mm->tree.type_of(c));
                            mm->beta2[v] = sample_decoration(vt, cts, rng);
                        }
                    }
                    assign_labels(*mm);
                }
                double gt = to_double(Rational(target));
                minor_sum += to_double(g1 < Rational(target) - g1 ? g1 : Rational(target) - g1) / gt;
                mob = glue_mobiles_at_root(m1, m2);
                break;
            }
        }
        PlanarMap map = bdfg(mob, flavor);
        if (dualize) map = map.dual();
        std::string key;
        if (map.is_vertex_map() || map.half_edges() == 0) {
            key = "B[VMAP]";
        } else {
            // uniform edge, independent fair coin flip for the half-edge
            HalfEdge h = static_cast<HalfEdge>(rng.below(map.half_edges()));
            if (rng.bernoulli(0.5)) h = map.alpha(h);
            key = local_ball_key(map, BallCenter::corner(h), radius);
        }
        rep.ball_counts[i < draws / 2 ? 0 : 1][key]++;
    }
    std::map<std::string, double> law1, law2;
    for (auto& [k, c] : rep.ball_counts[0]) law1[k] = static_cast<double>(c) / (draws / 2);
    for (auto& [k, c] : rep.ball_counts[1])
        law2[k] = static_cast<double>(c) / (draws - draws / 2);
    rep.tv_halves = tv_distance(law1, law2);
    std::map<std::string, bool> seen;
    for (auto& [k, c] : rep.ball_counts[0]) seen[k] = true;
    for (auto& [k, c] : rep.ball_counts[1]) seen[k] = true;
    rep.distinct_keys = static_cast<int64_t>(seen.size());
    if (flavor == MobileFlavor::zero) rep.mean_minor_block_fraction = minor_sum / draws;
    return rep;
}

}  // namespace mtgw
