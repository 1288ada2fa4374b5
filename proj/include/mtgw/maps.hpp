#pragma once

// Rooted pointed combinatorial maps as half-edge rotation systems.
//
// Half-edges 0..2E-1; alpha is the fixed-point-free edge involution, sigma
// the counterclockwise rotation (next half-edge around the same vertex), and
// the face permutation is phi = sigma . alpha. The vertex map (no edges) is
// representable and belongs to the positive class by convention.

#include "mtgw/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mtgw {

using HalfEdge = int32_t;

class PlanarMap {
public:
    PlanarMap() = default;  // vertex map
    PlanarMap(std::vector<HalfEdge> alpha, std::vector<HalfEdge> sigma, HalfEdge root,
              int32_t marked_vertex = -1)
        : alpha_(std::move(alpha)), sigma_(std::move(sigma)), root_(root),
          marked_vertex_(marked_vertex) {
        validate();
        index();
    }

    static PlanarMap vertex_map(bool marked = false) {
        PlanarMap m;
        m.marked_vertex_ = marked ? 0 : -1;
        return m;
    }

    bool is_vertex_map() const { return alpha_.empty(); }
    size_t half_edges() const { return alpha_.size(); }
    int64_t edge_count() const { return static_cast<int64_t>(alpha_.size() / 2); }
    int64_t vertex_count() const { return is_vertex_map() ? 1 : static_cast<int64_t>(vertex_cycles_.size()); }
    int64_t face_count() const { return is_vertex_map() ? 1 : static_cast<int64_t>(face_cycles_.size()); }

    HalfEdge root() const { return root_; }
    int32_t marked_vertex() const { return marked_vertex_; }
    HalfEdge alpha(HalfEdge h) const { return alpha_[h]; }
    HalfEdge sigma(HalfEdge h) const { return sigma_[h]; }
    HalfEdge phi(HalfEdge h) const { return sigma_[alpha_[h]]; }

    int32_t vertex_of(HalfEdge h) const { return vertex_of_[h]; }
    int32_t face_of(HalfEdge h) const { return face_of_[h]; }
    const std::vector<std::vector<HalfEdge>>& vertex_cycles() const { return vertex_cycles_; }
    const std::vector<std::vector<HalfEdge>>& face_cycles() const { return face_cycles_; }

    int64_t degree(int32_t vertex) const {
        return is_vertex_map() ? 0 : static_cast<int64_t>(vertex_cycles_[vertex].size());
    }
    int64_t face_degree(int32_t face) const {
        return static_cast<int64_t>(face_cycles_[face].size());
    }

    bool euler_ok() const { return vertex_count() - edge_count() + face_count() == 2; }

    // dual: faces <-> vertices; rotation of the dual is the face permutation.
    // The marked vertex becomes a face and is dropped.
    PlanarMap dual() const {
        if (is_vertex_map()) return *this;
        std::vector<HalfEdge> dsigma(alpha_.size());
        for (size_t h = 0; h < alpha_.size(); ++h) dsigma[h] = phi(static_cast<HalfEdge>(h));
        return PlanarMap(alpha_, std::move(dsigma), root_, -1);
    }

    PlanarMap unmarked() const {
        if (is_vertex_map()) return vertex_map(false);
        return PlanarMap(alpha_, sigma_, root_, -1);
    }

    // canonical key via BFS relabeling from a given root corner
    std::string canonical_key(std::optional<HalfEdge> from = std::nullopt) const {
        if (is_vertex_map()) return marked_vertex_ >= 0 ? "VMAP*" : "VMAP";
        HalfEdge start = from ? *from : root_;
        std::vector<int32_t> label(alpha_.size(), -1);
        std::vector<HalfEdge> order;
        label[start] = 0;
        order.push_back(start);
        for (size_t i = 0; i < order.size(); ++i) {
            HalfEdge h = order[i];
            for (HalfEdge nb : {sigma_[h], alpha_[h]}) {
                if (label[nb] < 0) {
                    label[nb] = static_cast<int32_t>(order.size());
                    order.push_back(nb);
                }
            }
        }
        std::string key;
        key.reserve(order.size() * 8 + 16);
        for (HalfEdge h : order) {
            key += std::to_string(label[sigma_[h]]);
            key += ',';
            key += std::to_string(label[alpha_[h]]);
            key += ';';
        }
        if (marked_vertex_ >= 0) {
            int32_t best = -1;
            for (HalfEdge h : vertex_cycles_[marked_vertex_])
                if (best < 0 || label[h] < best) best = label[h];
            key += "m" + std::to_string(best);
        }
        return key;
    }

    // graph distances from a set of vertices
    std::vector<int64_t> vertex_distances(const std::vector<int32_t>& sources) const {
        std::vector<int64_t> dist(vertex_count(), -1);
        std::deque<int32_t> queue;
        for (int32_t s : sources) {
            if (dist[s] < 0) {
                dist[s] = 0;
                queue.push_back(s);
            }
        }
        while (!queue.empty()) {
            int32_t v = queue.front();
            queue.pop_front();
            for (HalfEdge h : vertex_cycles_[v]) {
                int32_t w = vertex_of_[alpha_[h]];
                if (dist[w] < 0) {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        return dist;
    }

    nlohmann::json to_json() const {
        return nlohmann::json{{"involution", alpha_},
                              {"rotation", sigma_},
                              {"root", root_},
                              {"marked", marked_vertex_}};
    }

    static PlanarMap from_json(const nlohmann::json& j) {
        auto alpha = j.at("involution").get<std::vector<HalfEdge>>();
        auto sigma = j.at("rotation").get<std::vector<HalfEdge>>();
        if (alpha.empty()) return vertex_map();
        return PlanarMap(std::move(alpha), std::move(sigma), j.at("root").get<HalfEdge>(),
                         j.at("marked").get<int32_t>());
    }

private:
    void validate() const {
        size_t n = alpha_.size();
        if (sigma_.size() != n) throw std::invalid_argument("map: |sigma| != |alpha|");
        if (n == 0) return;
        if (n % 2 != 0) throw std::invalid_argument("map: odd number of half-edges");
        std::vector<bool> seen(n, false);
        for (size_t h = 0; h < n; ++h) {
            if (alpha_[h] < 0 || alpha_[h] >= static_cast<HalfEdge>(n) ||
                sigma_[h] < 0 || sigma_[h] >= static_cast<HalfEdge>(n))
                throw std::invalid_argument("map: half-edge index out of range");
            if (alpha_[alpha_[h]] != static_cast<HalfEdge>(h) ||
                alpha_[h] == static_cast<HalfEdge>(h))
                throw std::invalid_argument("map: alpha is not a fixed-point-free involution");
            seen[sigma_[h]] = true;
        }
        for (bool b : seen)
            if (!b) throw std::invalid_argument("map: sigma is not a permutation");
        if (root_ < 0 || root_ >= static_cast<HalfEdge>(n))
            throw std::invalid_argument("map: bad root");
        // connectivity
        std::vector<bool> vis(n, false);
        std::vector<HalfEdge> stack{0};
        vis[0] = true;
        size_t cnt = 1;
        while (!stack.empty()) {
            HalfEdge h = stack.back();
            stack.pop_back();
            for (HalfEdge nb : {sigma_[h], alpha_[h]}) {
                if (!vis[nb]) {
                    vis[nb] = true;
                    ++cnt;
                    stack.push_back(nb);
                }
            }
        }
        if (cnt != n) throw std::invalid_argument("map: not connected");
    }

    void index() {
        size_t n = alpha_.size();
        vertex_of_.assign(n, -1);
        face_of_.assign(n, -1);
        vertex_cycles_.clear();
        face_cycles_.clear();
        for (size_t h = 0; h < n; ++h) {
            if (vertex_of_[h] >= 0) continue;
            std::vector<HalfEdge> cyc;
            HalfEdge x = static_cast<HalfEdge>(h);
            while (vertex_of_[x] < 0) {
                vertex_of_[x] = static_cast<int32_t>(vertex_cycles_.size());
                cyc.push_back(x);
                x = sigma_[x];
            }
            vertex_cycles_.push_back(std::move(cyc));
        }
        for (size_t h = 0; h < n; ++h) {
            if (face_of_[h] >= 0) continue;
            std::vector<HalfEdge> cyc;
            HalfEdge x = static_cast<HalfEdge>(h);
            while (face_of_[x] < 0) {
                face_of_[x] = static_cast<int32_t>(face_cycles_.size());
                cyc.push_back(x);
                x = phi(x);
            }
            face_cycles_.push_back(std::move(cyc));
        }
        if (marked_vertex_ >= static_cast<int32_t>(vertex_cycles_.size()))
            throw std::invalid_argument("map: marked vertex out of range");
    }

    std::vector<HalfEdge> alpha_, sigma_;
    HalfEdge root_ = -1;
    int32_t marked_vertex_ = -1;
    std::vector<int32_t> vertex_of_, face_of_;
    std::vector<std::vector<HalfEdge>> vertex_cycles_, face_cycles_;
};

// --- local balls ---------------------------------------------------------------

struct BallCenter {
    enum class Kind { vertex, corner, face };
    Kind kind = Kind::corner;
    int32_t id = 0;  // vertex id, half-edge, or face id

    static BallCenter vertex(int32_t v) { return {Kind::vertex, v}; }
    static BallCenter corner(HalfEdge h) { return {Kind::corner, h}; }
    static BallCenter face(int32_t f) { return {Kind::face, f}; }
};

// Canonically keyed submap of all edges with an endpoint at distance < r
// from the center, annotated with true vertex degrees. r = 0 keys the bare
// center with its degree.
inline std::string local_ball_key(const PlanarMap& m, const BallCenter& c, int r) {
    if (m.is_vertex_map()) return "B[VMAP]";
    std::vector<int32_t> sources;
    switch (c.kind) {
        case BallCenter::Kind::vertex:
            sources = {c.id};
            break;
        case BallCenter::Kind::corner:
            sources = {m.vertex_of(c.id)};
            break;
        case BallCenter::Kind::face:
            for (HalfEdge h : m.face_cycles()[c.id]) sources.push_back(m.vertex_of(h));
            break;
    }
    auto dist = m.vertex_distances(sources);

    if (r <= 0) {
        switch (c.kind) {
            case BallCenter::Kind::vertex:
                return "B0[v:deg=" + std::to_string(m.degree(c.id)) + "]";
            case BallCenter::Kind::corner:
                return "B0[c:deg=" + std::to_string(m.degree(m.vertex_of(c.id))) + "]";
            case BallCenter::Kind::face:
                return "B0[f:deg=" + std::to_string(m.face_degree(c.id)) + "]";
        }
    }

    // kept half-edges
    std::vector<bool> keep(m.half_edges(), false);
    for (size_t h = 0; h < m.half_edges(); ++h) {
        int64_t d1 = dist[m.vertex_of(static_cast<HalfEdge>(h))];
        int64_t d2 = dist[m.vertex_of(m.alpha(static_cast<HalfEdge>(h)))];
        if (std::min(d1, d2) <= r - 1) keep[h] = true;
    }
    // restricted rotation
    std::vector<HalfEdge> rsigma(m.half_edges(), -1);
    for (size_t h = 0; h < m.half_edges(); ++h) {
        if (!keep[h]) continue;
        HalfEdge x = m.sigma(static_cast<HalfEdge>(h));
        while (!keep[x]) x = m.sigma(x);
        rsigma[h] = x;
    }

    auto key_from = [&](HalfEdge start) {
        std::vector<int32_t> label(m.half_edges(), -1);
        std::vector<HalfEdge> order;
        label[start] = 0;
        order.push_back(start);
        for (size_t i = 0; i < order.size(); ++i) {
            HalfEdge h = order[i];
            for (HalfEdge nb : {rsigma[h], m.alpha(h)}) {
                if (label[nb] < 0) {
                    label[nb] = static_cast<int32_t>(order.size());
                    order.push_back(nb);
                }
            }
        }
        std::string key;
        for (HalfEdge h : order) {
            key += std::to_string(label[rsigma[h]]);
            key += ',';
            key += std::to_string(label[m.alpha(h)]);
            key += ':';
            key += std::to_string(m.degree(m.vertex_of(h)));
            key += ';';
        }
        return key;
    };

    switch (c.kind) {
        case BallCenter::Kind::corner:
            // the center corner's edge is always kept for r >= 1
            return "B" + std::to_string(r) + "c[" + key_from(c.id) + "]";
        case BallCenter::Kind::vertex: {
            std::string best;
            for (HalfEdge h : m.vertex_cycles()[c.id]) {
                std::string k = key_from(h);
                if (best.empty() || k < best) best = k;
            }
            if (best.empty()) best = "isolated:deg=" + std::to_string(m.degree(c.id));
            return "B" + std::to_string(r) + "v[" + best + "]";
        }
        case BallCenter::Kind::face: {
            std::string best;
            for (HalfEdge h : m.face_cycles()[c.id]) {
                if (!keep[h]) continue;
                std::string k = key_from(h);
                if (best.empty() || k < best) best = k;
            }
            return "B" + std::to_string(r) + "f:deg=" + std::to_string(m.face_degree(c.id)) + "[" +
                   best + "]";
        }
    }
    throw std::logic_error("unreachable");
}

}  // namespace mtgw
