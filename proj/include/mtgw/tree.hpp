#pragma once

// Rooted ordered multi-type trees.
//
// Child order is stored as constructed (it is significant for mobiles and
// within type blocks); the quotient "inter-type sibling order does not
// matter" is realized by canonical keys, which stable-sort each child list
// by type label before serializing.

#include "mtgw/types.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace mtgw {

using VertexId = int32_t;
constexpr VertexId kNoVertex = -1;

class MultiTypeTree {
public:
    struct Vertex {
        TypeId type;
        VertexId parent;
        std::vector<VertexId> children;
    };

    MultiTypeTree() = default;

    static MultiTypeTree single(TypeId root_type) {
        MultiTypeTree t;
        t.verts_.push_back({root_type, kNoVertex, {}});
        return t;
    }

    VertexId add_root(TypeId type) {
        if (!verts_.empty()) throw std::logic_error("tree already has a root");
        verts_.push_back({type, kNoVertex, {}});
        return 0;
    }

    VertexId add_child(VertexId parent, TypeId type) {
        VertexId id = static_cast<VertexId>(verts_.size());
        verts_.push_back({type, parent, {}});
        verts_[parent].children.push_back(id);
        return id;
    }

    size_t size() const { return verts_.size(); }
    bool empty() const { return verts_.empty(); }
    const Vertex& vertex(VertexId v) const { return verts_[v]; }
    TypeId type_of(VertexId v) const { return verts_[v].type; }
    VertexId parent_of(VertexId v) const { return verts_[v].parent; }
    const std::vector<VertexId>& children_of(VertexId v) const { return verts_[v].children; }
    VertexId root() const { return 0; }

    std::map<TypeId, int64_t> type_counts() const {
        std::map<TypeId, int64_t> counts;
        for (auto& v : verts_) counts[v.type]++;
        return counts;
    }

    int64_t count_of_type(TypeId t) const {
        int64_t c = 0;
        for (auto& v : verts_)
            if (v.type == t) ++c;
        return c;
    }

    Rational weighted_size(const GammaWeights& gamma) const {
        Rational s = 0;
        for (auto& v : verts_) s += gamma.weight(v.type);
        return s;
    }

    // Vertices in preorder (root first), honoring stored child order.
    std::vector<VertexId> preorder() const {
        std::vector<VertexId> out;
        out.reserve(verts_.size());
        std::vector<VertexId> stack{root()};
        while (!stack.empty()) {
            VertexId v = stack.back();
            stack.pop_back();
            out.push_back(v);
            const auto& ch = verts_[v].children;
            for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back(*it);
        }
        return out;
    }

    // Canonical DFS byte string; equal keys iff trees are equal up to
    // reordering of siblings across type blocks. mark >= 0 flags one vertex.
    std::string canonical_key(VertexId mark = kNoVertex) const {
        if (verts_.empty()) return "";
        std::vector<std::string> key(verts_.size());
        // post-order: children before parents
        std::vector<std::pair<VertexId, bool>> stack{{root(), false}};
        while (!stack.empty()) {
            auto [v, expanded] = stack.back();
            stack.pop_back();
            if (!expanded) {
                stack.push_back({v, true});
                for (VertexId c : verts_[v].children) stack.push_back({c, false});
            } else {
                // canonical child order: stable by (type label, original rank)
                std::vector<VertexId> order = verts_[v].children;
                std::stable_sort(order.begin(), order.end(), [&](VertexId a, VertexId b) {
                    return verts_[a].type < verts_[b].type;
                });
                std::string s = std::to_string(verts_[v].type);
                if (v == mark) s += '*';
                s += '(';
                for (VertexId c : order) s += key[c];
                s += ')';
                key[v] = std::move(s);
            }
        }
        return key[root()];
    }

    // Fringe subtree rooted at v (copy), remapping the optional marked vertex.
    MultiTypeTree fringe_at(VertexId v, VertexId mark = kNoVertex, VertexId* mark_out = nullptr) const {
        MultiTypeTree out;
        std::vector<std::pair<VertexId, VertexId>> stack{{v, kNoVertex}};
        if (mark_out) *mark_out = kNoVertex;
        while (!stack.empty()) {
            auto [src, dst_parent] = stack.back();
            stack.pop_back();
            VertexId nv = (dst_parent == kNoVertex) ? out.add_root(verts_[src].type)
                                                    : out.add_child(dst_parent, verts_[src].type);
            if (src == mark && mark_out) *mark_out = nv;
            const auto& ch = verts_[src].children;
            for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back({*it, nv});
        }
        return out;
    }

    nlohmann::json to_json() const {
        nlohmann::json t = nlohmann::json::array();
        nlohmann::json p = nlohmann::json::array();
        for (auto& v : verts_) {
            t.push_back(v.type);
            p.push_back(v.parent);
        }
        return nlohmann::json{{"t", t}, {"p", p}};
    }

    static MultiTypeTree from_json(const nlohmann::json& j) {
        MultiTypeTree out;
        const auto& t = j.at("t");
        const auto& p = j.at("p");
        if (t.size() != p.size()) throw std::invalid_argument("tree json: t/p length mismatch");
        out.verts_.resize(t.size());
        for (size_t i = 0; i < t.size(); ++i) {
            out.verts_[i].type = t[i].get<TypeId>();
            out.verts_[i].parent = p[i].get<VertexId>();
            if (out.verts_[i].parent == kNoVertex) {
                if (i != 0) throw std::invalid_argument("tree json: root must be index 0");
            } else {
                if (out.verts_[i].parent >= static_cast<VertexId>(i))
                    throw std::invalid_argument("tree json: parents must precede children");
                out.verts_[out.verts_[i].parent].children.push_back(static_cast<VertexId>(i));
            }
        }
        if (out.verts_.empty()) throw std::invalid_argument("tree json: empty");
        return out;
    }

private:
    std::vector<Vertex> verts_;
};

struct PointedTree {
    MultiTypeTree tree;
    VertexId mark = kNoVertex;

    std::string canonical_key() const { return tree.canonical_key(mark); }
};

}  // namespace mtgw
