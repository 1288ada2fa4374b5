#pragma once

// Core domain vocabulary: type sets, finitely supported offspring count
// vectors, and per-type gamma weights for weighted tree sizes.

#include "mtgw/rational.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

namespace mtgw {

using TypeId = int32_t;

class TypeSet {
public:
    TypeSet() = default;
    explicit TypeSet(std::vector<TypeId> labels) : labels_(std::move(labels)) {
        for (size_t i = 0; i < labels_.size(); ++i) {
            if (labels_[i] < 0) throw std::invalid_argument("type labels must be nonnegative");
            if (!index_.emplace(labels_[i], i).second)
                throw std::invalid_argument("duplicate type label");
        }
        if (labels_.empty()) throw std::invalid_argument("type set must be non-empty");
    }

    size_t size() const { return labels_.size(); }
    const std::vector<TypeId>& labels() const { return labels_; }
    bool contains(TypeId t) const { return index_.count(t) != 0; }
    size_t index_of(TypeId t) const {
        auto it = index_.find(t);
        if (it == index_.end()) throw std::invalid_argument("unknown type " + std::to_string(t));
        return it->second;
    }

private:
    std::vector<TypeId> labels_;
    std::map<TypeId, size_t> index_;
};

// Finitely supported map type -> count, kept sorted with positive entries.
class OffspringVector {
public:
    OffspringVector() = default;
    OffspringVector(std::initializer_list<std::pair<TypeId, int32_t>> init) {
        for (auto& [t, c] : init) set(t, c);
    }

    void set(TypeId t, int32_t c) {
        if (c < 0) throw std::invalid_argument("offspring counts must be >= 0");
        auto it = std::lower_bound(entries_.begin(), entries_.end(), t,
                                   [](const auto& e, TypeId v) { return e.first < v; });
        if (it != entries_.end() && it->first == t) {
            if (c == 0)
                entries_.erase(it);
            else
                it->second = c;
        } else if (c > 0) {
            entries_.insert(it, {t, c});
        }
    }

    int32_t count(TypeId t) const {
        auto it = std::lower_bound(entries_.begin(), entries_.end(), t,
                                   [](const auto& e, TypeId v) { return e.first < v; });
        return (it != entries_.end() && it->first == t) ? it->second : 0;
    }

    int64_t total() const {
        int64_t s = 0;
        for (auto& [t, c] : entries_) s += c;
        return s;
    }

    const std::vector<std::pair<TypeId, int32_t>>& entries() const { return entries_; }
    bool empty() const { return entries_.empty(); }

    friend bool operator==(const OffspringVector& a, const OffspringVector& b) {
        return a.entries_ == b.entries_;
    }
    friend bool operator<(const OffspringVector& a, const OffspringVector& b) {
        return a.entries_ < b.entries_;
    }

private:
    std::vector<std::pair<TypeId, int32_t>> entries_;
};

// Nonnegative rational weight per type, not all zero.
class GammaWeights {
public:
    GammaWeights() = default;
    explicit GammaWeights(std::map<TypeId, Rational> w) : weights_(std::move(w)) {
        bool any = false;
        for (auto& [t, v] : weights_) {
            if (v < 0) throw std::invalid_argument("gamma weights must be >= 0");
            if (v > 0) any = true;
        }
        if (!any) throw std::invalid_argument("gamma weights must not all be zero");
    }

    static GammaWeights indicator(TypeId t) { return GammaWeights({{t, Rational(1)}}); }

    bool has(TypeId t) const { return weights_.count(t) != 0; }
    Rational weight(TypeId t) const {
        auto it = weights_.find(t);
        if (it == weights_.end())
            throw std::invalid_argument("gamma weight for unknown type " + std::to_string(t));
        return it->second;
    }
    const std::map<TypeId, Rational>& weights() const { return weights_; }

private:
    std::map<TypeId, Rational> weights_;
};

}  // namespace mtgw
