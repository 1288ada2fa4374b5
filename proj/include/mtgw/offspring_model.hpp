#pragma once

// Per-type offspring laws and the model-level analytics built on them:
// mean matrices, stopped-tree expectations E[#_gamma T^j], criticality
// checks, and JSON (de)serialization.
//
// Three kinds of per-type law:
//   finite     exact rational PMF over offspring vectors
//   geometric  P(k children of one fixed type) = p0 (1-p0)^k
//   face       bivariate series law of the mobile types 3/4 (weights.hpp)
//
// Finite PMFs keep exact rationals for the enumeration oracles; sampling
// uses 64-bit float tables. Parametric laws carry an analytic PMF and are
// enumerated only with an explicit truncation cap that reports tail mass.

#include "mtgw/rng.hpp"
#include "mtgw/tree.hpp"
#include "mtgw/types.hpp"
#include "mtgw/weights.hpp"

#include <json.hpp>

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <vector>

namespace mtgw {

class OffspringDist {
public:
    enum class Kind { finite, geometric, face };

    static OffspringDist finite(std::vector<std::pair<OffspringVector, Rational>> atoms) {
        OffspringDist d;
        d.kind_ = Kind::finite;
        d.atoms_ = std::move(atoms);
        Rational total = 0;
        for (auto& [ov, p] : d.atoms_) {
            if (p < 0) throw std::invalid_argument("negative probability");
            total += p;
        }
        if (total != 1) throw std::invalid_argument("finite PMF must sum to exactly 1");
        double acc = 0;
        for (auto& [ov, p] : d.atoms_) {
            acc += to_double(p);
            d.cdf_.push_back(acc);
        }
        d.cdf_.back() = 1.0;
        return d;
    }

    static OffspringDist geometric(TypeId child, Rational p0) {
        if (p0 <= 0 || p0 > 1) throw std::invalid_argument("geometric needs 0 < p0 <= 1");
        OffspringDist d;
        d.kind_ = Kind::geometric;
        d.geo_child_ = child;
        d.geo_p0_ = p0;
        return d;
    }

    struct FaceParams {
        bool bullet = true;
        WeightSequence q;
        double x = 0, y = 0;
        TypeId child_a = 1, child_b = 2;  // coordinates carrying x^k and y^k'
        double norm = 0;                  // f value at (x,y)
    };

    static OffspringDist face(FaceParams params) {
        params.norm = f_face(params.q, params.bullet, params.x, params.y);
        if (!(params.norm > 0)) throw std::invalid_argument("face series has zero mass");
        OffspringDist d;
        d.kind_ = Kind::face;
        d.face_ = std::make_shared<FaceState>();
        d.face_->p = std::move(params);
        return d;
    }

    Kind kind() const { return kind_; }
    const std::vector<std::pair<OffspringVector, Rational>>& atoms() const {
        if (kind_ != Kind::finite) throw std::logic_error("not a finite PMF");
        return atoms_;
    }
    TypeId geometric_child() const { return geo_child_; }
    const Rational& geometric_p0() const { return geo_p0_; }
    const FaceParams& face_params() const { return face_->p; }

    bool is_finite() const { return kind_ == Kind::finite; }

    OffspringVector sample(Rng& rng) const {
        switch (kind_) {
            case Kind::finite:
                return atoms_[rng.categorical_cdf(cdf_)].first;
            case Kind::geometric: {
                double p0 = to_double(geo_p0_);
                if (p0 >= 1.0) return {};
                double u = rng.unit();
                int k = static_cast<int>(std::floor(std::log1p(-u) / std::log1p(-p0)));
                if (k < 0) k = 0;
                OffspringVector ov;
                ov.set(geo_child_, k);
                return ov;
            }
            case Kind::face:
                return sample_face(rng);
        }
        throw std::logic_error("unreachable");
    }

    // Exact probability of one offspring vector (finite PMFs only).
    Rational pmf_exact(const OffspringVector& ov) const {
        if (kind_ != Kind::finite) throw std::logic_error("exact pmf needs a finite PMF");
        for (auto& [a, p] : atoms_)
            if (a == ov) return p;
        return 0;
    }

    double pmf(const OffspringVector& ov) const {
        switch (kind_) {
            case Kind::finite:
                return to_double(pmf_exact(ov));
            case Kind::geometric: {
                for (auto& [t, c] : ov.entries())
                    if (t != geo_child_) return 0.0;
                int k = ov.count(geo_child_);
                double p0 = to_double(geo_p0_);
                return p0 * std::pow(1.0 - p0, k);
            }
            case Kind::face: {
                const auto& fp = face_->p;
                int k = 0, kp = 0;
                for (auto& [t, c] : ov.entries()) {
                    if (t == fp.child_a)
                        k = c;
                    else if (t == fp.child_b)
                        kp = c;
                    else
                        return 0.0;
                }
                return face_term(fp.q, fp.bullet, k, kp, fp.x, fp.y) / fp.norm;
            }
        }
        throw std::logic_error("unreachable");
    }

    // E[count of child type t].
    double mean(TypeId t) const {
        switch (kind_) {
            case Kind::finite: {
                double m = 0;
                for (auto& [a, p] : atoms_) m += to_double(p) * a.count(t);
                return m;
            }
            case Kind::geometric:
                return t == geo_child_ ? to_double((1 - geo_p0_) / geo_p0_) : 0.0;
            case Kind::face: {
                const auto& fp = face_->p;
                if (t == fp.child_a)
                    return fp.x * f_face_dx(fp.q, fp.bullet, fp.x, fp.y) / fp.norm;
                if (t == fp.child_b)
                    return fp.y * f_face_dy(fp.q, fp.bullet, fp.x, fp.y) / fp.norm;
                return 0.0;
            }
        }
        throw std::logic_error("unreachable");
    }

    Rational mean_exact(TypeId t) const {
        if (kind_ != Kind::finite) throw std::logic_error("exact mean needs a finite PMF");
        Rational m = 0;
        for (auto& [a, p] : atoms_) m += p * a.count(t);
        return m;
    }

    // Child types that appear with positive probability.
    std::set<TypeId> support_types() const {
        std::set<TypeId> out;
        switch (kind_) {
            case Kind::finite:
                for (auto& [a, p] : atoms_)
                    if (p > 0)
                        for (auto& [t, c] : a.entries()) out.insert(t);
                break;
            case Kind::geometric:
                if (geo_p0_ < 1) out.insert(geo_child_);
                break;
            case Kind::face: {
                const auto& fp = face_->p;
                for (int k = 0; k <= 8; ++k)
                    for (int kp = 0; kp <= 8; ++kp)
                        if (face_term(fp.q, fp.bullet, k, kp, fp.x, fp.y) > 0) {
                            if (k > 0) out.insert(fp.child_a);
                            if (kp > 0) out.insert(fp.child_b);
                        }
                break;
            }
        }
        return out;
    }

    // Enumerate atoms until cumulative tail < tail_eps; exact for finite PMFs
    // (tail 0). Used by enumeration oracles, never by samplers.
    std::vector<std::pair<OffspringVector, double>> enumerate(double tail_eps,
                                                              double* tail_out = nullptr) const {
        std::vector<std::pair<OffspringVector, double>> out;
        double tail = 0.0;
        switch (kind_) {
            case Kind::finite:
                for (auto& [a, p] : atoms_)
                    if (p > 0) out.push_back({a, to_double(p)});
                break;
            case Kind::geometric: {
                double p0 = to_double(geo_p0_);
                double surv = 1.0;
                for (int k = 0; surv > tail_eps; ++k) {
                    OffspringVector ov;
                    ov.set(geo_child_, k);
                    out.push_back({ov, p0 * std::pow(1.0 - p0, k)});
                    surv *= (1.0 - p0);
                    if (p0 >= 1.0) break;
                }
                tail = surv;
                break;
            }
            case Kind::face: {
                const auto& fp = face_->p;
                int s = 0;
                for (;; ++s) {
                    double bound = face_tail_bound(fp.q, fp.bullet, fp.x, fp.y, s) / fp.norm;
                    bool last_diag = !fp.q.parametric() &&
                                     (fp.bullet ? 2 : 1) + s > fp.q.max_degree();
                    if (fp.q.parametric() && bound < tail_eps) {
                        tail = bound;
                        break;
                    }
                    if (last_diag) break;
                    for (int k = 0; 2 * k <= s; ++k) {
                        int kp = s - 2 * k;
                        double term = face_term(fp.q, fp.bullet, k, kp, fp.x, fp.y) / fp.norm;
                        if (term > 0) {
                            OffspringVector ov;
                            ov.set(fp.child_a, k);
                            ov.set(fp.child_b, kp);
                            out.push_back({ov, term});
                        }
                    }
                }
                break;
            }
        }
        if (tail_out) *tail_out = tail;
        return out;
    }

private:
    struct FaceState {
        FaceParams p;
        // lazily extended CDF over diagonal-ordered terms
        std::vector<std::pair<OffspringVector, double>> terms;
        std::vector<double> cum;
        int next_s = 0;
        std::mutex mu;
    };

    OffspringVector sample_face(Rng& rng) const {
        FaceState& st = *face_;
        double u = rng.unit();  // target cumulative mass in [0,1)
        std::lock_guard<std::mutex> lock(st.mu);
        while (st.cum.empty() || st.cum.back() < u) {
            if (!extend_face(st)) break;
        }
        if (st.cum.empty()) throw std::logic_error("face law has no mass");
        size_t lo = 0, hi = st.cum.size() - 1;
        while (lo < hi) {
            size_t mid = (lo + hi) / 2;
            if (st.cum[mid] <= u)
                lo = mid + 1;
            else
                hi = mid;
        }
        return st.terms[lo].first;
    }

    // Appends the next diagonal 2k+k' = s. Returns false when exhausted.
    static bool extend_face(FaceState& st) {
        const auto& fp = st.p;
        if (!fp.q.parametric() && (fp.bullet ? 2 : 1) + st.next_s > fp.q.max_degree()) return false;
        if (fp.q.parametric()) {
            double bound = face_tail_bound(fp.q, fp.bullet, fp.x, fp.y, st.next_s) / fp.norm;
            if (bound < 1e-18) return false;  // below double resolution
        }
        int s = st.next_s++;
        for (int k = 0; 2 * k <= s; ++k) {
            int kp = s - 2 * k;
            double term = face_term(fp.q, fp.bullet, k, kp, fp.x, fp.y) / fp.norm;
            if (term <= 0) continue;
            OffspringVector ov;
            ov.set(fp.child_a, k);
            ov.set(fp.child_b, kp);
            st.terms.push_back({ov, term});
            st.cum.push_back((st.cum.empty() ? 0.0 : st.cum.back()) + term);
        }
        return true;
    }

    Kind kind_ = Kind::finite;
    std::vector<std::pair<OffspringVector, Rational>> atoms_;
    std::vector<double> cdf_;
    TypeId geo_child_ = 0;
    Rational geo_p0_ = 1;
    std::shared_ptr<FaceState> face_;
};

class OffspringModel {
public:
    OffspringModel() = default;
    OffspringModel(TypeSet types, std::map<TypeId, OffspringDist> dists)
        : types_(std::move(types)), dists_(std::move(dists)) {
        for (TypeId t : types_.labels())
            if (!dists_.count(t))
                throw std::invalid_argument("missing offspring law for type " + std::to_string(t));
        for (auto& [t, d] : dists_) {
            if (!types_.contains(t)) throw std::invalid_argument("offspring law for unknown type");
            for (TypeId c : d.support_types())
                if (!types_.contains(c))
                    throw std::invalid_argument("offspring references unknown type " +
                                                std::to_string(c));
        }
    }

    const TypeSet& types() const { return types_; }
    const OffspringDist& dist(TypeId t) const { return dists_.at(t); }

    bool all_finite() const {
        for (auto& [t, d] : dists_)
            if (!d.is_finite()) return false;
        return true;
    }

    // Mean matrix A[i][j] = E[xi_{i,j}] indexed by type-set positions.
    std::vector<std::vector<double>> mean_matrix() const {
        size_t d = types_.size();
        std::vector<std::vector<double>> a(d, std::vector<double>(d, 0.0));
        for (size_t i = 0; i < d; ++i)
            for (size_t j = 0; j < d; ++j)
                a[i][j] = dists_.at(types_.labels()[i]).mean(types_.labels()[j]);
        return a;
    }

    std::vector<std::vector<Rational>> mean_matrix_exact() const {
        size_t d = types_.size();
        std::vector<std::vector<Rational>> a(d, std::vector<Rational>(d, Rational(0)));
        for (size_t i = 0; i < d; ++i)
            for (size_t j = 0; j < d; ++j)
                a[i][j] = dists_.at(types_.labels()[i]).mean_exact(types_.labels()[j]);
        return a;
    }

    // E[#_gamma T^j] for kappa-stopped trees, one entry per type j.
    // Exact when every law is a finite PMF.
    std::map<TypeId, Rational> stopped_expectations_exact(TypeId kappa, TypeId gamma) const {
        auto a = mean_matrix_exact();
        return solve_stopped(a, kappa, gamma);
    }

    std::map<TypeId, double> stopped_expectations(TypeId kappa, TypeId gamma) const {
        auto a = mean_matrix();
        return solve_stopped(a, kappa, gamma);
    }

    // E[#_kappa T^kappa]; equals 2 exactly for critical models.
    Rational kappa_criticality_exact(TypeId kappa) const {
        return stopped_expectations_exact(kappa, kappa).at(kappa);
    }
    double kappa_criticality(TypeId kappa) const {
        return stopped_expectations(kappa, kappa).at(kappa);
    }

    // eq. "relevance": every type occurs in T with positive probability,
    // starting from the given root types.
    bool check_relevance(const std::vector<TypeId>& root_types) const {
        std::set<TypeId> seen(root_types.begin(), root_types.end());
        std::vector<TypeId> queue(root_types.begin(), root_types.end());
        while (!queue.empty()) {
            TypeId t = queue.back();
            queue.pop_back();
            for (TypeId c : dists_.at(t).support_types())
                if (seen.insert(c).second) queue.push_back(c);
        }
        return seen.size() == types_.size();
    }

    nlohmann::json to_json() const;
    static OffspringModel from_json(const nlohmann::json& j);

private:
    // w_j = delta_{j,gamma} + sum_i A_{j,i} * (i == kappa ? delta_{kappa,gamma} : w_i)
    template <class Num>
    std::map<TypeId, Num> solve_stopped(const std::vector<std::vector<Num>>& a, TypeId kappa,
                                        TypeId gamma) const {
        const auto& labels = types_.labels();
        size_t d = labels.size();
        size_t ik = types_.index_of(kappa);
        size_t ig = types_.index_of(gamma);
        // unknown indices: all types except kappa
        std::vector<size_t> idx;
        for (size_t i = 0; i < d; ++i)
            if (i != ik) idx.push_back(i);
        size_t m = idx.size();
        // (I - A') w = b  over the non-kappa block
        std::vector<std::vector<Num>> mat(m, std::vector<Num>(m + 1, Num(0)));
        for (size_t r = 0; r < m; ++r) {
            size_t j = idx[r];
            for (size_t c = 0; c < m; ++c) {
                mat[r][c] = (r == c ? Num(1) : Num(0)) - a[j][idx[c]];
            }
            Num b = (j == ig) ? Num(1) : Num(0);
            if (ik == ig) b += a[j][ik];  // kappa children count themselves when gamma == kappa
            mat[r][m] = b;
        }
        gaussian_solve(mat);
        std::map<TypeId, Num> w;
        for (size_t r = 0; r < m; ++r) w[labels[idx[r]]] = mat[r][m];
        // kappa's own stopped expectation from the same recursion
        Num wk = (ik == ig) ? Num(1) : Num(0);
        for (size_t i = 0; i < d; ++i) {
            if (i == ik)
                wk += a[ik][ik] * (ik == ig ? Num(1) : Num(0));
            else
                wk += a[ik][i] * w[labels[i]];
        }
        w[kappa] = wk;
        return w;
    }

    template <class Num>
    static void gaussian_solve(std::vector<std::vector<Num>>& mat) {
        size_t m = mat.size();
        for (size_t col = 0; col < m; ++col) {
            size_t piv = col;
            while (piv < m && mat[piv][col] == Num(0)) ++piv;
            if (piv == m) throw std::runtime_error("stopped-expectation system is singular");
            std::swap(mat[piv], mat[col]);
            for (size_t r = 0; r < m; ++r) {
                if (r == col || mat[r][col] == Num(0)) continue;
                Num f = mat[r][col] / mat[col][col];
                for (size_t c = col; c <= m; ++c) mat[r][c] -= f * mat[col][c];
            }
        }
        for (size_t r = 0; r < m; ++r) mat[r][m] /= mat[r][r];
    }

    TypeSet types_;
    std::map<TypeId, OffspringDist> dists_;
};

// --- JSON schema -----------------------------------------------------------
// {"types":[1,2],
//  "offspring": {
//    "1": [ {"counts":{"1":2},"prob":"1/2"}, ... ],          // finite PMF
//    "2": {"kind":"geometric","child":3,"p0":"3/4"},
//    "3": {"kind":"face","flavor":"bullet","x":1.33,"y":0.57,
//          "child_a":1,"child_b":2,
//          "q":{"t":1.0,"lambda":0.288} | {"table":[0,0,0.5,0.25]}}
// }}

inline nlohmann::json OffspringModel::to_json() const {
    nlohmann::json off = nlohmann::json::object();
    for (TypeId t : types_.labels()) {
        const auto& d = dists_.at(t);
        switch (d.kind()) {
            case OffspringDist::Kind::finite: {
                nlohmann::json arr = nlohmann::json::array();
                for (auto& [ov, p] : d.atoms()) {
                    nlohmann::json counts = nlohmann::json::object();
                    for (auto& [ct, c] : ov.entries()) counts[std::to_string(ct)] = c;
                    arr.push_back({{"counts", counts}, {"prob", rational_to_string(p)}});
                }
                off[std::to_string(t)] = arr;
                break;
            }
            case OffspringDist::Kind::geometric: {
                off[std::to_string(t)] = {{"kind", "geometric"},
                                          {"child", d.geometric_child()},
                                          {"p0", rational_to_string(d.geometric_p0())}};
                break;
            }
            case OffspringDist::Kind::face: {
                const auto& fp = d.face_params();
                nlohmann::json q;
                if (fp.q.parametric())
                    q = {{"t", fp.q.t()}, {"lambda", fp.q.lambda()}};
                else {
                    nlohmann::json table = nlohmann::json::array();
                    for (int n = 0; n <= fp.q.max_degree(); ++n) table.push_back(fp.q.q(n));
                    q = {{"table", table}};
                }
                off[std::to_string(t)] = {{"kind", "face"},     {"flavor", fp.bullet ? "bullet" : "diamond"},
                                          {"x", fp.x},          {"y", fp.y},
                                          {"child_a", fp.child_a}, {"child_b", fp.child_b},
                                          {"q", q}};
                break;
            }
        }
    }
    return nlohmann::json{{"types", types_.labels()}, {"offspring", off}};
}

inline OffspringModel OffspringModel::from_json(const nlohmann::json& j) {
    TypeSet types(j.at("types").get<std::vector<TypeId>>());
    std::map<TypeId, OffspringDist> dists;
    for (auto& [key, spec] : j.at("offspring").items()) {
        TypeId t = static_cast<TypeId>(std::stol(key));
        if (spec.is_array()) {
            std::vector<std::pair<OffspringVector, Rational>> atoms;
            for (auto& atom : spec) {
                OffspringVector ov;
                for (auto& [ct, c] : atom.at("counts").items())
                    ov.set(static_cast<TypeId>(std::stol(ct)), c.get<int32_t>());
                atoms.push_back({ov, parse_rational(atom.at("prob").get<std::string>())});
            }
            dists.emplace(t, OffspringDist::finite(std::move(atoms)));
        } else {
            std::string kind = spec.at("kind").get<std::string>();
            if (kind == "geometric") {
                dists.emplace(t, OffspringDist::geometric(
                                     spec.at("child").get<TypeId>(),
                                     parse_rational(spec.at("p0").get<std::string>())));
            } else if (kind == "face") {
                OffspringDist::FaceParams fp;
                fp.bullet = spec.at("flavor").get<std::string>() == "bullet";
                fp.x = spec.at("x").get<double>();
                fp.y = spec.at("y").get<double>();
                fp.child_a = spec.at("child_a").get<TypeId>();
                fp.child_b = spec.at("child_b").get<TypeId>();
                const auto& q = spec.at("q");
                if (q.contains("table"))
                    fp.q = WeightSequence::from_table(q.at("table").get<std::vector<double>>());
                else
                    fp.q = WeightSequence::from_params(q.at("t").get<double>(),
                                                       q.at("lambda").get<double>());
                dists.emplace(t, OffspringDist::face(std::move(fp)));
            } else {
                throw std::invalid_argument("unknown offspring kind '" + kind + "'");
            }
        }
    }
    return OffspringModel(std::move(types), std::move(dists));
}

}  // namespace mtgw
