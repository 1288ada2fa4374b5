#pragma once

// Two-type trees where only type 1 is fertile: lattice constants (a, D),
// the step-set lattice matrix D with m = |det D| and d = m/D, exact
// step-sum probabilities by composition enumeration, the cycle-lemma joint
// law P(#T = n, #_1 T = l) = (1/l) P(S_l = y_n), tail asymptotics, the
// conditional CLT check, and an exact conditioned sampler.
//
// Steps are X_i = (xi_i - 1, zeta_i + 1); y_n = (-1, n).

#include "mtgw/lattice.hpp"
#include "mtgw/rational.hpp"
#include "mtgw/rng.hpp"
#include "mtgw/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

namespace mtgw {

struct SesquiAtom {
    int32_t xi;
    int32_t zeta;
    Rational p;
};

class SesquiModel {
public:
    explicit SesquiModel(std::vector<SesquiAtom> atoms) : atoms_(std::move(atoms)) {
        Rational total = 0;
        bool xi0 = false, xi2 = false;
        for (auto& a : atoms_) {
            if (a.xi < 0 || a.zeta < 0 || a.p <= 0)
                throw std::invalid_argument("sesqui atoms need xi,zeta >= 0 and p > 0");
            for (auto& b : atoms_)
                if (&a != &b && a.xi == b.xi && a.zeta == b.zeta)
                    throw std::invalid_argument("duplicate sesqui atom");
            total += a.p;
            if (a.xi == 0) xi0 = true;
            if (a.xi >= 2) xi2 = true;
        }
        if (total != 1) throw std::invalid_argument("sesqui PMF must sum to exactly 1");
        if (!xi0) throw std::invalid_argument("need P(xi = 0) > 0");
        if (!xi2) throw std::invalid_argument("need P(xi >= 2) > 0");
    }

    const std::vector<SesquiAtom>& atoms() const { return atoms_; }

    Rational mean_xi() const {
        Rational m = 0;
        for (auto& a : atoms_) m += a.p * a.xi;
        return m;
    }
    Rational mean_zeta() const {
        Rational m = 0;
        for (auto& a : atoms_) m += a.p * a.zeta;
        return m;
    }
    Rational var_xi() const {
        Rational m2 = 0, m = mean_xi();
        for (auto& a : atoms_) m2 += a.p * a.xi * a.xi;
        return m2 - m * m;
    }
    Rational var_zeta() const {
        Rational m2 = 0, m = mean_zeta();
        for (auto& a : atoms_) m2 += a.p * a.zeta * a.zeta;
        return m2 - m * m;
    }
    Rational cov() const {
        Rational m2 = 0;
        for (auto& a : atoms_) m2 += a.p * a.xi * a.zeta;
        return m2 - mean_xi() * mean_zeta();
    }
    Rational det_sigma() const { return var_xi() * var_zeta() - cov() * cov(); }

    bool critical() const { return mean_xi() == 1; }

    bool support_on_line() const { return line_check(); }

private:
    bool line_check() const {
        if (atoms_.size() <= 2) return true;
        int64_t x0 = atoms_[0].xi, y0 = atoms_[0].zeta;
        int64_t dx = atoms_[1].xi - x0, dy = atoms_[1].zeta - y0;
        for (size_t i = 2; i < atoms_.size(); ++i) {
            int64_t ex = atoms_[i].xi - x0, ey = atoms_[i].zeta - y0;
            if (dx * ey - dy * ex != 0) return false;
        }
        return true;
    }

    std::vector<SesquiAtom> atoms_;
};

// a = 1 + min{ i : P((xi,zeta) = (0,i)) > 0 }; D = gcd over the support of
// (xi-1) a + (1 + zeta).
struct SizeLattice {
    int64_t a;
    int64_t D;
};

inline SizeLattice size_lattice(const SesquiModel& m) {
    int64_t min_zeta0 = -1;
    for (auto& at : m.atoms())
        if (at.xi == 0 && (min_zeta0 < 0 || at.zeta < min_zeta0)) min_zeta0 = at.zeta;
    if (min_zeta0 < 0) throw std::invalid_argument("model has no (0, .) atom");
    int64_t a = 1 + min_zeta0;
    BigInt D = 0;
    for (auto& at : m.atoms()) {
        BigInt v = BigInt(at.xi - 1) * a + (1 + at.zeta);
        D = gcd(D, v < 0 ? BigInt(-v) : v);
    }
    if (D == 0) D = 1;  // support of #T is the single point a
    return {a, D.convert_to<int64_t>()};
}

struct LatticeReport {
    int64_t a = 0;       // min supp(#T)
    int64_t D = 0;       // gcd of supp(#T) - a
    IntegerLattice lat;  // anchored at (-1, a), basis of the step-set module
    int64_t m = 0;       // |det|
    int64_t d = 0;       // m / D
    // least j in {1..d} with y_n in j*(-1,a) + D Z^2; nullopt if n infeasible
    std::optional<int64_t> j_of(int64_t n) const {
        for (int64_t j = 1; j <= d; ++j) {
            IntVec diff{BigInt(-1) - j * BigInt(-1), BigInt(n) - j * BigInt(a)};
            if (lat.contains_diff(diff)) return j;
        }
        return std::nullopt;
    }
};

inline LatticeReport full_lattice_report(const SesquiModel& m) {
    auto [a, D] = size_lattice(m);
    std::vector<IntVec> pts;
    pts.push_back({BigInt(-1), BigInt(a)});  // (0, a-1) shifted; in the support by eq. for a
    for (auto& at : m.atoms()) pts.push_back({BigInt(at.xi - 1), BigInt(at.zeta + 1)});
    auto lat = smallest_lattice(pts, 0);
    if (lat.rank() != 2)
        throw std::invalid_argument("step-set lattice is degenerate (support on a line)");
    LatticeReport rep;
    rep.a = a;
    rep.D = D;
    rep.m = lat.abs_det().convert_to<int64_t>();
    // smallest j >= 1 with j*(-1, a) in the module
    int64_t d = 0;
    for (int64_t j = 1; j <= rep.m; ++j) {
        if (lat.contains_diff({BigInt(-j), BigInt(j) * a})) {
            d = j;
            break;
        }
    }
    if (d == 0) throw std::logic_error("no d <= m found; broken lattice");
    rep.d = d;
    rep.lat = std::move(lat);
    if (rep.m != rep.d * rep.D)
        throw std::logic_error("m != d * D; lattice invariants violated");
    return rep;
}

namespace detail {

// Enumerate multiplicity vectors (m_j) over the atoms with
//   sum m_j = ell,  sum m_j xi_j = sxi,  sum m_j zeta_j = szeta,
// invoking fn(counts). Bounded recursion; the last two atoms are solved
// as a 2x2 integer system.
template <class Fn>
void enumerate_compositions(const std::vector<SesquiAtom>& atoms, int64_t ell, int64_t sxi,
                            int64_t szeta, Fn&& fn) {
    size_t s = atoms.size();
    std::vector<size_t> counts(s, 0);

    // suffix extreme rates for pruning
    std::vector<int64_t> min_xi(s + 1, INT64_MAX), max_xi(s + 1, INT64_MIN);
    std::vector<int64_t> min_z(s + 1, INT64_MAX), max_z(s + 1, INT64_MIN);
    for (size_t i = s; i-- > 0;) {
        min_xi[i] = std::min<int64_t>(min_xi[i + 1], atoms[i].xi);
        max_xi[i] = std::max<int64_t>(max_xi[i + 1], atoms[i].xi);
        min_z[i] = std::min<int64_t>(min_z[i + 1], atoms[i].zeta);
        max_z[i] = std::max<int64_t>(max_z[i + 1], atoms[i].zeta);
    }
    auto feasible = [&](size_t i, int64_t cnt, int64_t rx, int64_t rz) {
        if (cnt < 0 || rx < 0 || rz < 0) return false;
        if (cnt == 0) return rx == 0 && rz == 0;
        if (i >= s) return false;
        return cnt * min_xi[i] <= rx && rx <= cnt * max_xi[i] && cnt * min_z[i] <= rz &&
               rz <= cnt * max_z[i];
    };

    auto solve_tail = [&](size_t i, int64_t cnt, int64_t rx, int64_t rz, auto&& self) -> void {
        size_t rem = s - i;
        if (rem == 0) {
            if (cnt == 0 && rx == 0 && rz == 0) fn(counts);
            return;
        }
        if (rem == 1) {
            const auto& at = atoms[i];
            if (cnt >= 0 && at.xi * cnt == rx && at.zeta * cnt == rz) {
                counts[i] = static_cast<size_t>(cnt);
                fn(counts);
                counts[i] = 0;
            }
            return;
        }
        if (rem == 2) {
            const auto& p = atoms[i];
            const auto& q = atoms[i + 1];
            // mp + mq = cnt; mp*xi_p + mq*xi_q = rx (or use zeta when xi's tie)
            int64_t dxi = p.xi - q.xi;
            int64_t mp;
            if (dxi != 0) {
                int64_t num = rx - cnt * q.xi;
                if (num % dxi != 0) return;
                mp = num / dxi;
            } else {
                int64_t dz = p.zeta - q.zeta;
                int64_t num = rz - cnt * q.zeta;
                if (dz == 0 || num % dz != 0) return;
                mp = num / dz;
            }
            int64_t mq = cnt - mp;
            if (mp < 0 || mq < 0) return;
            if (p.xi * mp + q.xi * mq != rx || p.zeta * mp + q.zeta * mq != rz) return;
            counts[i] = static_cast<size_t>(mp);
            counts[i + 1] = static_cast<size_t>(mq);
            fn(counts);
            counts[i] = counts[i + 1] = 0;
            return;
        }
        const auto& at = atoms[i];
        for (int64_t mj = 0; mj <= cnt; ++mj) {
            int64_t rx2 = rx - mj * at.xi;
            int64_t rz2 = rz - mj * at.zeta;
            if (rx2 < 0 && at.xi > 0) break;
            if (rz2 < 0 && at.zeta > 0) break;
            if (!feasible(i + 1, cnt - mj, rx2, rz2)) continue;
            counts[i] = static_cast<size_t>(mj);
            self(i + 1, cnt - mj, rx2, rz2, self);
        }
        counts[i] = 0;
    };
    if (!feasible(0, ell, sxi, szeta)) return;
    solve_tail(0, ell, sxi, szeta, solve_tail);
}

inline Rational composition_weight(const std::vector<SesquiAtom>& atoms, int64_t ell,
                                   const std::vector<size_t>& counts) {
    Rational w(multinomial(static_cast<size_t>(ell), counts));
    for (size_t j = 0; j < atoms.size(); ++j)
        if (counts[j] > 0) w *= pow_rational(atoms[j].p, counts[j]);
    return w;
}

}  // namespace detail

// Exact P(S_ell = (tx, ty)) with steps (xi-1, zeta+1).
inline Rational step_sum_pmf(const SesquiModel& m, int64_t ell, int64_t tx, int64_t ty) {
    if (ell < 1) throw std::invalid_argument("ell >= 1 required");
    // sum(xi) = ell + tx, sum(zeta) = ty - ell
    int64_t sxi = ell + tx, szeta = ty - ell;
    if (sxi < 0 || szeta < 0) return 0;
    Rational total = 0;
    detail::enumerate_compositions(m.atoms(), ell, sxi, szeta, [&](const std::vector<size_t>& c) {
        total += detail::composition_weight(m.atoms(), ell, c);
    });
    return total;
}

// Cycle lemma: P(#T = n, #_1 T = ell) = (1/ell) P(S_ell = y_n).
struct JointSizePmf {
    int64_t n = 0;
    std::vector<std::pair<int64_t, Rational>> by_ell;  // only nonzero entries, ascending ell
    Rational total = 0;                                // P(#T = n)
};

inline JointSizePmf joint_size_pmf(const SesquiModel& m, int64_t n) {
    if (n < 1) throw std::invalid_argument("n >= 1 required");
    JointSizePmf out;
    out.n = n;
    for (int64_t ell = 1; ell <= n; ++ell) {
        Rational p = step_sum_pmf(m, ell, -1, n);
        if (p != 0) {
            p /= ell;
            out.by_ell.push_back({ell, p});
            out.total += p;
        }
    }
    return out;
}

struct CltParams {
    Rational mu;          // 1 / (1 + E zeta)
    Rational sigma2;      // det Sigma / (Var xi (1 + E zeta)^3)
    double tail_const;    // D sqrt((1 + E zeta) / (2 pi Var xi))
};

inline CltParams clt_params(const SesquiModel& m, int64_t D) {
    Rational one_plus = 1 + m.mean_zeta();
    CltParams p;
    p.mu = Rational(1) / one_plus;
    p.sigma2 = m.det_sigma() / (m.var_xi() * one_plus * one_plus * one_plus);
    p.tail_const =
        static_cast<double>(D) * std::sqrt(to_double(one_plus) / (2.0 * std::numbers::pi * to_double(m.var_xi())));
    return p;
}

struct TailCheck {
    Rational p_exact;  // P(#T = n)
    double ratio;      // P(#T = n) * n^{3/2} / tail_const
};

inline TailCheck tail_asymptotic_check(const SesquiModel& m, int64_t n) {
    auto rep = full_lattice_report(m);
    if (!m.critical()) throw std::invalid_argument("tail asymptotics need E[xi] = 1");
    if ((n - rep.a) % rep.D != 0 || n < rep.a)
        throw std::invalid_argument("n outside the lattice a + D*N");
    auto joint = joint_size_pmf(m, n);
    if (joint.total == 0) throw std::invalid_argument("P(#T = n) = 0 (lattice violation)");
    auto cp = clt_params(m, rep.D);
    TailCheck t;
    t.p_exact = joint.total;
    t.ratio = to_double(joint.total) * std::pow(static_cast<double>(n), 1.5) / cp.tail_const;
    return t;
}

inline double gaussian_cdf(double x, double sigma) {
    return 0.5 * (1.0 + std::erf(x / (sigma * std::sqrt(2.0))));
}

struct CltCheck {
    double ks;             // Kolmogorov-Smirnov vs N(0, sigma2)
    double local_max_err;  // max relative error of the d-spaced local form, |x| <= 1
    CltParams params;
    int64_t d;
};

inline CltCheck conditional_clt_check(const SesquiModel& m, int64_t n) {
    auto rep = full_lattice_report(m);
    auto joint = joint_size_pmf(m, n);
    if (joint.total == 0) throw std::invalid_argument("P(#T = n) = 0");
    auto cp = clt_params(m, rep.D);
    double mu = to_double(cp.mu), sig = std::sqrt(to_double(cp.sigma2));
    double sqn = std::sqrt(static_cast<double>(n));
    CltCheck out;
    out.params = cp;
    out.d = rep.d;
    out.ks = 0;
    out.local_max_err = 0;
    double cdf = 0;
    for (auto& [ell, p] : joint.by_ell) {
        double pc = to_double(p / joint.total);
        double x = (static_cast<double>(ell) - mu * n) / sqn;
        double g = gaussian_cdf(x, sig);
        out.ks = std::max(out.ks, std::abs(cdf - g));
        cdf += pc;
        out.ks = std::max(out.ks, std::abs(cdf - g));
        if (std::abs(x) <= 1.0) {
            double target = rep.d / (sig * std::sqrt(2.0 * std::numbers::pi)) *
                            std::exp(-x * x / (2.0 * to_double(cp.sigma2))) / sqn;
            out.local_max_err = std::max(out.local_max_err, std::abs(pc / target - 1.0));
        }
    }
    return out;
}

inline double gaussian_density(const std::vector<double>& y,
                               const std::vector<std::vector<double>>& sigma) {
    size_t d = y.size();
    if (sigma.size() != d) throw std::invalid_argument("dimension mismatch");
    // Cholesky; throws if not positive definite
    std::vector<std::vector<double>> L(d, std::vector<double>(d, 0.0));
    for (size_t i = 0; i < d; ++i) {
        for (size_t j = 0; j <= i; ++j) {
            double s = sigma[i][j];
            for (size_t k = 0; k < j; ++k) s -= L[i][k] * L[j][k];
            if (i == j) {
                if (s <= 0) throw std::invalid_argument("covariance not positive definite");
                L[i][i] = std::sqrt(s);
            } else {
                L[i][j] = s / L[j][j];
            }
        }
    }
    // solve L z = y, quad = |z|^2
    std::vector<double> z(d);
    double det = 1.0;
    for (size_t i = 0; i < d; ++i) {
        double s = y[i];
        for (size_t k = 0; k < i; ++k) s -= L[i][k] * z[k];
        z[i] = s / L[i][i];
        det *= L[i][i] * L[i][i];
    }
    double quad = 0;
    for (double v : z) quad += v * v;
    return std::exp(-0.5 * quad) / std::sqrt(std::pow(2.0 * std::numbers::pi, static_cast<double>(d)) * det);
}

// --- exact conditioned sampler ----------------------------------------------
//
// Draw ell from the cycle-lemma joint law, draw a step multiset conditioned
// on S_ell = y_n, shuffle uniformly, rotate at the unique admissible cycle
// position, and rebuild the tree by DFS.
class SesquiExactSampler {
public:
    SesquiExactSampler(SesquiModel model, int64_t n, TypeId fertile = 1, TypeId sterile = 2)
        : model_(std::move(model)), n_(n), fertile_(fertile), sterile_(sterile) {
        auto joint = joint_size_pmf(model_, n);
        if (joint.total == 0) throw std::invalid_argument("P(#T = n) = 0; cannot condition");
        double acc = 0;
        for (auto& [ell, p] : joint.by_ell) {
            ells_.push_back(ell);
            acc += to_double(p / joint.total);
            ell_cdf_.push_back(acc);
        }
        ell_cdf_.back() = 1.0;
    }

    const SesquiModel& model() const { return model_; }

    MultiTypeTree sample(Rng& rng) {
        int64_t ell = ells_[rng.categorical_cdf(ell_cdf_)];
        const auto& comps = compositions(ell);
        size_t ci = comps.cdf.size() == 1 ? 0 : rng.categorical_cdf(comps.cdf);
        const auto& counts = comps.counts[ci];

        // multiset of steps, uniform order
        std::vector<uint32_t> steps;
        steps.reserve(static_cast<size_t>(ell));
        for (size_t j = 0; j < counts.size(); ++j)
            for (size_t r = 0; r < counts[j]; ++r) steps.push_back(static_cast<uint32_t>(j));
        rng.shuffle(steps);

        rotate_to_admissible(steps);
        return build_tree(steps);
    }

private:
    struct CompTable {
        std::vector<std::vector<size_t>> counts;
        std::vector<double> cdf;
    };

    const CompTable& compositions(int64_t ell) {
        auto it = comp_cache_.find(ell);
        if (it != comp_cache_.end()) return it->second;
        CompTable tab;
        std::vector<Rational> weights;
        detail::enumerate_compositions(model_.atoms(), ell, ell - 1, n_ - ell,
                                       [&](const std::vector<size_t>& c) {
                                           tab.counts.push_back(c);
                                           weights.push_back(
                                               detail::composition_weight(model_.atoms(), ell, c));
                                       });
        Rational total = 0;
        for (auto& w : weights) total += w;
        double acc = 0;
        for (auto& w : weights) {
            acc += to_double(w / total);
            tab.cdf.push_back(acc);
        }
        tab.cdf.back() = 1.0;
        return comp_cache_.emplace(ell, std::move(tab)).first->second;
    }

    // Unique rotation making all proper prefix sums of (xi - 1) nonnegative:
    // start right after the first attainment of the global prefix minimum.
    void rotate_to_admissible(std::vector<uint32_t>& steps) const {
        int64_t sum = 0, min_sum = 0;
        size_t argmin = 0;
        for (size_t i = 0; i < steps.size(); ++i) {
            sum += model_.atoms()[steps[i]].xi - 1;
            if (sum < min_sum) {
                min_sum = sum;
                argmin = i;
            }
        }
        std::rotate(steps.begin(), steps.begin() + (argmin + 1) % steps.size(), steps.end());
    }

    MultiTypeTree build_tree(const std::vector<uint32_t>& steps) const {
        MultiTypeTree t;
        std::vector<std::pair<VertexId, int32_t>> open;  // vertex, remaining fertile slots
        std::vector<std::pair<VertexId, int32_t>> leaves_todo;
        for (uint32_t si : steps) {
            const auto& at = model_.atoms()[si];
            VertexId v;
            if (t.empty()) {
                v = t.add_root(fertile_);
            } else {
                while (!open.empty() && open.back().second == 0) open.pop_back();
                if (open.empty()) throw std::logic_error("cycle rotation produced invalid walk");
                v = t.add_child(open.back().first, fertile_);
                open.back().second--;
            }
            open.push_back({v, at.xi});
            if (at.zeta > 0) leaves_todo.push_back({v, at.zeta});
        }
        for (auto& [v, z] : leaves_todo)
            for (int32_t i = 0; i < z; ++i) t.add_child(v, sterile_);
        return t;
    }

    SesquiModel model_;
    int64_t n_;
    TypeId fertile_, sterile_;
    std::vector<int64_t> ells_;
    std::vector<double> ell_cdf_;
    std::map<int64_t, CompTable> comp_cache_;
};

// --- growth construction witness --------------------------------------------
//
// Constructive counterpart of the a + D*N support pattern: a DP over
// achievable sizes that can materialize an explicit positive-probability
// tree of any achievable size.
class GrowthWitness {
public:
    GrowthWitness(const SesquiModel& m, int64_t max_n) : model_(m), max_n_(max_n) {
        // witness_[s] = (atom index, child sizes) for an achievable size s
        witness_.assign(static_cast<size_t>(max_n) + 1, {});
        achieved_.assign(static_cast<size_t>(max_n) + 1, false);
        bool changed = true;
        while (changed) {
            changed = false;
            for (size_t ai = 0; ai < m.atoms().size(); ++ai) {
                const auto& at = m.atoms()[ai];
                int64_t base = 1 + at.zeta;
                if (base > max_n) continue;
                // all sums of at.xi achievable sizes
                std::vector<std::vector<int64_t>> sums = {{}};
                std::vector<int64_t> totals = {0};
                for (int32_t c = 0; c < at.xi; ++c) {
                    std::vector<std::vector<int64_t>> nsums;
                    std::vector<int64_t> ntot;
                    for (size_t k = 0; k < sums.size(); ++k)
                        for (int64_t s = 1; totals[k] + base + s <= max_n; ++s) {
                            if (!achieved_[s]) continue;
                            auto v = sums[k];
                            v.push_back(s);
                            nsums.push_back(std::move(v));
                            ntot.push_back(totals[k] + s);
                        }
                    sums = std::move(nsums);
                    totals = std::move(ntot);
                }
                for (size_t k = 0; k < sums.size(); ++k) {
                    int64_t size = base + totals[k];
                    if (size <= max_n && !achieved_[size]) {
                        achieved_[size] = true;
                        witness_[size] = {ai, sums[k]};
                        changed = true;
                    }
                }
            }
        }
    }

    bool achievable(int64_t n) const { return n >= 1 && n <= max_n_ && achieved_[n]; }

    std::vector<int64_t> achievable_sizes() const {
        std::vector<int64_t> out;
        for (int64_t s = 1; s <= max_n_; ++s)
            if (achieved_[s]) out.push_back(s);
        return out;
    }

    MultiTypeTree tree_of_size(int64_t n, TypeId fertile = 1, TypeId sterile = 2) const {
        if (!achievable(n)) throw std::invalid_argument("size not achievable");
        MultiTypeTree t;
        build(t, kNoVertex, n, fertile, sterile);
        return t;
    }

private:
    void build(MultiTypeTree& t, VertexId parent, int64_t n, TypeId fertile, TypeId sterile) const {
        const auto& [ai, child_sizes] = witness_[n];
        const auto& at = model_.atoms()[ai];
        VertexId v = (parent == kNoVertex) ? t.add_root(fertile) : t.add_child(parent, fertile);
        for (int64_t cs : child_sizes) build(t, v, cs, fertile, sterile);
        for (int32_t i = 0; i < at.zeta; ++i) t.add_child(v, sterile);
    }

    SesquiModel model_;
    int64_t max_n_;
    std::vector<std::pair<size_t, std::vector<int64_t>>> witness_;
    std::vector<bool> achieved_;
};

}  // namespace mtgw
