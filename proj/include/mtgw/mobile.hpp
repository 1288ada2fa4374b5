#pragma once

// Weight-sequence analytics (admissibility, criticality, the closed-form
// vertex-weight family) and the 4-type mobile machinery: offspring law,
// decoration counting/sampling, and label assignment.
//
// Labels live on the half-integer grid and are stored doubled (label2 = 2l),
// so all label arithmetic is exact integer arithmetic.

#include "mtgw/offspring_model.hpp"
#include "mtgw/rational.hpp"
#include "mtgw/rng.hpp"
#include "mtgw/sampler.hpp"
#include "mtgw/tree.hpp"
#include "mtgw/weights.hpp"

#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

namespace mtgw {

// --- admissibility / criticality --------------------------------------------

struct BoltzmannParams {
    double x = 0;  // Z_q^+
    double y = 0;  // sqrt(Z_q^0)
    std::optional<double> t, lambda;  // parametric family
    double resid_tc1 = 0, resid_tc2 = 0, resid_crit = 0;
    double spectral_radius = 0;
    bool critical = false;
};

namespace detail {

// spectral radius of the 3x3 admissibility matrix
//   [ 0  0  a ]
//   [ b  c  0 ]      char:  mu^3 - c mu^2 - a d mu - a (b e - c d) = 0
//   [ d  e  0 ]
inline double admissibility_spectral_radius(double a, double b, double c, double d, double e) {
    // cubic mu^3 + p2 mu^2 + p1 mu + p0 = 0
    double p2 = -c, p1 = -a * d, p0 = -a * (b * e - c * d);
    std::complex<double> w(-0.5, std::sqrt(3.0) / 2.0);
    std::complex<double> q = (3.0 * p1 - p2 * p2) / 9.0;
    std::complex<double> r = (9.0 * p2 * p1 - 27.0 * p0 - 2.0 * p2 * p2 * p2) / 54.0;
    std::complex<double> s = std::sqrt(q * q * q + r * r);
    std::complex<double> u = std::pow(r + s, 1.0 / 3.0);
    std::complex<double> v = (std::abs(u) > 1e-300) ? -q / u : std::pow(r - s, 1.0 / 3.0);
    double radius = 0;
    for (int k = 0; k < 3; ++k) {
        std::complex<double> rot = std::pow(w, k);
        std::complex<double> mu = rot * u + conj(rot) * v - p2 / 3.0;
        radius = std::max(radius, std::abs(mu));
    }
    return radius;
}

}  // namespace detail

// criticality residual of the determinant condition
inline double criticality_residual(const WeightSequence& q, double x, double y) {
    double fbx = f_face_dx(q, true, x, y), fby = f_face_dy(q, true, x, y);
    double fdx = f_face_dx(q, false, x, y), fdy = f_face_dy(q, false, x, y);
    double jac = fbx * fdy - fby * fdx;
    return x * x * jac + 1.0 - x * x * fbx - fdy;
}

inline double admissibility_spectral_radius(const WeightSequence& q, double x, double y) {
    double fbx = f_face_dx(q, true, x, y), fby = f_face_dy(q, true, x, y);
    double fdx = f_face_dx(q, false, x, y), fdy = f_face_dy(q, false, x, y);
    return detail::admissibility_spectral_radius(x - 1.0, x / y * fdx, fdy,
                                                 x * x / (x - 1.0) * fbx,
                                                 x * y / (x - 1.0) * fby);
}

// Solve f_bullet(x,y) = 1 - 1/x, f_diamond(x,y) = y for x > 1 by damped
// Newton from a coarse grid of starting points.
inline BoltzmannParams solve_admissible(const WeightSequence& q, double tol = 1e-12,
                                        double x_max = 64.0, double y_max = 64.0,
                                        double crit_tol = 1e-8) {
    auto F1 = [&](double x, double y) { return f_bullet(q, x, y) - 1.0 + 1.0 / x; };
    auto F2 = [&](double x, double y) { return f_diamond(q, x, y) - y; };

    std::optional<std::pair<double, double>> best;
    for (double x0 : {1.05, 1.2, 1.5, 2.0, 3.0, 6.0, 12.0, 32.0}) {
        for (double y0 : {0.05, 0.2, 0.5, 1.0, 2.0, 6.0, 16.0}) {
            if (x0 > x_max || y0 > y_max) continue;
            double x = x0, y = y0;
            bool ok = false;
            for (int it = 0; it < 200; ++it) {
                double f1, f2;
                try {
                    f1 = F1(x, y);
                    f2 = F2(x, y);
                } catch (const DivergenceError&) {
                    break;
                }
                if (std::abs(f1) < tol && std::abs(f2) < tol) {
                    ok = true;
                    break;
                }
                double j11, j12, j21, j22;
                try {
                    j11 = f_face_dx(q, true, x, y) + 1.0 / (x * x);
                    j12 = f_face_dy(q, true, x, y);
                    j21 = f_face_dx(q, false, x, y);
                    j22 = f_face_dy(q, false, x, y) - 1.0;
                } catch (const DivergenceError&) {
                    break;
                }
                double det = j11 * j22 - j12 * j21;
                if (std::abs(det) < 1e-300) break;
                double dx = (f1 * j22 - f2 * j12) / det;
                double dy = (j11 * f2 - j21 * f1) / det;
                double step = 1.0;
                // keep iterates inside the domain
                while (step > 1e-6 && (x - step * dx <= 1.0 + 1e-12 || y - step * dy <= 0.0))
                    step /= 2;
                x -= step * dx;
                y -= step * dy;
                if (!std::isfinite(x) || !std::isfinite(y) || x > x_max * 4 || y > y_max * 4) break;
            }
            if (ok && x > 1.0) {
                if (!best || x < best->first) best = {x, y};
            }
        }
    }
    if (!best) throw std::runtime_error("not admissible (within search bounds)");
    BoltzmannParams p;
    p.x = best->first;
    p.y = best->second;
    if (q.parametric()) {
        p.t = q.t();
        p.lambda = q.lambda();
    }
    p.resid_tc1 = std::abs(F1(p.x, p.y));
    p.resid_tc2 = std::abs(F2(p.x, p.y));
    p.resid_crit = std::abs(criticality_residual(q, p.x, p.y));
    p.spectral_radius = admissibility_spectral_radius(q, p.x, p.y);
    p.critical = std::abs(p.spectral_radius - 1.0) <= crit_tol;
    return p;
}

// Closed-form critical point of the vertex-weight family q_n = t lambda^n.
// Complex principal-branch cube roots collapse to a real value.
struct VertexWeightParams {
    double x, y, lambda, t;
};

inline VertexWeightParams vertex_weight_params(double t) {
    if (!(t > 0)) throw std::invalid_argument("need t > 0");
    using C = std::complex<double>;
    const double cbrt2 = std::cbrt(2.0);
    C cr = std::pow(C(-(t - 1.0) * (t - 1.0) * t * t, 0.0), 1.0 / 3.0);
    C term2 = std::sqrt(6.0 * cbrt2 * cr + C(4.0 * (t - 1.0) * t + 4.0)) / 6.0;
    C inner = std::sqrt(3.0 * cr / (cbrt2 * cbrt2) + C((t - 1.0) * t + 1.0));
    C big = C(-4.0 * (t + 1.0) * (2.0 * t - 1.0) * (t - 2.0)) / (9.0 * inner) -
            (2.0 / 3.0) * cbrt2 * cr + C(8.0 / 9.0 * (t - 2.0) * (t - 2.0) + 8.0 / 3.0 * (t - 1.0));
    C xc = C(2.0 / 3.0 - t / 3.0) + term2 + std::sqrt(big) / 2.0;
    if (std::abs(xc.imag()) > 1e-8)
        throw std::runtime_error("vertex weight closed form evaluated off the real branch");
    double x = xc.real();
    if (!(x > 1.0)) throw std::runtime_error("vertex weight closed form gave x <= 1");
    double y = std::sqrt(x - 1.0) * std::sqrt(t + x - 1.0) / std::sqrt(x);
    double lambda = std::sqrt(x - 1.0) * std::sqrt(x) * std::sqrt(t + x - 1.0) /
                    (2.0 * (t - 2.0) * x - t + 3.0 * x * x + 1.0);
    return {x, y, lambda, t};
}

// --- 4-type mobile offspring law ---------------------------------------------

// types: 1 fertile-labeled, 2 half-labeled, 3 bullet faces, 4 diamond faces
inline OffspringModel mobile_offspring(const WeightSequence& q, double x, double y) {
    if (!(x > 1.0)) throw std::invalid_argument("mobile offspring needs x > 1");
    TypeSet types({1, 2, 3, 4});
    std::map<TypeId, OffspringDist> dists;
    // exact rational p0 is not available for a double x; approximate via a
    // rational with denominator 2^53 (Monte Carlo side only)
    Rational p0(BigInt(static_cast<int64_t>(std::ldexp(1.0 / x, 53))), BigInt(1) << 53);
    dists.emplace(1, OffspringDist::geometric(3, p0));
    OffspringVector one4;
    one4.set(4, 1);
    dists.emplace(2, OffspringDist::finite({{one4, Rational(1)}}));
    OffspringDist::FaceParams fb;
    fb.bullet = true;
    fb.q = q;
    fb.x = x;
    fb.y = y;
    fb.child_a = 1;
    fb.child_b = 2;
    dists.emplace(3, OffspringDist::face(fb));
    OffspringDist::FaceParams fd = fb;
    fd.bullet = false;
    dists.emplace(4, OffspringDist::face(fd));
    return OffspringModel(std::move(types), std::move(dists));
}

// --- decorations ----------------------------------------------------------------
//
// For a type-3/4 vertex v_0 with ordered children v_1..v_d, the decoration
// (a_0..a_d) in (1/2)Z^{d+1} satisfies
//   (a) sum a_i = 0,
//   (b') a_i >= -1 + (B(v_i) + B(v_{i+1})) / 2 with B = 1 on group {2,4},
//        v_{d+1} = v_0,
//   (c) prefix sums integer iff group(v_i) = group(v_0).
// (b') is the sign-corrected form of the printed condition; it is the unique
// bound reproducing the series coefficients, which the tests assert.

namespace detail {

inline int group_b(TypeId t) { return (t == 2 || t == 4) ? 1 : 0; }

struct DecorationDp {
    // positions 0..d+1, doubled prefix sums s in [-S, S]; counts from the back
    int d;
    int S;
    std::vector<int> bound2;       // doubled lower bound per a_i
    std::vector<int> parity;       // required parity of s_i
    std::vector<std::vector<BigInt>> ways;  // ways[i][s + S] = completions

    DecorationDp(TypeId parent, const std::vector<TypeId>& child_types) {
        d = static_cast<int>(child_types.size());
        S = 2 * (d + 2);
        std::vector<int> b(d + 2);
        b[0] = group_b(parent);
        for (int i = 1; i <= d; ++i) b[i] = group_b(child_types[i - 1]);
        b[d + 1] = b[0];
        bound2.resize(d + 1);
        for (int i = 0; i <= d; ++i) bound2[i] = -2 + b[i] + b[i + 1];
        parity.resize(d + 2);
        for (int i = 0; i <= d + 1; ++i) parity[i] = (b[i] != b[0]) ? 1 : 0;

        ways.assign(d + 2, std::vector<BigInt>(2 * S + 1, BigInt(0)));
        ways[d + 1][S] = 1;  // s_{d+1} = 0
        for (int i = d; i >= 0; --i) {
            for (int s = -S; s <= S; ++s) {
                if (((s % 2) + 2) % 2 != parity[i]) continue;
                BigInt acc = 0;
                int first = s + bound2[i];
                // fix parity of the next prefix
                if ((((first % 2) + 2) % 2) != parity[i + 1]) ++first;
                for (int s2 = first; s2 <= S; s2 += 2) {
                    if (s2 < -S) continue;
                    acc += ways[i + 1][s2 + S];
                }
                ways[i][s + S] = acc;
            }
        }
    }

    const BigInt& total() const { return ways[0][S]; }
};

}  // namespace detail

// Number of admissible decoration vectors for one fixed ordered child list.
inline BigInt count_decorations(TypeId parent, const std::vector<TypeId>& child_types) {
    if (child_types.empty()) return 1;  // vacuous decoration
    detail::DecorationDp dp(parent, child_types);
    return dp.total();
}

// Uniform decoration vector, returned doubled (a2_i = 2 a_i).
inline std::vector<int32_t> sample_decoration(TypeId parent, const std::vector<TypeId>& child_types,
                                              Rng& rng) {
    if (child_types.empty()) throw std::invalid_argument("decoration needs d >= 1 children");
    detail::DecorationDp dp(parent, child_types);
    if (dp.total() == 0) throw std::invalid_argument("empty decoration constraint set");
    std::vector<int32_t> a2(dp.d + 1);
    int s = 0;
    for (int i = 0; i <= dp.d; ++i) {
        // choose s_{i+1} proportional to completions
        double total = dp.ways[i][s + dp.S].convert_to<double>();
        if (!std::isfinite(total)) throw std::runtime_error("decoration count exceeds double range");
        double u = rng.unit() * total;
        int first = s + dp.bound2[i];
        if ((((first % 2) + 2) % 2) != dp.parity[i + 1]) ++first;
        int chosen = INT32_MIN;
        for (int s2 = std::max(first, -dp.S); s2 <= dp.S; s2 += 2) {
            double w = dp.ways[i + 1][s2 + dp.S].convert_to<double>();
            if (w <= 0) continue;
            u -= w;
            chosen = s2;
            if (u <= 0) break;
        }
        if (chosen == INT32_MIN) throw std::logic_error("decoration sampling fell through");
        a2[i] = static_cast<int32_t>(chosen - s);
        s = chosen;
    }
    return a2;
}

// --- mobiles ---------------------------------------------------------------------

struct Mobile {
    MultiTypeTree tree;                               // ordered (uniform interleave)
    std::vector<int32_t> label2;                      // doubled labels
    std::map<VertexId, std::vector<int32_t>> beta2;   // doubled decorations, d >= 1 only

    bool valid_label_parity() const {
        for (VertexId v = 0; v < static_cast<VertexId>(tree.size()); ++v) {
            bool half = detail::group_b(tree.type_of(v)) == 1;
            if (((label2[v] % 2 + 2) % 2) != (half ? 1 : 0)) return false;
        }
        return true;
    }
};

// Label propagation: root gets 0 (type 1) or 1/2 (type 2); types 3/4 copy the
// parent; children of a decorated vertex get prefix-sum offsets.
inline void assign_labels(Mobile& m) {
    const auto& t = m.tree;
    m.label2.assign(t.size(), 0);
    m.label2[t.root()] = detail::group_b(t.type_of(t.root())) == 1 ? 1 : 0;
    for (VertexId v : t.preorder()) {
        TypeId vt = t.type_of(v);
        const auto& ch = t.children_of(v);
        if (vt == 1 || vt == 2) {
            for (VertexId c : ch) m.label2[c] = m.label2[v];  // faces copy the parent
        } else {
            if (ch.empty()) continue;
            auto it = m.beta2.find(v);
            if (it == m.beta2.end() || it->second.size() != ch.size() + 1)
                throw std::invalid_argument("missing or ill-sized decoration");
            int32_t s = 0;
            for (size_t i = 0; i < ch.size(); ++i) {
                s += it->second[i];
                m.label2[ch[i]] = m.label2[v] + s;
            }
        }
    }
}

// T(kappa) mobile: uniformly interleaved offspring, decorations, labels.
inline Mobile sample_mobile(const OffspringModel& model4, TypeId kappa, Rng& rng,
                            const SamplerOptions& base_opt = {}) {
    SamplerOptions opt = base_opt;
    opt.uniform_interleave = true;
    Mobile m;
    m.tree = sample_tree(model4, RootLaw::fixed(kappa), rng, opt);
    for (VertexId v = 0; v < static_cast<VertexId>(m.tree.size()); ++v) {
        TypeId vt = m.tree.type_of(v);
        if ((vt == 3 || vt == 4) && !m.tree.children_of(v).empty()) {
            std::vector<TypeId> cts;
            for (VertexId c : m.tree.children_of(v)) cts.push_back(m.tree.type_of(c));
            m.beta2[v] = sample_decoration(vt, cts, rng);
        }
    }
    assign_labels(m);
    return m;
}

// Mobile draw abandoned as soon as |T|_gamma exceeds the bound; nullopt for
// abandoned draws. Restricting to small gamma-sizes this way is unbiased.
inline std::optional<Mobile> sample_mobile_bounded(const OffspringModel& model4, TypeId kappa,
                                                   const GammaWeights& gamma, int64_t max_gamma,
                                                   Rng& rng, const SamplerOptions& base_opt = {}) {
    SamplerOptions opt = base_opt;
    opt.uniform_interleave = true;
    auto t = detail::generate(model4, kappa, rng, opt, std::nullopt, &gamma, Rational(max_gamma));
    if (!t) return std::nullopt;
    Mobile m;
    m.tree = std::move(*t);
    for (VertexId v = 0; v < static_cast<VertexId>(m.tree.size()); ++v) {
        TypeId vt = m.tree.type_of(v);
        if ((vt == 3 || vt == 4) && !m.tree.children_of(v).empty()) {
            std::vector<TypeId> cts;
            for (VertexId c : m.tree.children_of(v)) cts.push_back(m.tree.type_of(c));
            m.beta2[v] = sample_decoration(vt, cts, rng);
        }
    }
    assign_labels(m);
    return m;
}

// Conditioned mobile: |T|_gamma = n via rejection with early abort.
inline Mobile sample_mobile_conditioned(const OffspringModel& model4, TypeId kappa,
                                        const GammaWeights& gamma, int64_t n, Rng& rng,
                                        const SamplerOptions& base_opt = {}) {
    SamplerOptions opt = base_opt;
    opt.uniform_interleave = true;
    Mobile m;
    m.tree = sample_conditioned(model4, RootLaw::fixed(kappa), Conditioning::gamma_size(gamma, n),
                                rng, opt);
    for (VertexId v = 0; v < static_cast<VertexId>(m.tree.size()); ++v) {
        TypeId vt = m.tree.type_of(v);
        if ((vt == 3 || vt == 4) && !m.tree.children_of(v).empty()) {
            std::vector<TypeId> cts;
            for (VertexId c : m.tree.children_of(v)) cts.push_back(m.tree.type_of(c));
            m.beta2[v] = sample_decoration(vt, cts, rng);
        }
    }
    assign_labels(m);
    return m;
}

// Two T(2) mobiles with identified roots (the T^0 flavor).
inline Mobile glue_mobiles_at_root(const Mobile& m1, const Mobile& m2) {
    if (m1.tree.type_of(0) != 2 || m2.tree.type_of(0) != 2)
        throw std::invalid_argument("glueing needs two type-2-rooted mobiles");
    Mobile out;
    VertexId root = out.tree.add_root(2);
    auto copy_in = [&](const Mobile& src) {
        std::vector<std::pair<VertexId, VertexId>> stack;
        const auto& rc = src.tree.children_of(0);
        for (auto it = rc.rbegin(); it != rc.rend(); ++it) stack.push_back({*it, root});
        while (!stack.empty()) {
            auto [sv, dp] = stack.back();
            stack.pop_back();
            VertexId nv = out.tree.add_child(dp, src.tree.type_of(sv));
            auto bit = src.beta2.find(sv);
            if (bit != src.beta2.end()) out.beta2[nv] = bit->second;
            const auto& ch = src.tree.children_of(sv);
            for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back({*it, nv});
        }
    };
    copy_in(m1);
    copy_in(m2);
    assign_labels(out);
    return out;
}

}  // namespace mtgw
