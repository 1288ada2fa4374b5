#pragma once

// Face-degree weight sequences q and the bivariate series
//
//   f_bullet(x,y)  = sum_{k,k'} C(2k+k'+1, k+1) C(k+k', k) q_{2+2k+k'} x^k y^k'
//   f_diamond(x,y) = sum_{k,k'} C(2k+k',   k  ) C(k+k', k) q_{1+2k+k'} x^k y^k'
//
// with closed forms for the parametric family q_n = t*lambda^n:
//
//   Z = sqrt(1 - 4 lambda^2 x / (1 - lambda y)^2)
//   f_bullet  = t (1 - Z) / (2 x Z)
//   f_diamond = t lambda / ((1 - lambda y) Z)
//
// Exponents in the series are (x^k, y^k'); the printed form with y^k does not
// match the closed forms and is treated as a typo.

#include "mtgw/rational.hpp"

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

namespace mtgw {

struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

class WeightSequence {
public:
    static WeightSequence from_table(std::vector<double> q_by_degree) {
        WeightSequence w;
        w.table_ = std::move(q_by_degree);
        w.validate();
        return w;
    }

    // q_n = t * lambda^n, n >= 1
    static WeightSequence from_params(double t, double lambda) {
        if (t <= 0 || lambda <= 0) throw std::invalid_argument("need t > 0 and lambda > 0");
        WeightSequence w;
        w.parametric_ = true;
        w.t_ = t;
        w.lambda_ = lambda;
        return w;
    }

    bool parametric() const { return parametric_; }
    double t() const { return t_; }
    double lambda() const { return lambda_; }

    double q(int n) const {
        if (n < 0) return 0.0;
        if (parametric_) return n >= 1 ? t_ * std::pow(lambda_, n) : 0.0;
        return n < static_cast<int>(table_.size()) ? table_[n] : 0.0;
    }

    // -1 means unbounded (parametric)
    int max_degree() const { return parametric_ ? -1 : static_cast<int>(table_.size()) - 1; }

private:
    void validate() const {
        for (double v : table_)
            if (v < 0) throw std::invalid_argument("weights must be >= 0");
        for (size_t n = 3; n < table_.size(); ++n)
            if (table_[n] > 0) return;
        throw std::invalid_argument("need q_n > 0 for some n >= 3");
    }

    std::vector<double> table_;
    bool parametric_ = false;
    double t_ = 0, lambda_ = 0;
};

namespace detail {

inline double face_coef(bool bullet, int k, int kp) {
    if (bullet)
        return to_double(Rational(binomial(2 * k + kp + 1, k + 1) * binomial(k + kp, k)));
    return to_double(Rational(binomial(2 * k + kp, k) * binomial(k + kp, k)));
}

struct ClosedFormState {
    double w;   // 1 - lambda*y
    double z2;  // Z^2
    double z;
};

inline ClosedFormState closed_form_state(const WeightSequence& q, double x, double y) {
    double w = 1.0 - q.lambda() * y;
    if (w <= 0) throw DivergenceError("series diverges: lambda*y >= 1");
    double z2 = 1.0 - 4.0 * q.lambda() * q.lambda() * x / (w * w);
    if (z2 <= 0) throw DivergenceError("series diverges: Z not real");
    return {w, z2, std::sqrt(z2)};
}

}  // namespace detail

// One (k,k') term of the series, including coefficient and weight.
inline double face_term(const WeightSequence& q, bool bullet, int k, int kp, double x, double y) {
    int deg = (bullet ? 2 : 1) + 2 * k + kp;
    double qq = q.q(deg);
    if (qq == 0.0) return 0.0;
    return detail::face_coef(bullet, k, kp) * qq * std::pow(x, k) * std::pow(y, kp);
}

// Certified bound on sum of all terms with 2k+k' >= s (parametric case):
// total over the diagonal 2k+k'=s is <= t*lambda^{off+s} (2 sqrt(x)+y)^{s+1}/sqrt(x).
inline double face_tail_bound(const WeightSequence& q, bool bullet, double x, double y, int s) {
    if (!q.parametric()) return 0.0;
    double rho = q.lambda() * (2.0 * std::sqrt(x) + y);
    if (rho >= 1.0) throw DivergenceError("series diverges: tail ratio >= 1");
    int off = bullet ? 2 : 1;
    double first = q.t() * std::pow(q.lambda(), off + s) * std::pow(2.0 * std::sqrt(x) + y, s + 1) /
                   std::sqrt(x);
    return first / (1.0 - rho);
}

// Series value. Finite tables sum exactly; parametric uses the closed form.
inline double f_face(const WeightSequence& q, bool bullet, double x, double y) {
    if (q.parametric()) {
        auto st = detail::closed_form_state(q, x, y);
        if (bullet) return q.t() * (1.0 - st.z) / (2.0 * x * st.z);
        return q.t() * q.lambda() / (st.w * st.z);
    }
    int off = bullet ? 2 : 1;
    double sum = 0.0;
    for (int k = 0; off + 2 * k <= q.max_degree(); ++k)
        for (int kp = 0; off + 2 * k + kp <= q.max_degree(); ++kp)
            sum += face_term(q, bullet, k, kp, x, y);
    return sum;
}

inline double f_bullet(const WeightSequence& q, double x, double y) { return f_face(q, true, x, y); }
inline double f_diamond(const WeightSequence& q, double x, double y) { return f_face(q, false, x, y); }

// Partial derivatives d/dx and d/dy.
inline double f_face_dx(const WeightSequence& q, bool bullet, double x, double y) {
    if (q.parametric()) {
        auto st = detail::closed_form_state(q, x, y);
        double lam = q.lambda(), t = q.t();
        double zx = -2.0 * lam * lam / (st.w * st.w * st.z);
        if (bullet) {
            // f = t/(2x) (1/Z - 1)
            return -t / (2.0 * x * x) * (1.0 / st.z - 1.0) + t / (2.0 * x) * (-zx / st.z2);
        }
        return -t * lam * zx / (st.w * st.z2);
    }
    int off = bullet ? 2 : 1;
    double sum = 0.0;
    for (int k = 1; off + 2 * k <= q.max_degree(); ++k)
        for (int kp = 0; off + 2 * k + kp <= q.max_degree(); ++kp) {
            double qq = q.q(off + 2 * k + kp);
            if (qq == 0.0) continue;
            sum += detail::face_coef(bullet, k, kp) * qq * k * std::pow(x, k - 1) * std::pow(y, kp);
        }
    return sum;
}

inline double f_face_dy(const WeightSequence& q, bool bullet, double x, double y) {
    if (q.parametric()) {
        auto st = detail::closed_form_state(q, x, y);
        double lam = q.lambda(), t = q.t();
        double zy = -4.0 * lam * lam * lam * x / (st.w * st.w * st.w * st.z);
        if (bullet) return t / (2.0 * x) * (-zy / st.z2);
        return t * lam * (lam * st.z - st.w * zy) / (st.w * st.w * st.z2);
    }
    int off = bullet ? 2 : 1;
    double sum = 0.0;
    for (int k = 0; off + 2 * k <= q.max_degree(); ++k)
        for (int kp = 1; off + 2 * k + kp <= q.max_degree(); ++kp) {
            double qq = q.q(off + 2 * k + kp);
            if (qq == 0.0) continue;
            sum += detail::face_coef(bullet, k, kp) * qq * std::pow(x, k) * kp * std::pow(y, kp - 1);
        }
    return sum;
}

}  // namespace mtgw
