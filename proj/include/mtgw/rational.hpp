#pragma once

// Exact big-integer / rational arithmetic plus the small combinatorial
// helpers (factorials, binomials, multinomials) the enumeration code needs.
// All probability bookkeeping that feeds an acceptance gate goes through
// these types; doubles appear only on the Monte Carlo side.

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mtgw {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

// Accepts "p/q", plain integers, and decimal literals ("0.25" -> 1/4).
inline Rational parse_rational(std::string_view s) {
    auto fail = [&] { throw std::invalid_argument("bad rational: '" + std::string(s) + "'"); };
    if (s.empty()) fail();
    auto slash = s.find('/');
    if (slash != std::string_view::npos) {
        BigInt p(std::string(s.substr(0, slash)));
        BigInt q(std::string(s.substr(slash + 1)));
        if (q == 0) fail();
        return Rational(p, q);
    }
    auto dot = s.find('.');
    if (dot != std::string_view::npos) {
        std::string digits = std::string(s.substr(0, dot)) + std::string(s.substr(dot + 1));
        size_t frac_len = s.size() - dot - 1;
        if (digits.empty() || digits == "-" || digits == "+") fail();
        BigInt p(digits);
        BigInt q = 1;
        for (size_t i = 0; i < frac_len; ++i) q *= 10;
        return Rational(p, q);
    }
    return Rational(BigInt(std::string(s)));
}

inline std::string rational_to_string(const Rational& r) {
    std::string s = numerator(r).str();
    if (denominator(r) != 1) s += "/" + denominator(r).str();
    return s;
}

// Factorials are cached; the DP code asks for n up to a few thousand.
inline const BigInt& factorial(size_t n) {
    static std::vector<BigInt> cache{BigInt(1)};
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    while (cache.size() <= n) cache.push_back(cache.back() * BigInt(cache.size()));
    return cache[n];
}

inline BigInt binomial(size_t n, size_t k) {
    if (k > n) return 0;
    return factorial(n) / (factorial(k) * factorial(n - k));
}

inline BigInt multinomial(size_t n, std::span<const size_t> parts) {
    BigInt r = factorial(n);
    size_t total = 0;
    for (size_t p : parts) {
        r /= factorial(p);
        total += p;
    }
    if (total != n) throw std::invalid_argument("multinomial parts do not sum to n");
    return r;
}

inline Rational pow_rational(const Rational& base, size_t e) {
    Rational r = 1;
    Rational b = base;
    size_t k = e;
    while (k > 0) {
        if (k & 1) r *= b;
        b *= b;
        k >>= 1;
    }
    return r;
}

}  // namespace mtgw
