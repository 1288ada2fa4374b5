#pragma once

// Deterministic RNG wrapper with documented seed splitting.
//
// Child streams are derived as splitmix64 hashes of (master seed, FNV-1a of
// the stream label, index), so parallel experiments reproduce bit-exactly
// for a fixed build regardless of scheduling.

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace mtgw {

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline uint64_t fnv1a64(std::string_view s) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// split_seed(master, label, index) -> child seed
inline uint64_t split_seed(uint64_t master, std::string_view label, uint64_t index = 0) {
    return splitmix64(splitmix64(master ^ fnv1a64(label)) ^ index);
}

class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(splitmix64(seed)) {}

    uint64_t next_u64() { return gen_(); }

    // Unbiased integer in [0, n).
    uint64_t below(uint64_t n) {
        if (n == 0) return 0;
        uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t v;
        do {
            v = gen_();
        } while (v >= limit);
        return v % n;
    }

    // 53-bit uniform in [0, 1).
    double unit() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    // Index into a cumulative-weight table (cdf strictly increasing, last entry
    // is the total mass).
    size_t categorical_cdf(const std::vector<double>& cdf) {
        double u = unit() * cdf.back();
        size_t lo = 0, hi = cdf.size() - 1;
        while (lo < hi) {
            size_t mid = (lo + hi) / 2;
            if (cdf[mid] <= u)
                lo = mid + 1;
            else
                hi = mid;
        }
        return lo;
    }

    bool bernoulli(double p) { return unit() < p; }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace mtgw
