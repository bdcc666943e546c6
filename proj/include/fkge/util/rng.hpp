#pragma once
// Seeded random source used everywhere in the simulator.
//
// All draws are derived from raw mt19937_64 output through fixed arithmetic
// (no std::*_distribution), so a given seed reproduces the same stream on
// every platform. Child seeds for actors / sessions / rounds are derived
// with a splitmix step so independent components never share a stream.

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace fkge::util {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// Stable string hash (FNV-1a); used to derive per-graph seed streams.
inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (const unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    return h;
}

// Derive a child seed from a parent seed and a stream tag.
inline std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t tag) {
    return splitmix64(parent ^ splitmix64(tag));
}

inline std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t tag_a,
                                 std::uint64_t tag_b) {
    return derive_seed(derive_seed(parent, tag_a), tag_b);
}

// Inverse-CDF Laplace sample for a uniform draw u in [0,1).
// Median maps to exactly 0.
inline double laplace_from_uniform(double u, double scale) {
    const double c = u - 0.5;
    if (c >= 0.0) return -scale * std::log(1.0 - 2.0 * c);
    return scale * std::log(1.0 + 2.0 * c);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0,1) with 53 bits of precision.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // Uniform integer in [0, n). n must be > 0.
    std::uint64_t uniform_int(std::uint64_t n) {
        // Rejection sampling over the top multiple of n.
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v;
        do {
            v = engine_();
        } while (v >= limit);
        return v % n;
    }

    bool coin() { return (engine_() & 1ull) != 0; }

    double laplace(double scale) { return laplace_from_uniform(uniform(), scale); }

    // Uniform in [lo, hi).
    double uniform_range(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_int(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    Rng child(std::uint64_t tag) { return Rng(derive_seed(engine_(), tag)); }

private:
    std::mt19937_64 engine_;
};

}  // namespace fkge::util
