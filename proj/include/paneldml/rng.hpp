#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace paneldml {

// ---------------------------------------------------------------------------
// Seeded, stream-keyed random numbers.
//
// Every random object in a simulation draws from its own stream, keyed by
// (seed, tag). Streams are independent SplitMix64 sequences, so adding a new
// draw site (a new tag) never perturbs the values produced by existing ones,
// and replications can be re-derived in isolation.
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Derive a stream key from a seed and a tag. Avalanches both inputs.
inline std::uint64_t derive_key(std::uint64_t seed, std::uint64_t tag) {
    std::uint64_t s = seed;
    std::uint64_t h = splitmix64_next(s);
    s = h ^ (tag * 0xD6E8FEB86659FD93ull);
    return splitmix64_next(s);
}

inline std::uint64_t derive_key(std::uint64_t seed, std::uint64_t tag_a, std::uint64_t tag_b) {
    return derive_key(derive_key(seed, tag_a), tag_b);
}

/// FNV-1a, used to key streams by strings (cell names, method labels).
inline std::uint64_t hash_string(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

class RandomStream {
public:
    explicit RandomStream(std::uint64_t key) : state_(key) {}

    std::uint64_t next_u64() { return splitmix64_next(state_); }

    /// Uniform double in (0, 1].
    double next_unit() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller; consumes exactly two uniforms per pair.
    double next_gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = next_unit();
        const double u2 = next_unit();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.141592653589793238462643383279502884 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    /// Unbiased uniform integer in [0, n). Rejection sampling on the top bits.
    std::uint64_t next_below(std::uint64_t n) {
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
        std::uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return x % n;
    }

private:
    std::uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// Fisher-Yates shuffle; hand-rolled so fold assignments are identical across
/// standard library implementations.
template <typename T>
void shuffle(std::vector<T>& v, RandomStream& rs) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rs.next_below(i));
        std::swap(v[i - 1], v[j]);
    }
}

} // namespace paneldml
