#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string_view>

namespace relmatch {

/// splitmix64 output function; also used to derive stream seeds.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

/// Seed for a named substream of a root seed. Stable across platforms.
inline std::uint64_t stream_seed(std::uint64_t root, std::string_view tag) {
    return mix64(root ^ fnv1a64(tag));
}

/// xoshiro256++ seeded through splitmix64. Chosen for cross-platform bit
/// reproducibility; the generator name is recorded in corpus manifests.
class Xoshiro256pp {
public:
    explicit Xoshiro256pp(std::uint64_t seed) {
        std::uint64_t x = seed;
        for (auto& w : s_) {
            x += 0x9E3779B97F4A7C15ULL;
            std::uint64_t z = x;
            z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
            z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
            w = z ^ (z >> 31);
        }
    }

    static Xoshiro256pp from_state(const std::array<std::uint64_t, 4>& st) {
        Xoshiro256pp g(0);
        g.s_ = st;
        return g;
    }

    std::array<std::uint64_t, 4> state() const { return s_; }

    std::uint64_t next() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// [0, 1)
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// (0, 1]
    double uniform_open() { return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53; }

    double uniform_range(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// [0, bound)
    std::uint64_t uniform_int(std::uint64_t bound) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t r;
        do {
            r = next();
        } while (r >= limit);
        return r % bound;
    }

    /// Standard normal via Box-Muller (one draw per call, the sine pair is discarded).
    double gauss() {
        const double u1 = uniform_open();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::array<std::uint64_t, 4> s_{};
};

}  // namespace relmatch
