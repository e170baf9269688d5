#pragma once

#include <cstdint>
#include <string_view>

namespace ccgs {

// Deterministic, platform-stable random helpers. The std:: distributions are
// implementation-defined, so anything that feeds frozen test values or
// byte-identical artifacts goes through these instead.

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Small counter-based generator: a seed plus a draw counter.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() { return splitmix64(state_); }

    /// Uniform in [0, 1) with 53 random bits.
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform in [lo, hi).
    double next_real(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

    /// Uniform index in [0, n). Modulo bias is irrelevant at our scales.
    std::size_t next_index(std::size_t n) { return n == 0 ? 0 : static_cast<std::size_t>(next_u64() % n); }

private:
    std::uint64_t state_;
};

/// FNV-1a over a byte view, used for token/bucket hashing.
inline std::uint64_t fnv1a(std::uint64_t seed, std::string_view bytes) {
    std::uint64_t h = seed ^ 0xCBF29CE484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    return h;
}

inline std::uint64_t fnv1a(std::uint64_t seed, std::uint64_t value) {
    std::uint64_t h = seed ^ 0xCBF29CE484222325ull;
    for (int i = 0; i < 8; ++i) {
        h ^= (value >> (8 * i)) & 0xFFu;
        h *= 0x100000001B3ull;
    }
    return h;
}

} // namespace ccgs
