#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

namespace sparseiter {

/// Deterministic 64-bit random source. The engine is std::mt19937_64 (its
/// output sequence is fixed by the standard); all distributions are derived
/// here from raw 64-bit draws, so identical seeds give identical streams on
/// every platform, not just within one build.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next() { return eng_(); }

    /// Uniform in [0, 1), 53-bit resolution.
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller (cosine branch only).
    double normal() {
        // 1 - u in (0, 1] keeps the log finite.
        double u1 = 1.0 - uniform01();
        double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    /// Uniform integer in [0, n), unbiased via bitmask rejection.
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) throw std::invalid_argument("Rng::below: n must be positive");
        std::uint64_t mask = n - 1;
        mask |= mask >> 1;
        mask |= mask >> 2;
        mask |= mask >> 4;
        mask |= mask >> 8;
        mask |= mask >> 16;
        mask |= mask >> 32;
        for (;;) {
            std::uint64_t r = next() & mask;
            if (r < n) return r;
        }
    }

    /// +1 or -1, equiprobable.
    double sign() { return (next() & 1u) ? 1.0 : -1.0; }

private:
    std::mt19937_64 eng_;
};

} // namespace sparseiter
