#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace gnfbc {

/// Seeded RNG with hand-rolled draws. std::uniform_real_distribution and
/// friends are implementation-defined, so sampling goes through explicit
/// bit manipulation to keep fixed-seed runs identical across toolchains.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed = 0) : gen_(seed) {}

    std::uint64_t next() { return gen_(); }

    /// Uniform double in [0, 1) with 53 bits of randomness.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). n must be > 0.
    std::uint64_t below(std::uint64_t n) { return gen_() % n; }

    /// Standard normal via Box-Muller (no cached spare, no state surprises).
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    /// Bernoulli draw with probability p.
    bool bernoulli(double p) { return uniform() < p; }

private:
    std::mt19937_64 gen_;
};

} // namespace gnfbc
