#pragma once

#include <cmath>
#include <cstdint>

namespace gatepose {

/**
 * Seeded PRNG (splitmix64 core) with the distributions the simulators need.
 *
 * Every stochastic component takes one of these explicitly; nothing reads
 * global state. fork() derives an independent stream from a parent seed so
 * per-record generation stays reproducible no matter how work is scheduled.
 */
class Rng {
public:
    explicit Rng(uint64_t seed = 0x9E3779B97F4A7C15ull) : state_(seed) {}

    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1) with 53-bit resolution.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + uniform01() * (hi - lo); }

    /// Uniform integer in [lo, hi] inclusive.
    int uniform_int(int lo, int hi) {
        const uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
        return lo + static_cast<int>(next_u64() % span);
    }

    bool bernoulli(double p) { return uniform01() < p; }

    /// Standard normal via Box-Muller (two uniforms per draw, no cached spare).
    double gaussian(double mean = 0.0, double stddev = 1.0) {
        double u1 = uniform01();
        if (u1 < 1e-300) u1 = 1e-300;
        const double u2 = uniform01();
        const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
        return mean + z * stddev;
    }

    /// Poisson count via Knuth's product method (fine for small means).
    int poisson(double mean) {
        const double limit = std::exp(-mean);
        int k = 0;
        double prod = uniform01();
        while (prod > limit) {
            ++k;
            prod *= uniform01();
        }
        return k;
    }

    /// Independent child stream; stable under reordering of sibling forks.
    Rng fork(uint64_t stream) const {
        uint64_t z = state_ ^ (0x9E3779B97F4A7C15ull + stream * 0xD1B54A32D192ED03ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return Rng(z ^ (z >> 31));
    }

private:
    static constexpr double kTwoPi = 6.283185307179586476925286766559;
    uint64_t state_;
};

}  // namespace gatepose
