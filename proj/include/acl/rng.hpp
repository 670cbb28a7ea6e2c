#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace acl {

// Deterministic random stream. All distributions are derived from the raw
// mt19937_64 output with fixed arithmetic, so a given seed produces the same
// values on every platform and compiler (std::*_distribution would not).
class Rng {
  public:
    explicit Rng(uint64_t seed) : gen_(seed), seed_(seed) {}

    uint64_t next_u64() { return gen_(); }

    // Uniform on [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). n must be positive.
    int uniform_int(int n) {
        return static_cast<int>(uniform() * static_cast<double>(n));
    }

    // Standard normal via Box-Muller. The second variate is discarded to keep
    // the stream position a simple function of the call count.
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    // Independent child stream seeded from this stream's seed (not its state),
    // so the set of substreams is a pure function of the root seed. splitmix64
    // keeps adjacent stream ids decorrelated.
    Rng split(uint64_t stream) const {
        uint64_t z = seed_ + 0x9E3779B97F4A7C15ULL * (stream + 1);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return Rng(z ^ (z >> 31));
    }

  private:
    std::mt19937_64 gen_;
    uint64_t seed_;
};

}  // namespace acl
