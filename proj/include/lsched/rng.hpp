#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace lsched {

// Deterministic random stream.  mt19937_64 output is pinned by the standard;
// doubles are derived with explicit arithmetic (no distribution objects) so
// that identical seeds give bit-identical streams on every toolchain.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Unit-mean exponential.
    double exponential() { return -std::log1p(-uniform()); }

    bool bernoulli(double p) { return uniform() < p; }

    // Unbiased integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        std::uint64_t x, r;
        do {
            x = eng_();
            r = x % n;
        } while (x - r > static_cast<std::uint64_t>(-1) - (n - 1));
        return r;
    }

  private:
    std::mt19937_64 eng_;
};

}  // namespace lsched
