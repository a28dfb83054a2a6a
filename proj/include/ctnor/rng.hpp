#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace ctnor {

// Deterministic random source. All transforms are hand-rolled on top of the
// raw mt19937_64 stream so that sequences are identical across standard
// library implementations.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // Uniform in [0, 1) with 53 bits of precision.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double exponential(double rate) {
        // -log(1 - u), u in [0,1) keeps the argument positive
        return -std::log1p(-uniform()) / rate;
    }

    double normal(double mean, double std) {
        if (have_spare_) {
            have_spare_ = false;
            return mean + std * spare_;
        }
        double u1, u2;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return mean + std * r * std::cos(a);
    }

    // Knuth's method, chunked so the loop count stays bounded for large
    // means (Poisson is additive).
    int poisson(double mean) {
        int n = 0;
        while (mean > 30.0) {
            n += poisson_small(30.0);
            mean -= 30.0;
        }
        return n + poisson_small(mean);
    }

  private:
    int poisson_small(double mean) {
        if (mean <= 0.0) return 0;
        const double limit = std::exp(-mean);
        double p = 1.0;
        int k = 0;
        do {
            ++k;
            p *= uniform();
        } while (p > limit);
        return k - 1;
    }

    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace ctnor
