#pragma once

#include <cmath>
#include <string>

#include "ctnor/errors.hpp"
#include "ctnor/rng.hpp"

namespace ctnor {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

inline double normal_pdf(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
}

enum class DelayKind {
    PureUniform,               // uniform on [lo, hi]; used for the leak
    UniformExponential,        // mix of uniform on [lo, hi] and Exp(rate)
    UniformTruncatedGaussian,  // mix of uniform and N(mean, std) truncated to >= 0
};

// Parameterized delay density f_theta. Density is zero for negative delays
// (causality); the Gaussian component is renormalized on [0, inf).
struct DelayFamily {
    DelayKind kind = DelayKind::PureUniform;
    double mixture_weight = 1.0;  // probability of the uniform component
    double uniform_lo = 0.0;
    double uniform_hi = 1.0;
    double exp_rate = 1.0;     // UniformExponential
    double gauss_mean = 0.0;   // UniformTruncatedGaussian
    double gauss_std = 1.0;

    static DelayFamily pure_uniform(double lo, double hi) {
        DelayFamily f;
        f.kind = DelayKind::PureUniform;
        f.mixture_weight = 1.0;
        f.uniform_lo = lo;
        f.uniform_hi = hi;
        return f;
    }

    static DelayFamily uniform_exponential(double mix, double lo, double hi, double rate) {
        DelayFamily f;
        f.kind = DelayKind::UniformExponential;
        f.mixture_weight = mix;
        f.uniform_lo = lo;
        f.uniform_hi = hi;
        f.exp_rate = rate;
        return f;
    }

    static DelayFamily uniform_trunc_gaussian(double mix, double lo, double hi, double mean,
                                              double std) {
        DelayFamily f;
        f.kind = DelayKind::UniformTruncatedGaussian;
        f.mixture_weight = mix;
        f.uniform_lo = lo;
        f.uniform_hi = hi;
        f.gauss_mean = mean;
        f.gauss_std = std;
        return f;
    }

    void validate() const {
        if (!(uniform_hi > uniform_lo)) throw InvalidArgument("uniform window must be nonempty");
        if (uniform_lo < 0.0) throw InvalidArgument("uniform window must start at delay >= 0");
        if (mixture_weight < 0.0 || mixture_weight > 1.0)
            throw InvalidArgument("mixture weight must be in [0,1]");
        if (kind == DelayKind::PureUniform && mixture_weight != 1.0)
            throw InvalidArgument("pure uniform family must have mixture weight 1");
        if (kind == DelayKind::UniformExponential && exp_rate <= 0.0)
            throw InvalidArgument("exponential rate must be positive");
        if (kind == DelayKind::UniformTruncatedGaussian && gauss_std <= 0.0)
            throw InvalidArgument("gaussian std must be positive");
    }

    // Normalizer of the Gaussian component truncated to [0, inf).
    double gauss_norm() const { return normal_cdf(gauss_mean / gauss_std); }

    double density(double d) const {
        if (d < 0.0) return 0.0;
        const double u =
            (d >= uniform_lo && d <= uniform_hi) ? 1.0 / (uniform_hi - uniform_lo) : 0.0;
        switch (kind) {
            case DelayKind::PureUniform:
                return u;
            case DelayKind::UniformExponential:
                return mixture_weight * u +
                       (1.0 - mixture_weight) * exp_rate * std::exp(-exp_rate * d);
            case DelayKind::UniformTruncatedGaussian: {
                const double z = (d - gauss_mean) / gauss_std;
                const double g = normal_pdf(z) / (gauss_std * gauss_norm());
                return mixture_weight * u + (1.0 - mixture_weight) * g;
            }
        }
        return 0.0;
    }

    double cdf(double d) const {
        if (d <= 0.0) return 0.0;
        double u;
        if (d <= uniform_lo)
            u = 0.0;
        else if (d >= uniform_hi)
            u = 1.0;
        else
            u = (d - uniform_lo) / (uniform_hi - uniform_lo);
        switch (kind) {
            case DelayKind::PureUniform:
                return u;
            case DelayKind::UniformExponential:
                return mixture_weight * u + (1.0 - mixture_weight) * -std::expm1(-exp_rate * d);
            case DelayKind::UniformTruncatedGaussian: {
                const double g =
                    (normal_cdf((d - gauss_mean) / gauss_std) - normal_cdf(-gauss_mean / gauss_std)) /
                    gauss_norm();
                return mixture_weight * u + (1.0 - mixture_weight) * g;
            }
        }
        return 0.0;
    }

    // Smallest H with tail mass 1 - F(H) <= tail.
    double horizon(double tail = 1e-6) const {
        switch (kind) {
            case DelayKind::PureUniform:
                return uniform_hi;
            case DelayKind::UniformExponential: {
                const double e = 1.0 - mixture_weight;
                if (e <= tail) return uniform_hi;
                return std::max(uniform_hi, std::log(e / tail) / exp_rate);
            }
            case DelayKind::UniformTruncatedGaussian: {
                // bisection on the cdf
                double lo = 0.0, hi = std::max(uniform_hi, gauss_mean + 10.0 * gauss_std);
                while (cdf(hi) < 1.0 - tail) hi *= 2.0;
                for (int i = 0; i < 200 && hi - lo > 1e-12 * (1.0 + hi); ++i) {
                    const double mid = 0.5 * (lo + hi);
                    if (cdf(mid) < 1.0 - tail)
                        lo = mid;
                    else
                        hi = mid;
                }
                return hi;
            }
        }
        return uniform_hi;
    }

    double sample(Rng& rng) const {
        if (rng.uniform() < mixture_weight) return rng.uniform(uniform_lo, uniform_hi);
        switch (kind) {
            case DelayKind::PureUniform:
                return rng.uniform(uniform_lo, uniform_hi);
            case DelayKind::UniformExponential:
                return rng.exponential(exp_rate);
            case DelayKind::UniformTruncatedGaussian: {
                // rejection; fine as long as the mean is not far below zero
                for (;;) {
                    const double d = rng.normal(gauss_mean, gauss_std);
                    if (d >= 0.0) return d;
                }
            }
        }
        return 0.0;
    }

    std::string kind_name() const {
        switch (kind) {
            case DelayKind::PureUniform:
                return "pure_uniform";
            case DelayKind::UniformExponential:
                return "uniform_exponential";
            case DelayKind::UniformTruncatedGaussian:
                return "uniform_trunc_gaussian";
        }
        return "?";
    }
};

}  // namespace ctnor
