#pragma once

// Independent test oracles: deliberately simple direct implementations that
// never share code with the library paths they check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "ctnor/model.hpp"
#include "ctnor/rng.hpp"
#include "ctnor/trace.hpp"

namespace oracle {

// Adaptive Simpson quadrature.
inline double simpson(const std::function<double(double)>& f, double a, double b, double fa,
                      double fm, double fb, double eps, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) < 15.0 * eps) return left + right;
    return simpson(f, a, m, fa, flm, fm, eps * 0.5, depth - 1) +
           simpson(f, m, b, fm, frm, fb, eps * 0.5, depth - 1);
}

inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double eps = 1e-9) {
    const double m = 0.5 * (a + b);
    return simpson(f, a, b, f(a), f(m), f(b), eps, 40);
}

// Direct untruncated evaluation of the log-likelihood: the full double sum
// over every (channel, input event) pair plus the leak term.
inline double brute_force_log_likelihood(const ctnor::CtnorModel& model,
                                         const ctnor::EventTrace& trace) {
    const double T = trace.duration();
    double lam = model.leak_weight;
    for (const auto& ch : trace.inputs)
        lam += model.weight_of(ch.id) * static_cast<double>(ch.times.size());
    double ll = -lam;
    for (double o : trace.outputs) {
        double s = model.leak_weight / T;
        for (const auto& ch : trace.inputs) {
            const auto& fam = model.delays.at(trace.group_of(ch.id));
            const double w = model.weight_of(ch.id);
            for (size_t k = 0; k < ch.times.size(); ++k) {
                const double d = o - ch.times[k];
                if (ch.autocorr && d <= 0.0) continue;
                s += w * fam.density(d);
            }
        }
        ll += std::log(s);
    }
    return ll;
}

// Kolmogorov-Smirnov statistic against Uniform(0, 1).
inline double ks_statistic_uniform(std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double d = 0.0;
    for (size_t i = 0; i < xs.size(); ++i) {
        d = std::max(d, std::abs((i + 1) / n - xs[i]));
        d = std::max(d, std::abs(xs[i] - i / n));
    }
    return d;
}

// One-sample KS test against Uniform(0, 1) at the 1% level (asymptotic
// critical value 1.628 / sqrt(n)).
inline bool ks_uniform_pass_1pct(const std::vector<double>& xs) {
    return ks_statistic_uniform(xs) <= 1.628 / std::sqrt(static_cast<double>(xs.size()));
}

inline std::vector<double> ranks(const std::vector<double>& xs) {
    std::vector<size_t> order(xs.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return xs[a] < xs[b]; });
    std::vector<double> r(xs.size());
    size_t i = 0;
    while (i < order.size()) {
        size_t k = i;
        while (k + 1 < order.size() && xs[order[k + 1]] == xs[order[i]]) ++k;
        const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(k)) + 1.0;
        for (size_t t = i; t <= k; ++t) r[order[t]] = avg;
        i = k + 1;
    }
    return r;
}

inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    const auto ra = ranks(a), rb = ranks(b);
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        ma += ra[i];
        mb += rb[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0, sa = 0.0, sb = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        sab += (ra[i] - ma) * (rb[i] - mb);
        sa += (ra[i] - ma) * (ra[i] - ma);
        sb += (rb[i] - mb) * (rb[i] - mb);
    }
    return sab / std::sqrt(sa * sb);
}

// Random micro-instance: <= 10 events total over 3 channels, mixed delay
// families, everything strictly inside the window.
inline std::pair<ctnor::EventTrace, ctnor::CtnorModel> random_micro_instance(
    std::uint64_t seed) {
    ctnor::Rng rng(seed);
    ctnor::EventTrace trace;
    trace.t_start = 0.0;
    trace.t_end = 50.0;
    ctnor::CtnorModel model;
    int budget = 10;
    const int n_out = 1 + static_cast<int>(rng.uniform() * 4.0);  // 1..4
    budget -= n_out;
    for (int j = 0; j < 3; ++j) {
        ctnor::Channel ch;
        ch.id = "ch" + std::to_string(j);
        const int n_in = std::min(budget, static_cast<int>(rng.uniform() * 3.0));
        for (int k = 0; k < n_in; ++k) ch.times.push_back(rng.uniform(0.0, 45.0));
        std::sort(ch.times.begin(), ch.times.end());
        budget -= n_in;
        trace.inputs.push_back(std::move(ch));
        model.weights["ch" + std::to_string(j)] = rng.uniform(0.0, 2.0);
    }
    for (int l = 0; l < n_out; ++l) trace.outputs.push_back(rng.uniform(0.0, 50.0));
    std::sort(trace.outputs.begin(), trace.outputs.end());
    model.leak_weight = rng.uniform(0.5, 2.0);
    trace.channel_groups["ch0"] = "g_exp";
    trace.channel_groups["ch1"] = "g_exp";
    trace.channel_groups["ch2"] = "g_gauss";
    model.delays["g_exp"] = ctnor::DelayFamily::uniform_exponential(
        rng.uniform(0.1, 0.6), 0.0, rng.uniform(0.5, 2.0), rng.uniform(0.2, 1.5));
    model.delays["g_gauss"] = ctnor::DelayFamily::uniform_trunc_gaussian(
        rng.uniform(0.1, 0.6), 0.0, rng.uniform(0.5, 2.0), rng.uniform(0.5, 4.0),
        rng.uniform(0.5, 2.0));
    return {std::move(trace), std::move(model)};
}

}  // namespace oracle
