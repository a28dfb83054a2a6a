#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "ctnor/errors.hpp"
#include "ctnor/likelihood.hpp"
#include "ctnor/model.hpp"
#include "ctnor/rng.hpp"
#include "ctnor/stat_tests.hpp"
#include "ctnor/trace.hpp"

namespace ctnor {

inline const std::string kLeakId = "__leak__";

struct Cause {
    std::string channel;  // kLeakId for noise events
    int input = -1;       // index into the causing channel's times
};

// Ground truth recorded by the generators for ROC/QQ evaluation.
struct ScenarioTruth {
    std::map<std::string, bool> causal;
    std::map<std::string, double> true_w;        // per channel (first period)
    std::map<std::string, double> true_w_after;  // changepoint channel, second period
    DelayFamily true_delay;
    std::vector<Cause> causes;  // aligned with trace.outputs
};

namespace detail {

struct RawEvent {
    double time;
    Cause cause;
};

// Outputs spawned by one channel's input events; weight may vary per input.
template <class WeightFn>
void spawn_outputs(Rng& rng, std::vector<RawEvent>& events, const std::string& channel_id,
                   const std::vector<double>& times, WeightFn weight_of_time,
                   const DelayFamily& fam, double t_start, double t_end) {
    for (size_t k = 0; k < times.size(); ++k) {
        const int count = rng.poisson(weight_of_time(times[k]));
        for (int c = 0; c < count; ++c) {
            const double t = times[k] + fam.sample(rng);
            // sampled delays beyond the window end are censored
            if (t >= t_start && t <= t_end)
                events.push_back({t, {channel_id, static_cast<int>(k)}});
        }
    }
}

inline void finalize_outputs(std::vector<RawEvent>& events, EventTrace& trace,
                             ScenarioTruth& truth) {
    std::stable_sort(events.begin(), events.end(),
                     [](const RawEvent& a, const RawEvent& b) { return a.time < b.time; });
    trace.outputs.clear();
    truth.causes.clear();
    for (const auto& e : events) {
        trace.outputs.push_back(e.time);
        truth.causes.push_back(e.cause);
    }
}

inline std::vector<double> uniform_sorted(Rng& rng, size_t count, double lo, double hi) {
    std::vector<double> ts(count);
    for (auto& t : ts) t = rng.uniform(lo, hi);
    std::sort(ts.begin(), ts.end());
    return ts;
}

}  // namespace detail

// Model-faithful sampler: each input event spawns Poisson(w^(j)) outputs at
// input time + delay ~ f_theta; leak outputs are uniform over the window.
// `base` supplies the input channels, window and groups; its outputs are
// ignored.
inline std::pair<EventTrace, ScenarioTruth> sample_trace(const CtnorModel& model,
                                                         const EventTrace& base,
                                                         std::uint64_t seed) {
    model.validate();
    Rng rng(seed);
    EventTrace trace = base;
    ScenarioTruth truth;
    std::vector<detail::RawEvent> events;
    for (const auto& ch : trace.inputs) {
        const double w = model.weight_of(ch.id);
        truth.true_w[ch.id] = w;
        truth.causal[ch.id] = w > 0.0;
        if (w <= 0.0) continue;
        detail::spawn_outputs(rng, events, ch.id, ch.times, [w](double) { return w; },
                              model.delay_for(trace, ch.id), trace.t_start, trace.t_end);
    }
    const int noise = rng.poisson(model.leak_weight);
    for (int c = 0; c < noise; ++c)
        events.push_back({rng.uniform(trace.t_start, trace.t_end), {kLeakId, 0}});
    detail::finalize_outputs(events, trace, truth);
    return {std::move(trace), std::move(truth)};
}

// The synthetic dependency-discovery scenario: 10 input channels with 500
// uniformly placed events per channel per hour, half causal with w = 0.01
// and exponential delays, plus 100 noise events per hour in expectation.
// The exponential's parameter is taken as a rate by default; the flag
// switches to the mean convention.
inline std::pair<EventTrace, ScenarioTruth> scenario_51(int hours, std::uint64_t seed,
                                                        bool exp_param_is_mean = false) {
    if (hours < 1) throw InvalidArgument("scenario_51: hours must be >= 1");
    const double T = 3600.0 * hours;
    Rng rng(seed ^ 0x51c0de);  // input placement stream, separate from output sampling
    EventTrace base;
    base.t_start = 0.0;
    base.t_end = T;
    CtnorModel model;
    for (int j = 0; j < 10; ++j) {
        Channel ch;
        ch.id = "c" + std::to_string(j);
        ch.times = detail::uniform_sorted(rng, static_cast<size_t>(500) * hours, 0.0, T);
        base.inputs.push_back(std::move(ch));
        model.weights["c" + std::to_string(j)] = j < 5 ? 0.01 : 0.0;
    }
    model.leak_weight = 100.0 * hours;
    const double rate = exp_param_is_mean ? 1.0 / 0.1 : 0.1;
    model.delays[kDefaultGroup] = DelayFamily::uniform_exponential(0.0, 0.0, 1.0, rate);
    auto [trace, truth] = sample_trace(model, base, seed);
    truth.true_delay = model.delays.at(kDefaultGroup);
    return {std::move(trace), std::move(truth)};
}

// Two-period scenario: channel c0's weight switches from w_before to w_after
// at the window midpoint; S is the second half. Other channels follow the
// stationary dependency-discovery setup.
inline std::tuple<EventTrace, ScenarioTruth, ChangepointSpec> scenario_changepoint(
    double w_before, double w_after, int hours, std::uint64_t seed,
    bool exp_param_is_mean = false) {
    if (w_before < 0.0 || w_after < 0.0)
        throw InvalidArgument("scenario_changepoint: weights must be >= 0");
    if (hours < 1) throw InvalidArgument("scenario_changepoint: hours must be >= 1");
    const double T = 3600.0 * hours;
    const double mid = 0.5 * T;
    Rng rng(seed ^ 0x52c0de);
    EventTrace trace;
    trace.t_start = 0.0;
    trace.t_end = T;
    for (int j = 0; j < 10; ++j) {
        Channel ch;
        ch.id = "c" + std::to_string(j);
        ch.times = detail::uniform_sorted(rng, static_cast<size_t>(500) * hours, 0.0, T);
        trace.inputs.push_back(std::move(ch));
    }
    const DelayFamily fam = DelayFamily::uniform_exponential(
        0.0, 0.0, 1.0, exp_param_is_mean ? 1.0 / 0.1 : 0.1);
    ScenarioTruth truth;
    truth.true_delay = fam;
    Rng out_rng(seed);
    std::vector<detail::RawEvent> events;
    for (int j = 0; j < 10; ++j) {
        const std::string id = "c" + std::to_string(j);
        double w = j == 0 ? w_before : (j < 5 ? 0.01 : 0.0);
        truth.true_w[id] = w;
        truth.causal[id] = w > 0.0 || (j == 0 && w_after > 0.0);
        if (j == 0) {
            truth.true_w_after[id] = w_after;
            detail::spawn_outputs(
                out_rng, events, id, trace.inputs[j].times,
                [&](double t) { return t < mid ? w_before : w_after; }, fam, 0.0, T);
        } else if (w > 0.0) {
            detail::spawn_outputs(out_rng, events, id, trace.inputs[j].times,
                                  [w](double) { return w; }, fam, 0.0, T);
        }
    }
    const double leak_w = 100.0 * hours;
    const int noise = out_rng.poisson(leak_w);
    for (int c = 0; c < noise; ++c) events.push_back({out_rng.uniform(0.0, T), {kLeakId, 0}});
    detail::finalize_outputs(events, trace, truth);
    ChangepointSpec spec{"c0", mid, T};
    return {std::move(trace), std::move(truth), spec};
}

namespace detail {

// log P(Bin(n, q) >= k), returned as a plain probability.
inline double binomial_sf_geq(int k, int n, double q) {
    if (k <= 0) return 1.0;
    if (k > n) return 0.0;
    if (q <= 0.0) return 0.0;
    if (q >= 1.0) return 1.0;
    const double lq = std::log(q), l1q = std::log1p(-q);
    double p = 0.0;
    for (int i = k; i <= n; ++i) {
        const double lp = std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0) +
                          i * lq + (n - i) * l1q;
        p += std::exp(lp);
    }
    return std::min(1.0, p);
}

}  // namespace detail

// "Standard co-occurrence" baseline: one-sided binomial tail p-value for the
// count of outputs within W after an input of channel j, against outputs
// being uniform over the window. Overlapping windows are merged before
// computing the null success probability.
inline double baseline_binomial(const EventTrace& trace, double window_w,
                                const std::string& channel) {
    if (window_w <= 0.0) throw InvalidArgument("baseline_binomial: window must be positive");
    const int j = trace.channel_index(channel);
    if (j < 0) throw InvalidArgument("baseline_binomial: unknown channel " + channel);
    // merged coverage intervals [i, i+W] clipped to the window
    std::vector<std::pair<double, double>> iv;
    for (double t : trace.inputs[j].times) {
        const double lo = std::max(t, trace.t_start);
        const double hi = std::min(t + window_w, trace.t_end);
        if (hi <= lo) continue;
        if (!iv.empty() && lo <= iv.back().second)
            iv.back().second = std::max(iv.back().second, hi);
        else
            iv.emplace_back(lo, hi);
    }
    double covered = 0.0;
    int k = 0;
    size_t next = 0;
    for (const auto& [lo, hi] : iv) covered += hi - lo;
    for (double o : trace.outputs) {
        while (next < iv.size() && iv[next].second < o) ++next;
        if (next < iv.size() && o >= iv[next].first && o <= iv[next].second) ++k;
    }
    const double q = covered / trace.duration();
    return detail::binomial_sf_geq(k, static_cast<int>(trace.outputs.size()), q);
}

// Unique-vicinity baseline: true iff some output has exactly one input event
// (across all channels) within W before it, and that input is channel j's.
inline bool baseline_unique_vicinity(const EventTrace& trace, double window_w,
                                     const std::string& channel) {
    if (window_w <= 0.0)
        throw InvalidArgument("baseline_unique_vicinity: window must be positive");
    const int target = trace.channel_index(channel);
    if (target < 0) throw InvalidArgument("baseline_unique_vicinity: unknown channel " + channel);
    for (double o : trace.outputs) {
        int count = 0;
        int owner = -1;
        for (size_t j = 0; j < trace.inputs.size() && count < 2; ++j) {
            const auto& ts = trace.inputs[j].times;
            const auto lo = std::lower_bound(ts.begin(), ts.end(), o - window_w);
            const auto hi = std::upper_bound(ts.begin(), ts.end(), o);
            count += static_cast<int>(hi - lo);
            if (hi != lo) owner = static_cast<int>(j);
        }
        if (count == 1 && owner == target) return true;
    }
    return false;
}

namespace detail {

struct BinnedLogProbs {
    double log_p_nor;
    double log_p_ctnor;
};

// Shared binned evaluation: NOR per-bin success probabilities
// p = w f(delta) * bin_width, versus the exact per-bin Poisson occupancy of
// CT-NOR with pi = w * (F(right - i) - F(left - i)).
inline BinnedLogProbs binned_log_probs(const CtnorModel& model, const EventTrace& trace,
                                       double delta) {
    if (delta <= 0.0) throw InvalidArgument("bin width must be positive");
    const double T = trace.duration();
    const auto nbins = static_cast<size_t>(std::ceil(T / delta));
    auto bin_of = [&](double t) {
        auto b = static_cast<size_t>((t - trace.t_start) / delta);
        return std::min(b, nbins - 1);
    };

    std::vector<char> occupied(nbins, 0);
    for (double o : trace.outputs) {
        auto b = bin_of(o);
        if (occupied[b]) throw BinTooCoarse("bin holds more than one output event");
        occupied[b] = 1;
    }
    for (const auto& ch : trace.inputs) {
        size_t prev = nbins;
        for (double t : ch.times) {
            auto b = bin_of(t);
            if (b == prev) throw BinTooCoarse("bin holds more than one input event of a channel");
            prev = b;
        }
    }

    std::vector<double> log_empty(nbins, 0.0);
    std::vector<double> pi(nbins, 0.0);
    if (model.leak_weight > 0.0) {
        const double p_leak = model.leak_weight * delta / T;
        if (p_leak >= 1.0) throw BinTooCoarse("leak bin probability reached 1");
        const double le = std::log1p(-p_leak);
        for (size_t b = 0; b < nbins; ++b) {
            const double left = b * delta;
            const double right = std::min(left + delta, T);
            log_empty[b] += le;
            pi[b] += model.leak_weight * (right - left) / T;
        }
    }
    for (const auto& ch : trace.inputs) {
        const double w = model.weight_of(ch.id);
        if (w <= 0.0) continue;
        const DelayFamily& fam = model.delay_for(trace, ch.id);
        const double horizon = fam.horizon(1e-9);
        for (double t : ch.times) {
            const double irel = t - trace.t_start;
            const size_t s = bin_of(t);
            const size_t last = std::min(nbins - 1, static_cast<size_t>((irel + horizon) / delta));
            for (size_t b = s; b <= last; ++b) {
                const double left = b * delta;
                const double right = std::min(left + delta, T);
                // midpoint of the bin's achievable (nonnegative) delays
                const double mid = 0.5 * (std::max(left, irel) + right);
                const double p = w * fam.density(mid - irel) * delta;
                if (p >= 1.0) throw BinTooCoarse("bin success probability reached 1");
                if (p > 0.0) log_empty[b] += std::log1p(-p);
                pi[b] += w * (fam.cdf(right - irel) - fam.cdf(left - irel));
            }
        }
    }

    BinnedLogProbs out{0.0, 0.0};
    for (size_t b = 0; b < nbins; ++b) {
        if (occupied[b]) {
            out.log_p_nor += log_empty[b] < 0.0
                                 ? std::log(-std::expm1(log_empty[b]))
                                 : -std::numeric_limits<double>::infinity();
            out.log_p_ctnor += pi[b] > 0.0 ? std::log(-std::expm1(-pi[b]))
                                           : -std::numeric_limits<double>::infinity();
        } else {
            out.log_p_nor += log_empty[b];
            out.log_p_ctnor += -pi[b];
        }
    }
    return out;
}

}  // namespace detail

// NOR log-probability of the observed output occupancy pattern when the
// window is binned at width delta.
inline double nor_binned_log_likelihood(const CtnorModel& model, const EventTrace& trace,
                                        double delta) {
    return detail::binned_log_probs(model, trace, delta).log_p_nor;
}

// CT-NOR log-probability of the same binned occupancy pattern; the NOR and
// CT-NOR binned probabilities converge to each other as delta -> 0.
inline double ctnor_binned_log_likelihood(const CtnorModel& model, const EventTrace& trace,
                                          double delta) {
    return detail::binned_log_probs(model, trace, delta).log_p_ctnor;
}

}  // namespace ctnor
