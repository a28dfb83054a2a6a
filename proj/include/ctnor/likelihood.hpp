#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "ctnor/errors.hpp"
#include "ctnor/model.hpp"
#include "ctnor/trace.hpp"

namespace ctnor {

// Channel index of the leak pseudo-event in candidate lists.
constexpr int kLeakChannel = -1;

struct Candidate {
    int channel;   // index into trace.inputs, or kLeakChannel
    int input;     // index into that channel's times (0 for the leak)
    double delta;  // o_l - i_k, always >= 0
};

// Sparse candidate causes per output event. The leak is always present, so
// every output has at least one candidate.
struct CandidateSet {
    double horizon = 0.0;
    std::vector<std::vector<Candidate>> per_output;
};

// All (j, k) with 0 <= o_l - i_k <= horizon, plus the leak unconditionally.
// Autocorrelation channels require strictly positive delay.
inline CandidateSet find_candidates(const EventTrace& trace, double horizon) {
    CandidateSet cs;
    cs.horizon = horizon;
    cs.per_output.resize(trace.outputs.size());
    for (size_t l = 0; l < trace.outputs.size(); ++l) {
        const double o = trace.outputs[l];
        auto& list = cs.per_output[l];
        list.push_back({kLeakChannel, 0, o - trace.t_start});
        for (size_t j = 0; j < trace.inputs.size(); ++j) {
            const auto& ts = trace.inputs[j].times;
            auto lo = std::lower_bound(ts.begin(), ts.end(), o - horizon);
            auto hi = std::upper_bound(ts.begin(), ts.end(), o);
            for (auto it = lo; it != hi; ++it) {
                const double delta = o - *it;
                if (trace.inputs[j].autocorr && delta <= 0.0) continue;
                list.push_back({static_cast<int>(j), static_cast<int>(it - ts.begin()), delta});
            }
        }
    }
    return cs;
}

// Per-output normalized attribution z over candidate causes, aligned with
// the candidate set. Rows sum to 1.
struct Responsibilities {
    CandidateSet cands;
    std::vector<std::vector<double>> z;
};

namespace detail {

// Weight * delay-density term for one candidate.
inline double candidate_term(const CtnorModel& model, const EventTrace& trace,
                             const std::vector<double>& weights_by_index,
                             const std::vector<const DelayFamily*>& family_by_index,
                             const Candidate& c) {
    if (c.channel == kLeakChannel) {
        const double d = c.delta;
        if (d < 0.0 || d > trace.duration()) return 0.0;
        return model.leak_weight / trace.duration();
    }
    return weights_by_index[c.channel] * family_by_index[c.channel]->density(c.delta);
}

struct IndexedModel {
    std::vector<double> weights;               // by channel index
    std::vector<const DelayFamily*> families;  // by channel index
};

inline IndexedModel index_model(const CtnorModel& model, const EventTrace& trace) {
    IndexedModel im;
    im.weights.reserve(trace.inputs.size());
    im.families.reserve(trace.inputs.size());
    for (const auto& ch : trace.inputs) {
        im.weights.push_back(model.weight_of(ch.id));
        im.families.push_back(&model.delay_for(trace, ch.id));
    }
    return im;
}

// Total intensity at output l; throws NoExplanation on zero. Falls back to a
// log-space evaluation if every term underflowed to zero in linear space.
inline double output_intensity(const CtnorModel& model, const EventTrace& trace,
                               const IndexedModel& im, const std::vector<Candidate>& list) {
    double sum = 0.0;
    for (const auto& c : list) sum += candidate_term(model, trace, im.weights, im.families, c);
    if (sum > 0.0) return sum;
    // log-sum-exp fallback for underflow
    double max_log = -std::numeric_limits<double>::infinity();
    std::vector<double> logs;
    logs.reserve(list.size());
    for (const auto& c : list) {
        double w, f;
        if (c.channel == kLeakChannel) {
            w = model.leak_weight;
            f = (c.delta >= 0.0 && c.delta <= trace.duration()) ? 1.0 / trace.duration() : 0.0;
        } else {
            w = im.weights[c.channel];
            f = im.families[c.channel]->density(c.delta);
        }
        if (w > 0.0 && f > 0.0) {
            const double lg = std::log(w) + std::log(f);
            logs.push_back(lg);
            max_log = std::max(max_log, lg);
        }
    }
    if (logs.empty())
        throw NoExplanation("output event has zero total intensity (missing leak?)");
    double acc = 0.0;
    for (double lg : logs) acc += std::exp(lg - max_log);
    return std::exp(max_log) * acc;  // may still underflow; caller logs it
}

}  // namespace detail

// Exact log-likelihood: -lambda + sum_l log sum_jk w^(j) f(o_l - i_k).
inline double log_likelihood(const CtnorModel& model, const EventTrace& trace,
                             const CandidateSet& cands) {
    const auto im = detail::index_model(model, trace);
    double ll = -model.lambda(trace);
    for (size_t l = 0; l < trace.outputs.size(); ++l)
        ll += std::log(detail::output_intensity(model, trace, im, cands.per_output[l]));
    return ll;
}

// Horizon derived from the model's delay families (1e-6 tail mass), capped
// at the window length.
inline double default_horizon(const CtnorModel& model, const EventTrace& trace,
                              double tail = 1e-6) {
    double h = 0.0;
    for (const auto& [g, fam] : model.delays) h = std::max(h, fam.horizon(tail));
    if (h <= 0.0 || h > trace.duration()) h = trace.duration();
    return h;
}

inline double log_likelihood(const CtnorModel& model, const EventTrace& trace) {
    return log_likelihood(model, trace, find_candidates(trace, default_horizon(model, trace)));
}

inline std::vector<Candidate> candidate_causes(const EventTrace& trace, const CtnorModel& model,
                                               size_t output_index) {
    auto cs = find_candidates(trace, default_horizon(model, trace));
    return cs.per_output.at(output_index);
}

}  // namespace ctnor
