#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ctnor/likelihood.hpp"
#include "ctnor/model.hpp"
#include "ctnor/rng.hpp"
#include "ctnor/trace.hpp"

namespace ctnor {

struct FitConfig {
    enum class Init { UniformWeights, RandomSeeded };

    int max_iters = 200;
    double rel_tol = 1e-6;   // relative log-likelihood improvement threshold
    double horizon = 0.0;    // seconds; <= 0 derives it from the delay families
    Init init = Init::UniformWeights;
    std::uint64_t seed = 0;  // used by RandomSeeded
    std::map<std::string, DelayFamily> init_delay;  // per group; defaults otherwise
    double std_floor = 1e-4;  // clamp for degenerate Gaussian delays
};

struct FitReport {
    CtnorModel model;
    std::vector<double> trajectory;  // log-likelihood per iteration, nondecreasing
    int iterations = 0;
    bool converged = false;
    double horizon_used = 0.0;  // candidate horizon the fit ran with
    std::vector<std::string> empty_channels;  // n^(j) = 0, pinned at w = 0

    double final_log_likelihood() const {
        return trajectory.empty() ? -std::numeric_limits<double>::infinity()
                                  : trajectory.back();
    }
};

namespace detail {

// Splits responsibility mass across mixture components and produces the
// closed-form parameter update. The truncated-Gaussian moments ignore the
// truncation correction (biased toward zero for means near the boundary);
// the std floor prevents density blow-up on degenerate delays.
struct ThetaAcc {
    double s_u = 0.0;     // uniform-component mass
    double s_c = 0.0;     // continuous-component mass
    double s_c_d = 0.0;   // component-weighted delay sum
    double s_c_d2 = 0.0;  // component-weighted squared-delay sum

    void add(const DelayFamily& fam, double delta, double z) {
        if (z <= 0.0 || delta < 0.0) return;
        const double u = (delta >= fam.uniform_lo && delta <= fam.uniform_hi)
                             ? fam.mixture_weight / (fam.uniform_hi - fam.uniform_lo)
                             : 0.0;
        double c = 0.0;
        if (fam.kind == DelayKind::UniformExponential)
            c = (1.0 - fam.mixture_weight) * fam.exp_rate * std::exp(-fam.exp_rate * delta);
        else if (fam.kind == DelayKind::UniformTruncatedGaussian)
            c = (1.0 - fam.mixture_weight) *
                normal_pdf((delta - fam.gauss_mean) / fam.gauss_std) /
                (fam.gauss_std * fam.gauss_norm());
        const double tot = u + c;
        if (tot <= 0.0) return;
        const double zu = z * u / tot;
        const double zc = z - zu;
        s_u += zu;
        s_c += zc;
        s_c_d += zc * delta;
        s_c_d2 += zc * delta * delta;
    }

    DelayFamily finish(const DelayFamily& fam, double std_floor) const {
        if (fam.kind == DelayKind::PureUniform) return fam;
        const double total = s_u + s_c;
        if (total <= 0.0) return fam;
        DelayFamily out = fam;
        out.mixture_weight = s_u / total;
        if (fam.kind == DelayKind::UniformExponential) {
            if (s_c > 0.0 && s_c_d > 0.0) out.exp_rate = s_c / s_c_d;  // moment match
        } else {
            if (s_c > 0.0) {
                const double mean = s_c_d / s_c;
                const double var = std::max(s_c_d2 / s_c - mean * mean, std_floor * std_floor);
                out.gauss_mean = mean;
                out.gauss_std = std::sqrt(var);
            }
        }
        return out;
    }
};

}  // namespace detail

// E-step: z = w^(j) f(o_l - i_k) normalized over the candidate causes of
// each output event.
inline Responsibilities e_step(const CtnorModel& model, const EventTrace& trace,
                               const CandidateSet& cands) {
    const auto im = detail::index_model(model, trace);
    Responsibilities r;
    r.cands = cands;
    r.z.resize(cands.per_output.size());
    for (size_t l = 0; l < cands.per_output.size(); ++l) {
        const auto& list = cands.per_output[l];
        const double denom = detail::output_intensity(model, trace, im, list);
        auto& row = r.z[l];
        row.resize(list.size());
        double sum = 0.0;
        for (size_t c = 0; c < list.size(); ++c) {
            row[c] = detail::candidate_term(model, trace, im.weights, im.families, list[c]) / denom;
            sum += row[c];
        }
        if (sum > 0.0 && std::abs(sum - 1.0) > 1e-13)
            for (auto& v : row) v /= sum;
    }
    return r;
}

inline Responsibilities e_step(const CtnorModel& model, const EventTrace& trace) {
    return e_step(model, trace, find_candidates(trace, default_horizon(model, trace)));
}

struct WeightUpdate {
    std::map<std::string, double> weights;
    double leak_weight = 0.0;
    std::vector<std::string> empty_channels;  // n^(j) = 0, assigned w = 0
};

// M-step for the weights: w^(j) = responsibility mass on channel j / n^(j).
inline WeightUpdate m_step_weights(const Responsibilities& resp, const EventTrace& trace) {
    WeightUpdate up;
    std::vector<double> mass(trace.inputs.size(), 0.0);
    double leak_mass = 0.0;
    for (size_t l = 0; l < resp.cands.per_output.size(); ++l) {
        const auto& list = resp.cands.per_output[l];
        for (size_t c = 0; c < list.size(); ++c) {
            if (list[c].channel == kLeakChannel)
                leak_mass += resp.z[l][c];
            else
                mass[list[c].channel] += resp.z[l][c];
        }
    }
    for (size_t j = 0; j < trace.inputs.size(); ++j) {
        const auto n_j = trace.inputs[j].times.size();
        if (n_j == 0) {
            up.weights[trace.inputs[j].id] = 0.0;
            up.empty_channels.push_back(trace.inputs[j].id);
        } else {
            up.weights[trace.inputs[j].id] = mass[j] / static_cast<double>(n_j);
        }
    }
    up.leak_weight = leak_mass;
    return up;
}

// M-step for a group's delay parameters via component responsibilities.
inline DelayFamily m_step_theta(const Responsibilities& resp, const EventTrace& trace,
                                const std::string& group, const DelayFamily& current,
                                double std_floor = 1e-4) {
    detail::ThetaAcc acc;
    std::vector<bool> in_group(trace.inputs.size());
    for (size_t j = 0; j < trace.inputs.size(); ++j)
        in_group[j] = trace.group_of(trace.inputs[j].id) == group;
    for (size_t l = 0; l < resp.cands.per_output.size(); ++l) {
        const auto& list = resp.cands.per_output[l];
        for (size_t c = 0; c < list.size(); ++c) {
            if (list[c].channel == kLeakChannel || !in_group[list[c].channel]) continue;
            acc.add(current, list[c].delta, resp.z[l][c]);
        }
    }
    return acc.finish(current, std_floor);
}

namespace detail {

// EM engine shared by fit, fit_restricted and the warm-started refits used
// by the hypothesis tests. When `warm` is given it provides the starting
// point; zero_channels are pinned at w = 0 every M-step.
inline FitReport run_em(const EventTrace& trace, const FitConfig& config,
                        const std::set<std::string>& zero_channels, const CtnorModel* warm,
                        int max_iters) {
    trace.validate();
    const size_t J = trace.inputs.size();
    const double T = trace.duration();
    const double n = static_cast<double>(trace.outputs.size());

    // group bookkeeping
    std::vector<std::string> group_ids;
    std::vector<int> group_of(J, 0);
    for (size_t j = 0; j < J; ++j) {
        const std::string& g = trace.group_of(trace.inputs[j].id);
        int gi = -1;
        for (size_t i = 0; i < group_ids.size(); ++i)
            if (group_ids[i] == g) gi = static_cast<int>(i);
        if (gi < 0) {
            gi = static_cast<int>(group_ids.size());
            group_ids.push_back(g);
        }
        group_of[j] = gi;
    }

    // initial delay families where known, needed before the horizon choice
    std::map<std::string, DelayFamily> fams0;
    if (warm) {
        fams0 = warm->delays;
    } else {
        for (const auto& g : group_ids) {
            auto it = config.init_delay.find(g);
            if (it != config.init_delay.end()) fams0[g] = it->second;
        }
    }

    double horizon = config.horizon;
    if (horizon <= 0.0) {
        double h = 0.0;
        bool all_known = true;
        for (const auto& g : group_ids) {
            auto it = fams0.find(g);
            if (it == fams0.end())
                all_known = false;
            else
                h = std::max(h, it->second.horizon(1e-6));
        }
        horizon = (all_known && h > 0.0) ? std::min(h, T) : T;
    }
    const CandidateSet cands = find_candidates(trace, horizon);

    // scale-aware defaults for groups with no configured family
    {
        std::vector<double> dsum(group_ids.size(), 0.0);
        std::vector<double> dcnt(group_ids.size(), 0.0);
        for (const auto& list : cands.per_output)
            for (const auto& c : list)
                if (c.channel != kLeakChannel) {
                    dsum[group_of[c.channel]] += c.delta;
                    dcnt[group_of[c.channel]] += 1.0;
                }
        for (size_t gi = 0; gi < group_ids.size(); ++gi) {
            if (fams0.count(group_ids[gi])) continue;
            const double mean_d = dcnt[gi] > 0.0 && dsum[gi] > 0.0 ? dsum[gi] / dcnt[gi] : 1.0;
            fams0[group_ids[gi]] =
                DelayFamily::uniform_exponential(0.5, 0.0, std::min(1.0, T), 1.0 / mean_d);
        }
    }
    std::vector<DelayFamily> fams(group_ids.size());
    for (size_t gi = 0; gi < group_ids.size(); ++gi) fams[gi] = fams0.at(group_ids[gi]);

    // initial weights
    std::vector<double> w(J, 0.0);
    double leak = 0.0;
    std::vector<std::string> empty_channels;
    std::vector<bool> pinned(J, false);
    for (size_t j = 0; j < J; ++j)
        if (zero_channels.count(trace.inputs[j].id)) pinned[j] = true;
    if (warm) {
        for (size_t j = 0; j < J; ++j)
            w[j] = pinned[j] ? 0.0 : warm->weight_of(trace.inputs[j].id);
        leak = warm->leak_weight;
        for (size_t j = 0; j < J; ++j)
            if (trace.inputs[j].times.empty()) {
                w[j] = 0.0;
                empty_channels.push_back(trace.inputs[j].id);
            }
    } else {
        size_t active = 0;
        for (size_t j = 0; j < J; ++j) {
            if (trace.inputs[j].times.empty()) empty_channels.push_back(trace.inputs[j].id);
            if (!trace.inputs[j].times.empty() && !pinned[j]) ++active;
        }
        const double k = static_cast<double>(active) + 1.0;  // leak included
        Rng rng(config.seed);
        for (size_t j = 0; j < J; ++j) {
            if (trace.inputs[j].times.empty() || pinned[j]) continue;
            w[j] = n / (k * static_cast<double>(trace.inputs[j].times.size()));
            if (config.init == FitConfig::Init::RandomSeeded) w[j] *= rng.uniform(0.5, 1.5);
        }
        leak = n / k;
        if (config.init == FitConfig::Init::RandomSeeded) leak *= rng.uniform(0.5, 1.5);
    }

    FitReport report;
    report.horizon_used = horizon;
    report.empty_channels = empty_channels;
    std::vector<double> n_j(J);
    for (size_t j = 0; j < J; ++j) n_j[j] = static_cast<double>(trace.inputs[j].times.size());

    std::vector<double> mass(J);
    std::vector<detail::ThetaAcc> accs(group_ids.size());
    double prev_ll = -std::numeric_limits<double>::infinity();

    for (int iter = 0; iter <= max_iters; ++iter) {
        // evaluate current parameters
        double lam = leak;
        for (size_t j = 0; j < J; ++j) lam += w[j] * n_j[j];
        double ll = -lam;
        bool done = false;

        // one pass: intensity + responsibilities + M-step accumulators
        std::fill(mass.begin(), mass.end(), 0.0);
        double leak_mass = 0.0;
        std::fill(accs.begin(), accs.end(), detail::ThetaAcc{});
        std::vector<double> terms;
        for (const auto& list : cands.per_output) {
            terms.resize(list.size());
            double denom = 0.0;
            for (size_t c = 0; c < list.size(); ++c) {
                const auto& cand = list[c];
                double t;
                if (cand.channel == kLeakChannel)
                    t = leak / T;
                else
                    t = w[cand.channel] * fams[group_of[cand.channel]].density(cand.delta);
                terms[c] = t;
                denom += t;
            }
            if (denom <= 0.0)
                throw NoExplanation("output event has zero total intensity (missing leak?)");
            ll += std::log(denom);
            for (size_t c = 0; c < list.size(); ++c) {
                const double z = terms[c] / denom;
                const auto& cand = list[c];
                if (cand.channel == kLeakChannel)
                    leak_mass += z;
                else {
                    mass[cand.channel] += z;
                    accs[group_of[cand.channel]].add(fams[group_of[cand.channel]], cand.delta, z);
                }
            }
        }

        report.trajectory.push_back(ll);
        if (iter > 0) {
            const double rel = (ll - prev_ll) / std::max(1.0, std::abs(prev_ll));
            if (rel < config.rel_tol) {
                report.converged = true;
                done = true;
            }
        }
        prev_ll = ll;
        if (done || iter == max_iters) break;

        // M-step
        for (size_t j = 0; j < J; ++j)
            w[j] = (n_j[j] > 0.0 && !pinned[j]) ? mass[j] / n_j[j] : 0.0;
        leak = leak_mass;
        for (size_t gi = 0; gi < group_ids.size(); ++gi)
            fams[gi] = accs[gi].finish(fams[gi], config.std_floor);
    }

    report.iterations = static_cast<int>(report.trajectory.size()) - 1;
    for (size_t j = 0; j < J; ++j) report.model.weights[trace.inputs[j].id] = w[j];
    report.model.leak_weight = leak;
    for (size_t gi = 0; gi < group_ids.size(); ++gi) report.model.delays[group_ids[gi]] = fams[gi];
    return report;
}

}  // namespace detail

// Maximum-likelihood fit via EM. The trajectory is nondecreasing.
inline FitReport fit(const EventTrace& trace, const FitConfig& config) {
    return detail::run_em(trace, config, {}, nullptr, config.max_iters);
}

// Identical EM but the listed channels' weights are pinned at 0.
inline FitReport fit_restricted(const EventTrace& trace, const FitConfig& config,
                                const std::set<std::string>& zero_channels) {
    return detail::run_em(trace, config, zero_channels, nullptr, config.max_iters);
}

// Warm-started EM (used by the likelihood-ratio tests).
inline FitReport fit_from(const EventTrace& trace, const FitConfig& config,
                          const CtnorModel& start, const std::set<std::string>& zero_channels,
                          int max_iters) {
    return detail::run_em(trace, config, zero_channels, &start, max_iters);
}

}  // namespace ctnor
