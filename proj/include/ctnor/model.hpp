#pragma once

#include <map>
#include <string>

#include "ctnor/delay.hpp"
#include "ctnor/trace.hpp"

namespace ctnor {

// CT-NOR parameters: per-channel weights w^(j) (expected outputs caused per
// input event), the leak weight (a pseudo-channel with a single event at the
// window start and uniform delay over the whole window), and per-group delay
// families.
struct CtnorModel {
    std::map<std::string, double> weights;          // channel_id -> w >= 0
    double leak_weight = 0.0;                       // n^(leak) = 1
    std::map<std::string, DelayFamily> delays;      // group_id -> f_theta

    double weight_of(const std::string& channel_id) const {
        auto it = weights.find(channel_id);
        return it == weights.end() ? 0.0 : it->second;
    }

    const DelayFamily& delay_for(const EventTrace& trace, const std::string& channel_id) const {
        const std::string& g = trace.group_of(channel_id);
        auto it = delays.find(g);
        if (it == delays.end()) throw InvalidArgument("no delay family for group " + g);
        return it->second;
    }

    // Total Poisson mass lambda = sum_j n^(j) w^(j), leak included.
    double lambda(const EventTrace& trace) const {
        double lam = leak_weight;
        for (const auto& ch : trace.inputs)
            lam += weight_of(ch.id) * static_cast<double>(ch.times.size());
        return lam;
    }

    void validate() const {
        for (const auto& [id, w] : weights)
            if (w < 0.0) throw InvalidArgument("negative weight for channel " + id);
        if (leak_weight < 0.0) throw InvalidArgument("negative leak weight");
        for (const auto& [g, fam] : delays) fam.validate();
    }
};

}  // namespace ctnor
