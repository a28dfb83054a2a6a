#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "ctnor/errors.hpp"

namespace ctnor {

inline const std::string kDefaultGroup = "default";
inline const std::string kAutoChannel = "__auto__";

struct Channel {
    std::string id;
    std::vector<double> times;  // nondecreasing
    // Autocorrelation pseudo-channel: its events are the output events and an
    // output may only be explained by strictly earlier ones.
    bool autocorr = false;
};

// One output channel plus J input channels of sorted timestamps over a
// window [t_start, t_end]. Immutable after construction by convention.
struct EventTrace {
    std::vector<Channel> inputs;
    std::vector<double> outputs;
    double t_start = 0.0;
    double t_end = 0.0;
    std::string output_id = "out";
    std::map<std::string, std::string> channel_groups;  // optional; default group otherwise

    double duration() const { return t_end - t_start; }

    const std::string& group_of(const std::string& channel_id) const {
        auto it = channel_groups.find(channel_id);
        return it == channel_groups.end() ? kDefaultGroup : it->second;
    }

    int channel_index(const std::string& channel_id) const {
        for (size_t j = 0; j < inputs.size(); ++j)
            if (inputs[j].id == channel_id) return static_cast<int>(j);
        return -1;
    }

    // Derive the window from data extremes when unset.
    void infer_window() {
        double lo = outputs.empty() ? 0.0 : outputs.front();
        double hi = outputs.empty() ? 0.0 : outputs.back();
        bool any = !outputs.empty();
        for (const auto& ch : inputs) {
            if (ch.times.empty()) continue;
            if (!any) {
                lo = ch.times.front();
                hi = ch.times.back();
                any = true;
            } else {
                lo = std::min(lo, ch.times.front());
                hi = std::max(hi, ch.times.back());
            }
        }
        t_start = lo;
        t_end = hi > lo ? hi : lo + 1.0;
    }

    void validate() const {
        if (!(t_end > t_start)) throw InvalidArgument("trace window must be nonempty");
        auto check = [&](const std::vector<double>& ts, const std::string& name) {
            for (size_t i = 0; i < ts.size(); ++i) {
                if (ts[i] < t_start || ts[i] > t_end)
                    throw InvalidArgument(name + ": timestamp outside window");
                if (i > 0 && ts[i] < ts[i - 1])
                    throw InvalidArgument(name + ": timestamps not sorted");
            }
        };
        check(outputs, "output channel");
        for (const auto& ch : inputs) check(ch.times, "channel " + ch.id);
    }
};

// Returns a copy of the trace augmented with a synthetic input channel whose
// events are the output events themselves (its own delay group).
inline EventTrace with_autocorrelation(const EventTrace& trace) {
    EventTrace out = trace;
    if (out.channel_index(kAutoChannel) >= 0) return out;
    Channel ac;
    ac.id = kAutoChannel;
    ac.times = trace.outputs;
    ac.autocorr = true;
    out.inputs.push_back(std::move(ac));
    out.channel_groups[kAutoChannel] = kAutoChannel;
    return out;
}

}  // namespace ctnor
