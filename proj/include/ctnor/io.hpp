#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ctnor/errors.hpp"
#include "ctnor/model.hpp"
#include "ctnor/synth.hpp"
#include "ctnor/trace.hpp"

namespace ctnor {

// Shortest representation that round-trips a double exactly.
inline std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// Fixed 12-significant-digit form used for diff-stable tables.
inline std::string fmt12(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

namespace detail {

inline std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InvalidArgument("cannot open for writing: " + path);
    return out;
}

inline std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open for reading: " + path);
    return in;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Trace file: one `channel_id,timestamp_seconds` per line, with a header
// line designating the output channel and an optional window line.
// ---------------------------------------------------------------------------

inline void write_trace(const std::string& path, const EventTrace& trace) {
    auto out = detail::open_out(path);
    out << "#ctnor-trace\n";
    out << "#output " << trace.output_id << "\n";
    out << "#window " << fmt17(trace.t_start) << " " << fmt17(trace.t_end) << "\n";
    // merge all channels in time order for a natural event log
    struct Row {
        double t;
        const std::string* id;
    };
    std::vector<Row> rows;
    for (const auto& ch : trace.inputs)
        for (double t : ch.times) rows.push_back({t, &ch.id});
    for (double t : trace.outputs) rows.push_back({t, &trace.output_id});
    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.t < b.t; });
    for (const auto& r : rows) out << *r.id << "," << fmt17(r.t) << "\n";
}

inline EventTrace read_trace(const std::string& path) {
    auto in = detail::open_in(path);
    EventTrace trace;
    trace.output_id.clear();
    bool have_window = false;
    std::map<std::string, std::vector<double>> by_channel;
    std::vector<std::string> order;
    std::string line;
    int line_no = 0;
    bool any_event = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream ss(line.substr(1));
            std::string key;
            ss >> key;
            if (key == "output") {
                if (!(ss >> trace.output_id))
                    throw ParseError("malformed #output header", line_no);
            } else if (key == "window") {
                if (!(ss >> trace.t_start >> trace.t_end) || !(trace.t_end > trace.t_start))
                    throw ParseError("malformed #window header", line_no);
                have_window = true;
            }
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos || comma == 0)
            throw ParseError("expected channel_id,timestamp", line_no);
        const std::string id = line.substr(0, comma);
        double t;
        try {
            size_t used = 0;
            t = std::stod(line.substr(comma + 1), &used);
            if (used == 0) throw std::invalid_argument("empty");
        } catch (const std::exception&) {
            throw ParseError("bad timestamp for channel " + id, line_no);
        }
        auto [it, fresh] = by_channel.try_emplace(id);
        if (fresh) order.push_back(id);
        it->second.push_back(t);
        any_event = true;
    }
    if (trace.output_id.empty())
        throw ParseError("missing #output header designating the output channel", line_no);
    if (!any_event) throw ParseError("trace file contains no events", line_no);
    for (const auto& id : order) {
        auto& ts = by_channel[id];
        std::sort(ts.begin(), ts.end());
        if (id == trace.output_id)
            trace.outputs = std::move(ts);
        else
            trace.inputs.push_back({id, std::move(ts), false});
    }
    if (!have_window) trace.infer_window();
    trace.validate();
    return trace;
}

// ---------------------------------------------------------------------------
// Model file: key-value text, exact round trip.
// ---------------------------------------------------------------------------

struct ModelFile {
    CtnorModel model;
    std::map<std::string, std::string> channel_groups;
};

inline void write_model(const std::string& path, const CtnorModel& model,
                        const std::map<std::string, std::string>& channel_groups = {}) {
    auto out = detail::open_out(path);
    out << "#ctnor-model\n";
    out << "leak " << fmt17(model.leak_weight) << "\n";
    for (const auto& [id, w] : model.weights) {
        auto git = channel_groups.find(id);
        const std::string& g = git == channel_groups.end() ? kDefaultGroup : git->second;
        out << "channel " << id << " " << g << " " << fmt17(w) << "\n";
    }
    for (const auto& [g, fam] : model.delays) {
        out << "delay " << g << " " << fam.kind_name() << " " << fmt17(fam.mixture_weight) << " "
            << fmt17(fam.uniform_lo) << " " << fmt17(fam.uniform_hi);
        if (fam.kind == DelayKind::UniformExponential)
            out << " " << fmt17(fam.exp_rate);
        else if (fam.kind == DelayKind::UniformTruncatedGaussian)
            out << " " << fmt17(fam.gauss_mean) << " " << fmt17(fam.gauss_std);
        out << "\n";
    }
}

inline ModelFile read_model(const std::string& path) {
    auto in = detail::open_in(path);
    ModelFile mf;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        std::string key;
        ss >> key;
        if (key == "leak") {
            if (!(ss >> mf.model.leak_weight)) throw ParseError("bad leak line", line_no);
        } else if (key == "channel") {
            std::string id, group;
            double w;
            if (!(ss >> id >> group >> w)) throw ParseError("bad channel line", line_no);
            mf.model.weights[id] = w;
            mf.channel_groups[id] = group;
        } else if (key == "delay") {
            std::string group, kind;
            DelayFamily fam;
            if (!(ss >> group >> kind >> fam.mixture_weight >> fam.uniform_lo >> fam.uniform_hi))
                throw ParseError("bad delay line", line_no);
            if (kind == "pure_uniform") {
                fam.kind = DelayKind::PureUniform;
            } else if (kind == "uniform_exponential") {
                fam.kind = DelayKind::UniformExponential;
                if (!(ss >> fam.exp_rate)) throw ParseError("bad delay line", line_no);
            } else if (kind == "uniform_trunc_gaussian") {
                fam.kind = DelayKind::UniformTruncatedGaussian;
                if (!(ss >> fam.gauss_mean >> fam.gauss_std))
                    throw ParseError("bad delay line", line_no);
            } else {
                throw ParseError("unknown delay family " + kind, line_no);
            }
            mf.model.delays[group] = fam;
        } else {
            throw ParseError("unknown key " + key, line_no);
        }
    }
    mf.model.validate();
    return mf;
}

// ---------------------------------------------------------------------------
// Truth file: `output_index,cause_channel,cause_input_index`.
// ---------------------------------------------------------------------------

inline void write_truth(const std::string& path, const ScenarioTruth& truth) {
    auto out = detail::open_out(path);
    out << "output_index,cause_channel,cause_input_index\n";
    for (size_t l = 0; l < truth.causes.size(); ++l)
        out << l << "," << truth.causes[l].channel << "," << truth.causes[l].input << "\n";
}

inline std::vector<Cause> read_truth_causes(const std::string& path) {
    auto in = detail::open_in(path);
    std::vector<Cause> causes;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line_no == 1) continue;  // header
        const auto c1 = line.find(',');
        const auto c2 = line.find(',', c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos)
            throw ParseError("expected output_index,cause_channel,cause_input_index", line_no);
        Cause c;
        c.channel = line.substr(c1 + 1, c2 - c1 - 1);
        c.input = std::stoi(line.substr(c2 + 1));
        causes.push_back(std::move(c));
    }
    return causes;
}

// Channels that truly cause outputs, derived from recorded causes.
inline std::map<std::string, bool> causal_flags_from_truth(const EventTrace& trace,
                                                           const std::vector<Cause>& causes) {
    std::map<std::string, bool> flags;
    for (const auto& ch : trace.inputs) flags[ch.id] = false;
    for (const auto& c : causes)
        if (c.channel != kLeakId) flags[c.channel] = true;
    return flags;
}

}  // namespace ctnor
