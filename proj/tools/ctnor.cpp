// Command-line surface for the CT-NOR library: trace generation, model
// fitting, dependency discovery and changepoint testing. Every command is
// deterministic given its configuration and seed.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ctnor/em.hpp"
#include "ctnor/eval.hpp"
#include "ctnor/io.hpp"
#include "ctnor/stat_tests.hpp"
#include "ctnor/synth.hpp"

namespace {

struct FitOptions {
    std::string trace_path;
    std::string out_dir = ".";
    double horizon = 0.0;
    int max_iters = 200;
    double rel_tol = 1e-6;
    std::uint64_t seed = 0;
    bool random_init = false;
    bool autocorrelation = false;
    std::string delay_family = "uniform_exponential";
    double mixture_weight = 0.5;
    double uniform_lo = 0.0;
    double uniform_hi = 1.0;
    double exp_rate = 0.0;  // 0 = scale-aware default
    double gauss_mean = 1.0;
    double gauss_std = 1.0;
    std::vector<std::string> group_assignments;  // channel=group
};

void add_fit_options(CLI::App* cmd, FitOptions& o) {
    cmd->add_option("--trace", o.trace_path, "trace file")->required();
    cmd->add_option("--out-dir", o.out_dir, "output directory");
    cmd->add_option("--horizon", o.horizon, "candidate-cause horizon in seconds (0 = auto)");
    cmd->add_option("--max-iters", o.max_iters, "EM iteration cap");
    cmd->add_option("--rel-tol", o.rel_tol, "relative log-likelihood convergence threshold");
    cmd->add_option("--seed", o.seed, "seed for randomized initialization");
    cmd->add_flag("--random-init", o.random_init, "randomized weight initialization");
    cmd->add_flag("--autocorrelation", o.autocorrelation,
                  "add the output-history pseudo-channel");
    cmd->add_option("--delay-family", o.delay_family,
                    "uniform_exponential | uniform_trunc_gaussian")
        ->check(CLI::IsMember({"uniform_exponential", "uniform_trunc_gaussian"}));
    cmd->add_option("--mixture-weight", o.mixture_weight, "initial uniform-component weight");
    cmd->add_option("--uniform-lo", o.uniform_lo, "uniform component window start");
    cmd->add_option("--uniform-hi", o.uniform_hi, "uniform component window end");
    cmd->add_option("--exp-rate", o.exp_rate, "initial exponential rate (0 = from data)");
    cmd->add_option("--gauss-mean", o.gauss_mean, "initial Gaussian mean");
    cmd->add_option("--gauss-std", o.gauss_std, "initial Gaussian std");
    cmd->add_option("--group", o.group_assignments, "channel=group delay grouping")
        ->expected(-1);
}

ctnor::EventTrace load_trace(const FitOptions& o) {
    ctnor::EventTrace trace = ctnor::read_trace(o.trace_path);
    for (const auto& a : o.group_assignments) {
        const auto eq = a.find('=');
        if (eq == std::string::npos)
            throw ctnor::InvalidArgument("--group expects channel=group, got " + a);
        trace.channel_groups[a.substr(0, eq)] = a.substr(eq + 1);
    }
    if (o.autocorrelation) trace = ctnor::with_autocorrelation(trace);
    return trace;
}

ctnor::FitConfig make_config(const FitOptions& o, const ctnor::EventTrace& trace) {
    ctnor::FitConfig cfg;
    cfg.max_iters = o.max_iters;
    cfg.rel_tol = o.rel_tol;
    cfg.horizon = o.horizon;
    cfg.seed = o.seed;
    cfg.init = o.random_init ? ctnor::FitConfig::Init::RandomSeeded
                             : ctnor::FitConfig::Init::UniformWeights;
    if (o.exp_rate > 0.0 || o.delay_family == "uniform_trunc_gaussian") {
        ctnor::DelayFamily fam =
            o.delay_family == "uniform_trunc_gaussian"
                ? ctnor::DelayFamily::uniform_trunc_gaussian(o.mixture_weight, o.uniform_lo,
                                                             o.uniform_hi, o.gauss_mean,
                                                             o.gauss_std)
                : ctnor::DelayFamily::uniform_exponential(o.mixture_weight, o.uniform_lo,
                                                          o.uniform_hi, o.exp_rate);
        std::map<std::string, bool> seen;
        for (const auto& ch : trace.inputs) {
            const std::string& g = trace.group_of(ch.id);
            if (!seen[g]) {
                cfg.init_delay[g] = fam;
                seen[g] = true;
            }
        }
    }
    return cfg;
}

std::string join_path(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

void ensure_dir(const std::string& dir) { std::filesystem::create_directories(dir); }

void write_qq(const std::string& path, std::vector<double> pvalues) {
    std::sort(pvalues.begin(), pvalues.end());
    auto out = ctnor::detail::open_out(path);
    out << "rank,uniform_quantile,p_value\n";
    const double n = static_cast<double>(pvalues.size());
    for (size_t i = 0; i < pvalues.size(); ++i)
        out << i + 1 << "," << ctnor::fmt12((i + 0.5) / n) << "," << ctnor::fmt12(pvalues[i])
            << "\n";
}

const char* method_name(ctnor::TestMethod m) {
    switch (m) {
        case ctnor::TestMethod::ExactRefit:
            return "exact_refit";
        case ctnor::TestMethod::FastBound:
            return "fast_bound";
        case ctnor::TestMethod::SingleMStep:
            return "single_m_step";
    }
    return "?";
}

int cmd_fit(const FitOptions& o) {
    const ctnor::EventTrace trace = load_trace(o);
    const ctnor::FitConfig cfg = make_config(o, trace);
    const ctnor::FitReport report = ctnor::fit(trace, cfg);
    ensure_dir(o.out_dir);
    ctnor::write_model(join_path(o.out_dir, "model.txt"), report.model, trace.channel_groups);
    {
        auto out = ctnor::detail::open_out(join_path(o.out_dir, "trajectory.csv"));
        out << "iteration,log_likelihood\n";
        for (size_t i = 0; i < report.trajectory.size(); ++i)
            out << i << "," << ctnor::fmt12(report.trajectory[i]) << "\n";
    }
    {
        auto out = ctnor::detail::open_out(join_path(o.out_dir, "weights.csv"));
        out << "channel_id,n_events,w_hat\n";
        for (const auto& ch : trace.inputs)
            out << ch.id << "," << ch.times.size() << ","
                << ctnor::fmt12(report.model.weight_of(ch.id)) << "\n";
        out << ctnor::kLeakId << ",1," << ctnor::fmt12(report.model.leak_weight) << "\n";
    }
    std::cout << "fit: " << report.iterations << " iterations, log-likelihood "
              << ctnor::fmt12(report.final_log_likelihood())
              << (report.converged ? "" : " (not converged)") << "\n";
    return 0;
}

int cmd_discover(const FitOptions& o, const std::string& truth_path, bool fast_bound) {
    const ctnor::EventTrace trace = load_trace(o);
    const ctnor::FitConfig cfg = make_config(o, trace);
    const ctnor::DependencyBatch batch = ctnor::run_dependency_tests(trace, cfg, fast_bound);
    ensure_dir(o.out_dir);
    {
        auto out = ctnor::detail::open_out(join_path(o.out_dir, "tests.csv"));
        out << "channel_id,statistic,p_value,method,w_hat";
        if (fast_bound) out << ",fast_statistic,fast_p_value";
        out << "\n";
        for (size_t j = 0; j < batch.results.size(); ++j) {
            const auto& r = batch.results[j];
            out << r.channel << "," << ctnor::fmt12(r.statistic) << "," << ctnor::fmt12(r.p_value)
                << "," << method_name(r.method) << "," << ctnor::fmt12(r.w_hat);
            if (fast_bound)
                out << "," << ctnor::fmt12(batch.fast_stats[j]) << ","
                    << ctnor::fmt12(batch.fast_pvalues[j]);
            out << "\n";
        }
    }
    {
        std::vector<double> ps;
        for (const auto& r : batch.results) ps.push_back(r.p_value);
        write_qq(join_path(o.out_dir, "qq.csv"), ps);
    }
    if (!truth_path.empty()) {
        const auto causes = ctnor::read_truth_causes(truth_path);
        const auto flags = ctnor::causal_flags_from_truth(trace, causes);
        std::vector<double> scores;
        std::vector<bool> labels;
        for (const auto& r : batch.results) {
            scores.push_back(1.0 - r.p_value);
            labels.push_back(flags.at(r.channel));
        }
        auto out = ctnor::detail::open_out(join_path(o.out_dir, "roc.csv"));
        out << "fpr,tpr,score_threshold\n";
        for (const auto& p : ctnor::roc_points(scores, labels))
            out << ctnor::fmt12(p.fpr) << "," << ctnor::fmt12(p.tpr) << ","
                << ctnor::fmt12(p.threshold) << "\n";
    }
    std::cout << "discover: " << batch.results.size() << " channels, omega0 "
              << ctnor::fmt12(batch.omega0) << "\n";
    return 0;
}

int cmd_changepoint(const FitOptions& o, const std::string& interval,
                    std::vector<std::string> channels, bool full_refit) {
    const ctnor::EventTrace trace = load_trace(o);
    const ctnor::FitConfig cfg = make_config(o, trace);
    const auto colon = interval.find(':');
    if (colon == std::string::npos)
        throw ctnor::InvalidArgument("--interval expects start:end seconds");
    ctnor::ChangepointSpec spec;
    spec.s_lo = std::stod(interval.substr(0, colon));
    spec.s_hi = std::stod(interval.substr(colon + 1));
    if (channels.empty())
        for (const auto& ch : trace.inputs)
            if (!ch.autocorr) channels.push_back(ch.id);
    ensure_dir(o.out_dir);
    auto out = ctnor::detail::open_out(join_path(o.out_dir, "changepoint.csv"));
    out << "channel_id,statistic,p_value,null_kind,method,w_hat,error\n";
    for (const auto& id : channels) {
        spec.channel = id;
        try {
            const ctnor::TestResult r = ctnor::changepoint_test(trace, cfg, spec, full_refit);
            out << id << "," << ctnor::fmt12(r.statistic) << "," << ctnor::fmt12(r.p_value) << ","
                << (r.null_kind == ctnor::NullKind::ChiSq1 ? "chi_sq_1" : "chi_bar") << ","
                << method_name(r.method) << "," << ctnor::fmt12(r.w_hat) << ",\n";
        } catch (const ctnor::EmptySegment& e) {
            out << id << ",,,,,," << "EmptySegment\n";
            std::cerr << "changepoint " << id << ": " << e.what() << " (continuing)\n";
        }
    }
    return 0;
}

struct SynthOptions {
    std::string scenario = "51";
    int hours = 2;
    std::uint64_t seed = 0;
    double w_before = 0.01;
    double w_after = 0.05;
    bool exp_param_is_mean = false;
    std::string out_dir = ".";
};

int cmd_synth(const SynthOptions& o) {
    ctnor::EventTrace trace;
    ctnor::ScenarioTruth truth;
    std::string spec_line;
    if (o.scenario == "51") {
        std::tie(trace, truth) = ctnor::scenario_51(o.hours, o.seed, o.exp_param_is_mean);
    } else if (o.scenario == "changepoint") {
        ctnor::ChangepointSpec spec;
        std::tie(trace, truth, spec) = ctnor::scenario_changepoint(
            o.w_before, o.w_after, o.hours, o.seed, o.exp_param_is_mean);
        spec_line = "changepoint_channel=" + spec.channel + "\ninterval_s=" +
                    ctnor::fmt17(spec.s_lo) + ":" + ctnor::fmt17(spec.s_hi) + "\n";
    } else {
        throw ctnor::InvalidArgument("unknown scenario " + o.scenario);
    }
    ensure_dir(o.out_dir);
    trace.output_id = "out";
    ctnor::write_trace(join_path(o.out_dir, "trace.csv"), trace);
    ctnor::write_truth(join_path(o.out_dir, "truth.csv"), truth);
    auto out = ctnor::detail::open_out(join_path(o.out_dir, "manifest.txt"));
    out << "scenario=" << o.scenario << "\n";
    out << "hours=" << o.hours << "\n";
    out << "seed=" << o.seed << "\n";
    out << "exp_param_is_mean=" << (o.exp_param_is_mean ? 1 : 0) << "\n";
    if (o.scenario == "changepoint") {
        out << "w_before=" << ctnor::fmt17(o.w_before) << "\n";
        out << "w_after=" << ctnor::fmt17(o.w_after) << "\n";
        out << spec_line;
    }
    std::cout << "synth: " << trace.outputs.size() << " output events\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"CT-NOR: continuous-time noisy-or dependency discovery"};
    app.set_config("--config", "", "configuration file; command-line flags win");
    app.require_subcommand(1);

    FitOptions fit_o;
    auto* fit_cmd = app.add_subcommand("fit", "fit model parameters from a trace");
    add_fit_options(fit_cmd, fit_o);

    FitOptions disc_o;
    std::string truth_path;
    bool fast_bound = false;
    auto* disc_cmd = app.add_subcommand("discover", "likelihood-ratio dependency tests");
    add_fit_options(disc_cmd, disc_o);
    disc_cmd->add_option("--truth", truth_path, "truth file for ROC output");
    disc_cmd->add_flag("--fast-bound", fast_bound, "also emit the approximate statistics");

    FitOptions cp_o;
    std::string interval;
    std::vector<std::string> cp_channels;
    bool full_refit = false;
    auto* cp_cmd = app.add_subcommand("changepoint", "two-period changepoint tests");
    add_fit_options(cp_cmd, cp_o);
    cp_cmd->add_option("--interval", interval, "interval S as start:end seconds")->required();
    cp_cmd->add_option("--channel", cp_channels, "channels to test (default: all)")->expected(-1);
    cp_cmd->add_flag("--full-refit", full_refit,
                     "fit the alternative by full EM instead of a single M step");

    SynthOptions synth_o;
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic trace with ground truth");
    synth_cmd->add_option("--scenario", synth_o.scenario, "51 | changepoint")
        ->check(CLI::IsMember({"51", "changepoint"}));
    synth_cmd->add_option("--hours", synth_o.hours, "trace length in hours");
    synth_cmd->add_option("--seed", synth_o.seed, "generator seed");
    synth_cmd->add_option("--w-before", synth_o.w_before, "changepoint weight before S");
    synth_cmd->add_option("--w-after", synth_o.w_after, "changepoint weight inside S");
    synth_cmd->add_flag("--exp-param-is-mean", synth_o.exp_param_is_mean,
                        "treat the exponential parameter as a mean instead of a rate");
    synth_cmd->add_option("--out-dir", synth_o.out_dir, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (fit_cmd->parsed()) return cmd_fit(fit_o);
        if (disc_cmd->parsed()) return cmd_discover(disc_o, truth_path, fast_bound);
        if (cp_cmd->parsed()) return cmd_changepoint(cp_o, interval, cp_channels, full_refit);
        if (synth_cmd->parsed()) return cmd_synth(synth_o);
    } catch (const ctnor::NoExplanation& e) {
        std::cerr << "error: " << e.what()
                  << "\nhint: enable the leak (it absorbs unexplained outputs)\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
