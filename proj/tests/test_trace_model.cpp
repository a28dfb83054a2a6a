#include <cmath>

#include "ctnor/em.hpp"
#include "ctnor/likelihood.hpp"
#include "ctnor/model.hpp"
#include "ctnor/synth.hpp"
#include "ctnor/trace.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace ctnor;

namespace {

EventTrace single_channel_trace(std::vector<double> inputs, std::vector<double> outputs,
                                double t_end) {
    EventTrace t;
    t.t_start = 0.0;
    t.t_end = t_end;
    t.inputs.push_back({"a", std::move(inputs), false});
    t.outputs = std::move(outputs);
    return t;
}

}  // namespace

TEST_CASE("log-likelihood with no outputs is -lambda") {
    EventTrace t = single_channel_trace({1.0, 2.0}, {}, 100.0);
    CtnorModel m;
    m.weights["a"] = 0.75;
    m.leak_weight = 0.5;  // lambda = 2*0.75 + 0.5 = 2.0
    m.delays[kDefaultGroup] = DelayFamily::uniform_exponential(0.0, 0.0, 1.0, 1.0);
    CHECK(log_likelihood(m, t) == doctest::Approx(-2.0).epsilon(1e-12));
}

TEST_CASE("single input, exponential delay, hand evaluation") {
    // w = 1, Exp(1), input at 0, output at 1: ll = -1 + log(e^{-1}) = -2
    EventTrace t = single_channel_trace({0.0}, {1.0}, 1000.0);
    CtnorModel m;
    m.weights["a"] = 1.0;
    m.leak_weight = 0.0;
    m.delays[kDefaultGroup] = DelayFamily::uniform_exponential(0.0, 0.0, 0.5, 1.0);
    const auto cands = find_candidates(t, 50.0);
    CHECK(log_likelihood(m, t, cands) == doctest::Approx(-2.0).epsilon(1e-12));
}

TEST_CASE("matches the untruncated brute-force oracle on micro-traces") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        auto [trace, model] = oracle::random_micro_instance(seed);
        const double expected = oracle::brute_force_log_likelihood(model, trace);
        const auto cands = find_candidates(trace, trace.duration());
        const double got = log_likelihood(model, trace, cands);
        CHECK(got == doctest::Approx(expected).epsilon(1e-10));
    }
}

TEST_CASE("invariant under channel relabeling and joint time translation") {
    auto [trace, model] = oracle::random_micro_instance(7);
    const double base = log_likelihood(model, trace, find_candidates(trace, trace.duration()));

    // relabel: reverse channel order and rename
    EventTrace relabeled = trace;
    std::reverse(relabeled.inputs.begin(), relabeled.inputs.end());
    CtnorModel m2 = model;
    m2.weights.clear();
    relabeled.channel_groups.clear();
    for (size_t j = 0; j < relabeled.inputs.size(); ++j) {
        const std::string old_id = relabeled.inputs[j].id;
        const std::string new_id = "renamed" + std::to_string(j);
        m2.weights[new_id] = model.weight_of(old_id);
        relabeled.channel_groups[new_id] = trace.group_of(old_id);
        relabeled.inputs[j].id = new_id;
    }
    const double rl = log_likelihood(m2, relabeled, find_candidates(relabeled, relabeled.duration()));
    CHECK(rl == doctest::Approx(base).epsilon(1e-9));

    // translation of all events and the window
    EventTrace shifted = trace;
    shifted.t_start += 1000.0;
    shifted.t_end += 1000.0;
    for (auto& ch : shifted.inputs)
        for (auto& x : ch.times) x += 1000.0;
    for (auto& x : shifted.outputs) x += 1000.0;
    const double sh = log_likelihood(model, shifted, find_candidates(shifted, shifted.duration()));
    CHECK(sh == doctest::Approx(base).epsilon(1e-9));
}

TEST_CASE("removing a zero-weight channel leaves the likelihood unchanged exactly") {
    auto [trace, model] = oracle::random_micro_instance(11);
    model.weights["ch1"] = 0.0;
    const double with = log_likelihood(model, trace, find_candidates(trace, trace.duration()));
    EventTrace without = trace;
    without.inputs.erase(without.inputs.begin() + 1);
    const double sans = log_likelihood(model, without, find_candidates(without, without.duration()));
    CHECK(with == sans);
}

TEST_CASE("candidate causes respect horizon and causality, leak always present") {
    EventTrace t = single_channel_trace({3.0, 9.5}, {10.0}, 100.0);
    CtnorModel m;
    m.weights["a"] = 1.0;
    m.leak_weight = 1.0;
    m.delays[kDefaultGroup] = DelayFamily::pure_uniform(0.0, 5.0);

    auto cands = find_candidates(t, 5.0);
    REQUIRE(cands.per_output.size() == 1);
    CHECK(cands.per_output[0].size() == 2);  // leak + input at 9.5
    CHECK(cands.per_output[0][0].channel == kLeakChannel);

    // with a larger horizon both inputs qualify
    cands = find_candidates(t, 8.0);
    CHECK(cands.per_output[0].size() == 3);

    // a later input can never be a candidate
    EventTrace later = single_channel_trace({11.0}, {10.0}, 100.0);
    cands = find_candidates(later, 8.0);
    CHECK(cands.per_output[0].size() == 1);  // leak only
}

TEST_CASE("horizon truncation error is below 1e-6 on a scenario-scale trace") {
    auto [trace, truth] = scenario_51(1, 99);
    CtnorModel m;
    for (const auto& ch : trace.inputs) m.weights[ch.id] = 0.01;
    m.leak_weight = 100.0;
    m.delays[kDefaultGroup] = DelayFamily::uniform_exponential(0.0, 0.0, 1.0, 0.1);
    const double h = m.delays[kDefaultGroup].horizon(1e-12);
    const double truncated = log_likelihood(m, trace, find_candidates(trace, h));
    const double full = oracle::brute_force_log_likelihood(m, trace);
    CHECK(std::abs(truncated - full) < 1e-6);
}

TEST_CASE("NoExplanation when an output has zero total intensity") {
    EventTrace t = single_channel_trace({1.0}, {50.0}, 100.0);
    CtnorModel m;
    m.weights["a"] = 1.0;
    m.leak_weight = 0.0;  // no leak, and the delay support misses the output
    m.delays[kDefaultGroup] = DelayFamily::pure_uniform(0.0, 5.0);
    CHECK_THROWS_AS(log_likelihood(m, t, find_candidates(t, 5.0)), NoExplanation);
}

TEST_CASE("autocorrelation channel explains only strictly earlier outputs") {
    EventTrace t;
    t.t_start = 0.0;
    t.t_end = 10.0;
    t.outputs = {1.0, 2.0, 3.0};
    EventTrace aug = with_autocorrelation(t);
    REQUIRE(aug.inputs.size() == 1);
    CHECK(aug.inputs[0].autocorr);
    const auto cands = find_candidates(aug, 10.0);
    auto auto_count = [&](size_t l) {
        size_t n = 0;
        for (const auto& c : cands.per_output[l])
            if (c.channel == 0) ++n;
        return n;
    };
    CHECK(auto_count(0) == 0);  // first output: nothing earlier
    CHECK(auto_count(1) == 1);
    CHECK(auto_count(2) == 2);
}

TEST_CASE("single output gets no autocorrelation candidate") {
    EventTrace t;
    t.t_start = 0.0;
    t.t_end = 10.0;
    t.outputs = {5.0};
    const auto aug = with_autocorrelation(t);
    const auto cands = find_candidates(aug, 10.0);
    REQUIRE(cands.per_output.size() == 1);
    CHECK(cands.per_output[0].size() == 1);  // leak only
}

TEST_CASE("trace validation catches out-of-window and unsorted events") {
    EventTrace t = single_channel_trace({1.0}, {5.0}, 10.0);
    CHECK_NOTHROW(t.validate());
    t.outputs.push_back(20.0);
    CHECK_THROWS_AS(t.validate(), InvalidArgument);
    t.outputs = {5.0, 4.0};
    CHECK_THROWS_AS(t.validate(), InvalidArgument);
}
