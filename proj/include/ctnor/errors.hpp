#pragma once

#include <stdexcept>
#include <string>

namespace ctnor {

// An output event has zero total intensity under the model. Usually means
// the leak is missing or the candidate horizon truncated every explanation.
struct NoExplanation : std::runtime_error {
    explicit NoExplanation(const std::string& what) : std::runtime_error(what) {}
};

struct ParseError : std::runtime_error {
    int line;
    ParseError(const std::string& what, int line_no)
        : std::runtime_error(what + " (line " + std::to_string(line_no) + ")"), line(line_no) {}
};

// Changepoint interval or its complement contains no input events of the
// tested channel.
struct EmptySegment : std::runtime_error {
    explicit EmptySegment(const std::string& what) : std::runtime_error(what) {}
};

// Bin width too large for the binned NOR evaluation: a bin holds more than
// one event or some success probability reached 1.
struct BinTooCoarse : std::runtime_error {
    explicit BinTooCoarse(const std::string& what) : std::runtime_error(what) {}
};

struct InvalidArgument : std::runtime_error {
    explicit InvalidArgument(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ctnor
