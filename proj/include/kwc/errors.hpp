#pragma once

#include <stdexcept>
#include <string>

namespace kwc {

// Bad input or violated precondition.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Quadrature, root finding or an iterative solver did not reach its tolerance.
class NumericFailure : public std::runtime_error {
public:
    NumericFailure(const std::string& what, double achieved = 0.0)
        : std::runtime_error(what), achieved_(achieved) {}
    double achieved() const noexcept { return achieved_; }

private:
    double achieved_;
};

// A slicing line runs along a segment of the singular set.
class DegenerateSlice : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Recovery supports overlap or leave the domain.
class EpsilonTooLarge : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A checked inequality failed beyond its slack.
class PropertyViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace kwc
