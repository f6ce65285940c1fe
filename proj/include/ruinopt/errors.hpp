#pragma once

#include <stdexcept>
#include <string>

namespace ruinopt {

// Invalid user-supplied parameters or model specifications. The CLI maps
// this to exit code 2.
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Numerical failure (NaN from an integrand, singular coefficient, ...).
// The CLI maps this to exit code 3.
class NumericsError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Iteration budget exhausted. Carries the best estimate obtained so far so
// callers can still report a partial result.
class ConvergenceError : public NumericsError {
public:
    ConvergenceError(const std::string& what, double partial)
        : NumericsError(what), partial_(partial) {}

    double partial() const { return partial_; }

private:
    double partial_;
};

}  // namespace ruinopt
