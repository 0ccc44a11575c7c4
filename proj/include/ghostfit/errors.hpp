#pragma once

#include <stdexcept>
#include <string>

namespace ghostfit {

// Base for everything thrown by the library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid mathematical input (non-positive width, non-finite argument, ...).
struct DomainError : Error {
    using Error::Error;
};

// Result not representable in double precision (genuine overflow).
struct RangeError : Error {
    using Error::Error;
};

// Config or input data violates a documented rule.
struct ValidationError : Error {
    using Error::Error;
};

// Malformed or inconsistent scan data; message names the offending point.
struct DataError : ValidationError {
    using ValidationError::ValidationError;
};

// Non-finite intermediate during curve evaluation; message names the subterm.
struct EvaluationError : Error {
    using Error::Error;
};

// Quadrature budget exhausted before reaching the requested tolerance.
// Carries the best available estimate and its error bound.
struct ConvergenceError : Error {
    double estimate;
    double error_bound;
    ConvergenceError(const std::string& msg, double est, double bound)
        : Error(msg), estimate(est), error_bound(bound) {}
};

// Refusal to derive results from an unconverged fit.
struct FitError : Error {
    using Error::Error;
};

}  // namespace ghostfit
