#pragma once

#include <stdexcept>
#include <string>

namespace fdelab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An argument lies outside the mathematical domain of an operation
/// (negative field under a fractional power, out-of-range exponent, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// The requested estimate does not apply in the current (m, N, p) regime.
class RegimeError : public Error {
public:
    using Error::Error;
};

/// A nonlinear implicit step failed; the caller is expected to retry with a smaller step.
class StepRejected : public Error {
public:
    using Error::Error;
};

/// No positive stationary profile exists for the requested exponent.
class NoSolution : public Error {
public:
    using Error::Error;
};

/// The trajectory did not reach extinction within its step budget.
class NotReached : public Error {
public:
    using Error::Error;
};

/// A precondition on the input data of a diagnostic is violated.
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// Malformed or inconsistent run configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace fdelab
