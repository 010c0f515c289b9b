// error.hpp: exception types raised by the solver modules

#pragma once

#include <stdexcept>
#include <string>

namespace qle {

// Every module error derives from Error so callers can catch one type and
// still dispatch on the category (the CLI maps them to exit codes).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad user input: non-finite values, out-of-range parameters.
class InputError : public Error {
public:
    using Error::Error;
};

// Inconsistent configuration: mismatched grids, empty sweeps, negative order.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Mathematical domain violation, e.g. non-positive mode frequency.
class DomainError : public Error {
public:
    using Error::Error;
};

class FitError : public Error {
public:
    using Error::Error;
};

// Covariance not positive semidefinite beyond jitter.
class KernelError : public Error {
public:
    using Error::Error;
};

class DiscretizationError : public Error {
public:
    using Error::Error;
};

// Non-finite values or excessive norm drift during time stepping.
class IntegrationError : public Error {
public:
    IntegrationError(const std::string& what, double t)
        : Error(what), time_(t) {}
    double time() const noexcept { return time_; }

private:
    double time_;
};

// The finite-temperature kernel is not representable by a single exponential.
class ModelInadequacyError : public Error {
public:
    ModelInadequacyError(const std::string& what, double residual)
        : Error(what), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

} // namespace qle
