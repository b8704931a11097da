#pragma once

#include <stdexcept>
#include <string>

namespace ksv {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input outside the domain of an operation (bad spec, empty subset, mass mismatch, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// A geometric transform would push mass outside the truncated domain.
class SupportOverflow : public DomainError {
public:
    using DomainError::DomainError;
};

/// Requested time step exceeds the stability bound.
class CflViolation : public DomainError {
public:
    CflViolation(const std::string& what, double admissible_dt)
        : DomainError(what), admissible_dt_(admissible_dt) {}
    double admissible_dt() const noexcept { return admissible_dt_; }

private:
    double admissible_dt_;
};

/// An iterative solve failed to reach its tolerance.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double best_residual)
        : Error(what), best_residual_(best_residual) {}
    double best_residual() const noexcept { return best_residual_; }

private:
    double best_residual_;
};

/// Numerical signature of mass concentrating at a point (exponent overflow).
class ConcentrationSignal : public Error {
public:
    using Error::Error;
};

}  // namespace ksv
