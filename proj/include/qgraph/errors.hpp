#pragma once

#include <stdexcept>
#include <string>

namespace qgraph {

/// Base class for all library failures.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A value outside the domain of an operation (x outside [0,1], bad index).
struct DomainError : Error {
    using Error::Error;
};

/// A broken precondition between objects (size mismatch, wrong partition).
struct ContractError : Error {
    using Error::Error;
};

/// Partition construction failed its self-verification.
struct ConstructionError : Error {
    using Error::Error;
};

/// The requested phase scheme cannot realize |U|^2 = B.
struct UnistochasticError : Error {
    using Error::Error;
};

/// A floating-point residual exceeded its tolerance.
struct NumericalError : Error {
    NumericalError(const std::string& what, double residual_)
        : Error(what), residual(residual_) {}
    double residual = 0.0;
};

/// Eigenphase continuation lost a branch (near-collision of eigenvalues).
struct TrackingError : Error {
    TrackingError(const std::string& what, double lo, double hi)
        : Error(what), lambda_lo(lo), lambda_hi(hi) {}
    double lambda_lo = 0.0;
    double lambda_hi = 0.0;
};

/// Enumeration or memory budget exceeded.
struct ResourceError : Error {
    using Error::Error;
};

/// Quadrature error estimate above tolerance.
struct PrecisionError : Error {
    using Error::Error;
};

/// Bad experiment configuration or input file.
struct ConfigError : Error {
    using Error::Error;
};

}  // namespace qgraph
