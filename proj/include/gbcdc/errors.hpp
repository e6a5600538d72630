#pragma once

#include <stdexcept>
#include <string>

namespace gbcdc {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid argument or precondition violation supplied by the caller.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Requested an equal-size partition of n rows into N batches with N not dividing n.
class IndivisibleError : public DomainError {
public:
    using DomainError::DomainError;
};

/// Operands have incompatible shapes.
class DimensionMismatchError : public Error {
public:
    using Error::Error;
};

/// A Gram matrix (or restricted Gram) is numerically singular.
class SingularGramError : public Error {
public:
    using Error::Error;
};

/// An iterative solver exhausted its iteration budget without meeting tolerance.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

/// Batch fits carry different supports where a common one is required.
class SupportMismatchError : public Error {
public:
    using Error::Error;
};

/// The composite design matrix is rank deficient; the batch covariates carry
/// no usable spread. Typically caused by identically distributed batches:
/// apply the homogenization transform to restore heterogeneity.
class RankDeficientError : public Error {
public:
    using Error::Error;
};

/// Fewer batches than the composite regression needs (N <= q+1).
class InsufficientBatchesError : public Error {
public:
    using Error::Error;
};

/// Newton step impossible: the estimating-equation Jacobian is singular.
class SingularJacobianError : public Error {
public:
    using Error::Error;
};

/// A compact-support kernel saw no observation with positive weight.
class EmptyWindowError : public Error {
public:
    using Error::Error;
};

/// Malformed input file (CSV/JSON/TOML); message carries the line number.
class ParseError : public Error {
public:
    using Error::Error;
};

/// Invalid or unknown experiment/CLI configuration key or value.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace gbcdc
