#pragma once

#include <stdexcept>
#include <string>

namespace usc {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on an argument was not met (non-Hermitian input, wrong form, ...).
class ContractViolation : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public ContractViolation {
public:
    using ContractViolation::ContractViolation;
};

/// Matrix is (numerically) rank deficient where a full-rank input is required.
class DegenerateInput : public Error {
public:
    using Error::Error;
};

/// An iterative solver ran out of budget. Carries the best residual reached.
class IterationLimit : public Error {
public:
    IterationLimit(const std::string& what, double best_residual)
        : Error(what), best_residual_(best_residual) {}
    double best_residual() const noexcept { return best_residual_; }

private:
    double best_residual_;
};

/// Mixed-representation estimate is meaningless: the two states barely overlap.
class StatesTooDifferent : public Error {
public:
    using Error::Error;
};

/// Environment overlap <l|r> too small for a stable normalization.
class ConditioningError : public Error {
public:
    using Error::Error;
};

/// An evolution step could not reach the configured overlap floor.
class StepFailure : public Error {
public:
    StepFailure(const std::string& what, double overlap)
        : Error(what), overlap_(overlap) {}
    double overlap() const noexcept { return overlap_; }

private:
    double overlap_;
};

class ExportError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace usc
