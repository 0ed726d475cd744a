#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include "multifractal/interval.hpp"

namespace multifractal {

enum class ErrorKind {
    MarkovViolation,
    ContractionViolation,
    NotTransitive,
    UnitDerivativeOffOrbit,
    OutOfImage,
    FitUnstable,
    LevelTooLarge,
    PointOutsideCylinder,
    NotConverged,
    NotStrictlyNegative,
    NoParabolicOrbit,
    DerivativeUnstable,
    NoConnector,
    InadmissibleSupport,
    ConstraintInfeasible,
    EmptyWindow,
    DegenerateCylinder,
    InvalidModel,
    TruncationTooSmall,
    TailDominates,
    NotFullBranched,
    ConfigError,
    IoError,
};

std::string_view error_name(ErrorKind kind);

/// Base error; `kind()` carries the diagnostic name surfaced by the CLI.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(error_name(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Iterative procedure stopped before reaching its tolerance. The best
/// enclosure found so far travels with the exception.
class NotConverged : public Error {
public:
    NotConverged(const std::string& what, Interval best)
        : Error(ErrorKind::NotConverged, what), best_(best) {}

    Interval best() const noexcept { return best_; }

private:
    Interval best_;
};

}  // namespace multifractal
