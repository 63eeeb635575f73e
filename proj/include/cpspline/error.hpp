#pragma once

#include <stdexcept>
#include <string>

namespace cpspline {

enum class ErrorKind {
    DomainEmpty,
    BasisTooSmall,
    OutOfDomain,
    InvalidArgument,
    NotPositiveDefinite,
    Infeasible,
    IterationLimit,
    SingularSystem,
    AllFitsFailed,
    TraceDegenerate,
    UnknownProblem,
    Io,
};

const char* to_string(ErrorKind kind) noexcept;

/// Exception type thrown by every module; the kind lets callers map failures
/// to exit codes without parsing messages.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

    /// True for numerical failures (as opposed to bad input).
    bool is_solver_failure() const noexcept {
        switch (kind_) {
        case ErrorKind::NotPositiveDefinite:
        case ErrorKind::Infeasible:
        case ErrorKind::IterationLimit:
        case ErrorKind::SingularSystem:
        case ErrorKind::AllFitsFailed:
        case ErrorKind::TraceDegenerate:
            return true;
        default:
            return false;
        }
    }

private:
    ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::DomainEmpty: return "domain-empty";
    case ErrorKind::BasisTooSmall: return "basis-too-small";
    case ErrorKind::OutOfDomain: return "out-of-domain";
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::NotPositiveDefinite: return "not-positive-definite";
    case ErrorKind::Infeasible: return "infeasible-constraints";
    case ErrorKind::IterationLimit: return "iteration-limit";
    case ErrorKind::SingularSystem: return "singular-system";
    case ErrorKind::AllFitsFailed: return "all-fits-failed";
    case ErrorKind::TraceDegenerate: return "trace-degenerate";
    case ErrorKind::UnknownProblem: return "unknown-problem";
    case ErrorKind::Io: return "io";
    }
    return "unknown";
}

}  // namespace cpspline
