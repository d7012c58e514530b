#pragma once

#include <stdexcept>
#include <string>

namespace cbound {

enum class ErrorCode {
    NegativeMass,
    NotNormalized,
    DegenerateShape,
    OutOfRange,
    ZeroConditioningEvent,
    ShapeMismatch,
    TooManyDOF,
    ProgramTooLarge,
    Overflow,
    Infeasible,
    SolverStalled,
    ParseError,
    CycleDetected,
    CptShapeMismatch,
    RowNotNormalized,
    ZeroEvidenceProbability,
    UnknownVariable,
    InvalidPartition,
};

/// Category used to map errors onto CLI exit codes.
enum class ErrorCategory {
    Validation,  // exit 2
    Solver,      // exit 3
    SizeLimit,   // exit 4
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

    ErrorCategory category() const noexcept {
        switch (code_) {
        case ErrorCode::Infeasible:
        case ErrorCode::SolverStalled:
            return ErrorCategory::Solver;
        case ErrorCode::ProgramTooLarge:
        case ErrorCode::Overflow:
        case ErrorCode::TooManyDOF:
            return ErrorCategory::SizeLimit;
        default:
            return ErrorCategory::Validation;
        }
    }

private:
    ErrorCode code_;
};

const char* error_code_name(ErrorCode code);

}  // namespace cbound
