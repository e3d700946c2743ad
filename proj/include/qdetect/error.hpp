#pragma once

#include <stdexcept>
#include <string>

namespace qdetect {

enum class ErrorCode {
    NonPositiveRate,
    ZeroDrift,
    PriorOutOfRange,
    NonFinite,
    DomainError,
    QuadratureFailure,
    BracketFailure,
    GridTooCoarse,
    BudgetExhausted,
    NoConvergence,
    RootBracketFailure,
    NonMonotoneExtraction,
    InvalidArgument
};

const char* to_string(ErrorCode code);

// diagnostics holds a JSON document (object) describing the failure
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message, std::string diagnostics = "{}");

    ErrorCode code() const { return code_; }
    const std::string& diagnostics() const { return diagnostics_; }

private:
    ErrorCode code_;
    std::string diagnostics_;
};

}  // namespace qdetect
