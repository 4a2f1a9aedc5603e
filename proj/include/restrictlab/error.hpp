#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace restrictlab {

enum class ErrorCode {
    InvalidInput,
    DomainMismatch,
    ZeroLikelihood,
    InfiniteDivergence,
    RejectionBudgetExceeded,
    NonFinite,
    DegenerateTarget,
    NestingViolation,
    NaiveNotWorse,
    InsufficientData,
};

std::string_view to_string(ErrorCode code);

/// All library failures are reported as this exception; `code()` lets callers
/// branch on the failure class without parsing the message.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace restrictlab
