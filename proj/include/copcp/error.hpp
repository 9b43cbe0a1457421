#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace copcp {

enum class ErrorCode {
    MissingColumn,
    NonNumericCell,
    EmptyFile,
    EmptyFitSet,
    TooFewRows,
    DimensionMismatch,
    LengthMismatch,
    NonFiniteLoss,
    EmptySample,
    DomainError,
    CalibTooSmall,
    EmptyTestSet,
    InvalidArgument,
    Io,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries one of the codes above so
// callers (and tests) can branch on the kind without parsing messages.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), detail_(message) {}

    ErrorCode code() const noexcept { return code_; }
    /// The message without the error-kind prefix.
    const std::string& detail() const noexcept { return detail_; }

private:
    ErrorCode code_;
    std::string detail_;
};

}  // namespace copcp
