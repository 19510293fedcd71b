#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ssem {

enum class ErrorCode {
    InvalidArgument,
    Domain,
    EmptyComponent,
    MeanOutOfRange,
    NoConvergence,
    QuadratureFailure,
    DegenerateDenominator,
    ProbeTooCloseToFixedPoint,
    NotExpFam,
    ProbeOutsideRegime,
    NoRescueNeeded,
    TrajectoryTooShort,
};

std::string_view to_string(ErrorCode code) noexcept;

/// All library failures are reported through this type; code() identifies the
/// failure class so callers (and the CLI exit-code mapping) can branch on it.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message);

    ErrorCode code() const noexcept { return code_; }
    /// The message without the code prefix carried by what().
    const std::string& message() const noexcept { return message_; }

private:
    ErrorCode code_;
    std::string message_;
};

}  // namespace ssem
