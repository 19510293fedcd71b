#include "ssem/error.hpp"

namespace ssem {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Domain: return "DomainError";
    case ErrorCode::EmptyComponent: return "EmptyComponent";
    case ErrorCode::MeanOutOfRange: return "MeanOutOfRange";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::QuadratureFailure: return "QuadratureFailure";
    case ErrorCode::DegenerateDenominator: return "DegenerateDenominator";
    case ErrorCode::ProbeTooCloseToFixedPoint: return "ProbeTooCloseToFixedPoint";
    case ErrorCode::NotExpFam: return "NotExpFam";
    case ErrorCode::ProbeOutsideRegime: return "ProbeOutsideRegime";
    case ErrorCode::NoRescueNeeded: return "NoRescueNeeded";
    case ErrorCode::TrajectoryTooShort: return "TrajectoryTooShort";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), message_(message) {}

}  // namespace ssem
