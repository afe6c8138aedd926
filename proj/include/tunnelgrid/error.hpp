#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tunnelgrid {

/// Machine-readable failure categories. The CLI prints `code_name()` on stderr.
enum class ErrorCode {
    NonPositiveMass,
    LengthMismatch,
    AtomCountMismatch,
    DegenerateAxes,
    ZeroComposite,
    OutOfDomain,
    MissingSample,
    NonMonotoneAxis,
    MalformedRow,
    TargetExceedsDomain,
    NoCrossing,
    MissingQAxis,
    NoBarrier,
    InvalidGrid,
    OrderUnsupported,
    DomainMismatch,
    NoConvergence,
    KTooLarge,
    SingleWell,
    UnnormalizedState,
    SplittingUnresolved,
    DoubletNotFound,
    InsufficientAssignedStates,
    PinnedOutOfDomain,
    NoActiveAxis,
    AxisInactive,
    InsufficientPoints,
    NonPositiveInput,
    OrthogonalStrainDirection,
    NonPositiveEpsilon,
    FourWellsNotFound,
    InvalidModel,
    InvalidTensor,
    ConfigError,
    IoError,
};

constexpr std::string_view code_name(ErrorCode c) {
    switch (c) {
        case ErrorCode::NonPositiveMass: return "NonPositiveMass";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::AtomCountMismatch: return "AtomCountMismatch";
        case ErrorCode::DegenerateAxes: return "DegenerateAxes";
        case ErrorCode::ZeroComposite: return "ZeroComposite";
        case ErrorCode::OutOfDomain: return "OutOfDomain";
        case ErrorCode::MissingSample: return "MissingSample";
        case ErrorCode::NonMonotoneAxis: return "NonMonotoneAxis";
        case ErrorCode::MalformedRow: return "MalformedRow";
        case ErrorCode::TargetExceedsDomain: return "TargetExceedsDomain";
        case ErrorCode::NoCrossing: return "NoCrossing";
        case ErrorCode::MissingQAxis: return "MissingQAxis";
        case ErrorCode::NoBarrier: return "NoBarrier";
        case ErrorCode::InvalidGrid: return "InvalidGrid";
        case ErrorCode::OrderUnsupported: return "OrderUnsupported";
        case ErrorCode::DomainMismatch: return "DomainMismatch";
        case ErrorCode::NoConvergence: return "NoConvergence";
        case ErrorCode::KTooLarge: return "KTooLarge";
        case ErrorCode::SingleWell: return "SingleWell";
        case ErrorCode::UnnormalizedState: return "UnnormalizedState";
        case ErrorCode::SplittingUnresolved: return "SplittingUnresolved";
        case ErrorCode::DoubletNotFound: return "DoubletNotFound";
        case ErrorCode::InsufficientAssignedStates: return "InsufficientAssignedStates";
        case ErrorCode::PinnedOutOfDomain: return "PinnedOutOfDomain";
        case ErrorCode::NoActiveAxis: return "NoActiveAxis";
        case ErrorCode::AxisInactive: return "AxisInactive";
        case ErrorCode::InsufficientPoints: return "InsufficientPoints";
        case ErrorCode::NonPositiveInput: return "NonPositiveInput";
        case ErrorCode::OrthogonalStrainDirection: return "OrthogonalStrainDirection";
        case ErrorCode::NonPositiveEpsilon: return "NonPositiveEpsilon";
        case ErrorCode::FourWellsNotFound: return "FourWellsNotFound";
        case ErrorCode::InvalidModel: return "InvalidModel";
        case ErrorCode::InvalidTensor: return "InvalidTensor";
        case ErrorCode::ConfigError: return "ConfigError";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(code_name(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace tunnelgrid
