#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mlc {

enum class ErrorCode {
    InvalidArgument,
    TransversalIsParallel,
    InvalidAngle,
    IndexOutOfRange,
    NonconvergentQuadrature,
    EmptyContour,
    UnknownPlane,
    DisjointPlanes,
    MismatchedContours,
    DirectionMismatch,
    WalkerHalted,
    DegenerateDisc,
    NotPartitioned,
    PlacementMismatch,
    ResolutionTooCoarse,
    PreconditionUnmet,
    ConfigInvalid,
    IoError,
    MissingArtifact,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::TransversalIsParallel: return "TransversalIsParallel";
        case ErrorCode::InvalidAngle: return "InvalidAngle";
        case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
        case ErrorCode::NonconvergentQuadrature: return "NonconvergentQuadrature";
        case ErrorCode::EmptyContour: return "EmptyContour";
        case ErrorCode::UnknownPlane: return "UnknownPlane";
        case ErrorCode::DisjointPlanes: return "DisjointPlanes";
        case ErrorCode::MismatchedContours: return "MismatchedContours";
        case ErrorCode::DirectionMismatch: return "DirectionMismatch";
        case ErrorCode::WalkerHalted: return "WalkerHalted";
        case ErrorCode::DegenerateDisc: return "DegenerateDisc";
        case ErrorCode::NotPartitioned: return "NotPartitioned";
        case ErrorCode::PlacementMismatch: return "PlacementMismatch";
        case ErrorCode::ResolutionTooCoarse: return "ResolutionTooCoarse";
        case ErrorCode::PreconditionUnmet: return "PreconditionUnmet";
        case ErrorCode::ConfigInvalid: return "ConfigInvalid";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::MissingArtifact: return "MissingArtifact";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

  private:
    ErrorCode code_;
};

}  // namespace mlc
