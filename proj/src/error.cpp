#include "dppchains/error.hpp"

namespace dppchains {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MalformedInput: return "MalformedInput";
    case ErrorCode::InvalidProbability: return "InvalidProbability";
    case ErrorCode::InvalidPmf: return "InvalidPmf";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::InvalidRatio: return "InvalidRatio";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::UnknownState: return "UnknownState";
    case ErrorCode::NonpositiveWeight: return "NonpositiveWeight";
    case ErrorCode::CycleDetected: return "CycleDetected";
    case ErrorCode::ReturnToWindow: return "ReturnToWindow";
    case ErrorCode::SingularGap: return "SingularGap";
    case ErrorCode::PeriodicInput: return "PeriodicInput";
    case ErrorCode::DegenerateFit: return "DegenerateFit";
    case ErrorCode::TooManyPaths: return "TooManyPaths";
    case ErrorCode::WindowTooLarge: return "WindowTooLarge";
    case ErrorCode::EmptyBatch: return "EmptyBatch";
    case ErrorCode::AlphaTooLarge: return "AlphaTooLarge";
    case ErrorCode::NegativeMass: return "NegativeMass";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::Internal: return "Internal";
  }
  return "Unknown";
}

ErrorClass classify(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MalformedInput:
    case ErrorCode::InvalidProbability:
    case ErrorCode::InvalidPmf:
    case ErrorCode::InvalidSpec:
    case ErrorCode::InvalidRatio:
    case ErrorCode::LengthMismatch:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::UnknownState:
    case ErrorCode::NonpositiveWeight:
      return ErrorClass::Malformed;
    case ErrorCode::SingularSystem:
    case ErrorCode::Internal:
      return ErrorClass::Internal;
    default:
      return ErrorClass::Precondition;
  }
}

}  // namespace dppchains
