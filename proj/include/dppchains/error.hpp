#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dppchains {

enum class ErrorCode {
  // malformed input
  MalformedInput,
  InvalidProbability,
  InvalidPmf,
  InvalidSpec,
  InvalidRatio,
  LengthMismatch,
  DimensionMismatch,
  UnknownState,
  NonpositiveWeight,
  // precondition violations
  CycleDetected,
  ReturnToWindow,
  SingularGap,
  PeriodicInput,
  DegenerateFit,
  TooManyPaths,
  WindowTooLarge,
  EmptyBatch,
  AlphaTooLarge,
  NegativeMass,
  // should not happen on valid input
  SingularSystem,
  Internal,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Broad failure class; the CLI maps it onto its exit code.
enum class ErrorClass { Malformed, Precondition, Internal };

ErrorClass classify(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string witness = {})
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        witness_(std::move(witness)) {}

  ErrorCode code() const noexcept { return code_; }
  /// Human-readable witness, e.g. a cycle "1→2→1"; empty if none.
  const std::string& witness() const noexcept { return witness_; }

 private:
  ErrorCode code_;
  std::string witness_;
};

}  // namespace dppchains
