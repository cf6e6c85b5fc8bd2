#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace slipfsi {

enum class ErrorCode {
  MissingKey,
  TypeMismatch,
  InvariantViolation,
  IoFailure,
  SchemaVersionMismatch,
  BodyOutsideDomain,
  UnsupportedShape,
  UnsupportedDomain,
  NonpositiveDensity,
  SingularInertia,
  DegenerateInertia,
  IndefiniteMass,
  CflViolation,
  LinearSolveFailure,
  DomainError,
  PicardDivergence,
  CollisionHalt,
  IncompatiblePair,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for the library; `code()` identifies the failure.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace slipfsi
