#include "slipfsi/error.hpp"

namespace slipfsi {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingKey: return "MissingKey";
    case ErrorCode::TypeMismatch: return "TypeMismatch";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::SchemaVersionMismatch: return "SchemaVersionMismatch";
    case ErrorCode::BodyOutsideDomain: return "BodyOutsideDomain";
    case ErrorCode::UnsupportedShape: return "UnsupportedShape";
    case ErrorCode::UnsupportedDomain: return "UnsupportedDomain";
    case ErrorCode::NonpositiveDensity: return "NonpositiveDensity";
    case ErrorCode::SingularInertia: return "SingularInertia";
    case ErrorCode::DegenerateInertia: return "DegenerateInertia";
    case ErrorCode::IndefiniteMass: return "IndefiniteMass";
    case ErrorCode::CflViolation: return "CflViolation";
    case ErrorCode::LinearSolveFailure: return "LinearSolveFailure";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::PicardDivergence: return "PicardDivergence";
    case ErrorCode::CollisionHalt: return "CollisionHalt";
    case ErrorCode::IncompatiblePair: return "IncompatiblePair";
  }
  return "Unknown";
}

}  // namespace slipfsi
