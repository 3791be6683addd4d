#include "km3d/error.hpp"

namespace km3d {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonPositiveDepth: return "NonPositiveDepth";
    case ErrorCode::InvalidCamera: return "InvalidCamera";
    case ErrorCode::InvalidDimension: return "InvalidDimension";
    case ErrorCode::InsufficientConstraints: return "InsufficientConstraints";
    case ErrorCode::DegenerateSystem: return "DegenerateSystem";
    case ErrorCode::BehindCamera: return "BehindCamera";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::InvalidScale: return "InvalidScale";
    case ErrorCode::InvalidAffine: return "InvalidAffine";
    case ErrorCode::MissingKey: return "MissingKey";
    case ErrorCode::MalformedNumber: return "MalformedNumber";
    case ErrorCode::FieldCount: return "FieldCount";
    case ErrorCode::FrustumExhausted: return "FrustumExhausted";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::BadFormat: return "BadFormat";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace km3d
