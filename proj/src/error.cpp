#include "osl/error.hpp"

namespace osl {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::AmbientMismatch: return "AmbientMismatch";
    case ErrorKind::NotTransverse: return "NotTransverse";
    case ErrorKind::NotComplementary: return "NotComplementary";
    case ErrorKind::ZeroVector: return "ZeroVector";
    case ErrorKind::NotGeneralPosition: return "NotGeneralPosition";
    case ErrorKind::NotInvertible: return "NotInvertible";
    case ErrorKind::Overflow: return "Overflow";
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::HorizonTooShort: return "HorizonTooShort";
    case ErrorKind::SeparationFailure: return "SeparationFailure";
    case ErrorKind::SubsetBlowup: return "SubsetBlowup";
    case ErrorKind::HypothesisFailure: return "HypothesisFailure";
    case ErrorKind::DeltaTooLarge: return "DeltaTooLarge";
    case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorKind::InvalidSpec: return "InvalidSpec";
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::EmptyBlock: return "EmptyBlock";
    case ErrorKind::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace osl
