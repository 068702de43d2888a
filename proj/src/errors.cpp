#include "sgdwr/errors.hpp"

namespace sgdwr {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidBatch: return "InvalidBatch";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::NumericalFailure: return "NumericalFailure";
    case ErrorKind::ScheduleInfeasible: return "ScheduleInfeasible";
    case ErrorKind::DivergenceDetected: return "DivergenceDetected";
    case ErrorKind::EnumerationTooLarge: return "EnumerationTooLarge";
    case ErrorKind::IncompleteMomentTable: return "IncompleteMomentTable";
    case ErrorKind::DegenerateProblem: return "DegenerateProblem";
    case ErrorKind::NoDriftDirection: return "NoDriftDirection";
    case ErrorKind::NotAStrictSaddle: return "NotAStrictSaddle";
    case ErrorKind::HypothesisNotMet: return "HypothesisNotMet";
    case ErrorKind::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace sgdwr
