#pragma once

#include <stdexcept>
#include <string>

namespace sgdwr {

enum class ErrorKind {
  InvalidBatch,
  InvalidArgument,
  NumericalFailure,
  ScheduleInfeasible,
  DivergenceDetected,
  EnumerationTooLarge,
  IncompleteMomentTable,
  DegenerateProblem,
  NoDriftDirection,
  NotAStrictSaddle,
  HypothesisNotMet,
  ConfigError,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what, long step = -1)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what),
        kind_(kind),
        step_(step) {}

  ErrorKind kind() const { return kind_; }
  // step index for DivergenceDetected, -1 otherwise
  long step() const { return step_; }

 private:
  ErrorKind kind_;
  long step_;
};

}  // namespace sgdwr
