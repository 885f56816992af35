#pragma once

#include <stdexcept>
#include <string>

namespace rcov {

enum class ErrorKind {
  InvalidArgument,
  CoincidentPoints,
  DegenerateConfiguration,
  InvalidAnchor,
  MissingEdge,
  OutOfRange,
  InsufficientLevelOne,
  RigidityFailure,
  NoFeasibleAnchors,
  IrreversibleDegree,
  PreconditionViolation,
  RepairFailed,
  RepairImpossible,
  EnergyExhausted,
  StalePlan,
  SolverFailure,
  Unreachable,
  PlanExhausted,
  DegeneratePolygon,
  ZeroArea,
  ModelUnsupported,
  MaxIterations,
  Infeasible,
  ParseError,
};

const char* to_string(ErrorKind kind);

// Every failure raised by the library carries a kind so callers (and the CLI
// exit-code mapping) can dispatch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace rcov
