#include "rcov/error.hpp"

namespace rcov {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::CoincidentPoints: return "CoincidentPoints";
    case ErrorKind::DegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorKind::InvalidAnchor: return "InvalidAnchor";
    case ErrorKind::MissingEdge: return "MissingEdge";
    case ErrorKind::OutOfRange: return "OutOfRange";
    case ErrorKind::InsufficientLevelOne: return "InsufficientLevelOne";
    case ErrorKind::RigidityFailure: return "RigidityFailure";
    case ErrorKind::NoFeasibleAnchors: return "NoFeasibleAnchors";
    case ErrorKind::IrreversibleDegree: return "IrreversibleDegree";
    case ErrorKind::PreconditionViolation: return "PreconditionViolation";
    case ErrorKind::RepairFailed: return "RepairFailed";
    case ErrorKind::RepairImpossible: return "RepairImpossible";
    case ErrorKind::EnergyExhausted: return "EnergyExhausted";
    case ErrorKind::StalePlan: return "StalePlan";
    case ErrorKind::SolverFailure: return "SolverFailure";
    case ErrorKind::Unreachable: return "Unreachable";
    case ErrorKind::PlanExhausted: return "PlanExhausted";
    case ErrorKind::DegeneratePolygon: return "DegeneratePolygon";
    case ErrorKind::ZeroArea: return "ZeroArea";
    case ErrorKind::ModelUnsupported: return "ModelUnsupported";
    case ErrorKind::MaxIterations: return "MaxIterations";
    case ErrorKind::Infeasible: return "Infeasible";
    case ErrorKind::ParseError: return "ParseError";
  }
  return "Unknown";
}

}  // namespace rcov
