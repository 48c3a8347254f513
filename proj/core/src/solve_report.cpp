#include "spgls/solve_report.hpp"

#include <algorithm>

#include "spgls/errors.hpp"

namespace spgls {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kDegenerateApex: return "degenerate-apex";
    case ErrorCode::kCenteredProblem: return "centered-problem";
    case ErrorCode::kNumericalFailure: return "numerical-failure";
    case ErrorCode::kState: return "state-error";
    case ErrorCode::kSize: return "size-error";
    case ErrorCode::kParse: return "parse-error";
    case ErrorCode::kEmptyMatrix: return "empty-matrix";
    case ErrorCode::kUnsupportedDimension: return "unsupported-dimension";
    case ErrorCode::kAssumptionViolated: return "assumption-violated";
  }
  return "unknown";
}

const char* to_string(SolverKind kind) {
  switch (kind) {
    case SolverKind::kKrylov: return "krylov";
    case SolverKind::kRtr: return "rtr";
    case SolverKind::kOracle: return "oracle";
  }
  return "unknown";
}

SolverKind parse_solver_kind(const std::string& name) {
  if (name == "krylov") return SolverKind::kKrylov;
  if (name == "rtr") return SolverKind::kRtr;
  if (name == "oracle") return SolverKind::kOracle;
  throw InvalidArgument("unknown solver '" + name + "' (expected krylov, rtr or oracle)");
}

const char* to_string(Termination t) {
  switch (t) {
    case Termination::kConverged: return "converged";
    case Termination::kMaxIterations: return "max-iterations";
    case Termination::kStagnated: return "stagnated";
  }
  return "unknown";
}

double multiplier_estimate(const SclsProblem& p, ConstVectorRef r) {
  return -r.dot(p.lhat.hessian_apply(r) + p.g);
}

double kkt_residual(const SclsProblem& p, ConstVectorRef r, double lambda) {
  Vector res = p.lhat.hessian_apply(r);
  res += lambda * r;
  res += p.g;
  return res.norm() / std::max(1.0, p.g.norm());
}

}  // namespace spgls
