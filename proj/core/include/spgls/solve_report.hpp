#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spgls/reformulate.hpp"

namespace spgls {

enum class SolverKind { kKrylov, kRtr, kOracle };

const char* to_string(SolverKind kind);
SolverKind parse_solver_kind(const std::string& name);

enum class Termination {
  kConverged,
  kMaxIterations,
  /// No further progress possible (trust radius collapsed, invariant subspace
  /// with an unconverged residual, ...).
  kStagnated,
};

const char* to_string(Termination t);

struct SolveReport {
  SolverKind solver = SolverKind::kOracle;
  Termination termination = Termination::kConverged;
  double objective = 0.0;
  double lambda_star = 0.0;
  /// ||(H + lambda I) r + g|| / max(1, ||g||)
  double kkt_residual = 0.0;
  /// H applications consumed by the solve (L then L^T counts as one).
  std::uint64_t matvecs = 0;
  std::uint64_t iterations = 0;
  double wall_time_seconds = 0.0;
  std::optional<double> kappa_estimate;
  bool hard_case = false;
  /// Krylov only: the Krylov space of g became invariant before reaching
  /// dimension n+1, so directions outside it (possibly the minimum
  /// eigenvector) were never seen.
  bool invariant_subspace = false;
  /// Objective value after each iteration (Krylov: subspace optimum;
  /// RTR: accepted iterate).
  std::vector<double> objective_history;
  /// Riemannian gradient norm per outer iteration (RTR only).
  std::vector<double> grad_norm_history;
  std::vector<std::string> diagnostics;

  bool converged() const noexcept { return termination == Termination::kConverged; }
};

/// Least-squares multiplier for a unit r: lambda = -r^T (H r + g).
double multiplier_estimate(const SclsProblem& p, ConstVectorRef r);

/// ||(H + lambda I) r + g|| / max(1, ||g||). One H apply.
double kkt_residual(const SclsProblem& p, ConstVectorRef r, double lambda);

}  // namespace spgls
