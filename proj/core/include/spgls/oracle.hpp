#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>

#include "spgls/reformulate.hpp"
#include "spgls/solve_report.hpp"

namespace spgls {

struct OracleConfig {
  /// Largest n+1 the oracle will densify.
  std::size_t size_cap = 500;
};

/// H = U diag(d) U^T with d ascending, and g expressed in that basis.
struct EigenForm {
  Vector eigvals;
  Matrix basis;
  Vector g_tilde;
};

/// Densified H = L^T L. Throws SizeError above the cap.
Matrix dense_hessian(const SclsProblem& p, const OracleConfig& cfg = {});

/// Full eigendecomposition of the densified H. Throws NumericalFailure when
/// the reconstruction error exceeds 1e-9 ||H||.
EigenForm eigen_form(const SclsProblem& p, const OracleConfig& cfg = {});

struct OracleSolution {
  SphereVec r_star;
  double lambda_star = 0.0;
  double value = 0.0;
  bool hard_case = false;
  /// 1 for an isolated optimum, 2 when the optimal set has more than one
  /// point (hard case with a tie between +tau and -tau or a repeated
  /// minimum eigenvalue).
  int multiplicity = 1;
  /// Smallest eigenvalue of H.
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  /// ||(H - lambda_min I)^+ g||; the easy case is guaranteed when this exceeds 1.
  double pseudo_inverse_norm = 0.0;
  /// Hard case only: -(H - d1 I)^+ g and an orthonormal basis of the minimum
  /// eigenspace. Every unit vector particular + tau u with u in that span is
  /// optimal.
  Vector particular{};
  Matrix min_eigenspace{};
  SolveReport report{};

  /// (lambda_max + lambda*) / (lambda_min + lambda*), infinite in the hard case.
  double kappa() const;
};

/// Global minimizer of q over the unit sphere via eigendecomposition and the
/// secular equation, with explicit hard-case treatment.
OracleSolution oracle_solve(const SclsProblem& p, const OracleConfig& cfg = {});

/// Minimum of q over a uniform angular grid on the sphere, for n+1 in {2, 3}.
/// In 2-D the grid has `grid` points on the circle; in 3-D it has `grid`
/// polar by 2*`grid` azimuthal points.
double brute_force_check(const SclsProblem& p, std::size_t grid);

struct SpgSolution {
  SpgPoint point;
  double value = 0.0;
  OracleSolution scls;
};

/// Oracle solve followed by recovery of (w*, alpha*). When the oracle lands on
/// the apex, picks another point of the optimal set; throws AssumptionViolated
/// if the apex is the only optimum.
SpgSolution solve_spg_small(const Dataset& d, const OracleConfig& cfg = {});

/// Gaussian X and z, with y chosen so that g is orthogonal to the minimum
/// eigenvector of H and ||(H - lambda_min I)^+ g|| = pinv_norm. A pinv_norm
/// below 1 gives a hard-case instance.
Dataset hard_case_instance(std::size_t m, std::size_t n, std::uint64_t seed,
                           double pinv_norm = 0.5, double gamma = 0.1);

}  // namespace spgls
