#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "spgls/reformulate.hpp"
#include "spgls/solve_report.hpp"

namespace spgls {

enum class Reorthogonalization {
  kFull,
  /// Subtract only overlaps above 1e-13 ||w||; skips the axpys, not the dots.
  kSelective,
};

struct KrylovConfig {
  /// 0 selects the default min(n+1, ceil(10 sqrt(n+1))).
  std::size_t max_iter = 0;
  /// Relative KKT residual ||(H + lambda I) r + g|| / max(1, ||g||).
  double tol = 1e-10;
  Reorthogonalization reorth = Reorthogonalization::kFull;
  /// Nested restart: after this many Lanczos steps without convergence the
  /// subspace is rebuilt around the current iterate.
  std::optional<std::size_t> restart_every;
  /// When set, a run that may have missed the minimum eigendirection is
  /// repeated from a randomly perturbed g and the better point is kept.
  std::optional<std::uint64_t> perturb_seed;
  /// Period (in Lanczos steps) of the lifted residual check.
  std::size_t check_every = 5;

  std::size_t effective_max_iter(std::size_t dim) const;
  void validate() const;
};

/// Symmetric tridiagonal matrix: diag has k entries, offdiag k - 1.
struct Tridiagonal {
  std::vector<double> diag;
  std::vector<double> offdiag;

  std::size_t size() const noexcept { return diag.size(); }
  Matrix to_dense() const;
};

/// Smallest and largest eigenvalue of T by Sturm-sequence bisection.
double tridiag_min_eigenvalue(const Tridiagonal& t);
double tridiag_max_eigenvalue(const Tridiagonal& t);

/// Lanczos process on H started from a given vector (g for the plain method).
/// After s steps, T is s x s and the basis holds s + 1 vectors unless a
/// breakdown has been flagged, in which case it holds s.
struct LanczosState {
  std::vector<Vector> basis;
  /// H q_j for every completed step; lets the lifted residual be formed
  /// without extra matvecs.
  std::vector<Vector> h_basis;
  Tridiagonal t;
  double g_norm = 0.0;
  std::size_t k = 0;
  bool breakdown = false;
  Reorthogonalization reorth = Reorthogonalization::kFull;
  /// Running estimate of ||H|| from the recurrence coefficients.
  double h_scale = 0.0;
  /// Norm of the residual that produced the newest basis vector; becomes the
  /// next off-diagonal entry of T.
  double next_beta = 0.0;
};

LanczosState lanczos_init(ConstVectorRef start,
                          Reorthogonalization reorth = Reorthogonalization::kFull);

/// One Lanczos step: exactly one H apply. Throws StateError after breakdown.
void lanczos_step(const SclsProblem& p, LanczosState& st);

struct TridiagSphereSolution {
  Vector h;
  double lambda = 0.0;
  int newton_iters = 0;
  bool hard_case = false;
  double theta_min = 0.0;
};

/// min h^T T h + 2 gnorm h_1 over ||h|| = 1, i.e. (T + lambda I) h = -gnorm e1
/// with T + lambda I positive semidefinite. Throws NumericalFailure after 200
/// Newton iterations.
TridiagSphereSolution solve_tridiag_sphere(const Tridiagonal& t, double gnorm);

/// Generalized Lanczos trust-region method adapted to the sphere. Throws
/// CenteredProblem when g = 0.
std::pair<SphereVec, SolveReport> krylov_solve(const SclsProblem& p, const KrylovConfig& cfg = {});

}  // namespace spgls
