#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>

#include "spgls/reformulate.hpp"
#include "spgls/solve_report.hpp"

namespace spgls {

struct RtrConfig {
  double delta_bar = 2.0;  // largest trust radius
  double delta0 = 1.0;     // initial radius, in (0, delta_bar)
  double c = 0.1;          // acceptance threshold, in (0, 0.25)
  double tau1 = 0.25;      // shrink factor, in (0, 1)
  double tau2 = 2.0;       // growth factor, > 1
  /// Stop when ||grad q(r)|| <= grad_tol * max(1, ||g||).
  double grad_tol = 1e-10;
  std::size_t max_outer = 1000;
  /// 0 selects n + 1.
  std::size_t tcg_max_inner = 0;
  /// Inner stop: ||res|| <= ||grad|| min(||grad||^theta, kappa).
  double tcg_theta = 1.0;
  double tcg_kappa = 0.1;
  /// Starting points used by rtr_solve_multistart: -g/||g|| plus
  /// num_starts - 1 seeded random points.
  std::size_t num_starts = 3;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Snapshot of the outer iteration.
struct RtrState {
  Vector r;
  double delta = 0.0;
  double rho = 0.0;
  double grad_norm = 0.0;
  std::size_t outer_iters = 0;
  std::uint64_t hess_applies = 0;
};

/// (I - r r^T)(2 H r + 2 g).
Vector riemannian_grad(const SclsProblem& p, const SphereVec& r);

/// (I - r r^T)(2 H v - 2 v r^T (H r + g)) for a tangent v.
Vector riemannian_hess_apply(const SclsProblem& p, const SphereVec& r, ConstVectorRef v);

/// (r + v) / ||r + v|| for a tangent v.
SphereVec retract(const SphereVec& r, ConstVectorRef v);

enum class TcgStop { kResidual, kNegativeCurvature, kBoundary, kMaxInner };

const char* to_string(TcgStop s);

struct TcgResult {
  Vector step;
  /// Riemannian Hessian applied to step (accumulated, no extra apply).
  Vector hess_step;
  std::size_t inner_iters = 0;
  std::uint64_t hess_applies = 0;
  TcgStop stop = TcgStop::kResidual;
};

/// Steihaug-Toint truncated CG on the trust-region model at r.
TcgResult truncated_cg(const SclsProblem& p, const SphereVec& r, double delta,
                       const RtrConfig& cfg);

/// Riemannian trust-region Newton from r0. Converges to a stationary point;
/// global optimality is not guaranteed.
std::pair<SphereVec, SolveReport> rtr_solve(const SclsProblem& p, const SphereVec& r0,
                                            const RtrConfig& cfg = {});

/// -g/||g||, or the last coordinate axis when g = 0.
SphereVec default_start(const SclsProblem& p);

/// Runs rtr_solve from cfg.num_starts starting points and keeps the lowest
/// objective. Matvec and iteration counts are summed over all starts.
std::pair<SphereVec, SolveReport> rtr_solve_multistart(const SclsProblem& p,
                                                       const RtrConfig& cfg = {});

}  // namespace spgls
