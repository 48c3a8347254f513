#include "spgls/riemannian.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "spgls/errors.hpp"

namespace spgls {

namespace {

constexpr double kTangentTol = 1e-10;

void require_tangent(const Vector& r, ConstVectorRef v, const char* who) {
  if (v.size() != r.size()) throw InvalidArgument(std::string(who) + ": dimension mismatch");
  const double overlap = std::abs(r.dot(v));
  if (overlap > kTangentTol * std::max(1.0, v.norm())) {
    std::ostringstream os;
    os << who << ": vector is not tangent to the sphere (|<r, v>| = " << overlap << ")";
    throw InvalidArgument(os.str());
  }
}

// Quantities at one iterate that every derivative evaluation reuses.
struct PointCache {
  Vector r;
  Vector lr;      // L r
  Vector hr;      // H r
  double c = 0;   // r^T (H r + g)
  Vector grad;    // (I - r r^T)(2 H r + 2 g)
  double q = 0;   // ||L r - rhs||^2
  double grad_norm = 0;
};

// `matvecs` counts H applies; one L or L^T apply is half of one.
struct Counter {
  std::uint64_t half_applies = 0;
  std::uint64_t matvecs() const { return (half_applies + 1) / 2; }
};

PointCache make_cache(const SclsProblem& p, Vector r, Vector lr, Counter& count) {
  PointCache pc;
  pc.r = std::move(r);
  pc.lr = std::move(lr);
  pc.hr = p.lhat.apply_transpose(pc.lr);
  ++count.half_applies;
  const Vector eg = pc.hr + p.g;
  pc.c = pc.r.dot(eg);
  pc.grad = 2.0 * (eg - pc.c * pc.r);
  // Near convergence the normal part left by rounding, about eps * |c|, is
  // not small next to the gradient; a second projection removes it.
  pc.grad -= pc.r.dot(pc.grad) * pc.r;
  pc.q = (pc.lr - p.rhs).squaredNorm();
  pc.grad_norm = pc.grad.norm();
  return pc;
}

PointCache make_cache(const SclsProblem& p, const Vector& r, Counter& count) {
  Vector lr = p.lhat.apply(r);
  ++count.half_applies;
  return make_cache(p, r, std::move(lr), count);
}

Vector project(const Vector& r, Vector v) {
  v -= r.dot(v) * r;
  return v;
}

Vector hess_apply(const SclsProblem& p, const PointCache& pc, const Vector& v, Vector& scratch) {
  Vector hv(v.size());
  p.lhat.hessian_apply(v, hv, scratch);
  Vector out = 2.0 * hv - 2.0 * pc.c * v;
  return project(pc.r, std::move(out));
}

TcgResult tcg(const SclsProblem& p, const PointCache& pc, double delta, const RtrConfig& cfg) {
  const auto n1 = pc.r.size();
  const std::size_t max_inner =
      cfg.tcg_max_inner > 0 ? cfg.tcg_max_inner : static_cast<std::size_t>(n1);
  Vector scratch(static_cast<Eigen::Index>(p.lhat.rows()));

  TcgResult out;
  out.step = Vector::Zero(n1);
  out.hess_step = Vector::Zero(n1);
  Vector res = pc.grad;
  Vector dir = -res;
  double rr = res.squaredNorm();
  const double g0 = std::sqrt(rr);
  const double stop_at = g0 * std::min(std::pow(g0, cfg.tcg_theta), cfg.tcg_kappa);
  const double delta2 = delta * delta;
  if (g0 == 0.0) return out;

  for (std::size_t j = 0; j < max_inner; ++j) {
    const Vector hd = hess_apply(p, pc, dir, scratch);
    ++out.hess_applies;
    ++out.inner_iters;
    const double curv = dir.dot(hd);
    const double alpha = rr / curv;
    const double sd = out.step.dot(dir);
    const double dd = dir.squaredNorm();
    const double ss = out.step.squaredNorm();
    if (curv <= 0.0 || ss + 2.0 * alpha * sd + alpha * alpha * dd >= delta2) {
      const double tau = (-sd + std::sqrt(sd * sd + dd * (delta2 - ss))) / dd;
      out.step += tau * dir;
      out.hess_step += tau * hd;
      out.stop = curv <= 0.0 ? TcgStop::kNegativeCurvature : TcgStop::kBoundary;
      return out;
    }
    out.step += alpha * dir;
    out.hess_step += alpha * hd;
    res += alpha * hd;
    const double rr_new = res.squaredNorm();
    if (std::sqrt(rr_new) <= stop_at) {
      out.stop = TcgStop::kResidual;
      return out;
    }
    dir = project(pc.r, -res + (rr_new / rr) * dir);
    rr = rr_new;
  }
  out.stop = TcgStop::kMaxInner;
  return out;
}

}  // namespace

const char* to_string(TcgStop s) {
  switch (s) {
    case TcgStop::kResidual: return "residual";
    case TcgStop::kNegativeCurvature: return "negative-curvature";
    case TcgStop::kBoundary: return "boundary";
    case TcgStop::kMaxInner: return "max-inner";
  }
  return "unknown";
}

void RtrConfig::validate() const {
  if (!(delta_bar > 0.0)) throw InvalidArgument("RtrConfig: delta_bar must be positive");
  if (!(delta0 > 0.0 && delta0 < delta_bar)) {
    throw InvalidArgument("RtrConfig: delta0 must lie in (0, delta_bar)");
  }
  if (!(c > 0.0 && c < 0.25)) throw InvalidArgument("RtrConfig: c must lie in (0, 0.25)");
  if (!(tau1 > 0.0 && tau1 < 1.0)) throw InvalidArgument("RtrConfig: tau1 must lie in (0, 1)");
  if (!(tau2 > 1.0)) throw InvalidArgument("RtrConfig: tau2 must exceed 1");
  if (!(grad_tol > 0.0)) throw InvalidArgument("RtrConfig: grad_tol must be positive");
  if (max_outer < 1) throw InvalidArgument("RtrConfig: max_outer must be at least 1");
  if (!(tcg_theta > 0.0) || !(tcg_kappa > 0.0)) {
    throw InvalidArgument("RtrConfig: tcg_theta and tcg_kappa must be positive");
  }
  if (num_starts < 1) throw InvalidArgument("RtrConfig: num_starts must be at least 1");
}

Vector riemannian_grad(const SclsProblem& p, const SphereVec& r) {
  if (static_cast<std::size_t>(r.size()) != p.dim()) {
    throw InvalidArgument("riemannian_grad: dimension mismatch");
  }
  const Vector eg = p.lhat.hessian_apply(r.vec()) + p.g;
  return project(r.vec(), 2.0 * (eg - r.vec().dot(eg) * r.vec()));
}

Vector riemannian_hess_apply(const SclsProblem& p, const SphereVec& r, ConstVectorRef v) {
  require_tangent(r.vec(), v, "riemannian_hess_apply");
  const Vector& rv = r.vec();
  const Vector hr = p.lhat.hessian_apply(rv);
  const double c = rv.dot(hr + p.g);
  Vector out = 2.0 * p.lhat.hessian_apply(v) - 2.0 * c * v;
  return project(rv, std::move(out));
}

SphereVec retract(const SphereVec& r, ConstVectorRef v) {
  require_tangent(r.vec(), v, "retract");
  return SphereVec::normalized(r.vec() + v);
}

TcgResult truncated_cg(const SclsProblem& p, const SphereVec& r, double delta,
                       const RtrConfig& cfg) {
  if (!(delta > 0.0)) throw InvalidArgument("truncated_cg: delta must be positive");
  Counter count;
  const PointCache pc = make_cache(p, r.vec(), count);
  return tcg(p, pc, delta, cfg);
}

SphereVec default_start(const SclsProblem& p) {
  const double gn = p.g.norm();
  if (gn > 0.0) return SphereVec(-p.g / gn);
  Vector e = Vector::Zero(static_cast<Eigen::Index>(p.dim()));
  e[e.size() - 1] = 1.0;
  return SphereVec(e);
}

std::pair<SphereVec, SolveReport> rtr_solve(const SclsProblem& p, const SphereVec& r0,
                                            const RtrConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  cfg.validate();
  if (static_cast<std::size_t>(r0.size()) != p.dim()) {
    throw InvalidArgument("rtr_solve: starting point has the wrong dimension");
  }
  Counter count;
  PointCache pc = make_cache(p, r0.vec() / r0.vec().norm(), count);
  const double stop_grad = cfg.grad_tol * std::max(1.0, p.g.norm());

  RtrState st;
  st.delta = cfg.delta0;
  SolveReport rep;
  rep.solver = SolverKind::kRtr;
  rep.termination = Termination::kMaxIterations;
  rep.grad_norm_history.push_back(pc.grad_norm);
  rep.objective_history.push_back(pc.q);
  std::uint64_t accepted = 0;
  std::uint64_t degenerate = 0;

  for (st.outer_iters = 0; st.outer_iters < cfg.max_outer; ++st.outer_iters) {
    if (pc.grad_norm <= stop_grad) {
      rep.termination = Termination::kConverged;
      break;
    }
    const TcgResult step = tcg(p, pc, st.delta, cfg);
    st.hess_applies += step.hess_applies;
    count.half_applies += 2 * step.hess_applies;
    const double model_decrease =
        -(pc.grad.dot(step.step) + 0.5 * step.step.dot(step.hess_step));

    // r' - r = (s - c r) / nu with nu = ||r + s||, c = ||s||^2 / (nu + 1),
    // so the change in q is formed without cancellation.
    const double s2 = step.step.squaredNorm();
    const double nu = std::sqrt(1.0 + s2);
    const double shrink = s2 / (nu + 1.0);
    const Vector ls = p.lhat.apply(step.step);
    ++count.half_applies;
    const Vector ldelta = (ls - shrink * pc.lr) / nu;
    const double actual_decrease = -(2.0 * ldelta.dot(pc.lr - p.rhs) + ldelta.squaredNorm());

    double rho = 0.0;
    if (model_decrease > 0.0 && std::isfinite(model_decrease)) {
      rho = actual_decrease / model_decrease;
    } else {
      ++degenerate;
      rho = actual_decrease >= 0.0 ? 1.0 : -std::numeric_limits<double>::infinity();
    }
    if (!std::isfinite(rho) && rho != -std::numeric_limits<double>::infinity()) {
      ++degenerate;
      rho = actual_decrease >= 0.0 ? 1.0 : -std::numeric_limits<double>::infinity();
    }
    st.rho = rho;

    if (rho > cfg.c) {
      // Normalize by the computed norm so rounding in r never accumulates.
      Vector r_new = pc.r + step.step;
      const double norm = r_new.norm();
      r_new /= norm;
      Vector lr_new = (pc.lr + ls) / norm;
      pc = make_cache(p, std::move(r_new), std::move(lr_new), count);
      ++accepted;
    }
    const double s_norm = std::sqrt(s2);
    if (rho > 0.75) {
      if (s_norm >= 0.8 * st.delta) st.delta = std::min(cfg.tau2 * st.delta, cfg.delta_bar);
    } else if (rho < 0.1) {
      st.delta = cfg.tau1 * st.delta;
    }
    rep.grad_norm_history.push_back(pc.grad_norm);
    rep.objective_history.push_back(pc.q);
    if (st.delta < 1e-14 * cfg.delta_bar) {
      rep.termination = Termination::kStagnated;
      rep.diagnostics.push_back("trust radius collapsed below 1e-14 * delta_bar");
      ++st.outer_iters;
      break;
    }
  }
  if (rep.termination == Termination::kMaxIterations && pc.grad_norm <= stop_grad) {
    rep.termination = Termination::kConverged;
  }
  if (degenerate > 0) {
    std::ostringstream os;
    os << degenerate << " step(s) with a non-positive or non-finite model decrease";
    rep.diagnostics.push_back(os.str());
  }
  {
    std::ostringstream os;
    os << accepted << " accepted step(s)";
    rep.diagnostics.push_back(os.str());
  }

  st.r = pc.r;
  st.grad_norm = pc.grad_norm;
  rep.objective = pc.q;
  // Multiplier of the stationarity condition (H + lambda I) r = -g.
  rep.lambda_star = -pc.c;
  rep.kkt_residual = (pc.hr + rep.lambda_star * pc.r + p.g).norm() / std::max(1.0, p.g.norm());
  rep.iterations = st.outer_iters;
  rep.matvecs = count.matvecs();
  rep.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {SphereVec(pc.r / pc.r.norm()), std::move(rep)};
}

std::pair<SphereVec, SolveReport> rtr_solve_multistart(const SclsProblem& p,
                                                       const RtrConfig& cfg) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal;
  std::optional<std::pair<SphereVec, SolveReport>> best;
  std::uint64_t matvecs = 0;
  std::uint64_t iterations = 0;
  for (std::size_t s = 0; s < cfg.num_starts; ++s) {
    Vector r0;
    if (s == 0) {
      r0 = default_start(p).vec();
    } else {
      r0.resize(static_cast<Eigen::Index>(p.dim()));
      for (Eigen::Index i = 0; i < r0.size(); ++i) r0[i] = normal(rng);
    }
    auto run = rtr_solve(p, SphereVec::normalized(r0), cfg);
    matvecs += run.second.matvecs;
    iterations += run.second.iterations;
    if (!best || run.second.objective < best->second.objective) best = std::move(run);
  }
  best->second.matvecs = matvecs;
  best->second.iterations = iterations;
  best->second.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return std::move(*best);
}

}  // namespace spgls
