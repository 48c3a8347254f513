#include "spgls/krylov.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "spgls/errors.hpp"

namespace spgls {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr int kMaxNewton = 200;
constexpr double kBreakdownFactor = 1e-14;
constexpr double kSelectiveOverlap = 1e-13;

// Number of eigenvalues of T strictly below x (Sturm sequence of the LDL^T
// pivots of T - x I).
std::size_t sturm_count(const Tridiagonal& t, double x) {
  std::size_t count = 0;
  double q = 1.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double b2 = i == 0 ? 0.0 : t.offdiag[i - 1] * t.offdiag[i - 1];
    q = (t.diag[i] - x) - (i == 0 ? 0.0 : b2 / q);
    if (q == 0.0) q = -kEps * (std::abs(t.diag[i]) + std::abs(x) + kEps);
    if (q < 0.0) ++count;
  }
  return count;
}

std::pair<double, double> gershgorin(const Tridiagonal& t) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 0; i < t.size(); ++i) {
    double rad = 0.0;
    if (i > 0) rad += std::abs(t.offdiag[i - 1]);
    if (i + 1 < t.size()) rad += std::abs(t.offdiag[i]);
    lo = std::min(lo, t.diag[i] - rad);
    hi = std::max(hi, t.diag[i] + rad);
  }
  return {lo, hi};
}

// Bisection for the eigenvalue with the given 0-based rank.
double tridiag_eigenvalue(const Tridiagonal& t, std::size_t rank) {
  if (t.size() == 0) throw InvalidArgument("empty tridiagonal matrix");
  auto [lo, hi] = gershgorin(t);
  const double scale = std::max({std::abs(lo), std::abs(hi), std::numeric_limits<double>::min()});
  lo -= kEps * scale;
  hi += kEps * scale;
  for (int it = 0; it < 200 && hi - lo > 2.0 * kEps * scale; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (sturm_count(t, mid) > rank) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// LDL^T of the tridiagonal T + shift I. Returns false if a pivot is not
// positive (the shifted matrix is not positive definite).
struct TridiagLdl {
  std::vector<double> d;
  std::vector<double> l;

  bool factor(const Tridiagonal& t, double shift) {
    const std::size_t k = t.size();
    d.assign(k, 0.0);
    l.assign(k > 0 ? k - 1 : 0, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
      double piv = t.diag[i] + shift;
      if (i > 0) piv -= l[i - 1] * l[i - 1] * d[i - 1];
      if (!(piv > 0.0) || !std::isfinite(piv)) return false;
      d[i] = piv;
      if (i + 1 < k) l[i] = t.offdiag[i] / piv;
    }
    return true;
  }

  void solve(Vector& x) const {
    const auto k = static_cast<Eigen::Index>(d.size());
    for (Eigen::Index i = 1; i < k; ++i) x[i] -= l[static_cast<std::size_t>(i - 1)] * x[i - 1];
    for (Eigen::Index i = 0; i < k; ++i) x[i] /= d[static_cast<std::size_t>(i)];
    for (Eigen::Index i = k - 2; i >= 0; --i) x[i] -= l[static_cast<std::size_t>(i)] * x[i + 1];
  }
};

Vector tridiag_multiply(const Tridiagonal& t, const Vector& h) {
  const auto k = static_cast<Eigen::Index>(t.size());
  Vector out(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto iu = static_cast<std::size_t>(i);
    double v = t.diag[iu] * h[i];
    if (i > 0) v += t.offdiag[iu - 1] * h[i - 1];
    if (i + 1 < k) v += t.offdiag[iu] * h[i + 1];
    out[i] = v;
  }
  return out;
}

double model_value(const Tridiagonal& t, double gnorm, const Vector& h) {
  return h.dot(tridiag_multiply(t, h)) + 2.0 * gnorm * h[0];
}

// Unit eigenvector of T for the eigenvalue theta by inverse iteration.
Vector tridiag_eigenvector(const Tridiagonal& t, double theta) {
  const auto k = static_cast<Eigen::Index>(t.size());
  const auto [glo, ghi] = gershgorin(t);
  const double scale = std::max({std::abs(glo), std::abs(ghi), 1.0});
  Vector x = Vector::Ones(k) / std::sqrt(static_cast<double>(k));
  TridiagLdl ldl;
  double shift = -theta + 1e3 * kEps * scale;
  while (!ldl.factor(t, shift)) shift += 1e3 * kEps * scale + std::abs(shift) * 1e-12;
  for (int it = 0; it < 4; ++it) {
    ldl.solve(x);
    x /= x.norm();
  }
  return x;
}

// ---------------------------------------------------------------------------
// Dense projected solve used by the nested-restart cycles.

struct SmallSolution {
  Vector h;
  double lambda;
};

SmallSolution solve_small_sphere(const Matrix& hs, const Vector& gs) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(hs);
  if (eig.info() != Eigen::Success) throw NumericalFailure("restart: projected eigensolve failed");
  const Vector& d = eig.eigenvalues();
  const Matrix& u = eig.eigenvectors();
  const Vector gt = u.transpose() * gs;
  const Vector e = (d.array() - d[0]).matrix();
  const double gnorm = gs.norm();
  const double eig_tol = 1e-11 * std::max({1.0, std::abs(d[0]), std::abs(d[d.size() - 1])});
  Eigen::Index s = 0;
  while (s < d.size() && e[s] <= eig_tol) ++s;
  double pinv = 0.0;
  for (Eigen::Index i = s; i < d.size(); ++i) pinv += (gt[i] / e[i]) * (gt[i] / e[i]);
  Vector c(d.size());
  if (gt.head(s).norm() <= 1e-12 * gnorm && pinv <= 1.0) {
    c.setZero();
    for (Eigen::Index i = s; i < d.size(); ++i) c[i] = -gt[i] / e[i];
    c[0] = std::sqrt(std::max(0.0, 1.0 - pinv));
    return {u * c, -d[0]};
  }
  double lo = 0.0;
  double hi = std::max(gnorm, std::numeric_limits<double>::min());
  double sigma = hi;
  for (int it = 0; it < kMaxNewton; ++it) {
    double psi = 0.0;
    double dpsi = 0.0;
    for (Eigen::Index i = 0; i < d.size(); ++i) {
      const double t = gt[i] / (e[i] + sigma);
      psi += t * t;
      dpsi += t * t / (e[i] + sigma);
    }
    const double f = 1.0 / std::sqrt(psi) - 1.0;
    if (f == 0.0) break;
    (f < 0.0 ? lo : hi) = sigma;
    if (hi - lo <= 1e-15 * hi) break;
    double next = sigma - f / (dpsi / (psi * std::sqrt(psi)));
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == sigma) break;
    sigma = next;
  }
  for (Eigen::Index i = 0; i < d.size(); ++i) c[i] = -gt[i] / (e[i] + sigma);
  return {u * c, sigma - d[0]};
}

// ---------------------------------------------------------------------------

struct RunResult {
  Vector r;
  double lambda = 0.0;
  std::uint64_t iterations = 0;
  std::uint64_t matvecs = 0;
  bool converged = false;
  bool breakdown = false;
  bool hard_case = false;
  std::vector<double> history;
  std::optional<double> kappa;
  double lifted_residual = std::numeric_limits<double>::infinity();
};

// Lifted residual ||(H + lambda I) r + g_lin|| / max(1, ||g||) for r = Q h,
// using the stored H q_j products.
double lifted_residual(const LanczosState& st, const Vector& h, double lambda,
                       const Vector& g_lin, double g_scale, Vector& r_out) {
  const auto n1 = g_lin.size();
  Vector r = Vector::Zero(n1);
  Vector hr = Vector::Zero(n1);
  for (Eigen::Index j = 0; j < h.size(); ++j) {
    r.noalias() += h[j] * st.basis[static_cast<std::size_t>(j)];
    hr.noalias() += h[j] * st.h_basis[static_cast<std::size_t>(j)];
  }
  const double nr = r.norm();
  r /= nr;
  hr /= nr;
  r_out = r;
  return (hr + lambda * r + g_lin).norm() / g_scale;
}

// Nested restart cycles: each cycle spans {r, residual, H residual, ...} and
// solves the projected sphere problem densely. The previous iterate is in the
// new subspace, so the objective cannot increase.
void run_restart_cycles(const SclsProblem& p, const Vector& g_lin, const KrylovConfig& cfg,
                        std::size_t budget, double g_scale, RunResult& res) {
  const auto n1 = static_cast<Eigen::Index>(p.dim());
  const std::size_t cycle = std::max<std::size_t>(*cfg.restart_every, 2);
  Vector scratch(static_cast<Eigen::Index>(p.lhat.rows()));
  Vector hr(n1);
  p.lhat.hessian_apply(res.r, hr, scratch);
  ++res.matvecs;
  while (res.iterations < budget) {
    std::vector<Vector> v;
    std::vector<Vector> hv;
    v.push_back(res.r);
    hv.push_back(hr);
    Vector next = hr + res.lambda * res.r + g_lin;
    for (std::size_t j = 0; j < cycle && res.iterations < budget; ++j) {
      for (int pass = 0; pass < 2; ++pass) {
        for (const auto& q : v) next -= q.dot(next) * q;
      }
      const double nn = next.norm();
      if (!(nn > kBreakdownFactor * std::max(1.0, hv.front().norm()))) break;
      v.push_back(next / nn);
      Vector hq(n1);
      p.lhat.hessian_apply(v.back(), hq, scratch);
      ++res.matvecs;
      ++res.iterations;
      hv.push_back(hq);
      next = hq;
    }
    const auto b = static_cast<Eigen::Index>(v.size());
    Matrix hs(b, b);
    Vector gs(b);
    for (Eigen::Index i = 0; i < b; ++i) {
      gs[i] = v[static_cast<std::size_t>(i)].dot(g_lin);
      for (Eigen::Index j = 0; j <= i; ++j) {
        const double val = 0.5 * (v[static_cast<std::size_t>(i)].dot(hv[static_cast<std::size_t>(j)]) +
                                  v[static_cast<std::size_t>(j)].dot(hv[static_cast<std::size_t>(i)]));
        hs(i, j) = val;
        hs(j, i) = val;
      }
    }
    const SmallSolution sol = solve_small_sphere(hs, gs);
    Vector r = Vector::Zero(n1);
    Vector hrn = Vector::Zero(n1);
    for (Eigen::Index j = 0; j < b; ++j) {
      r.noalias() += sol.h[j] * v[static_cast<std::size_t>(j)];
      hrn.noalias() += sol.h[j] * hv[static_cast<std::size_t>(j)];
    }
    const double nr = r.norm();
    res.r = r / nr;
    hr = hrn / nr;
    res.lambda = sol.lambda;
    res.history.push_back(res.r.dot(hr) + 2.0 * g_lin.dot(res.r) + p.p);
    res.lifted_residual = (hr + res.lambda * res.r + g_lin).norm() / g_scale;
    if (res.lifted_residual <= cfg.tol) {
      res.converged = true;
      return;
    }
    if (b == 1) return;  // residual direction vanished; nothing left to add
  }
}

RunResult run_gltr(const SclsProblem& p, const Vector& g_lin, const KrylovConfig& cfg,
                   std::size_t max_iter) {
  RunResult res;
  const double gnorm = g_lin.norm();
  const double g_scale = std::max(1.0, p.g.norm());
  LanczosState st = lanczos_init(g_lin, cfg.reorth);
  const std::size_t restart_at =
      cfg.restart_every ? std::max<std::size_t>(*cfg.restart_every, 1) : max_iter;

  TridiagSphereSolution sol;
  for (std::size_t it = 1; it <= max_iter; ++it) {
    lanczos_step(p, st);
    ++res.matvecs;
    ++res.iterations;
    sol = solve_tridiag_sphere(st.t, gnorm);
    res.hard_case = sol.hard_case;
    res.lambda = sol.lambda;
    res.history.push_back(model_value(st.t, gnorm, sol.h) + p.p);

    // Cheap Lanczos estimate |beta_k h_k| of the lifted residual.
    const double estimate =
        st.breakdown ? 0.0 : std::abs(st.next_beta * sol.h[sol.h.size() - 1]) / g_scale;
    const bool check = st.breakdown || estimate <= cfg.tol || it % cfg.check_every == 0 ||
                       it == max_iter || it == restart_at;
    res.breakdown = st.breakdown;
    if (check) {
      res.lifted_residual = lifted_residual(st, sol.h, sol.lambda, g_lin, g_scale, res.r);
      if (res.lifted_residual <= cfg.tol) {
        res.converged = true;
        break;
      }
    }
    if (st.breakdown) break;
    if (it == restart_at && cfg.restart_every) {
      run_restart_cycles(p, g_lin, cfg, max_iter, g_scale, res);
      break;
    }
  }
  if (!res.history.empty() && res.r.size() == 0) {
    res.lifted_residual = lifted_residual(st, sol.h, sol.lambda, g_lin, g_scale, res.r);
  }
  const double theta_max = tridiag_max_eigenvalue(st.t);
  const double den = sol.theta_min + sol.lambda;
  if (den > 0.0) res.kappa = (theta_max + sol.lambda) / den;
  return res;
}

}  // namespace

Matrix Tridiagonal::to_dense() const {
  const auto k = static_cast<Eigen::Index>(size());
  Matrix t = Matrix::Zero(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    t(i, i) = diag[static_cast<std::size_t>(i)];
    if (i + 1 < k) {
      t(i, i + 1) = offdiag[static_cast<std::size_t>(i)];
      t(i + 1, i) = offdiag[static_cast<std::size_t>(i)];
    }
  }
  return t;
}

double tridiag_min_eigenvalue(const Tridiagonal& t) { return tridiag_eigenvalue(t, 0); }

double tridiag_max_eigenvalue(const Tridiagonal& t) {
  return tridiag_eigenvalue(t, t.size() - 1);
}

std::size_t KrylovConfig::effective_max_iter(std::size_t dim) const {
  if (max_iter > 0) return max_iter;
  const auto dflt = static_cast<std::size_t>(std::ceil(10.0 * std::sqrt(static_cast<double>(dim))));
  return std::min(dim, dflt);
}

void KrylovConfig::validate() const {
  if (!(tol > 0.0)) throw InvalidArgument("KrylovConfig: tol must be positive");
  if (check_every < 1) throw InvalidArgument("KrylovConfig: check_every must be at least 1");
  if (restart_every && *restart_every < 1) {
    throw InvalidArgument("KrylovConfig: restart_every must be at least 1");
  }
}

LanczosState lanczos_init(ConstVectorRef start, Reorthogonalization reorth) {
  const double nrm = start.norm();
  if (!(nrm > 0.0) || !std::isfinite(nrm)) {
    throw InvalidArgument("lanczos_init: start vector must be nonzero and finite");
  }
  LanczosState st;
  st.basis.push_back(start / nrm);
  st.g_norm = nrm;
  st.reorth = reorth;
  return st;
}

void lanczos_step(const SclsProblem& p, LanczosState& st) {
  if (st.breakdown) throw StateError("lanczos_step called after breakdown");
  const std::size_t j = st.k;
  const Vector& q = st.basis[j];
  Vector scratch(static_cast<Eigen::Index>(p.lhat.rows()));
  Vector w(q.size());
  p.lhat.hessian_apply(q, w, scratch);
  st.h_basis.push_back(w);

  if (j > 0) {
    st.t.offdiag.push_back(st.next_beta);
    w -= st.next_beta * st.basis[j - 1];
  }
  const double alpha = q.dot(w);
  w -= alpha * q;

  if (st.reorth == Reorthogonalization::kFull) {
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& qi : st.basis) w -= qi.dot(w) * qi;
    }
  } else {
    // Subtract only the components that are not already negligible.
    const double floor = kSelectiveOverlap * std::max(w.norm(), std::numeric_limits<double>::min());
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& qi : st.basis) {
        const double c = qi.dot(w);
        if (std::abs(c) > floor) w -= c * qi;
      }
    }
  }

  const double beta = w.norm();
  st.t.diag.push_back(alpha);
  st.h_scale = std::max({st.h_scale, std::abs(alpha), beta});
  st.k = j + 1;
  if (beta <= kBreakdownFactor * st.h_scale || st.k == static_cast<std::size_t>(q.size())) {
    st.breakdown = true;
    st.next_beta = 0.0;
    return;
  }
  st.next_beta = beta;
  st.basis.push_back(w / beta);
}

TridiagSphereSolution solve_tridiag_sphere(const Tridiagonal& t, double gnorm) {
  if (!(gnorm >= 0.0)) throw InvalidArgument("solve_tridiag_sphere: gnorm must be nonnegative");
  const std::size_t k = t.size();
  if (k == 0) throw InvalidArgument("solve_tridiag_sphere: empty tridiagonal matrix");
  TridiagSphereSolution out;
  const double theta = tridiag_min_eigenvalue(t);
  out.theta_min = theta;
  const auto [glo, ghi] = gershgorin(t);
  const double scale = std::max({std::abs(glo), std::abs(ghi), gnorm, std::numeric_limits<double>::min()});
  const auto ks = static_cast<Eigen::Index>(k);

  auto hard_case = [&](const Vector& particular) {
    Vector v = tridiag_eigenvector(t, theta);
    // Remove the component of the particular solution along v.
    Vector pcl = particular - v.dot(particular) * v;
    const double tau = std::sqrt(std::max(0.0, 1.0 - pcl.squaredNorm()));
    Vector plus = pcl + tau * v;
    Vector minus = pcl - tau * v;
    out.h = model_value(t, gnorm, plus) <= model_value(t, gnorm, minus) ? plus : minus;
    out.h /= out.h.norm();
    out.lambda = -theta;
    out.hard_case = true;
    return out;
  };

  if (gnorm == 0.0) return hard_case(Vector::Zero(ks));

  TridiagLdl ldl;
  double lo = 0.0;
  double hi = gnorm;
  double sigma = hi;
  Vector h(ks);
  for (int it = 1; it <= kMaxNewton; ++it) {
    out.newton_iters = it;
    if (!ldl.factor(t, sigma - theta)) {
      // theta slightly overestimated; the shift is too small.
      lo = sigma;
      sigma = 0.5 * (lo + hi);
      if (hi - lo <= 4.0 * kEps * scale) break;
      continue;
    }
    h.setZero();
    h[0] = -gnorm;
    ldl.solve(h);
    const double hn = h.norm();
    if (std::abs(hn - 1.0) <= 1e-14) {
      out.h = h / hn;
      out.lambda = sigma - theta;
      return out;
    }
    (hn > 1.0 ? lo : hi) = sigma;
    // The shift sigma - theta is only resolved to about eps * scale.
    const double resolution = 4.0 * kEps * scale;
    if (hi - lo <= std::max(1e-15 * hi, resolution) || hi <= resolution) break;
    Vector v = h;
    ldl.solve(v);
    const double hv = h.dot(v);
    double next = sigma + (hn - 1.0) * hn * hn / hv;
    if (!(next > lo && next < hi) || !std::isfinite(next) ||
        std::abs(next - sigma) < resolution) {
      next = 0.5 * (lo + hi);
    }
    if (next == sigma) break;
    sigma = next;
  }
  if (out.newton_iters >= kMaxNewton) {
    std::ostringstream os;
    os << "solve_tridiag_sphere: Newton did not converge in " << kMaxNewton
       << " iterations; bracket [" << lo << ", " << hi << "]";
    throw NumericalFailure(os.str());
  }
  // The bracket collapsed. Either the root is resolved to rounding, or the
  // norm stays below one as the shift goes to zero (hard case on T).
  sigma = hi;
  if (!ldl.factor(t, sigma - theta)) {
    sigma = std::max(sigma, 4.0 * kEps * scale);
    while (!ldl.factor(t, sigma - theta)) sigma *= 2.0;
  }
  h.setZero();
  h[0] = -gnorm;
  ldl.solve(h);
  const double hn = h.norm();
  if (hn < 1.0 - 1e-8 && hi <= 1e-10 * scale) return hard_case(h);
  out.lambda = sigma - theta;
  // Near the hard case ||h|| is too sensitive to sigma for the bracket to
  // pin it to one. Moving along the minimum eigenvector fixes the norm while
  // changing the residual only by delta (theta_1 + lambda), which is tiny.
  const Vector v = tridiag_eigenvector(t, theta);
  const double vh = v.dot(h);
  const double disc = vh * vh - (hn * hn - 1.0);
  if (disc >= 0.0) {
    const double root = std::sqrt(disc);
    const double delta = vh >= 0.0 ? -vh + root : -vh - root;
    out.h = h + delta * v;
    out.h /= out.h.norm();
  } else {
    out.h = h / hn;
  }
  return out;
}

std::pair<SphereVec, SolveReport> krylov_solve(const SclsProblem& p, const KrylovConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  cfg.validate();
  const double gnorm = p.g.norm();
  if (gnorm == 0.0) {
    throw CenteredProblem(
        "krylov_solve: g = 0 (y = z/2); the minimizer is a minimum eigenvector of H, which no "
        "Krylov space built from g contains. Use the oracle.");
  }
  const std::size_t dim = p.dim();
  const std::size_t max_iter = cfg.effective_max_iter(dim);

  RunResult best = run_gltr(p, p.g, cfg, max_iter);
  std::uint64_t matvecs = best.matvecs;
  std::uint64_t iterations = best.iterations;
  std::vector<std::string> diagnostics;
  bool hard_case = best.hard_case;
  bool unconverged_breakdown = best.breakdown && !best.converged;
  const bool early_breakdown = best.breakdown && best.iterations < dim;
  if (best.breakdown) {
    std::ostringstream os;
    os << "invariant subspace found after " << best.iterations << " Lanczos steps";
    if (early_breakdown && !cfg.perturb_seed) {
      os << "; the hard case is not excluded without perturb_seed";
    }
    diagnostics.push_back(os.str());
  }

  if (cfg.perturb_seed) {
    std::mt19937_64 rng(*cfg.perturb_seed);
    std::normal_distribution<double> normal;
    double q_best = p.objective(best.r);
    double magnitude = 1e-10 * gnorm;
    for (int attempt = 0; attempt < 2; ++attempt, magnitude *= 100.0) {
      Vector dir(static_cast<Eigen::Index>(dim));
      for (Eigen::Index i = 0; i < dir.size(); ++i) dir[i] = normal(rng);
      dir /= dir.norm();
      const Vector g_pert = p.g + magnitude * dir;
      // The false optimum leaves a residual of order sigma, so the restart
      // must resolve below it.
      KrylovConfig pert_cfg = cfg;
      pert_cfg.tol = std::min(cfg.tol, 1e-2 * magnitude / std::max(1.0, gnorm));
      RunResult cand;
      try {
        cand = run_gltr(p, g_pert, pert_cfg, max_iter);
      } catch (const NumericalFailure& e) {
        diagnostics.push_back(std::string("perturbed restart failed: ") + e.what());
        continue;
      }
      matvecs += cand.matvecs;
      iterations += cand.iterations;
      const double q_cand = p.objective(cand.r);
      const double margin = 1e-12 * std::max(1.0, std::abs(q_best));
      const bool improved = q_cand < q_best - margin;
      if (improved) {
        std::ostringstream os;
        os << "perturbed restart (sigma = " << magnitude << ") improved the objective by "
           << (q_best - q_cand) << "; hard case suspected";
        diagnostics.push_back(os.str());
        hard_case = true;
        // Multiplier for the unperturbed problem.
        cand.lambda = multiplier_estimate(p, cand.r);
        ++matvecs;
        best = std::move(cand);
        q_best = q_cand;
        unconverged_breakdown = false;
      }
      // A perturbation below the tolerance can converge without ever seeing
      // the minimum eigendirection, so only an improvement ends the retries.
      if (improved) break;
    }
  } else if (unconverged_breakdown) {
    std::ostringstream os;
    os << "krylov_solve: breakdown with unconverged lifted residual " << best.lifted_residual
       << "; set perturb_seed to restart from a perturbed g";
    throw NumericalFailure(os.str());
  }

  SphereVec r = SphereVec::normalized(best.r);
  SolveReport rep;
  rep.solver = SolverKind::kKrylov;
  rep.objective = p.objective(r.vec());
  rep.lambda_star = best.lambda;
  rep.kkt_residual = kkt_residual(p, r.vec(), best.lambda);
  ++matvecs;
  rep.matvecs = matvecs;
  rep.iterations = iterations;
  rep.kappa_estimate = best.kappa;
  rep.hard_case = hard_case;
  rep.invariant_subspace = early_breakdown;
  rep.objective_history = std::move(best.history);
  rep.diagnostics = std::move(diagnostics);
  if (rep.kkt_residual <= cfg.tol) {
    rep.termination = Termination::kConverged;
  } else if (best.breakdown) {
    rep.termination = Termination::kStagnated;
  } else {
    rep.termination = Termination::kMaxIterations;
  }
  rep.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {std::move(r), std::move(rep)};
}

}  // namespace spgls
