#include "spgls/oracle.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "spgls/errors.hpp"

namespace spgls {

namespace {

constexpr int kMaxSecularIterations = 200;

struct SecularRoot {
  double shift;  // sigma = lambda + d1 > 0
  int iterations;
};

// Solves sum_i gt_i^2 / (e_i + sigma)^2 = 1 for sigma in (0, hi], where
// e_i = d_i - d_1 >= 0. Newton on 1/sqrt(psi) - 1, clipped to a bisection
// bracket.
SecularRoot secular_root(const Vector& e, const Vector& gt, double hi) {
  auto eval = [&](double sigma, double& f, double& df) {
    double psi = 0.0;
    double dpsi = 0.0;
    for (Eigen::Index i = 0; i < e.size(); ++i) {
      if (gt[i] == 0.0) continue;
      const double t = gt[i] / (e[i] + sigma);
      psi += t * t;
      dpsi += t * t / (e[i] + sigma);
    }
    const double inv_sqrt = 1.0 / std::sqrt(psi);
    f = inv_sqrt - 1.0;
    df = inv_sqrt * inv_sqrt * inv_sqrt * dpsi;
  };

  double lo = 0.0;
  double sigma = hi;
  for (int it = 1; it <= kMaxSecularIterations; ++it) {
    double f = 0.0;
    double df = 0.0;
    eval(sigma, f, df);
    if (f == 0.0) return {sigma, it};
    if (f < 0.0) {
      lo = sigma;
    } else {
      hi = sigma;
    }
    if (hi - lo <= 1e-15 * hi) return {hi, it};
    double next = sigma - f / df;
    if (!(next > lo && next < hi) || !std::isfinite(next)) next = 0.5 * (lo + hi);
    if (next == sigma) return {sigma, it};
    sigma = next;
  }
  std::ostringstream os;
  os << "oracle secular equation did not converge; bracket [" << lo << ", " << hi << "]";
  throw NumericalFailure(os.str());
}

EigenForm decompose(const Matrix& h, const Vector& g) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(h);
  if (solver.info() != Eigen::Success) {
    throw NumericalFailure("oracle: symmetric eigendecomposition failed");
  }
  EigenForm ef{solver.eigenvalues(), solver.eigenvectors(), Vector()};
  const double recon = (h * ef.basis - ef.basis * ef.eigvals.asDiagonal()).norm();
  if (recon > 1e-9 * std::max(h.norm(), std::numeric_limits<double>::min())) {
    std::ostringstream os;
    os << "oracle: eigendecomposition reconstruction error " << recon << " exceeds 1e-9 ||H||";
    throw NumericalFailure(os.str());
  }
  ef.g_tilde = ef.basis.transpose() * g;
  return ef;
}

void certify(const Matrix& h, const Vector& g, const OracleSolution& sol) {
  const Vector& r = sol.r_star.vec();
  const double residual = (h * r + sol.lambda_star * r + g).norm();
  const double scale = std::max({1.0, g.norm(), h.norm()});
  const double psd_slack = 1e-12 * std::max(1.0, std::abs(sol.lambda_min));
  if (residual > 1e-10 * scale || sol.lambda_star < -sol.lambda_min - psd_slack ||
      std::abs(r.norm() - 1.0) > 1e-12) {
    std::ostringstream os;
    os << "oracle certificate failed: residual " << residual << ", lambda* " << sol.lambda_star
       << ", lambda_min " << sol.lambda_min << ", |r| " << r.norm();
    throw NumericalFailure(os.str());
  }
}

}  // namespace

double OracleSolution::kappa() const {
  const double den = lambda_min + lambda_star;
  if (hard_case || !(den > 0.0)) return std::numeric_limits<double>::infinity();
  return (lambda_max + lambda_star) / den;
}

Matrix dense_hessian(const SclsProblem& p, const OracleConfig& cfg) {
  if (p.dim() > cfg.size_cap) {
    std::ostringstream os;
    os << "oracle: n+1 = " << p.dim() << " exceeds the densification cap " << cfg.size_cap;
    throw SizeError(os.str());
  }
  const Matrix l = p.lhat.to_dense();
  const auto k = l.cols();
  Matrix h = Matrix::Zero(k, k);
  h.selfadjointView<Eigen::Lower>().rankUpdate(l.transpose());
  h.triangularView<Eigen::StrictlyUpper>() = h.transpose();
  return h;
}

EigenForm eigen_form(const SclsProblem& p, const OracleConfig& cfg) {
  return decompose(dense_hessian(p, cfg), p.g);
}

OracleSolution oracle_solve(const SclsProblem& p, const OracleConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  const Matrix h = dense_hessian(p, cfg);
  const EigenForm ef = decompose(h, p.g);
  const Vector& d = ef.eigvals;
  const Matrix& u = ef.basis;
  const Vector& gt = ef.g_tilde;
  const auto dim = d.size();
  const double d1 = d[0];
  const Vector e = (d.array() - d1).matrix();
  const double gnorm = p.g.norm();
  const double eig_tol = 1e-11 * std::max(1.0, std::max(std::abs(d1), std::abs(d[dim - 1])));

  Eigen::Index s_count = 0;
  while (s_count < dim && e[s_count] <= eig_tol) ++s_count;
  const double gs_norm = gt.head(s_count).norm();

  double pinv_sq = 0.0;
  for (Eigen::Index i = s_count; i < dim; ++i) pinv_sq += (gt[i] / e[i]) * (gt[i] / e[i]);

  const bool hard = gs_norm <= 1e-12 * gnorm && pinv_sq <= 1.0;

  Vector coeffs(dim);
  double lambda = 0.0;
  int multiplicity = 1;
  int iterations = 0;
  Vector particular;
  Matrix min_space;
  if (!hard) {
    const SecularRoot root = secular_root(e, gt, std::max(gnorm, std::numeric_limits<double>::min()));
    iterations = root.iterations;
    for (Eigen::Index i = 0; i < dim; ++i) coeffs[i] = -gt[i] / (e[i] + root.shift);
    lambda = root.shift - d1;
  } else {
    lambda = -d1;
    coeffs.setZero();
    for (Eigen::Index i = s_count; i < dim; ++i) coeffs[i] = -gt[i] / e[i];
    particular = u * coeffs;
    min_space = u.leftCols(s_count);
    const double tau = std::sqrt(std::max(0.0, 1.0 - pinv_sq));
    Vector plus = coeffs;
    Vector minus = coeffs;
    plus[0] = tau;
    minus[0] = -tau;
    const Vector r_plus = u * plus;
    const Vector r_minus = u * minus;
    const double q_plus = p.objective(r_plus);
    const double q_minus = p.objective(r_minus);
    const double tie_tol = 1e-12 * std::max(1.0, std::abs(q_plus));
    if (std::abs(q_plus - q_minus) <= tie_tol) {
      coeffs = plus;
      multiplicity = tau > 0.0 ? 2 : 1;
    } else {
      coeffs = q_plus < q_minus ? plus : minus;
    }
    if (s_count > 1 && tau > 0.0) multiplicity = 2;
  }

  Vector r = u * coeffs;
  r /= r.norm();
  OracleSolution sol{SphereVec(r)};
  sol.lambda_star = lambda;
  sol.value = p.objective(r);
  sol.hard_case = hard;
  sol.multiplicity = multiplicity;
  sol.lambda_min = d1;
  sol.lambda_max = d[dim - 1];
  sol.pseudo_inverse_norm = std::sqrt(pinv_sq);
  sol.particular = std::move(particular);
  sol.min_eigenspace = std::move(min_space);
  certify(h, p.g, sol);

  SolveReport& rep = sol.report;
  rep.solver = SolverKind::kOracle;
  rep.termination = Termination::kConverged;
  rep.objective = sol.value;
  rep.lambda_star = lambda;
  rep.kkt_residual = (h * r + lambda * r + p.g).norm() / std::max(1.0, gnorm);
  rep.iterations = static_cast<std::uint64_t>(iterations);
  rep.hard_case = hard;
  const double kap = sol.kappa();
  if (std::isfinite(kap)) rep.kappa_estimate = kap;
  rep.objective_history = {sol.value};
  rep.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return sol;
}

double brute_force_check(const SclsProblem& p, std::size_t grid) {
  const std::size_t dim = p.dim();
  if (dim != 2 && dim != 3) {
    throw UnsupportedDimension("brute_force_check supports n+1 in {2, 3} only");
  }
  if (grid < 4) throw InvalidArgument("brute_force_check: grid must be at least 4");
  OracleConfig cfg;
  const Matrix h = dense_hessian(p, cfg);
  const Vector& g = p.g;
  auto q = [&](const Vector& r) { return r.dot(h * r) + 2.0 * g.dot(r) + p.p; };

  constexpr double pi = std::numbers::pi;
  double best = std::numeric_limits<double>::infinity();
  Vector r(static_cast<Eigen::Index>(dim));
  if (dim == 2) {
    for (std::size_t k = 0; k < grid; ++k) {
      const double t = 2.0 * pi * static_cast<double>(k) / static_cast<double>(grid);
      r << std::cos(t), std::sin(t);
      best = std::min(best, q(r));
    }
  } else {
    const std::size_t azimuth = 2 * grid;
    for (std::size_t i = 0; i <= grid; ++i) {
      const double theta = pi * static_cast<double>(i) / static_cast<double>(grid);
      for (std::size_t j = 0; j < azimuth; ++j) {
        const double phi = 2.0 * pi * static_cast<double>(j) / static_cast<double>(azimuth);
        r << std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta);
        best = std::min(best, q(r));
      }
    }
  }
  return best;
}

SpgSolution solve_spg_small(const Dataset& d, const OracleConfig& cfg) {
  const SclsProblem p = build_scls(d);
  OracleSolution sol = oracle_solve(p, cfg);

  SphereVec chosen = sol.r_star;
  if (std::abs(1.0 - chosen.alpha_tilde()) < kApexEpsilon) {
    // The apex is never the unique optimum when the game attains its
    // optimum; search the rest of the optimal set.
    bool found = false;
    if (sol.hard_case && sol.multiplicity > 1) {
      const double tau2 = std::max(0.0, 1.0 - sol.particular.squaredNorm());
      const double tau = std::sqrt(tau2);
      for (Eigen::Index j = 0; j < sol.min_eigenspace.cols() && !found; ++j) {
        for (double sign : {-1.0, 1.0}) {
          Vector cand = sol.particular + sign * tau * sol.min_eigenspace.col(j);
          cand /= cand.norm();
          const double val = p.objective(cand);
          if (std::abs(1.0 - cand[cand.size() - 1]) >= kApexEpsilon &&
              val <= sol.value + 1e-12 * std::max(1.0, std::abs(sol.value))) {
            chosen = SphereVec(cand);
            found = true;
            break;
          }
        }
      }
    }
    if (!found) {
      throw AssumptionViolated(
          "the apex alpha~ = 1 is the only optimum: the game infimum ||z - y||^2 is "
          "approached as alpha -> infinity but not attained",
          sol.value);
    }
  }

  SpgSolution out{recover_spg(d, chosen), 0.0, std::move(sol)};
  out.value = eval_spg_objective(d, out.point, 1e-6);
  return out;
}

Dataset hard_case_instance(std::size_t m, std::size_t n, std::uint64_t seed, double pinv_norm,
                           double gamma) {
  if (m < 1 || n < 1) throw InvalidArgument("hard_case_instance: need m >= 1 and n >= 1");
  if (!(pinv_norm > 0.0) || !(gamma > 0.0)) {
    throw InvalidArgument("hard_case_instance: pinv_norm and gamma must be positive");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const auto mi = static_cast<Eigen::Index>(m);
  const auto ni = static_cast<Eigen::Index>(n);
  Matrix x(mi, ni);
  for (Eigen::Index j = 0; j < ni; ++j) {
    for (Eigen::Index i = 0; i < mi; ++i) x(i, j) = normal(rng);
  }
  Vector z(mi);
  for (auto& v : z) v = normal(rng);
  Matrix l(mi, ni + 1);
  l.leftCols(ni) = (std::sqrt(gamma) / 2.0) * x;
  l.col(ni) = z / 2.0;
  const Matrix h = l.transpose() * l;
  const EigenForm ef = decompose(h, Vector::Zero(ni + 1));
  const Vector& d = ef.eigvals;
  if (d.size() > 1 && d[1] - d[0] <= 1e-8 * std::max(1.0, d[d.size() - 1])) {
    throw NumericalFailure("hard_case_instance: minimum eigenvalue is not simple");
  }
  // g = L^T b, so b orthogonal to L u_1 makes g orthogonal to u_1.
  const Vector lu = l * ef.basis.col(0);
  Vector b(mi);
  for (auto& v : b) v = normal(rng);
  if (lu.squaredNorm() > 0.0) b -= (lu.dot(b) / lu.squaredNorm()) * lu;
  const Vector gt = ef.basis.transpose() * (l.transpose() * b);
  double norm_sq = 0.0;
  for (Eigen::Index i = 1; i < gt.size(); ++i) {
    norm_sq += (gt[i] / (d[i] - d[0])) * (gt[i] / (d[i] - d[0]));
  }
  if (!(norm_sq > 0.0)) throw NumericalFailure("hard_case_instance: degenerate gradient");
  b *= pinv_norm / std::sqrt(norm_sq);
  Vector y = z / 2.0 - b;
  return Dataset(SparseMatrix::from_dense(x), std::move(y), std::move(z), gamma);
}

}  // namespace spgls
