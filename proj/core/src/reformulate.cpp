#include "spgls/reformulate.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "spgls/errors.hpp"

namespace spgls {

namespace {

double scls_value_from_data(const Dataset& d, const Vector& r) {
  const auto n = static_cast<Eigen::Index>(d.n());
  Vector res(static_cast<Eigen::Index>(d.m()));
  d.X().multiply(r.head(n), res, std::sqrt(d.gamma()) / 2.0);
  res += (r[n] / 2.0) * d.z();
  res -= d.y() - d.z() / 2.0;
  return res.squaredNorm();
}

void check_point(const Dataset& d, const SpgPoint& pt, double tol) {
  if (static_cast<std::size_t>(pt.w.size()) != d.n()) {
    throw InvalidArgument("SpgPoint: w has wrong length");
  }
  if (!pt.w.allFinite() || !std::isfinite(pt.alpha)) {
    throw InvalidArgument("SpgPoint: non-finite entries");
  }
  if (pt.alpha < 0.0) throw InvalidArgument("SpgPoint: alpha must be nonnegative");
  const double ww = pt.w.squaredNorm();
  if (std::abs(ww - d.gamma() * pt.alpha) > tol * std::max(1.0, ww)) {
    std::ostringstream os;
    os << "SpgPoint violates w^T w = gamma*alpha: w^T w = " << ww
       << ", gamma*alpha = " << d.gamma() * pt.alpha;
    throw InvalidArgument(os.str());
  }
}

}  // namespace

Dataset::Dataset(SparseMatrix x, Vector y, Vector z, double gamma)
    : Dataset(std::make_shared<const SparseMatrix>(std::move(x)), std::move(y), std::move(z),
              gamma) {}

Dataset::Dataset(std::shared_ptr<const SparseMatrix> x, Vector y, Vector z, double gamma)
    : x_(std::move(x)), y_(std::move(y)), z_(std::move(z)), gamma_(gamma) {
  if (!x_) throw InvalidArgument("Dataset: null data matrix");
  if (x_->rows() < 1 || x_->cols() < 1) throw InvalidArgument("Dataset: need m >= 1 and n >= 1");
  if (static_cast<std::size_t>(y_.size()) != x_->rows() ||
      static_cast<std::size_t>(z_.size()) != x_->rows()) {
    throw InvalidArgument("Dataset: label vectors must have length m");
  }
  if (!(gamma_ > 0.0) || !std::isfinite(gamma_)) {
    throw InvalidArgument("Dataset: gamma must be positive and finite");
  }
  if (!x_->all_finite() || !y_.allFinite() || !z_.allFinite()) {
    throw InvalidArgument("Dataset: non-finite entries");
  }
}

SphereVec::SphereVec(Vector r, double tol) : r_(std::move(r)) {
  if (r_.size() < 1 || !r_.allFinite()) throw InvalidArgument("SphereVec: empty or non-finite");
  const double dev = std::abs(r_.squaredNorm() - 1.0);
  if (dev > tol) {
    std::ostringstream os;
    os << "SphereVec: point is off the unit sphere (| ||r||^2 - 1 | = " << dev << ")";
    throw InvalidArgument(os.str());
  }
}

SphereVec SphereVec::normalized(const Vector& v) {
  const double nrm = v.norm();
  if (!(nrm > 0.0) || !std::isfinite(nrm)) {
    throw InvalidArgument("SphereVec::normalized: zero or non-finite vector");
  }
  return SphereVec(v / nrm);
}

double SclsProblem::objective(ConstVectorRef r) const {
  return (lhat.apply(r) - rhs).squaredNorm();
}

double SclsProblem::objective_quadratic(ConstVectorRef r) const {
  return r.dot(lhat.hessian_apply(r)) + 2.0 * g.dot(r) + p;
}

SclsProblem build_scls(const Dataset& d) {
  ScaledAugmentedOperator lhat(d.X_shared(), d.z(), d.gamma());
  Vector rhs = d.y() - d.z() / 2.0;
  Vector g = lhat.apply_transpose(-rhs);
  const double p = rhs.squaredNorm();
  lhat.reset_counters();
  return SclsProblem{std::move(lhat), std::move(rhs), std::move(g), p};
}

double eval_spg_objective(const Dataset& d, const SpgPoint& pt, double tol) {
  check_point(d, pt, tol);
  Vector pred(static_cast<Eigen::Index>(d.m()));
  d.X().multiply(pt.w, pred);
  pred += pt.alpha * d.z();
  pred /= (1.0 + pt.alpha);
  return (pred - d.y()).squaredNorm();
}

double eval_scls_objective(const SclsProblem& p, const SphereVec& r) {
  if (static_cast<std::size_t>(r.size()) != p.dim()) {
    throw InvalidArgument("eval_scls_objective: dimension mismatch");
  }
  return p.objective(r.vec());
}

SphereVec map_to_sphere(const Dataset& d, const SpgPoint& pt, double tol) {
  check_point(d, pt, tol);
  const auto n = static_cast<Eigen::Index>(d.n());
  Vector r(n + 1);
  r.head(n) = (2.0 / (std::sqrt(d.gamma()) * (pt.alpha + 1.0))) * pt.w;
  r[n] = (pt.alpha - 1.0) / (pt.alpha + 1.0);
  // Exact in exact arithmetic; absorb the constraint tolerance.
  return SphereVec::normalized(r);
}

SpgPoint recover_spg(const Dataset& d, const SphereVec& r, double eps_pole) {
  if (static_cast<std::size_t>(r.size()) != d.n() + 1) {
    throw InvalidArgument("recover_spg: dimension mismatch");
  }
  const double at = r.alpha_tilde();
  if (std::abs(1.0 - at) < eps_pole) {
    throw DegenerateApex("recover_spg: point is at the apex alpha~ = 1",
                         scls_value_from_data(d, r.vec()));
  }
  // On the sphere 1 - at = ||w~||^2 / (1 + at); that form has no cancellation
  // for at near 1. Renormalize first so the identity holds to rounding.
  const auto n = static_cast<Eigen::Index>(d.n());
  const Vector unit = r.vec() / r.vec().norm();
  const double wt2 = unit.head(n).squaredNorm();
  const double ua = unit[n];
  const double one_minus = ua > 0.0 ? wt2 / (1.0 + ua) : 1.0 - ua;
  if (!(one_minus > 0.0)) {
    throw DegenerateApex("recover_spg: point is at the apex alpha~ = 1",
                         scls_value_from_data(d, r.vec()));
  }
  SpgPoint pt;
  pt.w = (std::sqrt(d.gamma()) / one_minus) * unit.head(n);
  pt.alpha = pt.w.squaredNorm() / d.gamma();
  return pt;
}

}  // namespace spgls
