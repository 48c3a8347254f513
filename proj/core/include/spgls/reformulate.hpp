#pragma once

#include <memory>

#include "spgls/linops.hpp"
#include "spgls/types.hpp"

namespace spgls {

/// Default pole guard for the inverse variable map.
inline constexpr double kApexEpsilon = 1e-9;
/// Default relative tolerance on w^T w = gamma * alpha.
inline constexpr double kSpgConstraintTolerance = 1e-8;
/// Tolerance on | ||r||^2 - 1 | for SphereVec.
inline constexpr double kSphereTolerance = 1e-10;

/// A game instance: data X (m x n), true labels y, provider targets z and the
/// manipulation penalty gamma.
class Dataset {
 public:
  Dataset(SparseMatrix x, Vector y, Vector z, double gamma);
  Dataset(std::shared_ptr<const SparseMatrix> x, Vector y, Vector z, double gamma);

  const SparseMatrix& X() const noexcept { return *x_; }
  std::shared_ptr<const SparseMatrix> X_shared() const noexcept { return x_; }
  const Vector& y() const noexcept { return y_; }
  const Vector& z() const noexcept { return z_; }
  double gamma() const noexcept { return gamma_; }
  std::size_t m() const noexcept { return x_->rows(); }
  std::size_t n() const noexcept { return x_->cols(); }

  Dataset with_gamma(double gamma) const { return Dataset(x_, y_, z_, gamma); }

 private:
  std::shared_ptr<const SparseMatrix> x_;
  Vector y_;
  Vector z_;
  double gamma_;
};

/// Learner predictor w with its coupled scalar alpha = w^T w / gamma.
struct SpgPoint {
  Vector w;
  double alpha = 0.0;
};

/// A point on the unit sphere in R^{n+1}, read as (w~, alpha~).
class SphereVec {
 public:
  /// Validates | ||r||^2 - 1 | <= tol.
  explicit SphereVec(Vector r, double tol = kSphereTolerance);

  /// Scales a nonzero vector onto the sphere.
  static SphereVec normalized(const Vector& v);

  const Vector& vec() const noexcept { return r_; }
  Eigen::Index size() const noexcept { return r_.size(); }
  double alpha_tilde() const noexcept { return r_[r_.size() - 1]; }
  auto w_tilde() const { return r_.head(r_.size() - 1); }

 private:
  Vector r_;
};

/// min ||L r - rhs||^2 over ||r|| = 1, with q(r) = r^T H r + 2 g^T r + p and
/// H = L^T L available only implicitly.
struct SclsProblem {
  ScaledAugmentedOperator lhat;
  Vector rhs;  // y - z/2
  Vector g;    // L^T (z/2 - y)
  double p;    // ||z/2 - y||^2

  std::size_t dim() const noexcept { return lhat.cols(); }

  /// q through the residual form ||L r - rhs||^2; r need not be unit.
  double objective(ConstVectorRef r) const;
  /// q through the quadratic form r^T H r + 2 g^T r + p (one H apply).
  double objective_quadratic(ConstVectorRef r) const;
};

SclsProblem build_scls(const Dataset& d);

/// || (alpha z + X w)/(1 + alpha) - y ||^2. Throws if the constraint
/// w^T w = gamma alpha is violated beyond `tol * max(1, w^T w)`.
double eval_spg_objective(const Dataset& d, const SpgPoint& pt,
                          double tol = kSpgConstraintTolerance);

double eval_scls_objective(const SclsProblem& p, const SphereVec& r);

SphereVec map_to_sphere(const Dataset& d, const SpgPoint& pt,
                        double tol = kSpgConstraintTolerance);

/// Inverse map. Throws DegenerateApex (carrying the SCLS objective) when
/// |1 - alpha~| < eps_pole.
SpgPoint recover_spg(const Dataset& d, const SphereVec& r, double eps_pole = kApexEpsilon);

}  // namespace spgls
