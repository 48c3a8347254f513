#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "spgls/errors.hpp"
#include "spgls/oracle.hpp"
#include "test_support.hpp"

namespace spgls {
namespace {

using testing::diagonal_dataset;
using testing::hard_case_dataset;
using testing::random_dataset;
using testing::random_vector;
using testing::rel_diff;

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

TEST(Oracle, DiagonalEasyCase) {
  const auto p = build_scls(diagonal_dataset(vec({2, 1}), vec({-2, 0})));
  const auto sol = oracle_solve(p);
  EXPECT_FALSE(sol.hard_case);
  EXPECT_NEAR(sol.lambda_star, 0.0, 1e-12);
  EXPECT_NEAR(sol.r_star.vec()[0], 1.0, 1e-12);
  EXPECT_NEAR(sol.r_star.vec()[1], 0.0, 1e-12);
  EXPECT_NEAR(sol.value - p.p, -2.0, 1e-12);
  EXPECT_LE(sol.report.kkt_residual, 1e-10);
}

TEST(Oracle, DiagonalHardCase) {
  const auto p = build_scls(diagonal_dataset(vec({1, 2}), vec({0, -0.5})));
  const auto sol = oracle_solve(p);
  EXPECT_TRUE(sol.hard_case);
  EXPECT_EQ(sol.multiplicity, 2);
  EXPECT_NEAR(sol.lambda_star, -1.0, 1e-12);
  EXPECT_NEAR(std::abs(sol.r_star.vec()[0]), std::sqrt(3.0) / 2.0, 1e-12);
  EXPECT_NEAR(sol.r_star.vec()[1], 0.5, 1e-12);
  EXPECT_GT(sol.r_star.vec()[0], 0.0);
  EXPECT_NEAR(sol.value - p.p, 0.75, 1e-12);
  EXPECT_NEAR(sol.pseudo_inverse_norm, 0.5, 1e-12);
}

TEST(Oracle, ZeroGradientIsMinEigenvector) {
  const auto p = build_scls(diagonal_dataset(vec({1, 2}), vec({0, 0})));
  EXPECT_EQ(p.g.norm(), 0.0);
  const auto sol = oracle_solve(p);
  EXPECT_TRUE(sol.hard_case);
  EXPECT_NEAR(sol.lambda_star, -1.0, 1e-12);
  EXPECT_NEAR(std::abs(sol.r_star.vec()[0]), 1.0, 1e-12);
  EXPECT_NEAR(sol.value - p.p, 1.0, 1e-12);
}

TEST(Oracle, SizeCapEnforced) {
  const auto p = build_scls(random_dataset(5, 10, 1));
  EXPECT_THROW(oracle_solve(p, OracleConfig{10}), SizeError);
  EXPECT_NO_THROW(oracle_solve(p, OracleConfig{11}));
}

TEST(Oracle, EigenFormReconstructs) {
  const auto p = build_scls(random_dataset(20, 8, 3));
  const auto ef = eigen_form(p);
  const Matrix h = dense_hessian(p);
  EXPECT_LE((h - ef.basis * ef.eigvals.asDiagonal() * ef.basis.transpose()).norm(),
            1e-9 * h.norm());
  for (Eigen::Index i = 1; i < ef.eigvals.size(); ++i) EXPECT_LE(ef.eigvals[i - 1], ef.eigvals[i]);
  EXPECT_LE((ef.basis * ef.g_tilde - p.g).norm(), 1e-12 * std::max(1.0, p.g.norm()));
}

class CertificateProperty : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(CertificateProperty, ThreeConditionsHold) {
  std::mt19937_64 rng(GetParam());
  std::uniform_int_distribution<int> dim(1, 30);
  const auto d = random_dataset(static_cast<std::size_t>(dim(rng)),
                                static_cast<std::size_t>(dim(rng)), GetParam());
  const auto p = build_scls(d);
  const auto sol = oracle_solve(p);
  const Matrix h = dense_hessian(p);
  const Vector& r = sol.r_star.vec();
  EXPECT_LE((h * r + sol.lambda_star * r + p.g).norm(),
            1e-10 * std::max({1.0, p.g.norm(), h.norm()}));
  EXPECT_GE(sol.lambda_star, -sol.lambda_min - 1e-12 * std::max(1.0, std::abs(sol.lambda_min)));
  EXPECT_NEAR(r.norm(), 1.0, 1e-12);
  // No random unit vector does better.
  for (int k = 0; k < 200; ++k) {
    const Vector v = random_vector(r.size(), rng).normalized();
    EXPECT_GE(p.objective(v), sol.value - 1e-10 * std::max(1.0, std::abs(sol.value)));
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, CertificateProperty, ::testing::Range<std::uint64_t>(0, 40));

TEST(Oracle, HardCaseConstruction) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto p = build_scls(hard_case_dataset(12, 5, seed, 0.5));
    const auto sol = oracle_solve(p);
    EXPECT_TRUE(sol.hard_case) << "seed " << seed;
    EXPECT_NEAR(sol.pseudo_inverse_norm, 0.5, 1e-8);
    EXPECT_NEAR(sol.lambda_star, -sol.lambda_min, 1e-10 * std::max(1.0, sol.lambda_max));
  }
}

TEST(BruteForce, AgreesWithOracleIn2D) {
  const auto easy = build_scls(diagonal_dataset(vec({2, 1}), vec({-2, 0})));
  EXPECT_NEAR(brute_force_check(easy, 1000000), oracle_solve(easy).value, 1e-9);
  const auto hard = build_scls(diagonal_dataset(vec({1, 2}), vec({0, -0.5})));
  EXPECT_NEAR(brute_force_check(hard, 1000000), 0.75 + hard.p, 1e-9);
}

TEST(BruteForce, LinearObjective) {
  // H = 0 cannot come from data with g != 0, so set the fields directly.
  auto p = build_scls(Dataset(SparseMatrix::from_dense(Matrix::Zero(2, 1)), Vector::Zero(2),
                              Vector::Zero(2), 1.0));
  p.g = vec({0.6, -0.8}) * 2.0;
  p.p = 5.0;
  EXPECT_NEAR(brute_force_check(p, 1000000), 5.0 - 4.0, 1e-9);
}

TEST(BruteForce, RandomSmallInstances) {
  std::mt19937_64 rng(11);
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const std::size_t n = 1 + seed % 2;
    const std::size_t m = 1 + (seed / 2) % 4;
    const auto p = build_scls(random_dataset(m, n, seed, seed % 3 == 0 ? 0.01 : 0.1));
    const auto sol = oracle_solve(p);
    const std::size_t grid = n == 1 ? 20000 : 400;
    const double bf = brute_force_check(p, grid);
    // The grid value can only sit above the true minimum, by at most a
    // second-order term in the grid spacing.
    const double spacing = 2.0 * 3.141592653589793 / static_cast<double>(grid);
    const double curvature = 2.0 * (dense_hessian(p).norm() + p.g.norm());
    EXPECT_GE(bf, sol.value - 1e-10 * std::max(1.0, std::abs(sol.value)));
    EXPECT_LE(bf - sol.value, curvature * spacing * spacing + 1e-10) << "seed " << seed;
  }
}

TEST(BruteForce, RejectsOtherDimensions) {
  EXPECT_THROW(brute_force_check(build_scls(random_dataset(4, 3, 0)), 100), UnsupportedDimension);
  EXPECT_THROW(brute_force_check(build_scls(random_dataset(4, 1, 0)), 2), InvalidArgument);
}

TEST(SolveSpgSmall, ScalarInstanceMatchesGrid) {
  Matrix x(1, 1);
  x << 1.0;
  const Dataset d(SparseMatrix::from_dense(x), Vector::Constant(1, 1.0), Vector::Zero(1), 1.0);
  const auto sol = solve_spg_small(d);
  double best = INFINITY;
  for (int k = -400000; k <= 400000; ++k) {
    const double w = k * 1e-5;
    best = std::min(best, eval_spg_objective(d, {Vector::Constant(1, w), w * w}));
  }
  EXPECT_NEAR(sol.value, best, 1e-8);
  EXPECT_LE(rel_diff(sol.value, sol.scls.value), 1e-8);
}

TEST(SolveSpgSmall, ZeroLabelsGiveZeroPredictor) {
  const Dataset d(SparseMatrix::from_dense(Matrix::Identity(3, 2)), Vector::Zero(3),
                  Vector::Zero(3), 0.1);
  const auto sol = solve_spg_small(d);
  EXPECT_NEAR(sol.value, 0.0, 1e-12);
  EXPECT_LE(sol.point.w.norm(), 1e-6);
}

TEST(SolveSpgSmall, TruthfulProviderMatchesBruteForce) {
  // y = z with a square, invertible X: the predictor can fit y exactly, so
  // the optimal value 0 is attained away from the apex as well.
  Matrix x(2, 2);
  x << 1, 0.5, -0.3, 2;
  const Vector y = vec({1.0, -0.5});
  const Dataset d(SparseMatrix::from_dense(x), y, y, 1.0);
  const auto sol = solve_spg_small(d);
  const double bf = brute_force_check(build_scls(d), 800);
  EXPECT_GE(bf, sol.value - 1e-10);
  EXPECT_LE(bf - sol.value, 1e-3);
  EXPECT_NEAR(sol.value, 0.0, 1e-10);
  EXPECT_LE((x * sol.point.w - y).norm(), 1e-8);
}

TEST(SolveSpgSmall, PipelineMatchesScls) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto d = random_dataset(3 + seed % 20, 1 + seed % 15, seed);
    const auto sol = solve_spg_small(d);
    EXPECT_LE(rel_diff(sol.value, sol.scls.value), 1e-8) << "seed " << seed;
  }
}

}  // namespace
}  // namespace spgls
