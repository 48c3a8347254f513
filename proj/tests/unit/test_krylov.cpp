#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "spgls/errors.hpp"
#include "spgls/krylov.hpp"
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

TEST(Lanczos, IdentityBreaksDownAfterOneStep) {
  const auto p = build_scls(diagonal_dataset(Vector::Ones(4), vec({1, -2, 0.5, 3})));
  auto st = lanczos_init(p.g);
  lanczos_step(p, st);
  EXPECT_TRUE(st.breakdown);
  EXPECT_EQ(st.k, 1u);
  EXPECT_NEAR(st.t.diag[0], 1.0, 1e-15);
  EXPECT_THROW(lanczos_step(p, st), StateError);
}

TEST(Lanczos, DiagonalTwoByTwo) {
  const auto p = build_scls(diagonal_dataset(vec({2, 1}), vec({-2, 0})));
  auto st = lanczos_init(p.g);
  lanczos_step(p, st);
  ASSERT_EQ(st.t.size(), 1u);
  EXPECT_NEAR(st.t.diag[0], 2.0, 1e-15);
  EXPECT_LE((st.basis[0] - vec({-1, 0})).norm(), 1e-15);
  EXPECT_TRUE(st.breakdown);
  EXPECT_THROW(lanczos_step(p, st), StateError);
}

class LanczosProjection : public ::testing::TestWithParam<Reorthogonalization> {};

TEST_P(LanczosProjection, MatchesDenseProjection) {
  const auto p = build_scls(random_dataset(30, 19, 4));
  const Matrix h = dense_hessian(p);
  auto st = lanczos_init(p.g, GetParam());
  p.lhat.reset_counters();
  for (std::size_t k = 1; k <= 10; ++k) {
    lanczos_step(p, st);
    EXPECT_EQ(p.lhat.counters().hessian_applies.load(), k);
    ASSERT_FALSE(st.breakdown);
    Matrix q(20, static_cast<Eigen::Index>(k));
    for (std::size_t j = 0; j < k; ++j) q.col(static_cast<Eigen::Index>(j)) = st.basis[j];
    EXPECT_LE((q.transpose() * q - Matrix::Identity(q.cols(), q.cols())).norm(), 1e-10);
    const Matrix proj = q.transpose() * h * q;
    EXPECT_LE((proj - st.t.to_dense()).norm(), 1e-8 * h.norm()) << "k = " << k;
    EXPECT_EQ(st.t.offdiag.size(), k - 1);
  }
}

INSTANTIATE_TEST_SUITE_P(Modes, LanczosProjection,
                         ::testing::Values(Reorthogonalization::kFull,
                                           Reorthogonalization::kSelective));

TEST(TridiagSphere, DiagonalExample) {
  Tridiagonal t{{2.0, 1.0}, {0.0}};
  const auto sol = solve_tridiag_sphere(t, 2.0);
  EXPECT_NEAR(sol.lambda, 0.0, 1e-12);
  EXPECT_NEAR(sol.h[0], -1.0, 1e-12);
  EXPECT_NEAR(sol.h[1], 0.0, 1e-12);
  const double dec = sol.h.dot(t.to_dense() * sol.h) + 2.0 * 2.0 * sol.h[0];
  EXPECT_NEAR(dec, -2.0, 1e-12);
}

TEST(TridiagSphere, Scalar) {
  Tridiagonal t{{0.0}, {}};
  const auto sol = solve_tridiag_sphere(t, 3.0);
  EXPECT_NEAR(sol.h[0], -1.0, 1e-15);
  EXPECT_NEAR(sol.lambda, 3.0, 1e-12);
}

TEST(TridiagSphere, SturmEigenvalues) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const int k = 1 + trial;
    Tridiagonal t;
    for (int i = 0; i < k; ++i) t.diag.push_back(random_vector(1, rng)[0]);
    for (int i = 0; i + 1 < k; ++i) t.offdiag.push_back(random_vector(1, rng)[0]);
    Eigen::SelfAdjointEigenSolver<Matrix> es(t.to_dense());
    EXPECT_NEAR(tridiag_min_eigenvalue(t), es.eigenvalues()[0], 1e-12);
    EXPECT_NEAR(tridiag_max_eigenvalue(t), es.eigenvalues()[k - 1], 1e-12);
  }
}

TEST(TridiagSphere, InvariantsOnRandomTridiagonals) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 1 + trial % 25;
    Tridiagonal t;
    for (int i = 0; i < k; ++i) t.diag.push_back(3.0 * random_vector(1, rng)[0]);
    for (int i = 0; i + 1 < k; ++i) {
      // Occasionally tiny couplings to stress near-hard cases.
      t.offdiag.push_back(trial % 7 == 0 ? 1e-9 * u(rng) : random_vector(1, rng)[0]);
    }
    const double gnorm = trial % 5 == 0 ? 1e-6 * u(rng) : 5.0 * u(rng) + 1e-3;
    const auto sol = solve_tridiag_sphere(t, gnorm);
    const Matrix td = t.to_dense();
    Vector rhs = Vector::Zero(k);
    rhs[0] = -gnorm;
    EXPECT_NEAR(sol.h.norm(), 1.0, 1e-12);
    const Vector res = td * sol.h + sol.lambda * sol.h - rhs;
    EXPECT_LE(res.norm(), 1e-10 * std::max(1.0, td.norm())) << "trial " << trial;
    Eigen::SelfAdjointEigenSolver<Matrix> es(td);
    EXPECT_GE(es.eigenvalues()[0] + sol.lambda, -1e-12 * std::max(1.0, td.norm()));
  }
}

TEST(KrylovSolve, TwoDimensionalEasyCase) {
  const auto p = build_scls(diagonal_dataset(vec({2, 1}), vec({-2, 0})));
  const auto [r, rep] = krylov_solve(p);
  EXPECT_LE((r.vec() - vec({1, 0})).norm(), 1e-12);
  EXPECT_NEAR(rep.lambda_star, 0.0, 1e-12);
  EXPECT_NEAR(rep.objective - p.p, -2.0, 1e-12);
  EXPECT_TRUE(rep.converged());
}

TEST(KrylovSolve, HardCaseNeedsPerturbation) {
  const auto p = build_scls(diagonal_dataset(vec({1, 2}), vec({0, -0.5})));
  const auto [r_plain, rep_plain] = krylov_solve(p);
  EXPECT_NEAR(rep_plain.objective - p.p, 1.0, 1e-12);
  EXPECT_FALSE(rep_plain.hard_case);

  KrylovConfig cfg;
  cfg.perturb_seed = 42;
  const auto [r, rep] = krylov_solve(p, cfg);
  EXPECT_NEAR(rep.objective - p.p, 0.75, 1e-6);
  EXPECT_TRUE(rep.hard_case);
  EXPECT_NEAR(rep.lambda_star, -1.0, 1e-6);
}

TEST(KrylovSolve, CenteredProblemThrows) {
  const auto p = build_scls(diagonal_dataset(vec({1, 2, 3}), vec({0, 0, 0})));
  EXPECT_THROW(krylov_solve(p), CenteredProblem);
}

TEST(KrylovSolve, ConfigValidation) {
  const auto p = build_scls(random_dataset(5, 3, 0));
  KrylovConfig cfg;
  cfg.tol = 0.0;
  EXPECT_THROW(krylov_solve(p, cfg), InvalidArgument);
  EXPECT_EQ(KrylovConfig{}.effective_max_iter(4), 4u);
  EXPECT_EQ(KrylovConfig{}.effective_max_iter(10000), 1000u);
}

class KrylovCertificate : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(KrylovCertificate, MatchesOracle) {
  std::mt19937_64 rng(GetParam());
  std::uniform_int_distribution<int> dim(2, 40);
  const auto d = random_dataset(static_cast<std::size_t>(dim(rng)),
                                static_cast<std::size_t>(dim(rng)), GetParam(),
                                GetParam() % 2 ? 0.1 : 0.01);
  const auto p = build_scls(d);
  const auto oracle = oracle_solve(p);
  KrylovConfig cfg;
  cfg.max_iter = p.dim();
  p.lhat.reset_counters();
  const auto [r, rep] = krylov_solve(p, cfg);
  EXPECT_EQ(p.lhat.counters().hessian_applies.load(), rep.matvecs);
  EXPECT_LE(rep.matvecs, rep.iterations + 2);
  EXPECT_LE(rep.kkt_residual, 1e-8);
  EXPECT_NEAR(r.vec().norm(), 1.0, 1e-12);
  EXPECT_GE(rep.lambda_star, -oracle.lambda_min - 1e-8);
  EXPECT_LE(rel_diff(rep.objective, oracle.value), 1e-8);
  if (oracle.pseudo_inverse_norm > 1.0) EXPECT_GT(rep.lambda_star, -oracle.lambda_min);
  for (std::size_t k = 1; k < rep.objective_history.size(); ++k) {
    EXPECT_LE(rep.objective_history[k],
              rep.objective_history[k - 1] + 1e-12 * std::max(1.0, std::abs(rep.objective_history[k - 1])));
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, KrylovCertificate, ::testing::Range<std::uint64_t>(0, 40));

TEST(KrylovSolve, HardCaseInstancesWithPerturbation) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto p = build_scls(hard_case_dataset(15, 8, seed));
    const auto oracle = oracle_solve(p);
    ASSERT_TRUE(oracle.hard_case);
    KrylovConfig cfg;
    cfg.perturb_seed = seed;
    cfg.max_iter = p.dim();
    const auto [r, rep] = krylov_solve(p, cfg);
    EXPECT_LE(rel_diff(rep.objective, oracle.value), 1e-6) << "seed " << seed;
  }
}

TEST(KrylovSolve, LargerHardCaseInstances) {
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    const auto p = build_scls(hard_case_dataset(200, 100, seed));
    const auto oracle = oracle_solve(p);
    KrylovConfig cfg;
    cfg.perturb_seed = seed;
    const auto [r, rep] = krylov_solve(p, cfg);
    EXPECT_LE(rel_diff(rep.objective, oracle.value), 1e-6) << "seed " << seed;
    EXPECT_LE(rep.kkt_residual, 1e-6) << "seed " << seed;
  }
}

TEST(KrylovSolve, FlagsEarlyInvariantSubspace) {
  // X = 0: H = diag(0, ..., 0, ||z||^2 / 4) and g is parallel to the last axis.
  const SparseMatrix x = SparseMatrix::from_triplets(4, 2, {});
  Vector z(4), y(4);
  z << 2, 1, 0.5, 3;
  y << 1, 2, -1, 0.5;
  const auto p = build_scls(Dataset(x, y, z, 0.1));
  const auto oracle = oracle_solve(p);
  const auto [r, rep] = krylov_solve(p);
  EXPECT_TRUE(rep.invariant_subspace);
  EXPECT_GT(rep.objective, oracle.value + 1.0);
  KrylovConfig cfg;
  cfg.perturb_seed = 1;
  const auto [r2, rep2] = krylov_solve(p, cfg);
  EXPECT_LE(rel_diff(rep2.objective, oracle.value), 1e-6);
  EXPECT_FALSE(krylov_solve(build_scls(random_dataset(30, 10, 2))).second.invariant_subspace);
}

TEST(KrylovSolve, NestedRestartAndSelectiveReorth) {
  const auto p = build_scls(random_dataset(120, 80, 9));
  const auto oracle = oracle_solve(p);
  KrylovConfig restart;
  restart.restart_every = 8;
  restart.max_iter = 400;
  const auto [r1, rep1] = krylov_solve(p, restart);
  EXPECT_TRUE(rep1.converged());
  EXPECT_LE(rel_diff(rep1.objective, oracle.value), 1e-8);
  for (std::size_t k = 1; k < rep1.objective_history.size(); ++k) {
    EXPECT_LE(rep1.objective_history[k], rep1.objective_history[k - 1] + 1e-10);
  }

  KrylovConfig sel;
  sel.reorth = Reorthogonalization::kSelective;
  sel.max_iter = p.dim();
  const auto [r2, rep2] = krylov_solve(p, sel);
  EXPECT_TRUE(rep2.converged());
  EXPECT_LE(rel_diff(rep2.objective, oracle.value), 1e-8);
}

TEST(KrylovSolve, MaxIterationsReported) {
  const auto p = build_scls(random_dataset(100, 60, 2));
  KrylovConfig cfg;
  cfg.max_iter = 2;
  const auto [r, rep] = krylov_solve(p, cfg);
  EXPECT_EQ(rep.termination, Termination::kMaxIterations);
  EXPECT_EQ(rep.iterations, 2u);
  EXPECT_NEAR(r.vec().norm(), 1.0, 1e-12);
}

TEST(KrylovSolve, Deterministic) {
  const auto p = build_scls(random_dataset(50, 30, 12));
  const auto a = krylov_solve(p).second;
  const auto b = krylov_solve(p).second;
  EXPECT_EQ(a.objective, b.objective);
  EXPECT_EQ(a.objective_history, b.objective_history);
}

}  // namespace
}  // namespace spgls
