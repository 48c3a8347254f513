#include <benchmark/benchmark.h>

#include "spgls/data.hpp"
#include "spgls/krylov.hpp"
#include "spgls/oracle.hpp"
#include "spgls/riemannian.hpp"

namespace {

using namespace spgls;

Dataset instance(std::size_t m, std::size_t n, double density) {
  SyntheticSpec spec;
  spec.m = m;
  spec.n = n;
  spec.density = density;
  spec.noise = density >= 1.0 ? 0.1 : 0.5;
  spec.seed = 1;
  return generate(spec, 0.1);
}

// Args: m, n, density in units of 1e-4.
void BM_HessianApply(benchmark::State& state) {
  const auto d = instance(state.range(0), state.range(1), state.range(2) * 1e-4);
  const SclsProblem p = build_scls(d);
  Vector r = Vector::Ones(static_cast<Eigen::Index>(p.dim())).normalized();
  Vector out(r.size());
  Vector scratch(static_cast<Eigen::Index>(p.lhat.rows()));
  for (auto _ : state) {
    p.lhat.hessian_apply(r, out, scratch);
    benchmark::DoNotOptimize(out.data());
  }
  state.counters["nnz"] = static_cast<double>(d.X().nnz());
  state.counters["ns_per_entry"] = benchmark::Counter(
      static_cast<double>(d.X().nnz() + d.m() + d.n()),
      benchmark::Counter::kIsIterationInvariantRate | benchmark::Counter::kInvert);
}
BENCHMARK(BM_HessianApply)
    ->Args({5000, 10000, 100})
    ->Args({5000, 10000, 10})
    ->Args({5000, 10000, 1})
    ->Unit(benchmark::kMicrosecond);

void BM_KrylovSolve(benchmark::State& state) {
  const auto d = instance(state.range(0), state.range(1), state.range(2) * 1e-4);
  const SclsProblem p = build_scls(d);
  std::uint64_t matvecs = 0;
  for (auto _ : state) {
    auto [r, rep] = krylov_solve(p);
    matvecs = rep.matvecs;
    benchmark::DoNotOptimize(r);
  }
  state.counters["matvecs"] = static_cast<double>(matvecs);
}
BENCHMARK(BM_KrylovSolve)
    ->Args({1000, 1000, 10000})
    ->Args({2000, 1000, 10000})
    ->Args({5000, 10000, 100})
    ->Args({5000, 10000, 10})
    ->Args({5000, 10000, 1})
    ->Unit(benchmark::kMillisecond);

void BM_RtrSolve(benchmark::State& state) {
  const auto d = instance(state.range(0), state.range(1), state.range(2) * 1e-4);
  const SclsProblem p = build_scls(d);
  std::uint64_t matvecs = 0;
  for (auto _ : state) {
    auto [r, rep] = rtr_solve(p, default_start(p), RtrConfig{});
    matvecs = rep.matvecs;
    benchmark::DoNotOptimize(r);
  }
  state.counters["matvecs"] = static_cast<double>(matvecs);
}
BENCHMARK(BM_RtrSolve)
    ->Args({1000, 1000, 10000})
    ->Args({2000, 1000, 10000})
    ->Args({5000, 10000, 10})
    ->Unit(benchmark::kMillisecond);

void BM_OracleSolve(benchmark::State& state) {
  const auto d = instance(state.range(0), state.range(1), 1.0);
  const SclsProblem p = build_scls(d);
  OracleConfig cfg;
  cfg.size_cap = 2000;
  for (auto _ : state) {
    auto sol = oracle_solve(p, cfg);
    benchmark::DoNotOptimize(sol.value);
  }
}
BENCHMARK(BM_OracleSolve)->Args({400, 200})->Args({1000, 500})->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
