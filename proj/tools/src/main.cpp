#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "spgls/errors.hpp"
#include "spgls_cli/commands.hpp"

namespace {

using spgls::cli::RunConfig;

struct RawFlags {
  std::string solver = "krylov";
  std::string rule = "quantile_floor";
  std::string instance = "random";
  std::string cells;
  std::optional<double> delta;
  std::optional<double> quantile;
  std::optional<std::size_t> m;
  std::optional<std::size_t> n;
  std::optional<double> density;
  std::optional<std::string> input;
  std::optional<std::string> spec_file;
  std::optional<std::string> out;
};

void add_common(CLI::App* sub, RunConfig& cfg, RawFlags& raw) {
  sub->add_option("--gamma", cfg.gamma, "Manipulation penalty gamma (> 0)")->capture_default_str();
  sub->add_option("--seed", cfg.seed, "Random seed")->capture_default_str();
  sub->add_option("--out", raw.out, "Output file (default: $SPGLS_OUTPUT_DIR or stdout)");
  sub->add_option("--m", raw.m, "Number of samples");
  sub->add_option("--n", raw.n, "Number of features");
  sub->add_option("--density", raw.density, "Nonzero density of X (1 = dense)");
  sub->add_option("--noise", cfg.noise, "Label noise (dense: std dev, sparse: uniform width)");
  sub->add_option("--rule", raw.rule, "Manipulation rule: quantile_floor|additive|additive_floor_zero")
      ->capture_default_str();
  sub->add_option("--delta", raw.delta, "Shift for the additive rules");
  sub->add_option("--quantile", raw.quantile, "Quantile level for quantile_floor");
  sub->add_option("--spec", raw.spec_file, "Synthetic spec file (key=value)");
}

void add_solver(CLI::App* sub, RunConfig& cfg, RawFlags& raw) {
  sub->add_option("--solver", raw.solver, "krylov|rtr|oracle")->capture_default_str();
  sub->add_option("--tol", cfg.tol, "Solver tolerance");
  sub->add_option("--max-iter", cfg.max_iter, "Iteration cap");
  sub->add_flag("--perturb", cfg.perturb, "Krylov: retry from a perturbed g (hard case)");
  sub->add_option("--starts", cfg.rtr_starts, "RTR starting points")->capture_default_str();
  sub->add_option("--oracle-cap", cfg.oracle_cap, "Largest n+1 the oracle densifies")
      ->capture_default_str();
}

void add_input(CLI::App* sub, RunConfig& cfg, RawFlags& raw) {
  sub->add_option("--input", raw.input, "Data file (.csv or libsvm)");
  sub->add_option("--label-col", cfg.label_col, "CSV column of y (0-based)")->capture_default_str();
  sub->add_option("--z-col", cfg.z_col, "CSV column of z (0-based); otherwise --rule derives z");
}

void finalize(RunConfig& cfg, const RawFlags& raw) {
  cfg.solver = spgls::parse_solver_kind(raw.solver);
  if (raw.input) cfg.input = *raw.input;
  if (raw.spec_file) cfg.spec_file = *raw.spec_file;
  if (raw.out) cfg.out = *raw.out;
  if (raw.m) cfg.spec.m = *raw.m;
  if (raw.n) cfg.spec.n = *raw.n;
  if (raw.density) cfg.spec.density = *raw.density;
  cfg.synthetic_flags = raw.m || raw.n || raw.density;

  auto& rule = cfg.spec.rule;
  rule.kind = spgls::parse_rule_kind(raw.rule);
  if (raw.quantile) rule.quantile = *raw.quantile;
  if (raw.delta) rule.delta = *raw.delta;
  rule.validate();

  static const std::map<std::string, spgls::cli::VerifyInstance> kinds = {
      {"random", spgls::cli::VerifyInstance::kRandom},
      {"hard-case", spgls::cli::VerifyInstance::kHardCase},
      {"centered", spgls::cli::VerifyInstance::kCentered}};
  const auto it = kinds.find(raw.instance);
  if (it == kinds.end()) throw spgls::InvalidArgument("unknown --instance '" + raw.instance + "'");
  cfg.instance = it->second;
  if (!raw.cells.empty()) cfg.cells = spgls::cli::parse_cells(raw.cells, cfg.spec.density);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stackelberg least-squares prediction game solver"};
  app.require_subcommand(1);
  RunConfig cfg;
  RawFlags raw;

  auto* gen = app.add_subcommand("gen", "Generate a synthetic dataset");
  add_common(gen, cfg, raw);

  auto* solve = app.add_subcommand("solve", "Solve one instance and write a JSON report");
  add_common(solve, cfg, raw);
  add_solver(solve, cfg, raw);
  add_input(solve, cfg, raw);

  auto* verify = app.add_subcommand("verify", "Cross-check all engines against the oracle");
  add_common(verify, cfg, raw);
  add_solver(verify, cfg, raw);
  add_input(verify, cfg, raw);
  verify->add_option("--batch", cfg.batch, "Number of seeded instances")->capture_default_str();
  verify->add_option("--instance", raw.instance, "random|hard-case|centered")
      ->capture_default_str();

  auto* bench = app.add_subcommand("bench", "Benchmark all engines over a grid of cells");
  add_common(bench, cfg, raw);
  add_solver(bench, cfg, raw);
  bench->add_option("--reps", cfg.reps, "Repetitions per cell")->capture_default_str();
  bench->add_option("--cells", raw.cells, "Cells MxN[@DENSITY], comma separated");
  bench->add_option("--jobs", cfg.jobs, "Worker threads")->capture_default_str();
  bench->add_flag("--latex", cfg.latex, "Also write a LaTeX table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? spgls::cli::kExitOk : spgls::cli::kExitError;
  }

  try {
    finalize(cfg, raw);
  } catch (const std::exception& e) {
    std::cerr << "spgls: " << e.what() << '\n';
    return spgls::cli::kExitError;
  }

  if (gen->parsed()) return spgls::cli::cmd_gen(cfg, std::cout, std::cerr);
  if (solve->parsed()) return spgls::cli::cmd_solve(cfg, std::cout, std::cerr);
  if (verify->parsed()) return spgls::cli::cmd_verify(cfg, std::cout, std::cerr);
  return spgls::cli::cmd_bench(cfg, std::cout, std::cerr);
}
