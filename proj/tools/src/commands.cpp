#include "spgls_cli/commands.hpp"

#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "engine.hpp"
#include "spgls/errors.hpp"
#include "spgls/krylov.hpp"
#include "spgls/oracle.hpp"
#include "spgls/riemannian.hpp"

namespace spgls::cli {

namespace fs = std::filesystem;

namespace {

bool is_csv(const fs::path& p) {
  auto ext = p.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext == ".csv";
}

// Index of a header cell named `name`, so files written by `gen` round-trip.
std::optional<std::size_t> header_column(const fs::path& path, const std::string& name) {
  std::ifstream in(path);
  std::string line;
  if (!std::getline(in, line)) return std::nullopt;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::stringstream ss(line);
  std::string cell;
  for (std::size_t i = 0; std::getline(ss, cell, ','); ++i) {
    if (cell == name || cell == "\"" + name + "\"") return i;
  }
  return std::nullopt;
}

const char* to_string(VerifyInstance v) {
  switch (v) {
    case VerifyInstance::kRandom: return "random";
    case VerifyInstance::kHardCase: return "hard-case";
    case VerifyInstance::kCentered: return "centered";
  }
  return "unknown";
}

double rel_err(double ref, double other) {
  return std::abs(ref - other) / std::max(std::abs(ref), 1e-300);
}

int exit_code_for(const SolveReport& rep) {
  return rep.converged() ? kExitOk : kExitMaxIter;
}

// Restarts RTR from perturbations of the apex until it finds an equally good
// point off the apex.
std::optional<std::pair<SphereVec, SpgPoint>> resolve_apex(const Dataset& d, const SclsProblem& p,
                                                           double value, std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> normal;
  RtrConfig rc;
  const auto dim = static_cast<Eigen::Index>(p.dim());
  for (int attempt = 0; attempt < 8; ++attempt) {
    Vector start(dim);
    for (Eigen::Index i = 0; i < dim; ++i) start[i] = normal(rng);
    start[dim - 1] = -std::abs(start[dim - 1]);
    auto [r, rep] = rtr_solve(p, SphereVec::normalized(start), rc);
    if (rep.objective > value + 1e-10 * std::max(1.0, std::abs(value))) continue;
    if (std::abs(1.0 - r.alpha_tilde()) < kApexEpsilon) continue;
    return std::make_pair(r, recover_spg(d, r));
  }
  return std::nullopt;
}

}  // namespace

std::vector<BenchCell> parse_cells(const std::string& text, double default_density) {
  std::vector<BenchCell> cells;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    BenchCell c;
    c.density = default_density;
    const auto at = item.find('@');
    const std::string dims = item.substr(0, at);
    const auto x = dims.find('x');
    try {
      if (x == std::string::npos) throw std::invalid_argument("missing x");
      std::size_t used = 0;
      c.m = std::stoul(dims.substr(0, x), &used);
      if (used != x) throw std::invalid_argument("bad m");
      const std::string ns = dims.substr(x + 1);
      c.n = std::stoul(ns, &used);
      if (used != ns.size()) throw std::invalid_argument("bad n");
      if (at != std::string::npos) {
        const std::string ds = item.substr(at + 1);
        c.density = std::stod(ds, &used);
        if (used != ds.size()) throw std::invalid_argument("bad density");
      }
    } catch (const std::exception&) {
      throw InvalidArgument("bad bench cell '" + item + "' (expected MxN or MxN@DENSITY)");
    }
    if (c.m < 1 || c.n < 1 || !(c.density > 0.0 && c.density <= 1.0)) {
      throw InvalidArgument("bench cell '" + item + "' out of range");
    }
    cells.push_back(c);
  }
  if (cells.empty()) throw InvalidArgument("no bench cells given");
  return cells;
}

void RunConfig::validate() const {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw InvalidArgument("--gamma must be positive");
  if (input && (spec_file || synthetic_flags)) {
    throw InvalidArgument("give either an input file or a synthetic spec, not both");
  }
  if (spec_file && synthetic_flags) {
    throw InvalidArgument("give either --spec or synthetic generation flags, not both");
  }
  if (tol && !(*tol > 0.0)) throw InvalidArgument("--tol must be positive");
  if (max_iter && *max_iter < 1) throw InvalidArgument("--max-iter must be at least 1");
  if (reps < 1) throw InvalidArgument("--reps must be at least 1");
  if (jobs < 1) throw InvalidArgument("--jobs must be at least 1");
  if (batch < 1) throw InvalidArgument("--batch must be at least 1");
  if (rtr_starts < 1) throw InvalidArgument("--starts must be at least 1");
  if (noise && !(*noise >= 0.0)) throw InvalidArgument("--noise must be nonnegative");
}

SyntheticSpec RunConfig::effective_spec() const {
  SyntheticSpec s = spec;
  if (spec_file) {
    std::ifstream in(*spec_file);
    if (!in) throw InvalidArgument("cannot open spec file '" + spec_file->string() + "'");
    s = spec_from_config(in);
    return s;
  }
  s.noise = noise.value_or(s.density >= 1.0 ? 0.1 : 0.5);
  s.seed = seed;
  return s;
}

std::optional<fs::path> default_output_dir() {
  const char* env = std::getenv("SPGLS_OUTPUT_DIR");
  if (env == nullptr || *env == '\0') return std::nullopt;
  return fs::path(env);
}

void write_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw InvalidArgument("cannot write '" + tmp.string() + "'");
    f << content;
    f.flush();
    if (!f) {
      f.close();
      fs::remove(tmp);
      throw InvalidArgument("write to '" + tmp.string() + "' failed");
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw InvalidArgument("cannot move output into '" + path.string() + "': " + ec.message());
  }
}

std::optional<fs::path> resolve_output(const RunConfig& cfg, const std::string& default_name) {
  if (cfg.out) return cfg.out;
  if (auto dir = default_output_dir()) return *dir / default_name;
  return std::nullopt;
}

void emit(const RunConfig& cfg, const std::string& default_name, const std::string& text,
          std::ostream& out) {
  if (auto path = resolve_output(cfg, default_name)) {
    write_atomic(*path, text);
  } else {
    out << text;
  }
}

Dataset load_dataset(const RunConfig& cfg) {
  if (cfg.input) {
    if (is_csv(*cfg.input)) {
      CsvOptions opts;
      opts.label_col = cfg.label_col;
      opts.z_col = cfg.z_col;
      if (!opts.z_col) opts.z_col = header_column(*cfg.input, "z");
      opts.rule = cfg.spec.rule;
      return load_csv(*cfg.input, opts, cfg.gamma);
    }
    return attach_rule(load_libsvm(*cfg.input), cfg.spec.rule, cfg.gamma);
  }
  return generate(cfg.effective_spec(), cfg.gamma);
}

Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

EngineRun run_engine(const Dataset& d, const SclsProblem& p, SolverKind kind,
                     const RunConfig& cfg, std::uint64_t seed) {
  EngineRun run;
  run.solver = kind;
  OracleConfig oc;
  oc.size_cap = cfg.oracle_cap;

  auto oracle_run = [&]() {
    try {
      SpgSolution sol = solve_spg_small(d, oc);
      run.report = sol.scls.report;
      run.r = sol.scls.r_star.vec();
      run.value = sol.value;
      run.point = sol.point;
    } catch (const AssumptionViolated& e) {
      OracleSolution sol = oracle_solve(p, oc);
      run.report = sol.report;
      run.r = sol.r_star.vec();
      run.value = sol.value;
      run.apex = true;
      run.report.diagnostics.push_back(e.what());
    }
  };

  switch (kind) {
    case SolverKind::kOracle:
      oracle_run();
      return run;
    case SolverKind::kKrylov: {
      KrylovConfig kc;
      if (cfg.tol) kc.tol = *cfg.tol;
      if (cfg.max_iter) kc.max_iter = *cfg.max_iter;
      if (cfg.perturb) kc.perturb_seed = seed;
      try {
        auto [r, rep] = krylov_solve(p, kc);
        if (rep.invariant_subspace && !kc.perturb_seed) {
          kc.perturb_seed = seed;
          auto [r2, rep2] = krylov_solve(p, kc);
          rep2.matvecs += rep.matvecs;
          rep2.iterations += rep.iterations;
          rep2.diagnostics.insert(rep2.diagnostics.begin(),
                                  "Krylov space of g is invariant; re-solved with a perturbed g");
          r = std::move(r2);
          rep = std::move(rep2);
        }
        run.r = r.vec();
        run.report = std::move(rep);
      } catch (const CenteredProblem&) {
        if (p.dim() > cfg.oracle_cap) throw;
        oracle_run();
        run.report.solver = SolverKind::kKrylov;
        run.report.diagnostics.insert(run.report.diagnostics.begin(),
                                      "centered problem (g = 0) routed to the oracle");
        return run;
      }
      break;
    }
    case SolverKind::kRtr: {
      RtrConfig rc;
      if (cfg.tol) rc.grad_tol = *cfg.tol;
      if (cfg.max_iter) rc.max_outer = *cfg.max_iter;
      rc.num_starts = cfg.rtr_starts;
      rc.seed = seed;
      auto [r, rep] = rtr_solve_multistart(p, rc);
      run.r = r.vec();
      run.report = std::move(rep);
      break;
    }
  }

  run.value = run.report.objective;
  try {
    run.point = recover_spg(d, SphereVec(run.r));
    run.value = eval_spg_objective(d, *run.point, 1e-6);
  } catch (const DegenerateApex&) {
    if (auto alt = resolve_apex(d, p, run.report.objective, seed)) {
      run.r = alt->first.vec();
      run.point = alt->second;
      run.value = eval_spg_objective(d, *run.point, 1e-6);
      run.report.diagnostics.push_back("solution at the apex; re-solved to an equal point off it");
    } else {
      run.apex = true;
      run.report.diagnostics.push_back(
          "solution at the apex alpha~ = 1; no game point (w, alpha) is reported");
    }
  }
  return run;
}

Json solve_report_json(const Dataset& d, const EngineRun& run, const std::string& source) {
  const SolveReport& rep = run.report;
  Json j;
  j["schema"] = "spgls.solve_report/1";
  j["solver"] = to_string(rep.solver);
  j["termination"] = to_string(rep.termination);
  j["converged"] = rep.converged();
  j["dataset"] = {{"source", source},
                  {"m", d.m()},
                  {"n", d.n()},
                  {"nnz", d.X().nnz()},
                  {"gamma", d.gamma()}};
  j["v_star"] = number(run.value);
  j["scls_objective"] = number(rep.objective);
  j["lambda_star"] = number(rep.lambda_star);
  j["kkt_residual"] = number(rep.kkt_residual);
  j["matvecs"] = rep.matvecs;
  j["iterations"] = rep.iterations;
  j["wall_time_seconds"] = number(rep.wall_time_seconds);
  j["kappa_estimate"] = rep.kappa_estimate ? number(*rep.kappa_estimate) : Json(nullptr);
  j["hard_case"] = rep.hard_case;
  j["apex"] = run.apex;
  if (run.point) {
    Json w = Json::array();
    for (double v : run.point->w) w.push_back(number(v));
    j["w_star"] = std::move(w);
    j["alpha_star"] = number(run.point->alpha);
  } else {
    j["w_star"] = nullptr;
    j["alpha_star"] = nullptr;
  }
  Json oh = Json::array();
  for (double v : rep.objective_history) oh.push_back(number(v));
  j["objective_history"] = std::move(oh);
  Json gh = Json::array();
  for (double v : rep.grad_norm_history) gh.push_back(number(v));
  j["grad_norm_history"] = std::move(gh);
  j["diagnostics"] = rep.diagnostics;
  return j;
}

int cmd_gen(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    cfg.validate();
    if (cfg.input) throw InvalidArgument("gen does not take an input file");
    const SyntheticSpec spec = cfg.effective_spec();
    const LabeledData data = generate_labeled(spec);
    const auto path = resolve_output(cfg, "data.svm");
    if (!path) throw InvalidArgument("gen needs --out or SPGLS_OUTPUT_DIR");
    std::ostringstream text;
    if (is_csv(*path)) {
      const Vector z = spec.rule.apply(data.y);
      write_csv(text, data.X, data.y, &z);
    } else {
      write_libsvm(text, data.X, data.y);
    }
    fs::path spec_path = *path;
    spec_path += ".spec";
    write_atomic(*path, text.str());
    write_atomic(spec_path, spec_to_config(spec));
    Json j;
    j["path"] = path->string();
    j["spec"] = spec_path.string();
    j["m"] = data.X.rows();
    j["n"] = data.X.cols();
    j["nnz"] = data.X.nnz();
    j["seed"] = spec.seed;
    out << j.dump() << '\n';
    return kExitOk;
  } catch (const std::exception& e) {
    err << "spgls gen: " << e.what() << '\n';
    return kExitError;
  }
}

int cmd_solve(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    cfg.validate();
    const Dataset d = load_dataset(cfg);
    const SclsProblem p = build_scls(d);
    const EngineRun run = run_engine(d, p, cfg.solver, cfg, cfg.seed);
    const std::string source = cfg.input ? cfg.input->string() : std::string("synthetic");
    const Json j = solve_report_json(d, run, source);
    emit(cfg, "solve_report.json", j.dump(2) + "\n", out);
    if (!run.report.converged()) {
      err << "spgls solve: stopped without convergence (" << to_string(run.report.termination)
          << ", kkt residual " << run.report.kkt_residual << ")\n";
    }
    return exit_code_for(run.report);
  } catch (const std::exception& e) {
    err << "spgls solve: " << e.what() << '\n';
    return kExitError;
  }
}

namespace {

struct Check {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double threshold = 0.0;
  std::string detail;
};

Dataset verify_instance(const RunConfig& cfg, std::uint64_t seed) {
  if (cfg.input) return load_dataset(cfg);
  SyntheticSpec spec = cfg.spec_file ? cfg.effective_spec() : cfg.spec;
  if (!cfg.spec_file && !cfg.synthetic_flags) {
    spec.m = 20;
    spec.n = 10;
  }
  spec.seed = seed;
  if (!cfg.spec_file) spec.noise = cfg.noise.value_or(spec.density >= 1.0 ? 0.1 : 0.5);
  switch (cfg.instance) {
    case VerifyInstance::kRandom:
      return generate(spec, cfg.gamma);
    case VerifyInstance::kHardCase:
      return hard_case_instance(spec.m, spec.n, seed, 0.5, cfg.gamma);
    case VerifyInstance::kCentered: {
      LabeledData data = generate_labeled(spec);
      Vector z = spec.rule.apply(data.y);
      Vector y = z / 2.0;
      return Dataset(std::move(data.X), std::move(y), std::move(z), cfg.gamma);
    }
  }
  throw InvalidArgument("unknown verify instance kind");
}

std::vector<Check> verify_one(const RunConfig& cfg, const Dataset& d, std::uint64_t seed) {
  std::vector<Check> checks;
  const SclsProblem p = build_scls(d);
  const bool hard = cfg.instance == VerifyInstance::kHardCase;
  RunConfig engine_cfg = cfg;
  engine_cfg.perturb = true;

  const EngineRun oracle = run_engine(d, p, SolverKind::kOracle, engine_cfg, seed);
  checks.push_back({"oracle_certificate", oracle.report.kkt_residual <= 1e-10,
                    oracle.report.kkt_residual, 1e-10, ""});

  if (p.g.norm() == 0.0) {
    bool routed = false;
    try {
      krylov_solve(p);
    } catch (const CenteredProblem&) {
      routed = true;
    }
    checks.push_back({"krylov_centered_routing", routed, routed ? 0.0 : 1.0, 0.0,
                      "g = 0 must raise the centered-problem error"});
  } else {
    const EngineRun kr = run_engine(d, p, SolverKind::kKrylov, engine_cfg, seed);
    const double tol_obj = hard ? 1e-6 : 1e-7;
    const double e = rel_err(oracle.report.objective, kr.report.objective);
    checks.push_back({"krylov_vs_oracle", e <= tol_obj, e, tol_obj, ""});
    const double tol_kkt = hard ? 1e-6 : 1e-8;
    checks.push_back(
        {"krylov_kkt", kr.report.kkt_residual <= tol_kkt, kr.report.kkt_residual, tol_kkt, ""});
  }

  const EngineRun rtr = run_engine(d, p, SolverKind::kRtr, engine_cfg, seed);
  const double e_rtr = rel_err(oracle.report.objective, rtr.report.objective);
  checks.push_back({"rtr_vs_oracle", e_rtr <= 1e-6, e_rtr, 1e-6, "best of multistart"});

  if (oracle.point) {
    const double e_t = rel_err(oracle.report.objective, oracle.value);
    checks.push_back({"objective_transport", e_t <= 1e-8, e_t, 1e-8, "v(w*, alpha*) vs q(r*)"});
    const SphereVec back = map_to_sphere(d, *oracle.point, 1e-6);
    const SpgPoint again = recover_spg(d, back);
    const double e_r = (again.w - oracle.point->w).norm() / std::max(1.0, oracle.point->w.norm()) +
                       std::abs(again.alpha - oracle.point->alpha) / std::max(1.0, oracle.point->alpha);
    checks.push_back({"recovery_roundtrip", e_r <= 1e-9, e_r, 1e-9, ""});
  } else {
    checks.push_back({"objective_transport", false, 1.0, 1e-8,
                      "optimum only at the apex; no game point to transport"});
  }
  return checks;
}

}  // namespace

int cmd_verify(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    cfg.validate();
    Json report;
    report["schema"] = "spgls.verify_report/1";
    report["instance"] = to_string(cfg.instance);
    Json instances = Json::array();
    bool all_pass = true;
    const std::size_t batch = cfg.input ? 1 : cfg.batch;
    for (std::size_t b = 0; b < batch; ++b) {
      const std::uint64_t seed = cfg.seed + b;
      Json ij;
      ij["seed"] = seed;
      std::vector<Check> checks;
      try {
        const Dataset d = verify_instance(cfg, seed);
        ij["m"] = d.m();
        ij["n"] = d.n();
        checks = verify_one(cfg, d, seed);
      } catch (const std::exception& e) {
        checks.push_back({"run", false, 1.0, 0.0, e.what()});
      }
      Json cj = Json::array();
      for (const auto& c : checks) {
        all_pass = all_pass && c.pass;
        out << (c.pass ? "PASS " : "FAIL ") << "seed=" << seed << ' ' << c.name << ' '
            << c.value << " <= " << c.threshold;
        if (!c.detail.empty()) out << " (" << c.detail << ')';
        out << '\n';
        cj.push_back({{"name", c.name},
                      {"pass", c.pass},
                      {"value", number(c.value)},
                      {"threshold", c.threshold},
                      {"detail", c.detail}});
      }
      ij["checks"] = std::move(cj);
      instances.push_back(std::move(ij));
    }
    report["instances"] = std::move(instances);
    report["passed"] = all_pass;
    if (auto path = resolve_output(cfg, "verify_report.json")) {
      write_atomic(*path, report.dump(2) + "\n");
    }
    out << (all_pass ? "verify: all checks passed" : "verify: FAILURES") << '\n';
    return all_pass ? kExitOk : kExitVerifyFailed;
  } catch (const std::exception& e) {
    err << "spgls verify: " << e.what() << '\n';
    return kExitError;
  }
}

}  // namespace spgls::cli
