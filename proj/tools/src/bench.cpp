#include <sys/utsname.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <iostream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include <Eigen/Core>

#include "engine.hpp"
#include "spgls/errors.hpp"
#include "spgls_cli/commands.hpp"

namespace spgls::cli {

namespace {

constexpr SolverKind kEngineOrder[] = {SolverKind::kOracle, SolverKind::kKrylov, SolverKind::kRtr};

struct RunRow {
  std::size_t cell = 0;
  std::size_t rep = 0;
  std::uint64_t seed = 0;
  SolverKind engine = SolverKind::kKrylov;
  bool ok = false;
  std::string error;
  EngineRun run;
};

struct Stats {
  double avg = 0.0;
  double min = 0.0;
  double max = 0.0;
  double median = 0.0;
  std::size_t count = 0;
};

Stats summarize(std::vector<double> v) {
  Stats s;
  s.count = v.size();
  if (v.empty()) return s;
  std::sort(v.begin(), v.end());
  s.min = v.front();
  s.max = v.back();
  s.avg = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  const std::size_t h = v.size() / 2;
  s.median = v.size() % 2 == 1 ? v[h] : 0.5 * (v[h - 1] + v[h]);
  return s;
}

Json stats_json(const Stats& s) {
  if (s.count == 0) return nullptr;
  return {{"avg", number(s.avg)},
          {"min", number(s.min)},
          {"max", number(s.max)},
          {"median", number(s.median)},
          {"count", s.count}};
}

std::string fmt(double v, const char* f = "%.6g") {
  if (!std::isfinite(v)) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Json environment(const RunConfig& cfg) {
  Json env;
#if defined(__VERSION__)
  env["compiler"] = std::string("gcc-compatible ") + __VERSION__;
#else
  env["compiler"] = "unknown";
#endif
#ifdef NDEBUG
  env["build"] = "release";
#else
  env["build"] = "debug";
#endif
  env["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                 "." + std::to_string(EIGEN_MINOR_VERSION);
  struct utsname u {};
  if (uname(&u) == 0) {
    env["os"] = std::string(u.sysname) + " " + u.release;
    env["machine"] = u.machine;
    env["host"] = u.nodename;
  }
  env["hardware_threads"] = std::thread::hardware_concurrency();
  env["jobs"] = cfg.jobs;
  const std::time_t now = std::time(nullptr);
  char ts[32];
  std::strftime(ts, sizeof ts, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  env["timestamp_utc"] = ts;
  return env;
}

std::vector<RunRow> run_task(const RunConfig& cfg, std::size_t cell_idx, std::size_t rep) {
  const BenchCell& cell = cfg.cells[cell_idx];
  const std::uint64_t seed = cfg.seed + rep;
  std::vector<RunRow> rows;
  SyntheticSpec spec = cfg.spec;
  spec.m = cell.m;
  spec.n = cell.n;
  spec.density = cell.density;
  spec.seed = seed;
  spec.noise = cfg.noise.value_or(cell.density >= 1.0 ? 0.1 : 0.5);

  std::optional<Dataset> d;
  std::optional<SclsProblem> p;
  std::string setup_error;
  try {
    d = generate(spec, cfg.gamma);
    p = build_scls(*d);
  } catch (const std::exception& e) {
    setup_error = std::string("generation failed: ") + e.what();
  }
  for (SolverKind kind : kEngineOrder) {
    if (kind == SolverKind::kOracle && cell.n + 1 > cfg.oracle_cap) continue;
    RunRow row;
    row.cell = cell_idx;
    row.rep = rep;
    row.seed = seed;
    row.engine = kind;
    if (!d) {
      row.error = setup_error;
    } else {
      try {
        row.run = run_engine(*d, *p, kind, cfg, seed);
        row.ok = true;
      } catch (const std::exception& e) {
        row.error = e.what();
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

const RunRow* find_row(const std::vector<RunRow>& rows, std::size_t cell, std::size_t rep,
                       SolverKind kind) {
  for (const auto& r : rows) {
    if (r.cell == cell && r.rep == rep && r.engine == kind && r.ok) return &r;
  }
  return nullptr;
}

std::string latex_table(const RunConfig& cfg, const Json& cells) {
  std::ostringstream t;
  t << "\\begin{tabular}{rrr|rrr|rrr|rrr}\n\\hline\n"
    << "$m$ & $n$ & density & oracle (s) & Krylov (s) & RTR (s)"
    << " & \\multicolumn{3}{c|}{Krylov rel.\\ err.} & \\multicolumn{3}{c}{RTR rel.\\ err.} \\\\\n"
    << " & & & & & & AVG & MIN & MAX & AVG & MIN & MAX \\\\\n\\hline\n";
  auto cellv = [](const Json& j, const char* key, const char* f) -> std::string {
    if (!j.is_object() || !j.contains(key) || !j[key].is_number()) return "--";
    return fmt(j[key].get<double>(), f);
  };
  for (std::size_t i = 0; i < cfg.cells.size(); ++i) {
    const Json& c = cells[i];
    t << cfg.cells[i].m << " & " << cfg.cells[i].n << " & " << fmt(cfg.cells[i].density, "%g");
    for (const char* e : {"oracle", "krylov", "rtr"}) {
      const Json& eng = c["engines"].contains(e) ? c["engines"][e]["wall_time_seconds"] : Json();
      t << " & " << cellv(eng, "avg", "%.3f");
    }
    const Json& ref = c["reference"];
    for (const char* e : {"krylov", "rtr"}) {
      const std::string key = ref.is_string() ? ref.get<std::string>() + "_vs_" + e : "";
      const Json& err =
          c["relative_errors"].contains(key) ? c["relative_errors"][key] : Json();
      for (const char* s : {"avg", "min", "max"}) t << " & " << cellv(err, s, "%.2e");
    }
    t << " \\\\\n";
  }
  t << "\\hline\n\\end{tabular}\n";
  return t.str();
}

}  // namespace

int cmd_bench(const RunConfig& cfg_in, std::ostream& out, std::ostream& err) {
  try {
    RunConfig cfg = cfg_in;
    cfg.validate();
    if (cfg.input || cfg.spec_file) throw InvalidArgument("bench generates its own instances");
    if (cfg.cells.empty()) {
      cfg.cells.push_back({cfg.spec.m, cfg.spec.n, cfg.spec.density});
    }

    std::vector<std::pair<std::size_t, std::size_t>> tasks;
    for (std::size_t c = 0; c < cfg.cells.size(); ++c) {
      for (std::size_t r = 0; r < cfg.reps; ++r) tasks.emplace_back(c, r);
    }
    std::vector<std::vector<RunRow>> results(tasks.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
      for (std::size_t i = next++; i < tasks.size(); i = next++) {
        results[i] = run_task(cfg, tasks[i].first, tasks[i].second);
      }
    };
    const std::size_t nthreads = std::min(cfg.jobs, tasks.size());
    if (nthreads <= 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (std::size_t t = 0; t < nthreads; ++t) pool.emplace_back(worker);
      for (auto& th : pool) th.join();
    }
    std::vector<RunRow> rows;
    for (auto& r : results) {
      for (auto& row : r) rows.push_back(std::move(row));
    }

    Json report;
    report["schema"] = "spgls.bench_report/1";
    report["environment"] = environment(cfg);
    report["gamma"] = cfg.gamma;
    report["reps"] = cfg.reps;
    report["seed"] = cfg.seed;

    std::ostringstream csv;
    csv << "cell,m,n,density,rep,seed,engine,status,objective,v_star,kkt_residual,matvecs,"
           "iterations,wall_time_seconds,converged,apex,rel_err_vs_ref,error\n";

    Json cells = Json::array();
    std::size_t failures = 0;
    for (std::size_t c = 0; c < cfg.cells.size(); ++c) {
      const BenchCell& cell = cfg.cells[c];
      const bool has_oracle = cell.n + 1 <= cfg.oracle_cap;
      const SolverKind ref_kind = has_oracle ? SolverKind::kOracle : SolverKind::kKrylov;
      Json cj;
      cj["m"] = cell.m;
      cj["n"] = cell.n;
      cj["density"] = cell.density;
      cj["reference"] = to_string(ref_kind);

      Json engines = Json::object();
      Json rel = Json::object();
      Json runs = Json::array();
      Json cell_failures = Json::array();
      for (SolverKind kind : kEngineOrder) {
        if (kind == SolverKind::kOracle && !has_oracle) continue;
        std::vector<double> times, matvecs, iters, errs;
        std::size_t converged = 0;
        for (const auto& row : rows) {
          if (row.cell != c || row.engine != kind) continue;
          const RunRow* ref = find_row(rows, c, row.rep, ref_kind);
          double e = std::nan("");
          if (row.ok && ref != nullptr && kind != ref_kind) {
            const double fr = ref->run.report.objective;
            e = (fr - row.run.report.objective) / std::abs(fr);
            errs.push_back(e);
          }
          Json rj;
          rj["rep"] = row.rep;
          rj["seed"] = row.seed;
          rj["engine"] = to_string(kind);
          rj["status"] = row.ok ? "ok" : "failed";
          if (row.ok) {
            const SolveReport& rep = row.run.report;
            times.push_back(rep.wall_time_seconds);
            matvecs.push_back(static_cast<double>(rep.matvecs));
            iters.push_back(static_cast<double>(rep.iterations));
            if (rep.converged()) ++converged;
            rj["termination"] = to_string(rep.termination);
            rj["objective"] = number(rep.objective);
            rj["v_star"] = number(row.run.value);
            rj["lambda_star"] = number(rep.lambda_star);
            rj["kkt_residual"] = number(rep.kkt_residual);
            rj["matvecs"] = rep.matvecs;
            rj["iterations"] = rep.iterations;
            rj["wall_time_seconds"] = number(rep.wall_time_seconds);
            rj["hard_case"] = rep.hard_case;
            rj["apex"] = row.run.apex;
            rj["rel_err_vs_ref"] = number(e);
          } else {
            ++failures;
            rj["error"] = row.error;
            cell_failures.push_back(
                {{"rep", row.rep}, {"engine", to_string(kind)}, {"error", row.error}});
          }
          runs.push_back(std::move(rj));

          const SolveReport& rep = row.run.report;
          std::string msg = row.error;
          std::replace(msg.begin(), msg.end(), ',', ';');
          std::replace(msg.begin(), msg.end(), '\n', ' ');
          csv << c << ',' << cell.m << ',' << cell.n << ',' << fmt(cell.density, "%g") << ','
              << row.rep << ',' << row.seed << ',' << to_string(kind) << ','
              << (row.ok ? "ok" : "failed") << ',';
          if (row.ok) {
            csv << fmt(rep.objective, "%.17g") << ',' << fmt(row.run.value, "%.17g") << ','
                << fmt(rep.kkt_residual, "%.3e") << ',' << rep.matvecs << ',' << rep.iterations
                << ',' << fmt(rep.wall_time_seconds, "%.6f") << ','
                << (rep.converged() ? 1 : 0) << ',' << (row.run.apex ? 1 : 0) << ','
                << fmt(e, "%.6e") << ",\n";
          } else {
            csv << ",,,,,,,,," << msg << '\n';
          }
        }
        Json ej;
        ej["runs_ok"] = times.size();
        ej["converged"] = converged;
        ej["wall_time_seconds"] = stats_json(summarize(times));
        ej["matvecs"] = stats_json(summarize(matvecs));
        ej["iterations"] = stats_json(summarize(iters));
        engines[to_string(kind)] = std::move(ej);
        if (kind != ref_kind) {
          rel[std::string(to_string(ref_kind)) + "_vs_" + to_string(kind)] =
              stats_json(summarize(errs));
        }
      }
      if (has_oracle) {
        std::vector<double> errs;
        for (std::size_t r = 0; r < cfg.reps; ++r) {
          const RunRow* a = find_row(rows, c, r, SolverKind::kKrylov);
          const RunRow* b = find_row(rows, c, r, SolverKind::kRtr);
          if (a == nullptr || b == nullptr) continue;
          const double fa = a->run.report.objective;
          errs.push_back((fa - b->run.report.objective) / std::abs(fa));
        }
        rel["krylov_vs_rtr"] = stats_json(summarize(errs));
      }
      cj["engines"] = std::move(engines);
      cj["relative_errors"] = std::move(rel);
      cj["failures"] = std::move(cell_failures);
      cj["runs"] = std::move(runs);
      cells.push_back(std::move(cj));
    }
    report["failed_runs"] = failures;
    report["cells"] = cells;

    const std::string json_text = report.dump(2) + "\n";
    if (auto path = resolve_output(cfg, "bench_report.json")) {
      std::filesystem::path csv_path = *path;
      csv_path.replace_extension(".csv");
      write_atomic(csv_path, csv.str());
      if (cfg.latex) {
        std::filesystem::path tex_path = *path;
        tex_path.replace_extension(".tex");
        write_atomic(tex_path, latex_table(cfg, cells));
      }
      write_atomic(*path, json_text);
      out << "bench: " << rows.size() << " runs, " << failures << " failed; wrote "
          << path->string() << " and " << csv_path.string() << '\n';
    } else {
      out << json_text;
      if (cfg.latex) out << latex_table(cfg, cells);
    }
    if (failures > 0) err << "spgls bench: " << failures << " run(s) failed; see report\n";
    return kExitOk;
  } catch (const std::exception& e) {
    err << "spgls bench: " << e.what() << '\n';
    return kExitError;
  }
}

}  // namespace spgls::cli
