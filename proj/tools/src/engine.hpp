#pragma once

#include <optional>
#include <string>

#include "json.hpp"
#include "spgls/reformulate.hpp"
#include "spgls/solve_report.hpp"
#include "spgls_cli/commands.hpp"

namespace spgls::cli {

using Json = nlohmann::ordered_json;

/// One engine run on one instance, with the recovered game solution.
struct EngineRun {
  SolverKind solver = SolverKind::kKrylov;
  SolveReport report;
  Vector r;
  /// Game value v(w, alpha); equals the SCLS objective when a point exists.
  double value = 0.0;
  std::optional<SpgPoint> point;
  bool apex = false;
};

/// Runs `kind` on `d`, routing g = 0 to the oracle for the Krylov engine and
/// resolving apex landings by restarts away from the apex.
EngineRun run_engine(const Dataset& d, const SclsProblem& p, SolverKind kind,
                     const RunConfig& cfg, std::uint64_t seed);

/// Finite numbers as numbers, everything else as null.
Json number(double v);
Json solve_report_json(const Dataset& d, const EngineRun& run, const std::string& source);

/// Writes to cfg.out, to SPGLS_OUTPUT_DIR/<default_name>, or to `out`.
void emit(const RunConfig& cfg, const std::string& default_name, const std::string& text,
          std::ostream& out);

std::optional<std::filesystem::path> resolve_output(const RunConfig& cfg,
                                                    const std::string& default_name);

}  // namespace spgls::cli
