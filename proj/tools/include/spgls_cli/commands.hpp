#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "spgls/data.hpp"
#include "spgls/solve_report.hpp"

namespace spgls::cli {

/// Exit codes shared by all subcommands.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitMaxIter = 2;
inline constexpr int kExitVerifyFailed = 3;

enum class VerifyInstance { kRandom, kHardCase, kCentered };

struct BenchCell {
  std::size_t m = 0;
  std::size_t n = 0;
  double density = 1.0;
};

/// Parses "MxN" or "MxN@DENSITY", comma separated.
std::vector<BenchCell> parse_cells(const std::string& text, double default_density);

struct RunConfig {
  std::string command;
  /// Data file (.csv, otherwise libsvm). Mutually exclusive with synthetic
  /// generation.
  std::optional<std::filesystem::path> input;
  /// key=value synthetic spec file.
  std::optional<std::filesystem::path> spec_file;
  /// True when any synthetic-generation flag was given explicitly.
  bool synthetic_flags = false;
  SyntheticSpec spec;
  /// When unset, noise defaults to 0.1 for dense and 0.5 for sparse data.
  std::optional<double> noise;
  std::size_t label_col = 0;
  std::optional<std::size_t> z_col;

  double gamma = 0.1;
  SolverKind solver = SolverKind::kKrylov;
  std::optional<double> tol;
  std::optional<std::size_t> max_iter;
  bool perturb = false;
  std::size_t rtr_starts = 3;
  std::size_t oracle_cap = 1001;
  std::uint64_t seed = 0;

  std::size_t reps = 10;
  std::vector<BenchCell> cells;
  std::size_t jobs = 1;
  bool latex = false;

  std::size_t batch = 1;
  VerifyInstance instance = VerifyInstance::kRandom;

  std::optional<std::filesystem::path> out;

  void validate() const;
  /// Synthetic spec with noise default and seed applied.
  SyntheticSpec effective_spec() const;
};

/// Directory from SPGLS_OUTPUT_DIR, if set and non-empty.
std::optional<std::filesystem::path> default_output_dir();

/// Writes to a temporary file next to `path` and renames it into place, so a
/// failed run never leaves a partial file.
void write_atomic(const std::filesystem::path& path, const std::string& content);

/// Each command reports diagnostics on `err` and returns an exit code; no
/// exception escapes.
int cmd_gen(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_solve(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_verify(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_bench(const RunConfig& cfg, std::ostream& out, std::ostream& err);

/// Loads the configured input or generates the synthetic instance.
Dataset load_dataset(const RunConfig& cfg);

}  // namespace spgls::cli
