#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "spgls/linops.hpp"
#include "spgls/reformulate.hpp"

namespace spgls {

enum class RuleKind { kQuantileFloor, kAdditive, kAdditiveFloorZero };

const char* to_string(RuleKind k);
RuleKind parse_rule_kind(const std::string& s);

/// How the data provider derives its target labels z from the true labels y.
struct ManipulationRule {
  RuleKind kind = RuleKind::kQuantileFloor;
  /// Quantile level for kQuantileFloor, in (0, 1).
  double quantile = 0.25;
  /// Shift for the additive rules.
  double delta = 0.0;

  static ManipulationRule quantile_floor(double q);
  static ManipulationRule additive(double delta);
  static ManipulationRule additive_floor_zero(double delta);

  void validate() const;
  Vector apply(const Vector& y) const;
};

/// Lower empirical quantile: sorted(y)[min(ceil(q m), m - 1)] (0-based).
double lower_quantile(const Vector& y, double q);

struct SyntheticSpec {
  std::size_t m = 100;
  std::size_t n = 100;
  /// 1 selects the dense generator.
  double density = 1.0;
  /// Dense: standard deviation of Gaussian noise. Sparse: upper end of
  /// uniform [0, noise] noise.
  double noise = 0.1;
  std::uint64_t seed = 0;
  ManipulationRule rule;

  void validate() const;
};

/// X and labels without provider targets.
struct LabeledData {
  SparseMatrix X;
  Vector y;
};

/// Deterministic for a fixed spec. Sparse positions are sampled as
/// independent Bernoulli(density) trials per entry. gamma is attached by the
/// caller.
Dataset generate(const SyntheticSpec& spec, double gamma);
LabeledData generate_labeled(const SyntheticSpec& spec);

Dataset attach_rule(LabeledData data, const ManipulationRule& rule, double gamma);

struct CsvOptions {
  /// Column holding y (0-based, among all columns).
  std::size_t label_col = 0;
  /// Column holding z. When absent, `rule` derives z from y.
  std::optional<std::size_t> z_col;
  ManipulationRule rule;
  /// Columns to one-hot encode; their cells may be arbitrary strings.
  std::vector<std::size_t> categorical_cols;
};

/// Header row plus data rows as raw fields (RFC 4180 subset: quoted fields,
/// doubled quotes, CRLF or LF line ends).
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv_table(std::istream& in);

/// Dense dataset from a CSV file. Parse errors carry the 1-based data row and
/// 1-based column of the offending cell.
Dataset load_csv(const std::filesystem::path& path, const CsvOptions& opts, double gamma);
Dataset load_csv(std::istream& in, const CsvOptions& opts, double gamma);

/// Writes header "y,x1,...,xn" (plus ",z" when z is given) with %.17g values.
void write_csv(std::ostream& out, const SparseMatrix& x, const Vector& y,
               const Vector* z = nullptr);

/// "label idx:val ..." lines with 1-based, strictly increasing indices.
/// `min_cols` pads the column count (the format does not record it).
LabeledData load_libsvm(const std::filesystem::path& path, std::size_t min_cols = 0);
LabeledData load_libsvm(std::istream& in, std::size_t min_cols = 0);

/// Values are written with %.17g, so a read-back is bit-exact.
void write_libsvm(std::ostream& out, const SparseMatrix& x, const Vector& y);

/// Flat key=value form of a SyntheticSpec. Unknown keys are a ParseError.
std::string spec_to_config(const SyntheticSpec& spec);
SyntheticSpec spec_from_config(std::istream& in);

/// Seeded uniform split of row indices; returns (train, test).
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> train_test_split(
    std::size_t m, double test_fraction, std::uint64_t seed);

/// Rows `idx` of the dataset, keeping gamma.
Dataset select_rows(const Dataset& d, const std::vector<std::size_t>& idx);

}  // namespace spgls
