#include "spgls/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "spgls/errors.hpp"

namespace spgls {

namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<std::size_t> parse_index(std::string_view s) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open input file '" + path.string() + "'");
  return in;
}

LabeledData dense_labeled(const SyntheticSpec& spec, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  const std::size_t m = spec.m;
  const std::size_t n = spec.n;
  std::vector<std::size_t> row_ptr(m + 1);
  std::vector<std::size_t> cols(m * n);
  std::vector<double> vals(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    row_ptr[i + 1] = (i + 1) * n;
    for (std::size_t j = 0; j < n; ++j) {
      cols[i * n + j] = j;
      vals[i * n + j] = normal(rng);
    }
  }
  Vector beta(static_cast<Eigen::Index>(n));
  for (auto& b : beta) b = normal(rng);
  auto x = SparseMatrix::from_csr(m, n, std::move(row_ptr), std::move(cols), std::move(vals));
  Vector y(static_cast<Eigen::Index>(m));
  x.multiply(beta, y);
  if (spec.noise > 0.0) {
    for (auto& v : y) v += spec.noise * normal(rng);
  }
  return {std::move(x), std::move(y)};
}

// Positions follow independent Bernoulli(density) trials over the m*n
// entries in row-major order, realized by geometric skips.
LabeledData sparse_labeled(const SyntheticSpec& spec, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const std::size_t m = spec.m;
  const std::size_t n = spec.n;
  const double total = static_cast<double>(m) * static_cast<double>(n);
  const double log_q = std::log1p(-spec.density);

  std::vector<std::size_t> row_ptr(m + 1, 0);
  std::vector<std::size_t> cols;
  std::vector<double> vals;
  cols.reserve(static_cast<std::size_t>(spec.density * total * 1.1) + 16);
  vals.reserve(cols.capacity());
  double pos = -1.0;
  for (;;) {
    const double u = 1.0 - unif(rng);  // (0, 1]
    pos += 1.0 + std::floor(std::log(u) / log_q);
    if (!(pos < total)) break;
    const auto lin = static_cast<std::size_t>(pos);
    const std::size_t i = lin / n;
    cols.push_back(lin % n);
    vals.push_back(normal(rng));
    ++row_ptr[i + 1];
  }
  for (std::size_t i = 0; i < m; ++i) row_ptr[i + 1] += row_ptr[i];

  Vector beta(static_cast<Eigen::Index>(n));
  for (auto& b : beta) b = normal(rng);
  auto x = SparseMatrix::from_csr(m, n, std::move(row_ptr), std::move(cols), std::move(vals));
  Vector y(static_cast<Eigen::Index>(m));
  x.multiply(beta, y);
  std::uniform_real_distribution<double> noise(0.0, spec.noise);
  if (spec.noise > 0.0) {
    for (auto& v : y) v += noise(rng);
  }
  return {std::move(x), std::move(y)};
}

}  // namespace

const char* to_string(RuleKind k) {
  switch (k) {
    case RuleKind::kQuantileFloor: return "quantile_floor";
    case RuleKind::kAdditive: return "additive";
    case RuleKind::kAdditiveFloorZero: return "additive_floor_zero";
  }
  return "unknown";
}

RuleKind parse_rule_kind(const std::string& s) {
  if (s == "quantile_floor") return RuleKind::kQuantileFloor;
  if (s == "additive") return RuleKind::kAdditive;
  if (s == "additive_floor_zero") return RuleKind::kAdditiveFloorZero;
  throw InvalidArgument("unknown manipulation rule '" + s +
                        "' (expected quantile_floor, additive or additive_floor_zero)");
}

ManipulationRule ManipulationRule::quantile_floor(double q) {
  ManipulationRule r;
  r.kind = RuleKind::kQuantileFloor;
  r.quantile = q;
  r.validate();
  return r;
}

ManipulationRule ManipulationRule::additive(double delta) {
  ManipulationRule r;
  r.kind = RuleKind::kAdditive;
  r.delta = delta;
  r.validate();
  return r;
}

ManipulationRule ManipulationRule::additive_floor_zero(double delta) {
  ManipulationRule r;
  r.kind = RuleKind::kAdditiveFloorZero;
  r.delta = delta;
  r.validate();
  return r;
}

void ManipulationRule::validate() const {
  if (kind == RuleKind::kQuantileFloor) {
    if (!(quantile > 0.0 && quantile < 1.0)) {
      throw InvalidArgument("quantile_floor: q must lie in (0, 1)");
    }
  } else if (!std::isfinite(delta)) {
    throw InvalidArgument("additive rule: delta must be finite");
  }
}

double lower_quantile(const Vector& y, double q) {
  if (y.size() == 0) throw InvalidArgument("lower_quantile: empty label vector");
  if (!(q > 0.0 && q < 1.0)) throw InvalidArgument("lower_quantile: q must lie in (0, 1)");
  std::vector<double> s(y.begin(), y.end());
  const auto m = s.size();
  const auto k = std::min(static_cast<std::size_t>(std::ceil(q * static_cast<double>(m))), m - 1);
  std::nth_element(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(k), s.end());
  return s[k];
}

Vector ManipulationRule::apply(const Vector& y) const {
  validate();
  switch (kind) {
    case RuleKind::kQuantileFloor: {
      const double t = lower_quantile(y, quantile);
      return y.cwiseMax(t);
    }
    case RuleKind::kAdditive:
      return (y.array() + delta).matrix();
    case RuleKind::kAdditiveFloorZero:
      return (y.array() + delta).cwiseMax(0.0).matrix();
  }
  throw InvalidArgument("unknown manipulation rule");
}

void SyntheticSpec::validate() const {
  if (m < 1 || n < 1) throw InvalidArgument("SyntheticSpec: m and n must be at least 1");
  if (!(density > 0.0 && density <= 1.0)) {
    throw InvalidArgument("SyntheticSpec: density must lie in (0, 1]");
  }
  if (!(noise >= 0.0) || !std::isfinite(noise)) {
    throw InvalidArgument("SyntheticSpec: noise must be finite and nonnegative");
  }
  rule.validate();
  if (density * static_cast<double>(m) * static_cast<double>(n) < 1.0) {
    std::ostringstream os;
    os << "SyntheticSpec: density * m * n = "
       << density * static_cast<double>(m) * static_cast<double>(n)
       << " < 1; the matrix would be empty";
    throw EmptyMatrixError(os.str());
  }
}

LabeledData generate_labeled(const SyntheticSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  return spec.density >= 1.0 ? dense_labeled(spec, rng) : sparse_labeled(spec, rng);
}

Dataset generate(const SyntheticSpec& spec, double gamma) {
  return attach_rule(generate_labeled(spec), spec.rule, gamma);
}

Dataset attach_rule(LabeledData data, const ManipulationRule& rule, double gamma) {
  Vector z = rule.apply(data.y);
  return Dataset(std::move(data.X), std::move(data.y), std::move(z), gamma);
}

CsvTable read_csv_table(std::istream& in) {
  CsvTable t;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  bool have_header = false;
  std::size_t line = 1;
  std::size_t record_line = 1;

  auto end_record = [&]() {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
    const bool blank = record.size() == 1 && record[0].empty();
    if (!blank) {
      if (!have_header) {
        t.header = std::move(record);
        have_header = true;
      } else {
        if (record.size() != t.header.size()) {
          std::ostringstream os;
          os << "CSV row " << t.rows.size() + 1 << " has " << record.size()
             << " fields, header has " << t.header.size();
          throw ParseError(os.str(), t.rows.size() + 1);
        }
        t.rows.push_back(std::move(record));
      }
    }
    record.clear();
  };

  char ch = 0;
  while (in.get(ch)) {
    if (in_quotes) {
      if (ch == '"') {
        if (in.peek() == '"') {
          in.get(ch);
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        if (ch == '\n') ++line;
        field.push_back(ch);
      }
      continue;
    }
    switch (ch) {
      case '"':
        if (field_started && !field.empty()) {
          std::ostringstream os;
          os << "CSV: stray quote inside an unquoted field on line " << line;
          throw ParseError(os.str(), line);
        }
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        record.push_back(std::move(field));
        field.clear();
        field_started = false;
        break;
      case '\r':
        break;
      case '\n':
        end_record();
        ++line;
        record_line = line;
        break;
      default:
        field.push_back(ch);
        field_started = true;
    }
  }
  if (in_quotes) {
    std::ostringstream os;
    os << "CSV: unterminated quoted field starting on line " << record_line;
    throw ParseError(os.str(), record_line);
  }
  if (!record.empty() || !field.empty()) end_record();
  if (!have_header) throw ParseError("CSV: missing header row", 1);
  return t;
}

Dataset load_csv(const std::filesystem::path& path, const CsvOptions& opts, double gamma) {
  auto in = open_input(path);
  return load_csv(in, opts, gamma);
}

Dataset load_csv(std::istream& in, const CsvOptions& opts, double gamma) {
  const CsvTable t = read_csv_table(in);
  const std::size_t ncols = t.header.size();
  if (opts.label_col >= ncols) throw InvalidArgument("CSV: label column out of range");
  if (opts.z_col && (*opts.z_col >= ncols || *opts.z_col == opts.label_col)) {
    throw InvalidArgument("CSV: z column out of range or equal to the label column");
  }
  std::vector<bool> categorical(ncols, false);
  for (std::size_t c : opts.categorical_cols) {
    if (c >= ncols) throw InvalidArgument("CSV: categorical column out of range");
    if (c == opts.label_col || (opts.z_col && c == *opts.z_col)) {
      throw InvalidArgument("CSV: label and z columns cannot be categorical");
    }
    categorical[c] = true;
  }
  if (t.rows.empty()) throw InvalidArgument("CSV: no data rows");

  // Levels of each categorical column, in sorted order.
  std::vector<std::map<std::string, std::size_t>> levels(ncols);
  for (std::size_t c = 0; c < ncols; ++c) {
    if (!categorical[c]) continue;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      const std::string v(trim(t.rows[i][c]));
      if (v.empty()) {
        std::ostringstream os;
        os << "CSV: missing value at row " << i + 1 << ", column " << c + 1;
        throw ParseError(os.str(), i + 1, c + 1);
      }
      levels[c].emplace(v, 0);
    }
    std::size_t k = 0;
    for (auto& [name, idx] : levels[c]) idx = k++;
  }

  std::vector<std::size_t> offset(ncols, 0);
  std::size_t n = 0;
  for (std::size_t c = 0; c < ncols; ++c) {
    if (c == opts.label_col || (opts.z_col && c == *opts.z_col)) continue;
    offset[c] = n;
    n += categorical[c] ? levels[c].size() : 1;
  }
  if (n == 0) throw InvalidArgument("CSV: no feature columns");

  const std::size_t m = t.rows.size();
  Matrix x = Matrix::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
  Vector y(static_cast<Eigen::Index>(m));
  Vector z(static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < m; ++i) {
    const auto& row = t.rows[i];
    for (std::size_t c = 0; c < ncols; ++c) {
      const auto ii = static_cast<Eigen::Index>(i);
      if (categorical[c]) {
        const std::string v(trim(row[c]));
        x(ii, static_cast<Eigen::Index>(offset[c] + levels[c].at(v))) = 1.0;
        continue;
      }
      if (trim(row[c]).empty()) {
        std::ostringstream os;
        os << "CSV: missing value at row " << i + 1 << ", column " << c + 1;
        throw ParseError(os.str(), i + 1, c + 1);
      }
      const auto v = parse_double(row[c]);
      if (!v) {
        std::ostringstream os;
        os << "CSV: non-numeric value '" << row[c] << "' at row " << i + 1 << ", column "
           << c + 1;
        throw ParseError(os.str(), i + 1, c + 1);
      }
      if (c == opts.label_col) {
        y[ii] = *v;
      } else if (opts.z_col && c == *opts.z_col) {
        z[ii] = *v;
      } else {
        x(ii, static_cast<Eigen::Index>(offset[c])) = *v;
      }
    }
  }
  if (!opts.z_col) z = opts.rule.apply(y);
  return Dataset(SparseMatrix::from_dense(x), std::move(y), std::move(z), gamma);
}

void write_csv(std::ostream& out, const SparseMatrix& x, const Vector& y, const Vector* z) {
  if (static_cast<std::size_t>(y.size()) != x.rows() ||
      (z && static_cast<std::size_t>(z->size()) != x.rows())) {
    throw InvalidArgument("write_csv: label length does not match the matrix");
  }
  out << "y";
  for (std::size_t j = 0; j < x.cols(); ++j) out << ",x" << j + 1;
  if (z) out << ",z";
  out << '\n';
  const Matrix dense = x.to_dense();
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    out << fmt_double(y[ii]);
    for (std::size_t j = 0; j < x.cols(); ++j) {
      out << ',' << fmt_double(dense(ii, static_cast<Eigen::Index>(j)));
    }
    if (z) out << ',' << fmt_double((*z)[ii]);
    out << '\n';
  }
}

LabeledData load_libsvm(const std::filesystem::path& path, std::size_t min_cols) {
  auto in = open_input(path);
  return load_libsvm(in, min_cols);
}

LabeledData load_libsvm(std::istream& in, std::size_t min_cols) {
  std::vector<std::size_t> row_ptr{0};
  std::vector<std::size_t> cols;
  std::vector<double> vals;
  std::vector<double> labels;
  std::size_t max_col = 0;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    std::string_view s(text);
    if (const auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
    s = trim(s);
    if (s.empty()) continue;

    std::istringstream tokens{std::string(s)};
    std::string tok;
    tokens >> tok;
    const auto label = parse_double(tok);
    if (!label) {
      throw ParseError("libsvm line " + std::to_string(line) + ": bad label '" + tok + "'", line);
    }
    labels.push_back(*label);
    std::size_t prev = 0;
    while (tokens >> tok) {
      const auto colon = tok.find(':');
      const auto idx = colon == std::string::npos
                           ? std::nullopt
                           : parse_index(std::string_view(tok).substr(0, colon));
      const auto val = colon == std::string::npos
                           ? std::nullopt
                           : parse_double(std::string_view(tok).substr(colon + 1));
      if (!idx || !val || *idx == 0) {
        throw ParseError(
            "libsvm line " + std::to_string(line) + ": malformed feature '" + tok + "'", line);
      }
      if (*idx <= prev) {
        throw ParseError("libsvm line " + std::to_string(line) +
                             ": feature indices must be strictly increasing",
                         line);
      }
      prev = *idx;
      max_col = std::max(max_col, *idx);
      cols.push_back(*idx - 1);
      vals.push_back(*val);
    }
    row_ptr.push_back(cols.size());
  }
  if (labels.empty()) throw InvalidArgument("libsvm: no data lines");
  const std::size_t n = std::max({max_col, min_cols, std::size_t{1}});
  auto x = SparseMatrix::from_csr(labels.size(), n, std::move(row_ptr), std::move(cols),
                                  std::move(vals));
  Vector y = Eigen::Map<const Vector>(labels.data(), static_cast<Eigen::Index>(labels.size()));
  return {std::move(x), std::move(y)};
}

void write_libsvm(std::ostream& out, const SparseMatrix& x, const Vector& y) {
  if (static_cast<std::size_t>(y.size()) != x.rows()) {
    throw InvalidArgument("write_libsvm: label length does not match the matrix");
  }
  for (std::size_t i = 0; i < x.rows(); ++i) {
    out << fmt_double(y[static_cast<Eigen::Index>(i)]);
    const auto c = x.row_cols(i);
    const auto v = x.row_values(i);
    for (std::size_t k = 0; k < c.size(); ++k) out << ' ' << c[k] + 1 << ':' << fmt_double(v[k]);
    out << '\n';
  }
}

std::string spec_to_config(const SyntheticSpec& spec) {
  std::ostringstream os;
  os << "m=" << spec.m << '\n'
     << "n=" << spec.n << '\n'
     << "density=" << fmt_double(spec.density) << '\n'
     << "noise=" << fmt_double(spec.noise) << '\n'
     << "seed=" << spec.seed << '\n'
     << "rule=" << to_string(spec.rule.kind) << '\n'
     << "quantile=" << fmt_double(spec.rule.quantile) << '\n'
     << "delta=" << fmt_double(spec.rule.delta) << '\n';
  return os.str();
}

SyntheticSpec spec_from_config(std::istream& in) {
  SyntheticSpec spec;
  std::string text;
  std::size_t line = 0;
  auto fail = [&](const std::string& msg) -> void {
    throw ParseError("config line " + std::to_string(line) + ": " + msg, line);
  };
  while (std::getline(in, text)) {
    ++line;
    std::string_view s = trim(text);
    if (s.empty() || s.front() == '#') continue;
    const auto eq = s.find('=');
    if (eq == std::string_view::npos) fail("expected key=value");
    const std::string key(trim(s.substr(0, eq)));
    const std::string_view val = trim(s.substr(eq + 1));
    auto num = [&]() {
      const auto v = parse_double(val);
      if (!v) fail("bad number for '" + key + "'");
      return *v;
    };
    auto count = [&]() {
      const auto v = parse_index(val);
      if (!v) fail("bad integer for '" + key + "'");
      return *v;
    };
    if (key == "m") {
      spec.m = count();
    } else if (key == "n") {
      spec.n = count();
    } else if (key == "density") {
      spec.density = num();
    } else if (key == "noise") {
      spec.noise = num();
    } else if (key == "seed") {
      spec.seed = count();
    } else if (key == "rule") {
      try {
        spec.rule.kind = parse_rule_kind(std::string(val));
      } catch (const InvalidArgument& e) {
        fail(e.what());
      }
    } else if (key == "quantile") {
      spec.rule.quantile = num();
    } else if (key == "delta") {
      spec.rule.delta = num();
    } else {
      fail("unknown key '" + key + "'");
    }
  }
  spec.validate();
  return spec;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> train_test_split(
    std::size_t m, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw InvalidArgument("train_test_split: test_fraction must lie in (0, 1)");
  }
  std::vector<std::size_t> idx(m);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  const auto n_test = static_cast<std::size_t>(std::round(test_fraction * static_cast<double>(m)));
  std::vector<std::size_t> test(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test));
  std::vector<std::size_t> train(idx.begin() + static_cast<std::ptrdiff_t>(n_test), idx.end());
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {std::move(train), std::move(test)};
}

Dataset select_rows(const Dataset& d, const std::vector<std::size_t>& idx) {
  std::vector<std::size_t> row_ptr{0};
  std::vector<std::size_t> cols;
  std::vector<double> vals;
  Vector y(static_cast<Eigen::Index>(idx.size()));
  Vector z(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const std::size_t i = idx[k];
    if (i >= d.m()) throw InvalidArgument("select_rows: row index out of range");
    const auto c = d.X().row_cols(i);
    const auto v = d.X().row_values(i);
    cols.insert(cols.end(), c.begin(), c.end());
    vals.insert(vals.end(), v.begin(), v.end());
    row_ptr.push_back(cols.size());
    y[static_cast<Eigen::Index>(k)] = d.y()[static_cast<Eigen::Index>(i)];
    z[static_cast<Eigen::Index>(k)] = d.z()[static_cast<Eigen::Index>(i)];
  }
  auto x = SparseMatrix::from_csr(idx.size(), d.n(), std::move(row_ptr), std::move(cols),
                                  std::move(vals));
  return Dataset(std::move(x), std::move(y), std::move(z), d.gamma());
}

}  // namespace spgls
