#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"
#include "schema_validator.hpp"
#include "spgls/errors.hpp"
#include "spgls_cli/commands.hpp"

namespace spgls::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

json read_json(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

std::vector<std::string> schema_errors(const std::string& name, const json& doc) {
  const testing::SchemaValidator v(read_json(fs::path(SPGLS_SCHEMA_DIR) / name));
  return v.validate(doc);
}

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& e : v) s += e + "\n";
  return s;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    std::random_device rd;
    dir_ = fs::temp_directory_path() / ("spgls_cli_" + std::to_string(rd()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  RunConfig synthetic(std::size_t m, std::size_t n, std::uint64_t seed = 0) const {
    RunConfig cfg;
    cfg.spec.m = m;
    cfg.spec.n = n;
    cfg.synthetic_flags = true;
    cfg.seed = seed;
    return cfg;
  }

  fs::path gen_csv(std::size_t m, std::size_t n, std::uint64_t seed) {
    RunConfig cfg = synthetic(m, n, seed);
    cfg.out = dir_ / ("data_" + std::to_string(seed) + ".csv");
    std::ostringstream out, err;
    EXPECT_EQ(cmd_gen(cfg, out, err), kExitOk) << err.str();
    return *cfg.out;
  }

  json solve(RunConfig cfg, const std::string& name, int expected_rc = kExitOk) {
    cfg.out = dir_ / name;
    std::ostringstream out, err;
    EXPECT_EQ(cmd_solve(cfg, out, err), expected_rc) << err.str();
    return read_json(*cfg.out);
  }

  fs::path dir_;
};

TEST_F(CliTest, TinyCsvOracleCertificate) {
  RunConfig cfg;
  cfg.input = gen_csv(12, 4, 3);
  cfg.solver = SolverKind::kOracle;
  const json rep = solve(cfg, "oracle.json");
  EXPECT_TRUE(schema_errors("solve_report.schema.json", rep).empty())
      << join(schema_errors("solve_report.schema.json", rep));
  EXPECT_LE(rep["kkt_residual"].get<double>(), 1e-10);
  EXPECT_EQ(rep["dataset"]["n"], 4);
  EXPECT_EQ(rep["w_star"].size(), 4u);
}

TEST_F(CliTest, KrylovMatchesOracleOnSameInstance) {
  RunConfig cfg;
  cfg.input = gen_csv(40, 15, 5);
  cfg.solver = SolverKind::kOracle;
  const json o = solve(cfg, "o.json");
  cfg.solver = SolverKind::kKrylov;
  const json k = solve(cfg, "k.json");
  cfg.solver = SolverKind::kRtr;
  const json r = solve(cfg, "r.json");
  const double fo = o["v_star"].get<double>();
  EXPECT_LE(std::abs(k["v_star"].get<double>() - fo) / std::abs(fo), 1e-7);
  EXPECT_LE(std::abs(r["v_star"].get<double>() - fo) / std::abs(fo), 1e-6);
  EXPECT_TRUE(schema_errors("solve_report.schema.json", k).empty());
  EXPECT_TRUE(schema_errors("solve_report.schema.json", r).empty());
}

TEST_F(CliTest, MalformedInputExitsOneWithoutOutput) {
  const fs::path bad = dir_ / "bad.csv";
  std::ofstream(bad) << "y,x1,x2\n1,2,3\n4,oops,6\n";
  RunConfig cfg;
  cfg.input = bad;
  cfg.out = dir_ / "report.json";
  std::ostringstream out, err;
  EXPECT_EQ(cmd_solve(cfg, out, err), kExitError);
  EXPECT_FALSE(fs::exists(*cfg.out));
  EXPECT_NE(err.str().find("row 2"), std::string::npos) << err.str();
  for (const auto& e : fs::directory_iterator(dir_)) {
    EXPECT_EQ(e.path().filename().string().find(".tmp"), std::string::npos);
  }
}

TEST_F(CliTest, MissingFileExitsOne) {
  RunConfig cfg;
  cfg.input = dir_ / "nope.svm";
  std::ostringstream out, err;
  EXPECT_EQ(cmd_solve(cfg, out, err), kExitError);
  EXPECT_FALSE(err.str().empty());
}

TEST_F(CliTest, MaxIterationsExitsTwo) {
  RunConfig cfg = synthetic(30, 20, 1);
  cfg.max_iter = 1;
  const json rep = solve(cfg, "mi.json", kExitMaxIter);
  EXPECT_FALSE(rep["converged"].get<bool>());
  EXPECT_EQ(rep["termination"], "max-iterations");
}

TEST_F(CliTest, GenThenSolveIsDeterministic) {
  std::vector<double> values;
  for (int run = 0; run < 2; ++run) {
    RunConfig g = synthetic(50, 20, 9);
    g.spec.density = 0.2;
    g.out = dir_ / ("d" + std::to_string(run) + ".svm");
    std::ostringstream out, err;
    ASSERT_EQ(cmd_gen(g, out, err), kExitOk) << err.str();
    RunConfig s;
    s.input = g.out;
    for (SolverKind kind : {SolverKind::kKrylov, SolverKind::kRtr}) {
      s.solver = kind;
      values.push_back(solve(s, "s.json")["v_star"].get<double>());
    }
  }
  EXPECT_EQ(values[0], values[2]);
  EXPECT_EQ(values[1], values[3]);
}

TEST_F(CliTest, GenWritesSpecSidecar) {
  RunConfig g = synthetic(20, 5, 4);
  g.out = dir_ / "x.svm";
  std::ostringstream out, err;
  ASSERT_EQ(cmd_gen(g, out, err), kExitOk);
  std::ifstream in(dir_ / "x.svm.spec");
  const SyntheticSpec spec = spec_from_config(in);
  EXPECT_EQ(spec.m, 20u);
  EXPECT_EQ(spec.n, 5u);
  EXPECT_EQ(spec.seed, 4u);
  const json summary = json::parse(out.str());
  EXPECT_EQ(summary["m"], 20);
}

TEST_F(CliTest, GenRequiresOutput) {
  RunConfig g = synthetic(20, 5);
  std::ostringstream out, err;
  const char* saved = std::getenv("SPGLS_OUTPUT_DIR");
  if (saved == nullptr) EXPECT_EQ(cmd_gen(g, out, err), kExitError);
}

TEST_F(CliTest, OutputDirectoryFromEnvironment) {
  const char* saved = std::getenv("SPGLS_OUTPUT_DIR");
  const std::string keep = saved ? saved : "";
  ::setenv("SPGLS_OUTPUT_DIR", dir_.c_str(), 1);
  RunConfig cfg = synthetic(15, 5);
  std::ostringstream out, err;
  EXPECT_EQ(cmd_solve(cfg, out, err), kExitOk);
  EXPECT_TRUE(fs::exists(dir_ / "solve_report.json"));
  EXPECT_TRUE(out.str().empty());
  if (saved) {
    ::setenv("SPGLS_OUTPUT_DIR", keep.c_str(), 1);
  } else {
    ::unsetenv("SPGLS_OUTPUT_DIR");
  }
}

TEST_F(CliTest, VerifyRandomBatchPasses) {
  RunConfig cfg;
  cfg.batch = 50;
  cfg.out = dir_ / "verify.json";
  std::ostringstream out, err;
  EXPECT_EQ(cmd_verify(cfg, out, err), kExitOk) << out.str() << err.str();
  EXPECT_EQ(out.str().find("FAIL"), std::string::npos);
  const json rep = read_json(*cfg.out);
  EXPECT_TRUE(schema_errors("verify_report.schema.json", rep).empty())
      << join(schema_errors("verify_report.schema.json", rep));
  EXPECT_EQ(rep["instances"].size(), 50u);
  EXPECT_TRUE(rep["passed"].get<bool>());
}

TEST_F(CliTest, VerifyCenteredRoutesKrylov) {
  RunConfig cfg;
  cfg.instance = VerifyInstance::kCentered;
  std::ostringstream out, err;
  EXPECT_EQ(cmd_verify(cfg, out, err), kExitOk) << out.str() << err.str();
  EXPECT_NE(out.str().find("PASS seed=0 krylov_centered_routing"), std::string::npos);
  EXPECT_NE(out.str().find("PASS seed=0 oracle_certificate"), std::string::npos);
}

TEST_F(CliTest, VerifyHardCasePasses) {
  RunConfig cfg;
  cfg.instance = VerifyInstance::kHardCase;
  cfg.batch = 10;
  std::ostringstream out, err;
  EXPECT_EQ(cmd_verify(cfg, out, err), kExitOk) << out.str() << err.str();
}

TEST_F(CliTest, VerifyFailureExitsThree) {
  RunConfig cfg;
  cfg.instance = VerifyInstance::kRandom;
  cfg.max_iter = 1;
  std::ostringstream out, err;
  EXPECT_EQ(cmd_verify(cfg, out, err), kExitVerifyFailed);
  EXPECT_NE(out.str().find("FAIL"), std::string::npos);
}

TEST_F(CliTest, CenteredSolveWithKrylovUsesOracle) {
  const fs::path csv = dir_ / "centered.csv";
  {
    std::ofstream f(csv);
    f << "y,x1,x2,z\n";
    const double rows[5][3] = {{1, 0.5, -1}, {2, 1.5, 0.3}, {-1, 0.2, 2}, {0.5, -1, 1}, {3, 2, -2}};
    for (const auto& r : rows) f << r[0] / 2.0 << ',' << r[1] << ',' << r[2] << ',' << r[0] << '\n';
  }
  RunConfig cfg;
  cfg.input = csv;
  cfg.z_col = 3;
  const json rep = solve(cfg, "c.json");
  EXPECT_EQ(rep["solver"], "krylov");
  EXPECT_NE(rep["diagnostics"][0].get<std::string>().find("centered"), std::string::npos);
  EXPECT_LE(rep["kkt_residual"].get<double>(), 1e-10);
}

TEST_F(CliTest, BenchShapeAndSchema) {
  RunConfig cfg;
  cfg.cells = {{60, 30, 1.0}, {80, 30, 0.2}};
  cfg.reps = 3;
  cfg.latex = true;
  cfg.jobs = 2;
  cfg.out = dir_ / "bench.json";
  std::ostringstream out, err;
  ASSERT_EQ(cmd_bench(cfg, out, err), kExitOk) << err.str();
  const json rep = read_json(*cfg.out);
  EXPECT_TRUE(schema_errors("bench_report.schema.json", rep).empty())
      << join(schema_errors("bench_report.schema.json", rep));
  std::map<std::string, int> per_engine;
  for (const auto& cell : rep["cells"]) {
    EXPECT_EQ(cell["reference"], "oracle");
    for (const auto& run : cell["runs"]) per_engine[run["engine"].get<std::string>()]++;
    for (const auto& [name, stats] : cell["relative_errors"].items()) {
      EXPECT_LE(std::abs(stats["max"].get<double>()), 5e-5) << name;
      EXPECT_LE(std::abs(stats["min"].get<double>()), 5e-5) << name;
    }
  }
  for (const char* e : {"oracle", "krylov", "rtr"}) EXPECT_EQ(per_engine[e], 6) << e;

  std::ifstream csv(dir_ / "bench.csv");
  std::string line;
  int lines = 0;
  while (std::getline(csv, line)) ++lines;
  EXPECT_EQ(lines, 1 + 2 * 3 * 3);
  EXPECT_TRUE(fs::exists(dir_ / "bench.tex"));
}

TEST_F(CliTest, BenchRelativeErrorIsSignedAgainstReference) {
  RunConfig cfg;
  cfg.cells = {{40, 20, 1.0}};
  cfg.reps = 2;
  cfg.out = dir_ / "b.json";
  std::ostringstream out, err;
  ASSERT_EQ(cmd_bench(cfg, out, err), kExitOk);
  const json rep = read_json(*cfg.out);
  std::map<std::pair<int, std::string>, double> f;
  for (const auto& run : rep["cells"][0]["runs"]) {
    f[{run["rep"].get<int>(), run["engine"].get<std::string>()}] = run["objective"].get<double>();
  }
  for (const auto& run : rep["cells"][0]["runs"]) {
    if (run["engine"] == "oracle") {
      EXPECT_TRUE(run["rel_err_vs_ref"].is_null());
      continue;
    }
    const double fr = f[{run["rep"].get<int>(), "oracle"}];
    const double fo = run["objective"].get<double>();
    EXPECT_DOUBLE_EQ(run["rel_err_vs_ref"].get<double>(), (fr - fo) / std::abs(fr));
  }
}

TEST_F(CliTest, BenchRecordsCellFailuresAndContinues) {
  RunConfig cfg;
  cfg.cells = {{2, 2, 0.01}, {30, 10, 1.0}};
  cfg.reps = 1;
  cfg.out = dir_ / "b.json";
  std::ostringstream out, err;
  ASSERT_EQ(cmd_bench(cfg, out, err), kExitOk);
  const json rep = read_json(*cfg.out);
  EXPECT_GT(rep["failed_runs"].get<int>(), 0);
  EXPECT_FALSE(rep["cells"][0]["failures"].empty());
  EXPECT_TRUE(rep["cells"][1]["failures"].empty());
  EXPECT_EQ(rep["cells"][1]["engines"]["krylov"]["runs_ok"], 1);
}

TEST_F(CliTest, BenchSparseCellUsesFewMatvecs) {
  RunConfig cfg;
  cfg.cells = {{2000, 1000, 1e-3}};
  cfg.reps = 2;
  cfg.out = dir_ / "sparse.json";
  std::ostringstream out, err;
  ASSERT_EQ(cmd_bench(cfg, out, err), kExitOk);
  const json rep = read_json(*cfg.out);
  const double mv = rep["cells"][0]["engines"]["krylov"]["matvecs"]["max"].get<double>();
  EXPECT_LT(mv, 0.1 * 1001);
}

TEST(CliParse, Cells) {
  const auto cells = parse_cells("10x20,30x40@0.5", 1.0);
  ASSERT_EQ(cells.size(), 2u);
  EXPECT_EQ(cells[0].m, 10u);
  EXPECT_EQ(cells[0].n, 20u);
  EXPECT_EQ(cells[0].density, 1.0);
  EXPECT_EQ(cells[1].density, 0.5);
  EXPECT_THROW(parse_cells("10by20", 1.0), InvalidArgument);
  EXPECT_THROW(parse_cells("10x20@2", 1.0), InvalidArgument);
  EXPECT_THROW(parse_cells("0x5", 1.0), InvalidArgument);
  EXPECT_THROW(parse_cells("", 1.0), InvalidArgument);
}

TEST(CliParse, ConfigInvariants) {
  RunConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.gamma = 0.0;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg = {};
  cfg.input = "a.csv";
  cfg.synthetic_flags = true;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg = {};
  cfg.input = "a.csv";
  cfg.spec_file = "b.spec";
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg = {};
  cfg.reps = 0;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
}

TEST(CliParse, Defaults) {
  const RunConfig cfg;
  EXPECT_EQ(cfg.gamma, 0.1);
  EXPECT_EQ(cfg.reps, 10u);
  EXPECT_EQ(cfg.solver, SolverKind::kKrylov);
}

TEST(CliSchema, ValidatorRejectsBadDocuments) {
  const testing::SchemaValidator v(
      read_json(fs::path(SPGLS_SCHEMA_DIR) / "solve_report.schema.json"));
  json doc = {{"schema", "spgls.solve_report/1"}};
  EXPECT_FALSE(v.validate(doc).empty());
  doc = json::object();
  EXPECT_FALSE(v.validate(json::array()).empty());
}

}  // namespace
}  // namespace spgls::cli
