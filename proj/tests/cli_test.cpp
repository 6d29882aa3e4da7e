#include "helpers.hpp"
#include "lgc/cli.hpp"
#include "lgc/io.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace lgc {
namespace {

namespace fs = std::filesystem;

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun lgc_run(std::vector<std::string> args) {
  args.insert(args.begin(), "lgc");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("lgc_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  fs::path dir_;
};

TEST(Io, SectionRoundTripIsExact) {
  const GridLayout grid{3, 2};
  std::mt19937_64 rng(61);
  const Section y = test::random_section(grid, 2, 3, rng);
  std::stringstream ss;
  write_section(ss, grid, y, {{"seed", "61"}});
  FieldHeader h;
  const Section back = read_section(ss, &h);
  EXPECT_EQ(h.components, 2);
  EXPECT_EQ(h.grid.width, 3);
  ASSERT_EQ(h.meta.size(), 1u);
  for (VertexId v = 0; v < grid.num_vertices(); ++v)
    for (int k = 0; k < 2; ++k) EXPECT_EQ(back.at(v)[k].matrix(), y.at(v)[k].matrix());
}

TEST(Io, MultiplierRoundTrip) {
  const GridLayout grid{2, 2};
  std::mt19937_64 rng(62);
  const Multiplier m = test::random_multiplier(grid, 3, rng);
  std::stringstream ss;
  write_multiplier(ss, grid, m);
  const Multiplier back = read_multiplier(ss);
  for (FaceId f = 0; f < grid.num_faces(); ++f) EXPECT_EQ(back.at(f).matrix(), m.at(f).matrix());
}

TEST(Io, MalformedInputs) {
  std::stringstream bad1("not a field\n");
  EXPECT_THROW(read_section(bad1), FormatError);
  std::stringstream bad2("lgc-field 1\nkind section\nn 3\ncomponents 1\ngrid 1 1\nrecords 1\n0 0 0 1 0 0\n");
  EXPECT_THROW(read_section(bad2), FormatError);
  std::stringstream bad3("lgc-field 1\nkind section\nn 2\ncomponents 1\ngrid 1 1\nrecords 1\n0 0 0 2 0 0 1\n");
  EXPECT_THROW(read_section(bad3), FormatError);
}

TEST(Config, ParsesAndRejects) {
  const cli::RunConfig c = cli::parse_config(
      R"({"n": 3, "grid": [5, 4], "boundary": {"kind": "identity"}, "tolerances": {"ep_tol": 1e-9},
          "verify": {"instances": 3}})");
  EXPECT_EQ(c.width, 5);
  EXPECT_EQ(c.height, 4);
  EXPECT_EQ(c.boundary, cli::BoundaryKind::identity);
  EXPECT_EQ(c.tol.ep_tol, 1e-9);
  EXPECT_EQ(c.instances, 3);
  EXPECT_THROW(cli::parse_config(R"({"bogus": 1})"), cli::ConfigError);
  EXPECT_THROW(cli::parse_config("{"), cli::ConfigError);
  EXPECT_THROW(cli::parse_config(R"({"grid": [1]})"), cli::ConfigError);
  cli::RunConfig bad;
  bad.n = 1;
  EXPECT_THROW(cli::validate(bad), cli::ConfigError);
}

TEST_F(CliTest, SolveIdentityBoundary) {
  const CliRun r = lgc_run({"solve", "--boundary", "identity", "--width", "4", "--height", "4", "-o", path("out")});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("max_ep_residual = 0\n"), std::string::npos);
  EXPECT_TRUE(fs::exists(path("out/field.txt")));
  EXPECT_TRUE(fs::exists(path("out/reduced.txt")));
  EXPECT_TRUE(fs::exists(path("out/solve_report.txt")));
}

TEST_F(CliTest, SolveIsDeterministic) {
  ASSERT_EQ(lgc_run({"solve", "-o", path("a")}).code, 0);
  ASSERT_EQ(lgc_run({"solve", "-o", path("b")}).code, 0);
  for (const char* f : {"solve_report.txt", "field.txt", "reduced.txt"}) {
    EXPECT_EQ(slurp(path(std::string("a/") + f)), slurp(path(std::string("b/") + f))) << f;
  }
  const std::string report = slurp(path("a/solve_report.txt"));
  EXPECT_NE(report.find("generator = mt19937_64"), std::string::npos);
  EXPECT_NE(report.find("seed = 42"), std::string::npos);
}

TEST_F(CliTest, ConfigFileAndFlagPrecedence) {
  {
    std::ofstream f(path("cfg.json"));
    f << R"({"grid": [3, 3], "boundary": {"kind": "identity"}, "output_dir": ")" << path("fromfile") << R"("})";
  }
  const CliRun r = lgc_run({"solve", "--config", path("cfg.json"), "--width", "4"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("grid = 4x3"), std::string::npos);
  EXPECT_TRUE(fs::exists(path("fromfile/solve_report.txt")));
}

TEST_F(CliTest, MalformedConfigIsUsageError) {
  {
    std::ofstream f(path("cfg.json"));
    f << R"({"n": "three"})";
  }
  const CliRun r = lgc_run({"solve", "--config", path("cfg.json")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("configuration error"), std::string::npos);
  EXPECT_EQ(lgc_run({"solve", "--config", path("missing.json")}).code, 2);
  EXPECT_EQ(lgc_run({"solve", "--n", "1", "-o", path("x")}).code, 2);
  EXPECT_EQ(lgc_run({"frobnicate"}).code, 2);
  EXPECT_EQ(lgc_run({"verify", "nosuch", "-o", path("x")}).code, 2);
}

TEST_F(CliTest, ConvergenceFailureExitsOne) {
  const CliRun r = lgc_run({"solve", "--max-iterations", "1", "-o", path("out")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(slurp(path("out/solve_report.txt")).find("converged = false"), std::string::npos);
}

TEST_F(CliTest, VerifySuites) {
  for (const char* suite : {"split", "cartan", "flatness", "multipliers", "elimination"}) {
    const CliRun r = lgc_run({"verify", suite, "--instances", "3", "--width", "4", "--height", "4", "-o", path("v")});
    EXPECT_EQ(r.code, 0) << suite << ": " << r.err;
    EXPECT_NE(r.out.find("pass = true"), std::string::npos) << suite;
    EXPECT_NE(r.out.find("anchor = "), std::string::npos) << suite;
    EXPECT_TRUE(fs::exists(path(std::string("v/verify_") + suite + ".txt")));
  }
}

TEST_F(CliTest, NoetherAndBrokenSymmetry) {
  EXPECT_EQ(lgc_run({"verify", "noether", "--width", "4", "--height", "4", "-o", path("v")}).code, 0);
  const CliRun broken = lgc_run({"verify", "noether", "--break-symmetry", "--width", "4", "--height", "4", "-o", path("v")});
  EXPECT_EQ(broken.code, 1);
  EXPECT_NE(broken.out.find("worst = "), std::string::npos);
}

TEST_F(CliTest, RegularitySuiteReportsWorstOffender) {
  const CliRun r = lgc_run({"verify", "regularity", "--width", "3", "--height", "3", "--instances", "2", "-o", path("v")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("rows = 27"), std::string::npos);
}

TEST_F(CliTest, ReconstructRoundTripAndTamper) {
  ASSERT_EQ(lgc_run({"solve", "--width", "4", "--height", "4", "-o", path("s")}).code, 0);
  const CliRun ok = lgc_run({"reconstruct", "--section", path("s/reduced.txt"), "-o", path("r")});
  EXPECT_EQ(ok.code, 0) << ok.err;
  EXPECT_TRUE(fs::exists(path("r/reconstructed.txt")));
  EXPECT_EQ(lgc_run({"reconstruct", "--section", path("s/reduced.txt"), "--seed", "3", "-o", path("r")}).code, 0);

  // Break the plaquette at (2,1) by rotating u_{2,1}: rewrite the record for vertex (2,1).
  std::ifstream in(path("s/reduced.txt"));
  FieldHeader h;
  Section y = read_section(in, &h);
  const VertexId v = h.grid.vertex(2, 1);
  Fiber f = y.at(v);
  f[kU] = f[kU] * exp(basis_element(3, 0) * 1e-5);
  y.set(v, f);
  {
    std::ofstream out(path("tampered.txt"));
    write_section(out, h.grid, y, h.meta);
  }
  const CliRun bad = lgc_run({"reconstruct", "--section", path("tampered.txt"), "-o", path("r")});
  EXPECT_EQ(bad.code, 1);
  EXPECT_NE(bad.out.find("worst_plaquette = (2,1)"), std::string::npos) << bad.out;
  EXPECT_EQ(lgc_run({"reconstruct", "--section", path("nope.txt"), "-o", path("r")}).code, 2);
}

TEST_F(CliTest, RecoverMultipliersAndReport) {
  ASSERT_EQ(lgc_run({"solve", "--width", "4", "--height", "4", "-o", path("s")}).code, 0);
  const CliRun r = lgc_run({"recover-multipliers", "--section", path("s/reduced.txt"), "-o", path("m")});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(path("m/multipliers.txt")));
  EXPECT_EQ(lgc_run({"recover-multipliers", "--section", path("s/reduced.txt"), "--seed", "5", "-o", path("m")}).code, 0);
  const CliRun rep = lgc_run({"report", "--field", path("s/field.txt"), "-o", path("m")});
  EXPECT_EQ(rep.code, 0) << rep.err;
  EXPECT_NE(rep.out.find("max_ep_residual"), std::string::npos);
  // A random reduced section is not EP-critical.
  EXPECT_EQ(lgc_run({"recover-multipliers", "--section", path("s/field.txt"), "-o", path("m")}).code, 2);
}

TEST_F(CliTest, BoundaryFromFile) {
  ASSERT_EQ(lgc_run({"solve", "--width", "4", "--height", "4", "-o", path("s")}).code, 0);
  const CliRun r = lgc_run({"solve", "--width", "4", "--height", "4", "--boundary-file", path("s/field.txt"), "-o", path("t")});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(lgc_run({"solve", "--width", "5", "--height", "4", "--boundary-file", path("s/field.txt"), "-o", path("t")}).code, 2);
}

}  // namespace
}  // namespace lgc
