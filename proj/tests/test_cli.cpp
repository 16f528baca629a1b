#include "spconv/cli.hpp"
#include "spconv/report.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace spconv;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

class Cli : public ::testing::Test {
protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("spconv_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(path(name)) << text;
    return path(name);
  }

  static std::string read(const std::string& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  std::string simulated(const std::string& kind, double coef, int seed) const {
    const auto r = cli({"simulate", "--rows", "15", "--cols", "15", "--kind", kind, "--coef",
                        std::to_string(coef), "--beta=0.1,-0.02", "--sigma", "0.01", "--seed",
                        std::to_string(seed), "--t", "10"});
    EXPECT_EQ(r.code, 0) << r.err;
    return write(kind + std::to_string(seed) + ".csv", r.out);
  }

  fs::path dir_;
};

const std::string kLine = "id,x,y,p0,pt\na,0,0,100,120\nb,1,0,200,230\nc,2,0,300,310\n";

}  // namespace

TEST_F(Cli, WeightsBuildLine) {
  const auto csv = write("line.csv", kLine);
  const auto r = cli({"weights", "build", "--input", csv, "--cutoff", "1.5", "--format", "gwt"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "0 3 spconv id\na b 1\nb a 1\nb c 1\nc b 1\n");

  const auto gap = write("gap.csv", "id,x,y,p0,pt\na,0,0,100,120\nb,1,0,200,230\nc,5,0,300,310\n");
  const auto far = cli({"weights", "build", "--input", gap, "--cutoff", "1.5"});
  EXPECT_EQ(far.code, 0) << far.err;
  EXPECT_NE(far.err.find("island"), std::string::npos) << far.err;
  EXPECT_EQ(far.out, "0 3 spconv id\na b 1\nb a 1\n");
  EXPECT_EQ(cli({"weights", "build", "--input", csv, "--cutoff", "0.5"}).code, kExitData);

  const auto gal = cli({"weights", "build", "--input", csv, "--cutoff", "1.5", "--format", "gal",
                        "--out", path("w.gal")});
  ASSERT_EQ(gal.code, 0) << gal.err;
  EXPECT_EQ(read(path("w.gal")), "0 3 spconv id\na 1\nb\nb 2\na c\nc 1\nb\n");

  const auto std_gwt = cli({"weights", "build", "--input", csv, "--cutoff", "1.5", "--standardize"});
  EXPECT_NE(std_gwt.out.find("b a 0.5"), std::string::npos) << std_gwt.out;
}

TEST_F(Cli, WeightsFileMatchesBand) {
  const auto csv = simulated("error", 0.5, 1);
  ASSERT_EQ(cli({"weights", "build", "--input", csv, "--cutoff", "1", "--out", path("w.gwt")}).code, 0);
  const auto a = cli({"moran", "--input", csv, "--cutoff", "1", "--seed", "3", "--permutations", "99"});
  const auto b = cli({"moran", "--input", csv, "--weights", path("w.gwt"), "--seed", "3", "--permutations", "99"});
  ASSERT_EQ(a.code, 0) << a.err;
  ASSERT_EQ(b.code, 0) << b.err;
  const Json ja = parse_report(a.out), jb = parse_report(b.out);
  EXPECT_EQ(ja["moran"], jb["moran"]);
}

TEST_F(Cli, MoranRepeatable) {
  const auto csv = simulated("lag", 0.5, 2);
  const std::vector<std::string> args{"moran", "--input", csv, "--cutoff", "1", "--seed", "7"};
  const auto a = cli(args), b = cli(args);
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  const Json j = parse_report(a.out);
  EXPECT_EQ(j["schema_version"], 1);
  EXPECT_EQ(j["moran"]["permutations"], 999);
  EXPECT_GT(j["moran"]["I"].get<double>(), 0.1);
}

TEST_F(Cli, BinaryRunsAreByteIdentical) {
  const auto csv = simulated("error", 0.6, 4);
  const std::string base = std::string(SPCONV_CLI_PATH) + " converge --input " + csv +
                           " --cutoff 1 --t 10 --seed 9 --permutations 199 --out ";
  ASSERT_EQ(std::system((base + path("a.json")).c_str()), 0);
  ASSERT_EQ(std::system((base + path("b.json")).c_str()), 0);
  EXPECT_EQ(read(path("a.json")), read(path("b.json")));
  EXPECT_FALSE(read(path("a.json")).empty());
}

TEST_F(Cli, ConvergeChoosesErrorOnErrorData) {
  const auto csv = simulated("error", 0.6, 3);
  const auto r = cli({"converge", "--input", csv, "--cutoff", "1", "--t", "10", "--permutations", "99",
                      "--svg-scatter", path("s.svg"), "--geojson-lisa", path("l.geojson")});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json j = parse_report(r.out);
  EXPECT_EQ(j["choice"]["model"], "Error");
  for (const auto& c : spatial_table_columns()) EXPECT_TRUE(j["spatial"].contains(c)) << c;
  EXPECT_EQ(j["verdict"]["direction"], "Convergence");
  EXPECT_EQ(read(path("s.svg")).rfind("<svg", 0), 0u);
  EXPECT_EQ(parse_report(read(path("l.geojson")))["features"].size(), 225u);
}

TEST_F(Cli, OlsAndSpatialCommands) {
  const auto csv = simulated("lag", 0.5, 5);
  const auto ols = cli({"ols", "--input", csv, "--cutoff", "1", "--t", "10"});
  ASSERT_EQ(ols.code, 0) << ols.err;
  const Json j = parse_report(ols.out);
  for (const auto& c : ols_table_columns()) EXPECT_TRUE(j["ols"].contains(c)) << c;
  EXPECT_EQ(j["metadata"]["command"], "ols");

  const auto lag = cli({"lag", "--input", csv, "--cutoff", "1", "--t", "10"});
  ASSERT_EQ(lag.code, 0) << lag.err;
  EXPECT_EQ(parse_report(lag.out)["spatial"]["spatial_coefficient"]["name"], "rho");
  const auto err = cli({"error", "--input", csv, "--cutoff", "1", "--t", "10"});
  ASSERT_EQ(err.code, 0) << err.err;
  EXPECT_EQ(parse_report(err.out)["spatial"]["spatial_coefficient"]["name"], "lambda");

  const auto lisa = cli({"lisa", "--input", csv, "--cutoff", "1", "--permutations", "99"});
  ASSERT_EQ(lisa.code, 0) << lisa.err;
  EXPECT_EQ(parse_report(lisa.out)["lisa"]["regions"].size(), 225u);
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(cli({}).code, kExitUsage);
  EXPECT_EQ(cli({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(cli({"moran", "--cutoff", "abc"}).code, kExitUsage);
  EXPECT_EQ(cli({"--help"}).code, kExitOk);

  EXPECT_EQ(cli({"moran", "--input", path("missing.csv"), "--cutoff", "1"}).code, kExitData);
  const auto bad = write("bad.csv", "id,x,y,p0,pt\na,0,0,-1,2\nb,1,0,1,2\nc,2,0,1,2\n");
  const auto r = cli({"moran", "--input", bad, "--cutoff", "1"});
  EXPECT_EQ(r.code, kExitData);
  EXPECT_NE(r.err.find("'a'"), std::string::npos) << r.err;
  const auto line = write("line.csv", kLine);
  EXPECT_EQ(cli({"moran", "--input", line}).code, kExitData);

  // Asymmetric weights whose row-standardized form is not similar to a
  // symmetric matrix: the eigenvalue log-determinant is unavailable.
  const auto gwt = write("w.gwt", "0 3 x id\na b 1\na c 2\nb a 1\nb c 1\nc a 1\nc b 1\n");
  const auto tri = write("tri.csv", "id,x,y,p0,pt\na,0,0,100,120\nb,1,0,200,230\nc,2,0,300,310\n");
  const auto num = cli({"lag", "--input", tri, "--weights", gwt});
  EXPECT_EQ(num.code, kExitNumerical) << num.err;
}

TEST_F(Cli, ConfigPrecedence) {
  const auto csv = simulated("error", 0.5, 6);
  const auto cfg = write("cfg.json", "{\"cutoff\": 1.0, \"seed\": 7, \"permutations\": 49}");
  const auto from_config = cli({"moran", "--input", csv, "--config", cfg});
  ASSERT_EQ(from_config.code, 0) << from_config.err;
  EXPECT_EQ(parse_report(from_config.out)["moran"]["permutations"], 49);
  const auto flags = cli({"moran", "--input", csv, "--config", cfg, "--permutations", "19"});
  EXPECT_EQ(parse_report(flags.out)["moran"]["permutations"], 19);
  const auto explicit_run = cli({"moran", "--input", csv, "--cutoff", "1", "--seed", "7", "--permutations", "49"});
  EXPECT_EQ(parse_report(explicit_run.out)["moran"], parse_report(from_config.out)["moran"]);

  const auto broken = write("broken.json", "{\"cutoff\": ");
  EXPECT_EQ(cli({"moran", "--input", csv, "--config", broken}).code, kExitData);
  const auto typed = write("typed.json", "{\"cutoff\": \"far\"}");
  EXPECT_EQ(cli({"moran", "--input", csv, "--config", typed}).code, kExitData);
}

TEST_F(Cli, SimulateIsDeterministic) {
  const std::vector<std::string> args{"simulate", "--rows", "5", "--cols", "4", "--kind", "lag",
                                      "--coef", "0.4", "--seed", "12"};
  const auto a = cli(args);
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, cli(args).out);
  EXPECT_EQ(std::count(a.out.begin(), a.out.end(), '\n'), 21);
  EXPECT_EQ(cli({"simulate", "--kind", "lag", "--coef", "1.2"}).code, kExitData);
  EXPECT_EQ(cli({"simulate", "--kind", "spiral"}).code, kExitData);
}
