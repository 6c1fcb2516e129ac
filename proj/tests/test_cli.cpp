#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <json.hpp>

#include "nsfem/cli.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args)
{
  std::ostringstream out, err;
  const int code = nsfem::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch_root()
{
  return fs::temp_directory_path() / ("nsfem_cli_test_" + std::to_string(::getpid()));
}

fs::path scratch(const std::string& name)
{
  fs::create_directories(scratch_root());
  return scratch_root() / name;
}

class ScratchCleanup : public ::testing::Environment {
public:
  void TearDown() override { fs::remove_all(scratch_root()); }
};

const auto* const cleanup = ::testing::AddGlobalTestEnvironment(new ScratchCleanup);

nlohmann::json read_json(const fs::path& p)
{
  std::ifstream in(p);
  return nlohmann::json::parse(in);
}

}  // namespace

TEST(Cli, MeshInfo)
{
  const Outcome r = run({"mesh-info", "--n", "4"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("vertices=25"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("triangles=32"), std::string::npos);
}

TEST(Cli, SelftestPasses)
{
  const Outcome r = run({"selftest"});
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("selftest passed"), std::string::npos);
  EXPECT_EQ(r.out.find("FAIL"), std::string::npos) << r.out;
}

TEST(Cli, UsageErrorsExitOne)
{
  const Outcome bogus = run({"solve-hj", "--n", "8", "--hamiltonian", "bogus"});
  EXPECT_EQ(bogus.code, nsfem::cli::usage_error);
  EXPECT_NE(bogus.err.find("bogus"), std::string::npos) << bogus.err;
  EXPECT_EQ(run({"convergence-hj", "--levels", "8,x"}).code, 1);
  EXPECT_EQ(run({"convergence-hj", "--levels", "8,0,16"}).code, 1);
  EXPECT_EQ(run({"solve-hj", "--tol", "-1"}).code, 1);
  EXPECT_EQ(run({"solve-hj", "--n", "0"}).code, 1);
  EXPECT_EQ(run({"solve-mfg", "--coupling", "local:nope"}).code, 1);
  EXPECT_EQ(run({"no-such-command"}).code, 1);
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"solve-hj", "--mesh-file", "/nonexistent/mesh.txt"}).code, 1);
}

TEST(Cli, HelpExitsZero)
{
  EXPECT_EQ(run({"--help"}).code, 0);
}

TEST(Cli, SolveHjJsonReport)
{
  const fs::path out = scratch("hj.json");
  const Outcome r = run({"solve-hj", "--n", "8", "--out", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = read_json(out);
  for (const char* key : {"config", "h", "dofs", "iterations", "residuals", "converged", "message", "err_h1", "err_l2",
                          "wall_time_s"})
    EXPECT_TRUE(j.contains(key)) << key;
  EXPECT_TRUE(j["converged"].get<bool>());
  EXPECT_EQ(j["dofs"].get<int>(), 49);
  EXPECT_EQ(j["config"]["hamiltonian"], "eikonal");
  EXPECT_EQ(j["residuals"].size(), j["iterations"].get<std::size_t>() + 1);
}

TEST(Cli, SolveHjIsDeterministic)
{
  const Outcome a = run({"solve-hj", "--n", "8", "--hamiltonian", "huber:0.2", "--solver", "picard"});
  const Outcome b = run({"solve-hj", "--n", "8", "--hamiltonian", "huber:0.2", "--solver", "picard"});
  ASSERT_EQ(a.code, 0) << a.err;
  auto ja = nlohmann::json::parse(a.out);
  auto jb = nlohmann::json::parse(b.out);
  ja.erase("wall_time_s");
  jb.erase("wall_time_s");
  EXPECT_EQ(ja, jb);
}

TEST(Cli, NonConvergenceExitsTwo)
{
  const Outcome r = run({"solve-hj", "--n", "8", "--max-iter", "1", "--tol", "1e-14"});
  EXPECT_EQ(r.code, nsfem::cli::not_converged);
}

TEST(Cli, SolveMfgThenDiagnoseStability)
{
  const fs::path sol = scratch("mfg.json");
  const fs::path csv = scratch("stab.csv");
  const Outcome s = run({"solve-mfg", "--n", "8", "--out", sol.string()});
  ASSERT_EQ(s.code, 0) << s.err;
  const auto j = read_json(sol);
  EXPECT_TRUE(j["converged"].get<bool>());
  EXPECT_EQ(j["state"]["u"].size(), 49u);
  EXPECT_EQ(j["state"]["m"].size(), 49u);

  const Outcome d = run({"diagnose-stability", "--from", sol.string(), "--samples", "3", "--out", csv.string()});
  ASSERT_EQ(d.code, 0) << d.err;
  EXPECT_NE(d.out.find("min_smin="), std::string::npos);
  std::ifstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "h,sample,smin");
  int rows = 0;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  EXPECT_EQ(rows, 3);
}

TEST(Cli, DiagnoseStabilityLambdaGrid)
{
  const fs::path sol = scratch("mfg_lambda.json");
  ASSERT_EQ(run({"solve-mfg", "--n", "6", "--out", sol.string()}).code, 0);
  const Outcome d = run({"diagnose-stability", "--from", sol.string(), "--samples", "1", "--lambdas", "1,10,100"});
  ASSERT_EQ(d.code, 0) << d.err;
  std::istringstream in(d.out);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "h,sample,smin,lambda");
  std::getline(in, line);
  EXPECT_EQ(line.substr(line.rfind(',') + 1), "1");
  EXPECT_EQ(run({"diagnose-stability", "--from", sol.string(), "--lambdas", "1,-2"}).code, 1);
}

TEST(Cli, DiagnoseStabilityNeedsExistingFile)
{
  EXPECT_EQ(run({"diagnose-stability", "--from", "/nonexistent/state.json"}).code, 1);
  EXPECT_EQ(run({"diagnose-stability"}).code, 1);
}

TEST(Cli, ManufacturedMfgReportsErrors)
{
  const Outcome r = run({"solve-mfg", "--n", "8", "--manufactured", "sinsin"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  for (const char* key : {"err_h1_u", "err_l2_m", "err_h1xl2"}) EXPECT_TRUE(j.contains(key)) << key;
  EXPECT_NEAR(j["err_h1xl2"].get<double>(), j["err_h1_u"].get<double>() + j["err_l2_m"].get<double>(), 1e-14);
}

TEST(Cli, ConvergenceStudyCsv)
{
  const fs::path csv = scratch("conv.csv");
  const Outcome r = run({"convergence-hj", "--levels", "4,8,16", "--csv", csv.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream in(csv);
  std::string header;
  std::getline(in, header);
  EXPECT_NE(header.find("h"), std::string::npos);
  int rows = 0;
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) ++rows;
  EXPECT_EQ(rows, 3);
}

TEST(Cli, DumpSystemWritesFiles)
{
  const fs::path dir = scratch("dump");
  const Outcome r = run({"solve-hj", "--n", "4", "--dump-system", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"jacobian.mtx", "mass.mtx", "stiffness.mtx", "load.csv", "solution.csv"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  std::ifstream in(dir / "mass.mtx");
  std::string banner;
  std::getline(in, banner);
  EXPECT_EQ(banner.rfind("%%MatrixMarket", 0), 0u) << banner;
}

TEST(Cli, BinaryRunsSelftest)
{
  const char* path = NSFEM_CLI_PATH;
  const std::string cmd = std::string("\"") + path + "\" selftest > /dev/null";
  EXPECT_EQ(std::system(cmd.c_str()), 0);
  const std::string bad = std::string("\"") + path + "\" solve-hj --hamiltonian bogus 2> /dev/null";
  const int status = std::system(bad.c_str());
  EXPECT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), 1);
}
