#include <gtest/gtest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace {
const std::string kCli = RSURMISE_CLI_PATH;

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("rsurmise_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  // Exit status of the CLI run with `args`, output directory `sub` under the fixture dir.
  int run(const std::string& args, const std::string& sub = ".") const {
    const auto out = dir_ / sub;
    fs::create_directories(out);
    const std::string cmd = kCli + " --out " + out.string() + " " + args + " > " + (dir_ / "stdout.txt").string() +
                            " 2> " + (dir_ / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string read(const std::string& rel) const {
    std::ifstream is(dir_ / rel, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
  }

  nlohmann::json read_json(const std::string& rel) const { return nlohmann::json::parse(read(rel)); }

  fs::path dir_;
};
}  // namespace

TEST_F(Cli, GenerateIsReproducibleAcrossThreadCounts) {
  ASSERT_EQ(run("--seed 5 --threads 1 generate --ensemble goe --n 50 --m 8", "a"), 0);
  ASSERT_EQ(run("--seed 5 --threads 3 generate --ensemble goe --n 50 --m 8", "b"), 0);
  EXPECT_EQ(read("a/spectra.bin"), read("b/spectra.bin"));
  EXPECT_EQ(read("a/spectra.bin").size(), 32u + 50u * 8u * 8u);
  const auto m = read_json("a/generate.manifest.json");
  EXPECT_EQ(m["command"], "generate");
  EXPECT_EQ(m["seed"], 5);
  ASSERT_EQ(m["outputs"].size(), 1u);
  EXPECT_EQ(m["outputs"][0]["file"], "spectra.bin");
  EXPECT_EQ(m["outputs"][0]["sha256"].get<std::string>().size(), 64u);
}

TEST_F(Cli, SeedChangesOutput) {
  ASSERT_EQ(run("--seed 1 generate --ensemble goe --n 20 --m 2", "a"), 0);
  ASSERT_EQ(run("--seed 2 generate --ensemble goe --n 20 --m 2", "b"), 0);
  EXPECT_NE(read("a/spectra.bin"), read("b/spectra.bin"));
}

TEST_F(Cli, XxzSectorDimension) {
  ASSERT_EQ(run("generate --model xxz --sites 11 --omega 2 --m 1 --csv"), 0);
  const auto csv = read("spectra.csv");
  EXPECT_NE(csv.find(",e461"), std::string::npos);
  EXPECT_EQ(csv.find(",e462"), std::string::npos);
}

TEST_F(Cli, AnalyzeFreeAndAnsatz) {
  ASSERT_EQ(run("--seed 3 generate --ensemble goe --n 100 --m 100"), 0);
  const auto batch = (dir_ / "spectra.bin").string();
  ASSERT_EQ(run("analyze " + batch + " --dr 0.05", "free"), 0);
  const auto free = read_json("free/fit.json");
  EXPECT_NEAR(free["fit"]["beta"].get<double>(), 1.0, 0.2);
  EXPECT_TRUE(free["fit"]["converged"].get<bool>());
  EXPECT_FALSE(read("free/histogram.csv").empty());

  ASSERT_EQ(run("ansatz --transition poisson-goe --points 41", "curve"), 0);
  const auto curve = (dir_ / "curve" / "ansatz_poisson-goe.json").string();
  ASSERT_EQ(run("analyze " + batch + " --dr 0.05 --fit-mode ansatz --ansatz " + curve, "ans"), 0);
  const auto ans = read_json("ans/fit.json");
  EXPECT_EQ(ans["fit"]["mode"], "ansatz");
  EXPECT_NEAR(ans["fit"]["beta"].get<double>(), 1.0, 0.2);
  EXPECT_GE(ans["fit"]["mean_error"].get<double>(), free["fit"]["mean_error"].get<double>());
}

TEST_F(Cli, TableOne) {
  ASSERT_EQ(run("analyze --table1"), 0);
  const auto t = read("table1.csv");
  EXPECT_EQ(t.substr(0, t.find('\n')), "ensemble,beta,gamma,c,mean_r,mean_r_tilde");
  EXPECT_TRUE(fs::exists(dir_ / "analyze.manifest.json"));
}

TEST_F(Cli, CrossoverSinglePoint) {
  ASSERT_EQ(run("crossover --ensemble mix-poisson-goe --n 60 --m 40 --grid 1.0", "a"), 0);
  ASSERT_EQ(run("--threads 1 crossover --ensemble mix-poisson-goe --n 60 --m 40 --grid 1.0", "b"), 0);
  const auto csv = read("a/crossover.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
  EXPECT_EQ(csv, read("b/crossover.csv"));
}

TEST_F(Cli, ScalingSinglePointOmitsSlope) {
  ASSERT_EQ(run("scaling --ensemble goe --mode m --n 40 --realizations 30 --dr 0.05"), 0);
  EXPECT_TRUE(read_json("scaling.json")["slope"].is_null());
}

TEST_F(Cli, ConfigFileAndPrecedence) {
  {
    std::ofstream cfg(dir_ / "run.ini");
    cfg << "seed=4\n[generate]\nensemble=gue\nn=30\nm=3\n";
  }
  const auto cfg = (dir_ / "run.ini").string();
  ASSERT_EQ(run("--config " + cfg + " generate", "a"), 0);
  ASSERT_EQ(run("--seed 4 generate --ensemble gue --n 30 --m 3", "b"), 0);
  EXPECT_EQ(read("a/spectra.bin"), read("b/spectra.bin"));
  ASSERT_EQ(run("--config " + cfg + " generate --m 5", "c"), 0);
  EXPECT_EQ(read("c/spectra.bin").size(), 32u + 30u * 5u * 8u);
}

TEST_F(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run("generate --ensemble goa --n 10"), 2);
  EXPECT_EQ(run("generate --ensemble goe --model xxz"), 2);
  EXPECT_EQ(run("generate --ensemble goe --n 2"), 2);
  EXPECT_EQ(run("analyze " + (dir_ / "missing.bin").string()), 2);
  EXPECT_EQ(run("crossover --ensemble goe --n 20"), 2);
  EXPECT_EQ(run("nonsense"), 2);
  EXPECT_EQ(run(""), 2);
}
