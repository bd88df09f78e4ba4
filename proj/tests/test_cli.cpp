#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <sys/wait.h>
#include <unistd.h>

namespace fs = std::filesystem;

namespace {

const std::string kExe = SMALE_SCAN_EXE;
const std::string kConfigs = SMALE_CONFIG_DIR;

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("smale_cli_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(const std::string& args, const std::string& env = "") const {
    const std::string cmd = env + " " + kExe + " " + args + " > " + (dir_ / "stdout.txt").string() + " 2> " +
                            (dir_ / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string write_config(const std::string& name, const std::string& text) const {
    const auto path = dir_ / name;
    std::ofstream(path) << text;
    return path.string();
  }

  std::string stderr_text() const { return read(dir_ / "stderr.txt"); }

  static std::string read(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  fs::path dir_;
};

const std::string kSmallCubic = R"(metric.kind = euclidean
problem.f = -(2.3*pi)^2
problem.nonlinearity = cubic
problem.cubic_b = 1
mesh.dim = 1
mesh.resolution = 300
scan.points = 60
branch.steps = 20
)";

}  // namespace

TEST_F(Cli, MissingConfigIsUsageError) {
  EXPECT_EQ(run("scan --config " + (dir_ / "absent.cfg").string()), 1);
  EXPECT_NE(stderr_text().find("cannot read"), std::string::npos);
}

TEST_F(Cli, BadInvocationsAreUsageErrors) {
  EXPECT_EQ(run(""), 1);
  EXPECT_EQ(run("frobnicate --config x.cfg"), 1);
  EXPECT_EQ(run("scan"), 1);
  EXPECT_EQ(run("scan --config " + kConfigs + "/interval_sturm.cfg --threads 0"), 1);
}

TEST_F(Cli, InvalidConfigNamesKey) {
  const auto cfg = write_config("bad.cfg", "metric.kind = euclidean\nproblem.f = -1\nmesh.dim = 1\nmesh.resolution = 8\nscan.pionts = 3\n");
  EXPECT_EQ(run("scan --config " + cfg), 1);
  EXPECT_NE(stderr_text().find("scan.pionts"), std::string::npos);
}

TEST_F(Cli, VerifyIndexOnInterval) {
  const auto out = dir_ / "out";
  EXPECT_EQ(run("verify-index --config " + kConfigs + "/interval_sturm.cfg --out " + out.string()), 0);
  const std::string report = read(out / "index_report.txt");
  EXPECT_EQ(report.substr(0, report.find('\n')), "mu=4 sum_m=4 PASS");
  EXPECT_TRUE(fs::exists(out / "scan.csv"));
  EXPECT_TRUE(fs::exists(out / "conjugate.csv"));
}

TEST_F(Cli, DegenerateFullRadiusIsAssumptionViolation) {
  EXPECT_EQ(run("verify-index --config " + kConfigs + "/interval_degenerate.cfg --out " + (dir_ / "out").string()), 3);
  EXPECT_NE(stderr_text().find("m(1) = 0"), std::string::npos);
}

TEST_F(Cli, OutputsAreDeterministic) {
  const auto cfg = write_config("cubic.cfg", kSmallCubic);
  const auto a = dir_ / "a", b = dir_ / "b", c = dir_ / "c";
  ASSERT_EQ(run("all --config " + cfg + " --out " + a.string()), 0) << stderr_text();
  ASSERT_EQ(run("all --config " + cfg + " --out " + b.string() + " --threads 3"), 0);
  ASSERT_EQ(run("all --config " + cfg + " --out " + c.string(), "SMALE_SCAN_THREADS=2"), 0);
  int files = 0;
  for (const auto& entry : fs::directory_iterator(a)) {
    const auto name = entry.path().filename();
    EXPECT_EQ(read(entry.path()), read(b / name)) << name;
    EXPECT_EQ(read(entry.path()), read(c / name)) << name;
    ++files;
  }
  EXPECT_GE(files, 9);  // scan, conjugate, crossing, two reports, four branches
}

TEST_F(Cli, AllMatchesIndividualStages) {
  const auto cfg = write_config("cubic.cfg", kSmallCubic);
  const auto whole = dir_ / "whole", parts = dir_ / "parts";
  ASSERT_EQ(run("all --config " + cfg + " --out " + whole.string()), 0);
  for (const char* sub : {"scan", "conjugate", "crossing", "verify-index", "bifurcate"})
    ASSERT_EQ(run(std::string(sub) + " --config " + cfg + " --out " + parts.string()), 0) << sub;
  for (const auto& entry : fs::directory_iterator(whole))
    EXPECT_EQ(read(entry.path()), read(parts / entry.path().filename())) << entry.path().filename();
}

TEST_F(Cli, CsvLayout) {
  const auto cfg = write_config("cubic.cfg", kSmallCubic);
  const auto out = dir_ / "out";
  ASSERT_EQ(run("crossing --config " + cfg + " --out " + out.string()), 0);
  const std::string scan = read(out / "scan.csv");
  EXPECT_EQ(scan.substr(0, scan.find('\n')), "r,lambda_1,lambda_2,lambda_3,lambda_4,lambda_5,lambda_6,n_neg");
  const std::string conj = read(out / "conjugate.csv");
  EXPECT_EQ(conj.substr(0, conj.find('\n')), "r_star,multiplicity,bracket_width");
  EXPECT_EQ(std::count(conj.begin(), conj.end(), '\n'), 5);
  const std::string cross = read(out / "crossing.csv");
  EXPECT_EQ(cross.substr(0, cross.find('\n')), "r_star,multiplicity,i,j,gamma_fd,gamma_bd,signature,agreement");
}
