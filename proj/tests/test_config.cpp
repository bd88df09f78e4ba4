#include <sstream>

#include <gtest/gtest.h>

#include "smale/config.hpp"
#include "smale/pipeline.hpp"

using namespace smale;

namespace {

RunConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

std::string error_of(const std::string& text) {
  try {
    parse(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

const std::string kMinimal = "metric.kind = euclidean\nproblem.f = -36\nmesh.dim = 2\nmesh.resolution = 10\n";

}  // namespace

TEST(Config, MinimalWithDefaults) {
  const auto c = parse(kMinimal);
  EXPECT_EQ(c.metric_kind, "euclidean");
  EXPECT_EQ(c.mesh_dim, 2);
  EXPECT_EQ(c.mesh_resolution, 10);
  EXPECT_EQ(c.r_min, 1e-3);
  EXPECT_EQ(c.scan_points, 200);
  EXPECT_EQ(c.scan_k, 6);
  EXPECT_EQ(c.branch_steps, 100);
  EXPECT_EQ(c.branch_step_size, 1e-3);
  EXPECT_EQ(c.metric().dim(), 2);
  EXPECT_EQ(c.problem().nonlinearity, Nonlinearity::Linear);
}

TEST(Config, FullFileWithComments) {
  const auto c = parse(R"(
# sphere
metric.kind = constant_curvature   # normal coordinates
metric.dim = 2
metric.kappa = 1
problem.f = "-(2.3*pi)^2 + x1"
problem.nonlinearity = cubic
problem.cubic_b = 0.5
mesh.dim = 2
mesh.resolution = 30
scan.r_min = 0.01
scan.points = 50
scan.k = 3
branch.steps = 20
branch.step_size = 2e-3
output.dir = results/sphere
)");
  EXPECT_EQ(c.metric().kind(), MetricKind::ConstantCurvature);
  EXPECT_EQ(c.kappa, 1.0);
  EXPECT_EQ(c.problem().nonlinearity, Nonlinearity::Cubic);
  EXPECT_EQ(c.cubic_b, 0.5);
  EXPECT_EQ(c.r_min, 0.01);
  EXPECT_EQ(c.scan_k, 3);
  EXPECT_EQ(c.branch_step_size, 2e-3);
  EXPECT_EQ(c.output_dir, "results/sphere");
  const double x[2] = {0.5, 0.0};
  EXPECT_DOUBLE_EQ(c.problem().f(std::span<const double>(x, 2)), 0.5 - std::pow(2.3 * std::numbers::pi, 2));
}

TEST(Config, RealValuesAcceptConstantExpressions) {
  const auto c = parse("metric.kind = constant_curvature\nmetric.kappa = (pi/2)^2\n" + kMinimal.substr(24));
  EXPECT_DOUBLE_EQ(c.kappa, std::pow(std::numbers::pi / 2, 2));
}

TEST(Config, ErrorsNameTheKey) {
  EXPECT_NE(error_of(kMinimal + "mesh.resolutoin = 3\n").find("mesh.resolutoin"), std::string::npos);
  EXPECT_NE(error_of(kMinimal + "mesh.dim = 1\n").find("duplicate"), std::string::npos);
  EXPECT_NE(error_of("problem.f = 1\nmesh.dim = 1\nmesh.resolution = 4\n").find("metric.kind"), std::string::npos);
  EXPECT_NE(error_of(kMinimal + "scan.points = many\n").find("scan.points"), std::string::npos);
  EXPECT_NE(error_of(kMinimal + "scan.r_min = 0\n").find("scan.r_min"), std::string::npos);
  EXPECT_NE(error_of(kMinimal + "metric.kappa = 1\n").find("metric.kappa"), std::string::npos);
  EXPECT_NE(error_of(kMinimal + "problem.cubic_b = 1\n").find("problem.cubic_b"), std::string::npos);
  EXPECT_NE(error_of("metric.kind = round\nproblem.f = 1\nmesh.dim = 1\nmesh.resolution = 4\n").find("metric.kind"),
            std::string::npos);
  EXPECT_NE(error_of("metric.kind = euclidean\nproblem.f = 1 +\nmesh.dim = 1\nmesh.resolution = 4\n").find("problem.f"),
            std::string::npos);
  EXPECT_NE(error_of("metric.kind = euclidean\nproblem.f = 1\nmesh.dim = 3\nmesh.resolution = 4\n").find("mesh.dim"),
            std::string::npos);
  EXPECT_NE(error_of("metric.kind = euclidean\nproblem.f = 1\nmesh.dim = 1\nmesh.resolution = 1\n").find("mesh.resolution"),
            std::string::npos);
  EXPECT_NE(error_of("metric.kind = constant_curvature\nmetric.kappa = 10\nproblem.f = 1\nmesh.dim = 1\nmesh.resolution = 4\n")
                .find("metric.kappa"),
            std::string::npos);
  EXPECT_NE(error_of(kMinimal + "just some words\n").find("line 5"), std::string::npos);
}

TEST(Config, MissingFile) { EXPECT_THROW(load_config("/nonexistent/smale.cfg"), ConfigError); }

TEST(Config, Formatting) {
  EXPECT_EQ(format_real(0.1), "0.10000000000000001");
  EXPECT_EQ(format_real(-2.0), "-2");
  EXPECT_EQ(branch_file_name(1.0 / 4.6), "branch_0.217391.csv");
}

TEST(Config, RunReportsConfigErrorsAsUsage) {
  std::ostringstream log;
  EXPECT_EQ(run("scan", std::string("/nonexistent/smale.cfg"), 1, std::nullopt, log), kExitUsage);
  EXPECT_NE(log.str().find("cannot read"), std::string::npos);
}
