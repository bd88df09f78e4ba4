#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "smale/assembly.hpp"

using namespace smale;
using Eigen::MatrixXd;

namespace {

ProblemSpec constant(double c) { return ProblemSpec::linear(Expression::constant(c)); }

MatrixXd tridiagonal(int n, double diag, double off) {
  MatrixXd T = MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    T(i, i) = diag;
    if (i + 1 < n) T(i, i + 1) = T(i + 1, i) = off;
  }
  return T;
}

double smallest_generalized(const MatrixXd& A, const MatrixXd& B) {
  return Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd>(A, B).eigenvalues()(0);
}

Vector random_vector(int n, double scale, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Vector u(n);
  for (int i = 0; i < n; ++i) u(i) = scale * g(rng);
  return u;
}

}  // namespace

TEST(Assembly, FlatStiffnessWithoutPotential) {
  const auto mesh = build_mesh<1>(10);
  const double h = 0.2;
  for (double r : {0.0, 0.3, 1.0}) {
    const MatrixXd H(assemble_h_matrix(mesh, MetricModel::euclidean(1), constant(0.0), r));
    EXPECT_LE((H - tridiagonal(9, 2.0 / h, -1.0 / h)).norm(), 1e-12);
  }
}

TEST(Assembly, GramExample) {
  const MatrixXd S(assemble_gram(build_mesh<1>(4)));
  EXPECT_LE((S - tridiagonal(3, 4.0, -2.0)).norm(), 1e-14);
}

TEST(Assembly, GramIsFlatFormWithoutPotential) {
  const auto mesh = build_mesh<2>(4);
  const MatrixXd S(assemble_gram(mesh));
  const MatrixXd H(assemble_h_matrix(mesh, MetricModel::euclidean(2), constant(0.0), 0.8));
  EXPECT_LE((S - H).norm(), 1e-12);
  EXPECT_GT(Eigen::SelfAdjointEigenSolver<MatrixXd>(S).eigenvalues()(0), 0.0);
}

TEST(Assembly, ZeroRadiusIsEuclideanStiffness) {
  const auto mesh = build_mesh<2>(5);
  const auto spec = ProblemSpec::linear(Expression::parse("-36 + x1*y"));
  const MatrixXd H(assemble_h_matrix(mesh, MetricModel::constant_curvature(2, 4.0), spec, 0.0));
  const MatrixXd S(assemble_gram(mesh));
  EXPECT_LE((H - S).norm(), 1e-12);
}

TEST(Assembly, ConstantPotentialIsStiffnessMinusMass) {
  const int N = 8;
  const double h = 2.0 / N, c = 52.379, r = 0.6;
  const auto mesh = build_mesh<1>(N);
  const MatrixXd H(assemble_h_matrix(mesh, MetricModel::euclidean(1), constant(-c), r));
  const MatrixXd K = tridiagonal(N - 1, 2.0 / h, -1.0 / h);
  const MatrixXd M = tridiagonal(N - 1, 2.0 * h / 3.0, h / 6.0);
  EXPECT_LE((H - (K - c * r * r * M)).norm(), 1e-12);
  EXPECT_LE((MatrixXd(assemble_mass(mesh)) - M).norm(), 1e-14);
}

TEST(Assembly, SymmetricOnCurvedDisc) {
  const auto mesh = build_mesh<2>(6);
  const auto spec = ProblemSpec::linear(Expression::parse("-36 + 5*x1"));
  const SparseMatrix H = assemble_h_matrix(mesh, MetricModel::constant_curvature(2, 1.0), spec, 1.0);
  EXPECT_EQ(MatrixXd(H), MatrixXd(SparseMatrix(H.transpose())));
}

TEST(Assembly, RadiusOutOfRange) {
  const auto mesh = build_mesh<1>(4);
  EXPECT_THROW(assemble_h_matrix(mesh, MetricModel::euclidean(1), constant(1.0), 1.01), DomainError);
  EXPECT_THROW(assemble_h_matrix(mesh, MetricModel::euclidean(1), constant(1.0), -0.1), DomainError);
}

TEST(Assembly, IntervalEigenvalueConvergesAtSecondOrder) {
  const double exact = std::numbers::pi * std::numbers::pi / 4.0;
  double previous = 0.0;
  for (int N : {20, 40, 80, 160}) {
    const auto mesh = build_mesh<1>(N);
    const double err = smallest_generalized(MatrixXd(assemble_gram(mesh)), MatrixXd(assemble_mass(mesh))) - exact;
    EXPECT_GT(err, 0.0);
    if (previous > 0.0) EXPECT_NEAR(previous / err, 4.0, 0.05);
    previous = err;
  }
  EXPECT_LT(previous, 1e-4);
}

TEST(Assembly, DiscEigenvalueApproachesBesselZero) {
  const double j01 = 2.404825557695773;
  double previous = 1.0;
  for (int R : {4, 8, 16}) {
    const auto mesh = build_mesh<2>(R);
    const double err =
        std::abs(smallest_generalized(MatrixXd(assemble_gram(mesh)), MatrixXd(assemble_mass(mesh))) - j01 * j01);
    EXPECT_LT(err, 0.5 * previous);
    previous = err;
  }
  EXPECT_LT(previous / (j01 * j01), 5e-3);
}

TEST(Residual, VanishesAtZero) {
  const auto m1 = build_mesh<1>(30);
  const auto m2 = build_mesh<2>(5);
  const auto cubic = ProblemSpec::cubic(Expression::parse("-(2.3*pi)^2 + x1"), 1.0);
  for (double r : {0.0, 0.4, 1.0}) {
    EXPECT_EQ(assemble_residual(m1, MetricModel::euclidean(1), cubic, r, Vector::Zero(m1.num_dofs())).norm(), 0.0);
    EXPECT_EQ(assemble_residual(m2, MetricModel::constant_curvature(2, 1.0), cubic, r, Vector::Zero(m2.num_dofs())).norm(), 0.0);
  }
}

TEST(Residual, LinearResidualIsFormTimesVector) {
  const auto mesh = build_mesh<2>(6);
  const auto metric = MetricModel::constant_curvature(2, 2.0);
  const auto spec = ProblemSpec::linear(Expression::parse("-36 + 3*|x|^2"));
  const Vector u = random_vector(mesh.num_dofs(), 1.0, 5);
  const Vector Hu = assemble_h_matrix(mesh, metric, spec, 0.9) * u;
  EXPECT_LE((assemble_residual(mesh, metric, spec, 0.9, u) - Hu).norm(), 1e-12 * Hu.norm());
}

TEST(Jacobian, EqualsFormAtZeroAndForLinearProblems) {
  const auto mesh = build_mesh<2>(5);
  const auto metric = MetricModel::constant_curvature(2, 1.0);
  const auto cubic = ProblemSpec::cubic(Expression::parse("-36"), 1.0);
  const MatrixXd H(assemble_h_matrix(mesh, metric, cubic, 0.7));
  EXPECT_EQ(MatrixXd(assemble_jacobian(mesh, metric, cubic, 0.7, Vector::Zero(mesh.num_dofs()))), H);

  const auto linear = ProblemSpec::linear(Expression::parse("-36"));
  const Vector u = random_vector(mesh.num_dofs(), 0.5, 9);
  EXPECT_EQ(MatrixXd(assemble_jacobian(mesh, metric, linear, 0.7, u)), MatrixXd(assemble_h_matrix(mesh, metric, linear, 0.7)));
}

template <int Dim>
void check_jacobian_and_energy(const Mesh<Dim>& mesh, const MetricModel& metric, const ProblemSpec& spec, double r,
                               unsigned seed) {
  const Vector u = random_vector(mesh.num_dofs(), 0.3, seed);
  const Vector d = random_vector(mesh.num_dofs(), 1.0, seed + 1);
  const double eps = 1e-6;

  const Vector Jd = assemble_jacobian(mesh, metric, spec, r, u) * d;
  const Vector fd = (assemble_residual(mesh, metric, spec, r, Vector(u + eps * d)) -
                     assemble_residual(mesh, metric, spec, r, Vector(u - eps * d))) /
                    (2 * eps);
  EXPECT_LE((Jd - fd).norm(), 1e-6 * Jd.norm());

  const double directional = assemble_residual(mesh, metric, spec, r, u).dot(d);
  const double fd_energy = (assemble_energy(mesh, metric, spec, r, Vector(u + eps * d)) -
                            assemble_energy(mesh, metric, spec, r, Vector(u - eps * d))) /
                           (2 * eps);
  EXPECT_LE(std::abs(directional - fd_energy), 1e-6 * std::abs(directional));
}

TEST(Jacobian, MatchesFiniteDifferences) {
  const auto cubic = ProblemSpec::cubic(Expression::parse("-(2.3*pi)^2"), 1.0);
  check_jacobian_and_energy(build_mesh<1>(50), MetricModel::euclidean(1), cubic, 0.24, 1);
  check_jacobian_and_energy(build_mesh<2>(6), MetricModel::euclidean(2), cubic, 0.6, 2);
  check_jacobian_and_energy(build_mesh<2>(6), MetricModel::constant_curvature(2, 1.0),
                            ProblemSpec::cubic(Expression::parse("-36 + x1"), -2.0), 0.95, 3);
  check_jacobian_and_energy(build_mesh<2>(6), MetricModel::constant_curvature(2, -1.0),
                            ProblemSpec::linear(Expression::parse("-20 + y")), 0.5, 4);
}
