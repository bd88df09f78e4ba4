#pragma once

// Piecewise-linear finite element assembly of the pulled-back forms on the
// unit ball:
//
//   h_r(u, v) = int_B a^{jk}(r x) d_k u d_j v dx + r^2 int_B w(r x) f(r x) u v dx
//   q_r(u, v) = int_B a^{jk}(r x) d_k u d_j v dx + r^2 int_B w(r x) V(r x, u) v dx
//
// All matrices and vectors live on the interior (Dirichlet) degrees of freedom.

#include <array>
#include <cmath>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "smale/mesh.hpp"
#include "smale/metric.hpp"
#include "smale/problem.hpp"

namespace smale {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Vector = Eigen::VectorXd;

/// Discrete h_r together with the r-independent Gram matrix of the Dirichlet space.
struct AssembledForm {
  SparseMatrix H;
  SparseMatrix S;
  double r = 0.0;
};

namespace quadrature {

/// Barycentric quadrature point with weight normalized to sum 1 over the element.
template <int Dim>
struct Point {
  std::array<double, Dim + 1> lambda;
  double weight;
};

template <int Dim>
const std::vector<Point<Dim>>& stiffness_rule() {
  if constexpr (Dim == 1) {
    static const std::vector<Point<1>> rule{{{0.5, 0.5}, 1.0}};
    return rule;
  } else {
    static const std::vector<Point<2>> rule{
        {{2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0}, 1.0 / 3.0},
        {{1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0}, 1.0 / 3.0},
        {{1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0}, 1.0 / 3.0},
    };
    return rule;
  }
}

/// 3-point Gauss in 1D, 7-point degree-5 rule in 2D.
template <int Dim>
const std::vector<Point<Dim>>& potential_rule() {
  if constexpr (Dim == 1) {
    static const std::vector<Point<1>> rule = [] {
      const double g = 0.5 * std::sqrt(3.0 / 5.0);
      return std::vector<Point<1>>{
          {{0.5 + g, 0.5 - g}, 5.0 / 18.0},
          {{0.5, 0.5}, 8.0 / 18.0},
          {{0.5 - g, 0.5 + g}, 5.0 / 18.0},
      };
    }();
    return rule;
  } else {
    static const std::vector<Point<2>> rule = [] {
      const double a1 = 0.059715871789769820, b1 = 0.470142064105115090, w1 = 0.132394152788506181;
      const double a2 = 0.797426985353087322, b2 = 0.101286507323456339, w2 = 0.125939180544827153;
      return std::vector<Point<2>>{
          {{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}, 0.225},
          {{a1, b1, b1}, w1}, {{b1, a1, b1}, w1}, {{b1, b1, a1}, w1},
          {{a2, b2, b2}, w2}, {{b2, a2, b2}, w2}, {{b2, b2, a2}, w2},
      };
    }();
    return rule;
  }
}

}  // namespace quadrature

namespace detail {

template <int Dim>
struct ElementGeometry {
  using Point = Eigen::Matrix<double, Dim, 1>;
  std::array<Point, Dim + 1> vertices;
  std::array<Point, Dim + 1> gradients;  // constant gradients of the hat functions
  double measure;
  std::array<int, Dim + 1> dofs;  // -1 for boundary nodes

  Point map(const std::array<double, Dim + 1>& lambda) const {
    Point x = Point::Zero();
    for (int a = 0; a <= Dim; ++a) x += lambda[static_cast<std::size_t>(a)] * vertices[static_cast<std::size_t>(a)];
    return x;
  }
};

template <int Dim>
ElementGeometry<Dim> element_geometry(const Mesh<Dim>& mesh, int e) {
  const auto& el = mesh.elements[static_cast<std::size_t>(e)];
  ElementGeometry<Dim> g;
  for (int a = 0; a <= Dim; ++a) {
    const auto node = static_cast<std::size_t>(el[static_cast<std::size_t>(a)]);
    g.vertices[static_cast<std::size_t>(a)] = mesh.nodes[node];
    g.dofs[static_cast<std::size_t>(a)] = mesh.dof_of_node[node];
  }
  g.measure = element_measure(mesh, el);
  if constexpr (Dim == 1) {
    const double h = g.measure;
    g.gradients[0](0) = -1.0 / h;
    g.gradients[1](0) = 1.0 / h;
  } else {
    Eigen::Matrix2d J;
    J.col(0) = g.vertices[1] - g.vertices[0];
    J.col(1) = g.vertices[2] - g.vertices[0];
    const Eigen::Matrix2d Jinv_t = J.inverse().transpose();
    g.gradients[1] = Jinv_t.col(0);
    g.gradients[2] = Jinv_t.col(1);
    g.gradients[0] = -g.gradients[1] - g.gradients[2];
  }
  return g;
}

template <int Dim>
using ElementMatrix = Eigen::Matrix<double, Dim + 1, Dim + 1>;

/// int_e a^{jk}(r x) d_k phi_a d_j phi_b dx, symmetrized.
template <int Dim>
ElementMatrix<Dim> stiffness_block(const ElementGeometry<Dim>& g, const MetricModel& metric, double r) {
  Eigen::Matrix<double, Dim, Dim> A_avg = Eigen::Matrix<double, Dim, Dim>::Zero();
  for (const auto& q : quadrature::stiffness_rule<Dim>()) {
    A_avg += q.weight * eval_scaled<Dim>(metric, r, g.map(q.lambda)).A;
  }
  ElementMatrix<Dim> K;
  for (int a = 0; a <= Dim; ++a) {
    for (int b = 0; b <= Dim; ++b) {
      K(a, b) = g.measure * g.gradients[static_cast<std::size_t>(a)].dot(A_avg * g.gradients[static_cast<std::size_t>(b)]);
    }
  }
  return 0.5 * (K + K.transpose());
}

template <int Dim>
double value_at(const ElementGeometry<Dim>& g, const Vector& u, const std::array<double, Dim + 1>& lambda) {
  double s = 0.0;
  for (int a = 0; a <= Dim; ++a) {
    const int d = g.dofs[static_cast<std::size_t>(a)];
    if (d >= 0) s += lambda[static_cast<std::size_t>(a)] * u(d);
  }
  return s;
}

template <int Dim>
Eigen::Matrix<double, Dim + 1, 1> local_values(const ElementGeometry<Dim>& g, const Vector& u) {
  Eigen::Matrix<double, Dim + 1, 1> v;
  for (int a = 0; a <= Dim; ++a) {
    const int d = g.dofs[static_cast<std::size_t>(a)];
    v(a) = d >= 0 ? u(d) : 0.0;
  }
  return v;
}

// Element contributions reach (i, j) and (j, i) in different orders; averaging
// with the transpose makes the result symmetric bit for bit.
inline SparseMatrix symmetrized(const SparseMatrix& M) {
  SparseMatrix T = M.transpose();
  return 0.5 * (M + T);
}

/// Shared matrix assembly: stiffness with A(r x) plus
/// r^2 int w(r x) c(f(r x), u_h(x)) phi_a phi_b with the potential rule.
template <int Dim, class Coefficient>
SparseMatrix assemble_matrix(const Mesh<Dim>& mesh, const MetricModel& metric, const ProblemSpec& spec, double r,
                             const Vector* u, Coefficient coefficient) {
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(mesh.num_elements()) * (Dim + 1) * (Dim + 1));
  const Vector zero;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto g = element_geometry(mesh, e);
    ElementMatrix<Dim> K = stiffness_block(g, metric, r);
    if (r != 0.0) {
      ElementMatrix<Dim> P = ElementMatrix<Dim>::Zero();
      for (const auto& q : quadrature::potential_rule<Dim>()) {
        const auto x = g.map(q.lambda);
        const double uq = u ? value_at(g, *u, q.lambda) : 0.0;
        const double c = eval_scaled<Dim>(metric, r, x).w * coefficient(eval_f<Dim>(spec, r, x), uq);
        for (int a = 0; a <= Dim; ++a)
          for (int b = 0; b <= Dim; ++b)
            P(a, b) += q.weight * c * q.lambda[static_cast<std::size_t>(a)] * q.lambda[static_cast<std::size_t>(b)];
      }
      K += (r * r * g.measure) * P;
    }
    for (int a = 0; a <= Dim; ++a) {
      const int da = g.dofs[static_cast<std::size_t>(a)];
      if (da < 0) continue;
      for (int b = 0; b <= Dim; ++b) {
        const int db = g.dofs[static_cast<std::size_t>(b)];
        if (db >= 0) triplets.emplace_back(da, db, K(a, b));
      }
    }
  }
  SparseMatrix M(mesh.num_dofs(), mesh.num_dofs());
  M.setFromTriplets(triplets.begin(), triplets.end());
  return symmetrized(M);
}

}  // namespace detail

/// Discrete h_r on the interior degrees of freedom.
template <int Dim>
SparseMatrix assemble_h_matrix(const Mesh<Dim>& mesh, const MetricModel& metric, const ProblemSpec& spec, double r) {
  if (r < 0.0 || r > 1.0) throw DomainError("assemble_h: r must lie in [0, 1]");
  return detail::assemble_matrix(mesh, metric, spec, r, nullptr, [](double f, double) { return f; });
}

/// Euclidean H^1_0 Gram matrix int_B grad phi_i . grad phi_j dx.
template <int Dim>
SparseMatrix assemble_gram(const Mesh<Dim>& mesh) {
  std::vector<Eigen::Triplet<double>> triplets;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto g = detail::element_geometry(mesh, e);
    for (int a = 0; a <= Dim; ++a) {
      const int da = g.dofs[static_cast<std::size_t>(a)];
      if (da < 0) continue;
      for (int b = 0; b <= Dim; ++b) {
        const int db = g.dofs[static_cast<std::size_t>(b)];
        if (db >= 0)
          triplets.emplace_back(da, db, g.measure * g.gradients[static_cast<std::size_t>(a)].dot(g.gradients[static_cast<std::size_t>(b)]));
      }
    }
  }
  SparseMatrix S(mesh.num_dofs(), mesh.num_dofs());
  S.setFromTriplets(triplets.begin(), triplets.end());
  return detail::symmetrized(S);
}

/// Euclidean L^2 Gram matrix int_B phi_i phi_j dx.
template <int Dim>
SparseMatrix assemble_mass(const Mesh<Dim>& mesh) {
  std::vector<Eigen::Triplet<double>> triplets;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto g = detail::element_geometry(mesh, e);
    for (int a = 0; a <= Dim; ++a) {
      const int da = g.dofs[static_cast<std::size_t>(a)];
      if (da < 0) continue;
      for (int b = 0; b <= Dim; ++b) {
        const int db = g.dofs[static_cast<std::size_t>(b)];
        if (db < 0) continue;
        double m = 0.0;
        for (const auto& q : quadrature::potential_rule<Dim>())
          m += q.weight * q.lambda[static_cast<std::size_t>(a)] * q.lambda[static_cast<std::size_t>(b)];
        triplets.emplace_back(da, db, g.measure * m);
      }
    }
  }
  SparseMatrix M(mesh.num_dofs(), mesh.num_dofs());
  M.setFromTriplets(triplets.begin(), triplets.end());
  return detail::symmetrized(M);
}

template <int Dim>
AssembledForm assemble_h(const Mesh<Dim>& mesh, const MetricModel& metric, const ProblemSpec& spec, double r) {
  return {assemble_h_matrix(mesh, metric, spec, r), assemble_gram(mesh), r};
}

/// Covector q_r(u_h, phi_i).
template <int Dim>
Vector assemble_residual(const Mesh<Dim>& mesh, const MetricModel& metric, const ProblemSpec& spec, double r,
                         const Vector& u) {
  Vector R = Vector::Zero(mesh.num_dofs());
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto g = detail::element_geometry(mesh, e);
    const auto ue = detail::local_values(g, u);
    Eigen::Matrix<double, Dim + 1, 1> Re = detail::stiffness_block(g, metric, r) * ue;
    if (r != 0.0) {
      for (const auto& q : quadrature::potential_rule<Dim>()) {
        const auto x = g.map(q.lambda);
        const double uq = detail::value_at(g, u, q.lambda);
        const double V = eval_nonlinear(spec, eval_f<Dim>(spec, r, x), uq).V;
        const double c = r * r * g.measure * q.weight * eval_scaled<Dim>(metric, r, x).w * V;
        for (int a = 0; a <= Dim; ++a) Re(a) += c * q.lambda[static_cast<std::size_t>(a)];
      }
    }
    for (int a = 0; a <= Dim; ++a) {
      const int d = g.dofs[static_cast<std::size_t>(a)];
      if (d >= 0) R(d) += Re(a);
    }
  }
  return R;
}

/// Derivative of assemble_residual in u; equals assemble_h_matrix at u = 0.
template <int Dim>
SparseMatrix assemble_jacobian(const Mesh<Dim>& mesh, const MetricModel& metric, const ProblemSpec& spec, double r,
                               const Vector& u) {
  return detail::assemble_matrix(mesh, metric, spec, r, &u,
                                 [&spec](double f, double uq) { return eval_nonlinear(spec, f, uq).dV; });
}

/// Discrete energy 1/2 int a grad u . grad u + r^2 int w G(r x, u), whose
/// gradient is assemble_residual.
template <int Dim>
double assemble_energy(const Mesh<Dim>& mesh, const MetricModel& metric, const ProblemSpec& spec, double r,
                       const Vector& u) {
  double energy = 0.0;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto g = detail::element_geometry(mesh, e);
    const auto ue = detail::local_values(g, u);
    energy += 0.5 * ue.dot(detail::stiffness_block(g, metric, r) * ue);
    if (r != 0.0) {
      for (const auto& q : quadrature::potential_rule<Dim>()) {
        const auto x = g.map(q.lambda);
        const double G = eval_nonlinear(spec, eval_f<Dim>(spec, r, x), detail::value_at(g, u, q.lambda)).G;
        energy += r * r * g.measure * q.weight * eval_scaled<Dim>(metric, r, x).w * G;
      }
    }
  }
  return energy;
}

}  // namespace smale
