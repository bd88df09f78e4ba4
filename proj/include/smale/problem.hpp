#pragma once

// Potential f and nonlinearity V(y, xi) with V(y, 0) = 0 and dV/dxi(y, 0) = f(y).

#include <span>

#include <Eigen/Core>

#include "smale/expression.hpp"

namespace smale {

enum class Nonlinearity { Linear, Cubic };

struct ProblemSpec {
  Expression f = Expression::constant(0.0);
  Nonlinearity nonlinearity = Nonlinearity::Linear;
  double cubic_b = 0.0;

  static ProblemSpec linear(Expression potential) { return {std::move(potential), Nonlinearity::Linear, 0.0}; }
  static ProblemSpec cubic(Expression potential, double b) { return {std::move(potential), Nonlinearity::Cubic, b}; }
};

/// f(r x).
template <int Dim>
double eval_f(const ProblemSpec& spec, double r, const Eigen::Matrix<double, Dim, 1>& x) {
  const Eigen::Matrix<double, Dim, 1> y = r * x;
  return spec.f(std::span<const double>(y.data(), static_cast<std::size_t>(y.size())));
}

/// Values of V, its primitive G and its xi-derivative at one point.
struct NonlinearValues {
  double V;
  double G;
  double dV;
};

/// V, G and dV for a given potential value f(y); the y dependence of the
/// built-in nonlinearities enters only through f.
inline NonlinearValues eval_nonlinear(const ProblemSpec& spec, double f_value, double xi) {
  switch (spec.nonlinearity) {
    case Nonlinearity::Linear:
      return {f_value * xi, 0.5 * f_value * xi * xi, f_value};
    case Nonlinearity::Cubic: {
      const double b = spec.cubic_b;
      const double xi2 = xi * xi;
      return {f_value * xi + b * xi2 * xi, 0.5 * f_value * xi2 + 0.25 * b * xi2 * xi2, f_value + 3.0 * b * xi2};
    }
  }
  return {0.0, 0.0, 0.0};
}

template <int Dim>
double eval_V(const ProblemSpec& spec, double r, const Eigen::Matrix<double, Dim, 1>& x, double xi) {
  return eval_nonlinear(spec, eval_f<Dim>(spec, r, x), xi).V;
}

template <int Dim>
double eval_G(const ProblemSpec& spec, double r, const Eigen::Matrix<double, Dim, 1>& x, double xi) {
  return eval_nonlinear(spec, eval_f<Dim>(spec, r, x), xi).G;
}

template <int Dim>
double eval_dV(const ProblemSpec& spec, double r, const Eigen::Matrix<double, Dim, 1>& x, double xi) {
  return eval_nonlinear(spec, eval_f<Dim>(spec, r, x), xi).dV;
}

}  // namespace smale
