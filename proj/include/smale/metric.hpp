#pragma once

// Riemannian metric data in geodesic normal coordinates around the center of
// the ball. Everything downstream only needs the coefficient matrix
// A(x) = g^{jk}(x) |g(x)|^{1/2} and the volume weight w(x) = |g(x)|^{1/2}.

#include <cmath>
#include <functional>
#include <numbers>
#include <string>

#include <Eigen/Dense>

#include "smale/errors.hpp"

namespace smale {

enum class MetricKind { Euclidean, ConstantCurvature, Custom };

template <int Dim>
struct Coefficients {
  Eigen::Matrix<double, Dim, Dim> A;
  double w = 1.0;
};

/// User supplied metric data; must return SPD A and positive w for |x| < 1.
using CustomMetric = std::function<Coefficients<Eigen::Dynamic>(const Eigen::VectorXd&)>;

class MetricModel {
 public:
  static MetricModel euclidean(int dim) { return MetricModel(MetricKind::Euclidean, dim, 0.0); }

  static MetricModel constant_curvature(int dim, double kappa) {
    if (kappa > 0.0 && std::sqrt(kappa) >= std::numbers::pi) {
      throw DomainError("constant curvature metric: sqrt(kappa) must be < pi so that the unit "
                        "ball lies inside the injectivity radius");
    }
    return MetricModel(MetricKind::ConstantCurvature, dim, kappa);
  }

  static MetricModel custom(int dim, CustomMetric callback) {
    MetricModel m(MetricKind::Custom, dim, 0.0);
    m.custom_ = std::move(callback);
    return m;
  }

  MetricKind kind() const { return kind_; }
  int dim() const { return dim_; }
  double curvature() const { return kappa_; }
  const CustomMetric& custom_callback() const { return custom_; }

 private:
  MetricModel(MetricKind kind, int dim, double kappa) : kind_(kind), dim_(dim), kappa_(kappa) {
    if (dim < 1) throw DomainError("metric dimension must be >= 1");
  }

  MetricKind kind_;
  int dim_;
  double kappa_;
  CustomMetric custom_;
};

namespace detail {

// Below this radius s_k(t)/t and t/s_k(t) switch to truncated Taylor series.
inline constexpr double kSeriesRadius = 1e-4;

}  // namespace detail

/// s_k(t)/t by Taylor series (4 terms); valid for small kappa*t^2.
inline double sin_ratio_series(double kappa, double t) {
  const double z = kappa * t * t;
  return 1.0 - z / 6.0 + z * z / 120.0 - z * z * z / 5040.0;
}

/// t/s_k(t) by Taylor series (4 terms).
inline double inverse_sin_ratio_series(double kappa, double t) {
  const double z = kappa * t * t;
  return 1.0 + z / 6.0 + 7.0 * z * z / 360.0 + 31.0 * z * z * z / 15120.0;
}

/// s_k(t)/t in closed form, with s_k(t) = sin(sqrt(k) t)/sqrt(k) (k>0),
/// t (k=0) or sinh(sqrt(-k) t)/sqrt(-k) (k<0).
inline double sin_ratio_closed(double kappa, double t) {
  if (kappa > 0.0) {
    const double s = std::sqrt(kappa);
    return std::sin(s * t) / (s * t);
  }
  if (kappa < 0.0) {
    const double s = std::sqrt(-kappa);
    return std::sinh(s * t) / (s * t);
  }
  return 1.0;
}

inline double sin_ratio(double kappa, double t) {
  return t < detail::kSeriesRadius ? sin_ratio_series(kappa, t) : sin_ratio_closed(kappa, t);
}

inline double inverse_sin_ratio(double kappa, double t) {
  return t < detail::kSeriesRadius ? inverse_sin_ratio_series(kappa, t)
                                   : 1.0 / sin_ratio_closed(kappa, t);
}

/// Constant-curvature coefficients assembled from the two scalar ratios.
/// Separated out so the series and closed-form branches can be compared.
template <int Dim>
Coefficients<Dim> constant_curvature_coefficients(const Eigen::Matrix<double, Dim, 1>& x,
                                                  double ratio, double inverse_ratio) {
  const auto n = x.size();
  const double t = x.norm();
  Coefficients<Dim> c;
  c.w = std::pow(ratio, static_cast<double>(n - 1));
  if (t == 0.0) {
    c.A.setIdentity(n, n);
    return c;
  }
  // A = w (P_rad + (t/s)^2 P_tan) with P_tan = I - P_rad.
  const double tangential = inverse_ratio * inverse_ratio;
  const Eigen::Matrix<double, Dim, 1> e = x / t;
  c.A = (tangential * Eigen::Matrix<double, Dim, Dim>::Identity(n, n) +
         (1.0 - tangential) * (e * e.transpose()));
  c.A *= c.w;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) c.A(j, i) = c.A(i, j);
  return c;
}

/// A(x) and w(x) at a point of the open unit ball.
template <int Dim>
Coefficients<Dim> eval_coefficients(const MetricModel& model, const Eigen::Matrix<double, Dim, 1>& x) {
  const auto n = x.size();
  if (n != model.dim()) throw DomainError("metric evaluated at a point of the wrong dimension");
  const double t = x.norm();
  if (!(t < 1.0)) throw DomainError("metric evaluated outside the open unit ball (|x| = " + std::to_string(t) + ")");

  switch (model.kind()) {
    case MetricKind::Euclidean: {
      Coefficients<Dim> c;
      c.A.setIdentity(n, n);
      c.w = 1.0;
      return c;
    }
    case MetricKind::ConstantCurvature: {
      const double kappa = model.curvature();
      if (kappa > 0.0 && std::sqrt(kappa) >= std::numbers::pi) {
        throw DomainError("constant curvature metric: sqrt(kappa) >= pi");
      }
      return constant_curvature_coefficients<Dim>(x, sin_ratio(kappa, t), inverse_sin_ratio(kappa, t));
    }
    case MetricKind::Custom: {
      const auto dyn = model.custom_callback()(Eigen::VectorXd(x));
      Coefficients<Dim> c;
      c.A = dyn.A;
      c.w = dyn.w;
      return c;
    }
  }
  throw DomainError("unknown metric kind");
}

/// A(r x) and w(r x). The closed unit sphere is admitted for x since the
/// scaled point stays inside whenever r < 1; at r|x| = 1 the point is pulled
/// back by one ulp, which is the limit from inside for these smooth fields.
template <int Dim>
Coefficients<Dim> eval_scaled(const MetricModel& model, double r, const Eigen::Matrix<double, Dim, 1>& x) {
  if (r < 0.0 || r > 1.0) throw DomainError("scale parameter r must lie in [0, 1]");
  if (x.norm() > 1.0 + 1e-12) throw DomainError("eval_scaled: point outside the closed unit ball");
  Eigen::Matrix<double, Dim, 1> y = r * x;
  const double t = y.norm();
  if (t >= 1.0) y *= std::nextafter(1.0, 0.0) / t;
  return eval_coefficients<Dim>(model, y);
}

}  // namespace smale
