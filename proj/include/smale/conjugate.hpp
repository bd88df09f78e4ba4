#pragma once

// Conjugate radii of the linearized problem: the radii r in (0, 1) at which
// the pulled-back form h_r degenerates. Located from jumps of the negative
// inertia of H(r), with the crossing form d/dr h_r restricted to the kernel
// evaluated both by central differences in r and by the boundary integral
//
//   Gamma[u] = -(1/r0) int_{dB} <grad u, x>^2 <A(r0 x) x, x> dS.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "smale/assembly.hpp"
#include "smale/errors.hpp"
#include "smale/parallel.hpp"
#include "smale/spectral.hpp"

namespace smale {

struct ScanRow {
  double r;
  Vector eigenvalues;  // k smallest of the pencil (H(r), S)
  int n_neg;
};

struct ScanOptions {
  int k = 6;
  int threads = 1;
  double pivot_tolerance = kDefaultPivotTolerance;
};

struct ConjugateRadius {
  double r_star = 0.0;
  int multiplicity = 0;
  Eigen::MatrixXd kernel_basis;  // S-orthonormal columns
  Vector kernel_eigenvalues;
  double r_lo = 0.0;
  double r_hi = 0.0;

  double bracket_width() const { return r_hi - r_lo; }
};

struct LocateOptions {
  double tolerance = 1e-8;
  int refinement = 10;  // sub-brackets examined when the inertia jumps by >= 2
  double kernel_residual = 1e-6;
};

/// Uniform grid of `points` radii on [r_min, r_max], end points included.
inline std::vector<double> uniform_grid(double r_min, double r_max, int points) {
  if (points < 2) throw std::invalid_argument("scan grid needs at least two points");
  std::vector<double> grid(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) grid[static_cast<std::size_t>(i)] = r_min + (r_max - r_min) * i / (points - 1);
  grid.back() = r_max;
  return grid;
}

/// Smallest pencil eigenvalues and inertia of H(r) at every grid radius.
template <int Dim>
std::vector<ScanRow> scan(const Mesh<Dim>& mesh, const MetricModel& metric, const ProblemSpec& spec,
                          std::span<const double> r_grid, const ScanOptions& opts = {}) {
  for (std::size_t i = 0; i < r_grid.size(); ++i) {
    if (r_grid[i] < 1e-3 || r_grid[i] > 1.0) throw DomainError("scan grid must lie in [1e-3, 1]");
    if (i > 0 && !(r_grid[i] > r_grid[i - 1])) throw DomainError("scan grid must be strictly ascending");
  }
  const SparseMatrix S = assemble_gram(mesh);
  const int k = std::min(opts.k, mesh.num_dofs());
  std::vector<ScanRow> rows(r_grid.size());
  parallel_for(r_grid.size(), opts.threads, [&](std::size_t i) {
    const double r = r_grid[i];
    const SparseMatrix H = assemble_h_matrix(mesh, metric, spec, r);
    Vector values;
    if (k > 0) values = smallest_eigenpairs(H, S, k).values;
    rows[i] = ScanRow{r, values, inertia(H, opts.pivot_tolerance).n_neg};
  });
  return rows;
}

/// True when n_neg never decreases along the scan.
inline bool monotone_index(std::span<const ScanRow> rows) {
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i].n_neg < rows[i - 1].n_neg) return false;
  return true;
}

namespace detail {

template <int Dim>
struct InertiaCounter {
  const Mesh<Dim>& mesh;
  const MetricModel& metric;
  const ProblemSpec& spec;

  // strict sign count; a crossing is pinned by where this integer changes
  int operator()(double r) const { return inertia(assemble_h_matrix(mesh, metric, spec, r), 0.0).n_neg; }
};

template <int Dim>
void locate_recursive(const InertiaCounter<Dim>& count, double lo, double hi, int n_lo, int n_hi,
                      const LocateOptions& opts, std::vector<std::pair<double, double>>& brackets,
                      std::vector<int>& jumps) {
  while (hi - lo > opts.tolerance) {
    if (n_hi - n_lo == 1) {
      const double mid = 0.5 * (lo + hi);
      const int n_mid = count(mid);
      if (n_mid < n_lo || n_mid > n_hi) throw VerificationError("negative inertia is not monotone in r");
      if (n_mid == n_lo) lo = mid;
      else hi = mid;
      continue;
    }
    // Jump >= 2: look for separated crossings on a finer sub-grid.
    const int parts = std::max(2, opts.refinement);
    std::vector<double> r(static_cast<std::size_t>(parts) + 1);
    std::vector<int> n(static_cast<std::size_t>(parts) + 1);
    r.front() = lo;
    r.back() = hi;
    n.front() = n_lo;
    n.back() = n_hi;
    for (int i = 1; i < parts; ++i) {
      r[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / parts;
      n[static_cast<std::size_t>(i)] = count(r[static_cast<std::size_t>(i)]);
    }
    std::vector<int> jumping;
    for (int i = 0; i < parts; ++i) {
      const auto a = static_cast<std::size_t>(i);
      if (n[a + 1] < n[a]) throw VerificationError("negative inertia is not monotone in r");
      if (n[a + 1] > n[a]) jumping.push_back(i);
    }
    if (jumping.size() == 1) {
      const auto a = static_cast<std::size_t>(jumping.front());
      lo = r[a];
      hi = r[a + 1];
      continue;
    }
    for (int i : jumping) {
      const auto a = static_cast<std::size_t>(i);
      locate_recursive(count, r[a], r[a + 1], n[a], n[a + 1], opts, brackets, jumps);
    }
    return;
  }
  brackets.emplace_back(lo, hi);
  jumps.push_back(n_hi - n_lo);
}

}  // namespace detail

/// Kernel vectors at r: the m pencil eigenvectors nearest zero.
template <int Dim>
ConjugateRadius kernel_at(const Mesh<Dim>& mesh, const MetricModel& metric, const ProblemSpec& spec, double r,
                          int multiplicity, const SparseMatrix& S) {
  const SparseMatrix H = assemble_h_matrix(mesh, metric, spec, r);
  EigenPairs pairs;
  try {
    pairs = nearest_eigenpairs(H, S, multiplicity, 0.0);
  } catch (const FactorizationError&) {
    pairs = nearest_eigenpairs(H, S, multiplicity, -1e-6);
  }
  ConjugateRadius c;
  c.r_star = r;
  c.multiplicity = multiplicity;
  c.kernel_basis = pairs.vectors;
  c.kernel_eigenvalues = pairs.values;
  return c;
}

/// Relative kernel residual ||H v|| / (||H|| ||v||_S).
inline double kernel_residual(const SparseMatrix& H, const SparseMatrix& S, const Vector& v) {
  return (H * v).norm() / (matrix_norm(H) * std::sqrt(v.dot(S * v)));
}

/// Bisection on the inertia count inside [r_lo, r_hi]. Separate crossings
/// found inside the bracket are returned separately, in ascending order.
template <int Dim>
std::vector<ConjugateRadius> locate(const Mesh<Dim>& mesh, const MetricModel& metric, const ProblemSpec& spec,
                                    double r_lo, double r_hi, const LocateOptions& opts = {}) {
  if (!(r_lo < r_hi)) throw std::invalid_argument("locate: empty bracket");
  const detail::InertiaCounter<Dim> count{mesh, metric, spec};
  const int n_lo = count(r_lo);
  const int n_hi = count(r_hi);
  if (n_hi == n_lo) throw std::invalid_argument("locate: no inertia jump across the bracket");
  if (n_hi < n_lo) throw VerificationError("negative inertia decreases across the bracket");

  std::vector<std::pair<double, double>> brackets;
  std::vector<int> jumps;
  detail::locate_recursive(count, r_lo, r_hi, n_lo, n_hi, opts, brackets, jumps);

  const SparseMatrix S = assemble_gram(mesh);
  std::vector<ConjugateRadius> found;
  for (std::size_t i = 0; i < brackets.size(); ++i) {
    const auto [lo, hi] = brackets[i];
    ConjugateRadius c = kernel_at(mesh, metric, spec, 0.5 * (lo + hi), jumps[i], S);
    c.r_lo = lo;
    c.r_hi = hi;
    const SparseMatrix H = assemble_h_matrix(mesh, metric, spec, c.r_star);
    for (Eigen::Index j = 0; j < c.kernel_basis.cols(); ++j) {
      if (kernel_residual(H, S, c.kernel_basis.col(j)) > opts.kernel_residual)
        throw VerificationError("kernel vector residual too large at r = " + std::to_string(c.r_star));
    }
    found.push_back(std::move(c));
  }
  return found;
}

/// Locates every crossing between consecutive scan rows whose inertia jumps.
template <int Dim>
std::vector<ConjugateRadius> locate_all(const Mesh<Dim>& mesh, const MetricModel& metric, const ProblemSpec& spec,
                                        std::span<const ScanRow> rows, const LocateOptions& opts = {},
                                        int threads = 1) {
  std::vector<std::pair<double, double>> brackets;
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i].n_neg != rows[i - 1].n_neg) brackets.emplace_back(rows[i - 1].r, rows[i].r);
  std::vector<std::vector<ConjugateRadius>> per_bracket(brackets.size());
  parallel_for(brackets.size(), threads, [&](std::size_t i) {
    per_bracket[i] = locate(mesh, metric, spec, brackets[i].first, brackets[i].second, opts);
  });
  std::vector<ConjugateRadius> all;
  for (auto& list : per_bracket)
    for (auto& c : list) all.push_back(std::move(c));
  return all;
}

/// Central difference of u_i^T H(r) u_j in r for any matrix family r -> H(r).
template <class Family>
Eigen::MatrixXd crossing_form_fd(const Family& family, double r, const Eigen::MatrixXd& basis, double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("crossing_form_fd: delta must be positive");
  const SparseMatrix plus = family(r + delta);
  const SparseMatrix minus = family(r - delta);
  Eigen::MatrixXd gamma = basis.transpose() * (plus * basis - minus * basis) / (2.0 * delta);
  return 0.5 * (gamma + gamma.transpose());
}

template <int Dim>
Eigen::MatrixXd crossing_form_fd(const Mesh<Dim>& mesh, const MetricModel& metric, const ProblemSpec& spec,
                                 double r, const Eigen::MatrixXd& basis, double delta) {
  if (r - delta < 0.0 || r + delta > 1.0) throw DomainError("crossing_form_fd: r +- delta leaves [0, 1]");
  return crossing_form_fd([&](double s) { return assemble_h_matrix(mesh, metric, spec, s); }, r, basis, delta);
}

template <int Dim>
Eigen::MatrixXd crossing_form_fd(const Mesh<Dim>& mesh, const MetricModel& metric, const ProblemSpec& spec,
                                 const ConjugateRadius& conj, double delta) {
  return crossing_form_fd(mesh, metric, spec, conj.r_star, conj.kernel_basis, delta);
}

struct AuditedCrossingForm {
  Eigen::MatrixXd gamma;       // step delta
  Eigen::MatrixXd gamma_half;  // step delta / 2
  double discrepancy;          // relative Frobenius difference of the two
};

/// Default step 1e-4 r*, audited against the half step.
template <int Dim>
AuditedCrossingForm crossing_form_fd_audited(const Mesh<Dim>& mesh, const MetricModel& metric,
                                             const ProblemSpec& spec, const ConjugateRadius& conj,
                                             double delta_factor = 1e-4) {
  const double delta = delta_factor * conj.r_star;
  AuditedCrossingForm out;
  out.gamma = crossing_form_fd(mesh, metric, spec, conj, delta);
  out.gamma_half = crossing_form_fd(mesh, metric, spec, conj, 0.5 * delta);
  out.discrepancy = (out.gamma - out.gamma_half).norm() / out.gamma.norm();
  return out;
}

/// Boundary-integral value of the crossing form on a single vector. Gradients
/// are the constant gradients of the element adjacent to each boundary facet;
/// 2D edges use 2-point Gauss with points projected radially onto |x| = 1.
template <int Dim>
double crossing_value_boundary(const Mesh<Dim>& mesh, const MetricModel& metric, double r0, const Vector& u) {
  double sum = 0.0;
  for (const auto& facet : mesh.boundary_facets) {
    const auto g = detail::element_geometry(mesh, facet.element);
    Eigen::Matrix<double, Dim, 1> grad = Eigen::Matrix<double, Dim, 1>::Zero();
    for (int a = 0; a <= Dim; ++a) {
      const int d = g.dofs[static_cast<std::size_t>(a)];
      if (d >= 0) grad += u(d) * g.gradients[static_cast<std::size_t>(a)];
    }
    auto integrand = [&](const Eigen::Matrix<double, Dim, 1>& x) {
      const double normal_derivative = grad.dot(x);
      const auto A = eval_scaled<Dim>(metric, r0, x).A;
      return normal_derivative * normal_derivative * x.dot(A * x);
    };
    if constexpr (Dim == 1) {
      sum += integrand(mesh.nodes[static_cast<std::size_t>(facet.nodes[0])]);
    } else {
      const auto& p = mesh.nodes[static_cast<std::size_t>(facet.nodes[0])];
      const auto& q = mesh.nodes[static_cast<std::size_t>(facet.nodes[1])];
      const double s = 0.5 / std::sqrt(3.0);
      for (double t : {0.5 - s, 0.5 + s}) {
        Eigen::Vector2d x = (1.0 - t) * p + t * q;
        x /= x.norm();
        sum += 0.5 * facet.measure * integrand(x);
      }
    }
  }
  return -sum / r0;
}

/// Boundary-integral crossing form on the kernel basis, by polarization.
template <int Dim>
Eigen::MatrixXd crossing_form_boundary(const Mesh<Dim>& mesh, const MetricModel& metric, double r0,
                                       const Eigen::MatrixXd& basis) {
  const auto m = basis.cols();
  Eigen::MatrixXd gamma(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    gamma(i, i) = crossing_value_boundary(mesh, metric, r0, basis.col(i));
    for (Eigen::Index j = 0; j < i; ++j) {
      const double plus = crossing_value_boundary(mesh, metric, r0, Vector(basis.col(i) + basis.col(j)));
      const double minus = crossing_value_boundary(mesh, metric, r0, Vector(basis.col(i) - basis.col(j)));
      gamma(i, j) = gamma(j, i) = 0.25 * (plus - minus);
    }
  }
  return gamma;
}

template <int Dim>
Eigen::MatrixXd crossing_form_boundary(const Mesh<Dim>& mesh, const MetricModel& metric,
                                       const ConjugateRadius& conj) {
  return crossing_form_boundary(mesh, metric, conj.r_star, conj.kernel_basis);
}

struct CrossingFormReport {
  double r_star = 0.0;
  int multiplicity = 0;
  Eigen::MatrixXd gamma_fd;
  Eigen::MatrixXd gamma_bd;
  int signature = 0;
  double agreement = 0.0;  // ||G_fd - G_bd||_F / ||G_fd||_F
  double richardson_discrepancy = 0.0;
  bool negative_definite = false;

  bool signature_matches() const { return std::abs(signature) == multiplicity; }
  bool passed(double agreement_tolerance) const {
    return negative_definite && signature_matches() && agreement <= agreement_tolerance &&
           richardson_discrepancy <= 0.01;
  }
};

inline CrossingFormReport verify_crossing(double r_star, int multiplicity, const Eigen::MatrixXd& gamma_fd,
                                          const Eigen::MatrixXd& gamma_bd, double richardson_discrepancy = 0.0) {
  CrossingFormReport report;
  report.r_star = r_star;
  report.multiplicity = multiplicity;
  report.gamma_fd = gamma_fd;
  report.gamma_bd = gamma_bd;
  report.richardson_discrepancy = richardson_discrepancy;
  if (gamma_fd.size() == 0) {
    report.negative_definite = true;
    return report;
  }
  const Vector eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(gamma_fd).eigenvalues();
  const double scale = eig.cwiseAbs().maxCoeff();
  int pos = 0, neg = 0;
  for (Eigen::Index i = 0; i < eig.size(); ++i) {
    if (eig(i) > 1e-12 * scale) ++pos;
    else if (eig(i) < -1e-12 * scale) ++neg;
  }
  report.signature = pos - neg;
  report.negative_definite = neg == eig.size();
  report.agreement = (gamma_fd - gamma_bd).norm() / gamma_fd.norm();
  return report;
}

/// Both crossing forms at a located radius, assembled into a report.
template <int Dim>
CrossingFormReport crossing_report(const Mesh<Dim>& mesh, const MetricModel& metric, const ProblemSpec& spec,
                                   const ConjugateRadius& conj) {
  const auto fd = crossing_form_fd_audited(mesh, metric, spec, conj);
  return verify_crossing(conj.r_star, conj.multiplicity, fd.gamma, crossing_form_boundary(mesh, metric, conj),
                         fd.discrepancy);
}

struct IndexReport {
  int morse_index_at_1 = 0;
  std::vector<std::pair<double, int>> conjugate_list;
  int sum_m = 0;
  bool identity_holds = false;
  int morse_index_small_r = 0;
  int corollary_bound = 0;
  double lambda_nearest_zero_at_1 = 0.0;
};

struct IndexOptions {
  double r_min = 1e-3;
  double kernel_threshold = 1e-7;
  double pivot_tolerance = kDefaultPivotTolerance;
};

/// Smallest |lambda| of the pencil at r = 1; throws AssumptionViolation
/// when it falls below the kernel threshold.
template <int Dim>
double check_nondegenerate_at_one(const Mesh<Dim>& mesh, const MetricModel& metric, const ProblemSpec& spec,
                                  double kernel_threshold) {
  const SparseMatrix H = assemble_h_matrix(mesh, metric, spec, 1.0);
  const SparseMatrix S = assemble_gram(mesh);
  double lambda = 0.0;
  try {
    lambda = nearest_eigenpairs(H, S, 1, 0.0).values(0);
  } catch (const FactorizationError&) {
    throw AssumptionViolation("h_1 is numerically singular: the standing assumption m(1) = 0 is violated");
  }
  if (std::abs(lambda) < kernel_threshold) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "h_1 is degenerate (|lambda| = %.3e < %.1e): a conjugate radius sits at r = 1, violating m(1) = 0",
                  std::abs(lambda), kernel_threshold);
    throw AssumptionViolation(buf);
  }
  return lambda;
}

/// Morse index at r = 1 against the sum of located multiplicities.
template <int Dim>
IndexReport verify_index(const Mesh<Dim>& mesh, const MetricModel& metric, const ProblemSpec& spec,
                         std::span<const ConjugateRadius> conjugates, const IndexOptions& opts = {}) {
  IndexReport report;
  report.lambda_nearest_zero_at_1 = check_nondegenerate_at_one(mesh, metric, spec, opts.kernel_threshold);
  report.morse_index_at_1 = inertia(assemble_h_matrix(mesh, metric, spec, 1.0), opts.pivot_tolerance).n_neg;
  report.morse_index_small_r = inertia(assemble_h_matrix(mesh, metric, spec, opts.r_min), opts.pivot_tolerance).n_neg;
  int max_m = 0;
  for (const auto& c : conjugates) {
    report.conjugate_list.emplace_back(c.r_star, c.multiplicity);
    report.sum_m += c.multiplicity;
    max_m = std::max(max_m, c.multiplicity);
  }
  report.identity_holds = report.morse_index_at_1 == report.sum_m;
  report.corollary_bound = max_m > 0 ? report.morse_index_at_1 / max_m : 0;
  return report;
}

}  // namespace smale
