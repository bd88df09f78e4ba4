#pragma once

// Nontrivial solutions of q_r(u, .) = 0 near conjugate radii: damped Newton
// on the assembled residual, warm-started continuation in r away from a
// crossing, and multi-start searches at radii that are not conjugate.

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "smale/assembly.hpp"
#include "smale/conjugate.hpp"
#include "smale/spectral.hpp"

namespace smale {

enum class NewtonStatus { Converged, SingularJacobian, LineSearchFailed, MaxIterations };

inline const char* to_string(NewtonStatus s) {
  switch (s) {
    case NewtonStatus::Converged: return "converged";
    case NewtonStatus::SingularJacobian: return "singular_jacobian";
    case NewtonStatus::LineSearchFailed: return "line_search_failed";
    case NewtonStatus::MaxIterations: return "max_iterations";
  }
  return "unknown";
}

struct BranchSample {
  double r = 0.0;
  Vector u;
  double h1_norm = 0.0;
  double residual_norm = 0.0;
  int newton_iters = 0;
  bool converged = false;
  NewtonStatus status = NewtonStatus::MaxIterations;
};

struct NewtonOptions {
  int max_iters = 50;
  double tolerance = 1e-10;  // relative to 1 + ||H(r)||
  double step_tolerance = 1e-8;  // last Newton step relative to ||u||_S
  double armijo_factor = 0.5;
  double armijo_slope = 1e-4;
  int max_backtracks = 40;
};

/// Newton solver for one (mesh, metric, problem) triple. Holds the Gram
/// matrix and its Cholesky factor used by the merit function 1/2 R^T S^-1 R.
template <int Dim>
class NewtonSolver {
 public:
  NewtonSolver(const Mesh<Dim>& mesh, const MetricModel& metric, const ProblemSpec& spec)
      : mesh_(mesh), metric_(metric), spec_(spec), S_(assemble_gram(mesh)), gram_(S_) {
    if (gram_.info() != Eigen::Success) throw FactorizationError("Gram matrix S is not positive definite");
  }

  const SparseMatrix& gram() const { return S_; }

  double h1_norm(const Vector& u) const { return std::sqrt(std::max(0.0, u.dot(S_ * u))); }

  BranchSample solve(double r, const Vector& u0, const NewtonOptions& opts = {}) const {
    const double tol = opts.tolerance * (1.0 + matrix_norm(assemble_h_matrix(mesh_, metric_, spec_, r)));
    BranchSample out;
    out.r = r;
    out.u = u0;
    Vector R = assemble_residual(mesh_, metric_, spec_, r, out.u);
    auto merit = [this](const Vector& res) { return 0.5 * res.dot(gram_.solve(res)); };
    double phi = merit(R);
    out.status = NewtonStatus::MaxIterations;
    for (int it = 0; it <= opts.max_iters; ++it) {
      out.residual_norm = R.norm();
      out.newton_iters = it;
      if (out.residual_norm == 0.0) {
        out.status = NewtonStatus::Converged;
        break;
      }
      if (it == opts.max_iters) break;
      const SparseMatrix J = assemble_jacobian(mesh_, metric_, spec_, r, out.u);
      Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt(J);
      if (ldlt.info() != Eigen::Success) {
        out.status = NewtonStatus::SingularJacobian;
        break;
      }
      const Vector step = ldlt.solve(-R);
      if (!step.allFinite()) {
        out.status = NewtonStatus::SingularJacobian;
        break;
      }
      // A small residual alone is not enough near a singular Jacobian: an
      // iterate drifting slowly to 0 also has one.
      if (out.residual_norm <= tol && h1_norm(step) <= opts.step_tolerance * h1_norm(out.u)) {
        out.status = NewtonStatus::Converged;
        break;
      }
      // The Newton direction has merit slope -2 phi.
      double t = 1.0;
      bool accepted = false;
      for (int b = 0; b <= opts.max_backtracks; ++b) {
        const Vector trial = out.u + t * step;
        const Vector R_trial = assemble_residual(mesh_, metric_, spec_, r, trial);
        const double phi_trial = merit(R_trial);
        if (std::isfinite(phi_trial) && phi_trial <= (1.0 - 2.0 * opts.armijo_slope * t) * phi) {
          out.u = trial;
          R = R_trial;
          phi = phi_trial;
          accepted = true;
          break;
        }
        t *= opts.armijo_factor;
      }
      if (!accepted) {
        out.status = NewtonStatus::LineSearchFailed;
        out.residual_norm = R.norm();
        break;
      }
    }
    out.converged = out.status == NewtonStatus::Converged;
    out.h1_norm = h1_norm(out.u);
    return out;
  }

 private:
  const Mesh<Dim>& mesh_;  // must outlive the solver
  MetricModel metric_;
  ProblemSpec spec_;
  SparseMatrix S_;
  Eigen::SimplicialLLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> gram_;
};

template <int Dim>
BranchSample newton_solve(const Mesh<Dim>& mesh, const MetricModel& metric, const ProblemSpec& spec, double r,
                          const Vector& u0, int max_iters = 50) {
  NewtonOptions opts;
  opts.max_iters = max_iters;
  return NewtonSolver<Dim>(mesh, metric, spec).solve(r, u0, opts);
}

struct TraceOptions {
  int steps = 100;
  double step_size = 1e-3;
  double trivial_threshold = 1e-8;  // h1 norms below this count as the trivial solution
  int intercept_samples = 5;
  NewtonOptions newton;
};

struct BranchTrace {
  double r_star = 0.0;
  int direction = 1;
  std::vector<BranchSample> samples;
  bool confirmed = false;
  double intercept = std::numeric_limits<double>::quiet_NaN();
  double seed_amplitude = 0.0;
  std::string failure;
};

/// Linear fit of h1^2 against r over the first samples; returns the r where
/// the fitted squared amplitude vanishes.
inline double amplitude_intercept(const std::vector<BranchSample>& samples, int count) {
  const auto n = std::min<std::size_t>(samples.size(), static_cast<std::size_t>(count));
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  double sr = 0, sa = 0, srr = 0, sra = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = samples[i].r, a = samples[i].h1_norm * samples[i].h1_norm;
    sr += r;
    sa += a;
    srr += r * r;
    sra += r * a;
  }
  const double dn = static_cast<double>(n);
  const double slope = (dn * sra - sr * sa) / (dn * srr - sr * sr);
  const double offset = (sa - slope * sr) / dn;
  return -offset / slope;
}

/// Least-squares slope of log h1 against log |r - r*| over samples whose
/// distance d to r* lies in [lo, hi]. Samples are weighted by the log-length
/// they cover, so a uniform r grid does not overweight the upper decade.
inline double amplitude_exponent(const std::vector<BranchSample>& samples, double r_star, double lo = 1e-3,
                                 double hi = 1e-1) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& s : samples) {
    const double d = std::abs(s.r - r_star);
    if (d < lo * (1 - 1e-9) || d > hi * (1 + 1e-9) || s.h1_norm <= 0.0) continue;
    pts.emplace_back(std::log(d), std::log(s.h1_norm));
  }
  if (pts.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  std::sort(pts.begin(), pts.end());
  double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double left = i > 0 ? pts[i - 1].first : pts[i].first;
    const double right = i + 1 < pts.size() ? pts[i + 1].first : pts[i].first;
    const double w = 0.5 * (right - left);
    const auto [x, y] = pts[i];
    sw += w;
    sx += w * x;
    sy += w * y;
    sxx += w * x * x;
    sxy += w * x * y;
  }
  return (sw * sxy - sx * sy) / (sw * sxx - sx * sx);
}

/// Seed amplitude from the pitchfork normal form a^2 = -lambda(r) / c3, with
/// lambda(r) = phi^T H(r) phi and c3 = phi^T (R(phi) - H(r) phi). Falls back
/// to sqrt(step) when the normal form predicts no branch on this side.
template <int Dim>
double pitchfork_seed_amplitude(const Mesh<Dim>& mesh, const MetricModel& metric, const ProblemSpec& spec, double r,
                                const Vector& phi, double step_size) {
  const SparseMatrix H = assemble_h_matrix(mesh, metric, spec, r);
  const Vector Hphi = H * phi;
  const double lambda = phi.dot(Hphi);
  const double c3 = phi.dot(assemble_residual(mesh, metric, spec, r, phi) - Hphi);
  if (c3 != 0.0 && -lambda / c3 > 0.0) return std::sqrt(-lambda / c3);
  return std::sqrt(step_size);
}

/// Continuation away from r* in one direction, starting from the kernel
/// direction. A branch is confirmed when every sample converged to a
/// nontrivial solution, h1 grows monotonically away from r*, and the
/// extrapolated zero of h1^2 lies within one step of r*.
template <int Dim>
BranchTrace trace_branch(const Mesh<Dim>& mesh, const MetricModel& metric, const ProblemSpec& spec,
                         const ConjugateRadius& conj, int direction, const TraceOptions& opts = {}) {
  if (direction != 1 && direction != -1) throw std::invalid_argument("trace_branch: direction must be +-1");
  if (conj.kernel_basis.cols() == 0) throw std::invalid_argument("trace_branch: conjugate radius has no kernel");
  const NewtonSolver<Dim> solver(mesh, metric, spec);
  BranchTrace trace;
  trace.r_star = conj.r_star;
  trace.direction = direction;
  Vector phi = conj.kernel_basis.col(0);
  phi /= solver.h1_norm(phi);

  Vector guess;
  for (int j = 1; j <= opts.steps; ++j) {
    const double r = conj.r_star + direction * j * opts.step_size;
    if (r <= 0.0 || r > 1.0) break;
    BranchSample sample;
    if (j == 1) {
      trace.seed_amplitude = pitchfork_seed_amplitude(mesh, metric, spec, r, phi, opts.step_size);
      sample = solver.solve(r, trace.seed_amplitude * phi, opts.newton);
      if (!sample.converged || sample.h1_norm <= opts.trivial_threshold) {
        sample = solver.solve(r, 2.0 * trace.seed_amplitude * phi, opts.newton);
      }
    } else {
      sample = solver.solve(r, guess, opts.newton);
    }
    const bool nontrivial = sample.converged && sample.h1_norm > opts.trivial_threshold;
    trace.samples.push_back(sample);
    if (!nontrivial) {
      trace.failure = sample.converged ? "branch lost: Newton converged to the trivial solution"
                                       : std::string("branch lost: Newton ") + to_string(sample.status);
      break;
    }
    guess = sample.u;
  }

  if (trace.failure.empty() && trace.samples.size() >= 2) {
    bool monotone = true;
    for (std::size_t i = 1; i < trace.samples.size(); ++i)
      if (!(trace.samples[i].h1_norm > trace.samples[i - 1].h1_norm)) monotone = false;
    trace.intercept = amplitude_intercept(trace.samples, opts.intercept_samples);
    const bool intercept_ok = std::abs(trace.intercept - conj.r_star) <= opts.step_size;
    trace.confirmed = monotone && intercept_ok;
    if (!monotone) trace.failure = "h1 norm not monotone along the branch";
    else if (!intercept_ok) trace.failure = "extrapolated amplitude does not vanish at r*";
  } else if (trace.failure.empty()) {
    trace.failure = "too few samples inside (0, 1]";
  }
  return trace;
}

struct MultiStartResult {
  double r = 0.0;
  std::vector<BranchSample> runs;

  /// A converged nontrivial solution with h1 norm at most `small`.
  bool found_small_nontrivial(double small = 1e-2, double trivial = 1e-8) const {
    return std::any_of(runs.begin(), runs.end(), [&](const BranchSample& s) {
      return s.converged && s.h1_norm > trivial && s.h1_norm <= small;
    });
  }
};

/// Newton from `seeds` random starts with ||u0||_S uniform in (0, max_norm].
template <int Dim>
MultiStartResult multistart_newton(const Mesh<Dim>& mesh, const MetricModel& metric, const ProblemSpec& spec,
                                   double r, int seeds = 20, double max_norm = 1e-2,
                                   std::uint64_t rng_seed = 20130107ULL, const NewtonOptions& newton = {}) {
  const NewtonSolver<Dim> solver(mesh, metric, spec);
  std::mt19937_64 rng(rng_seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  MultiStartResult result;
  result.r = r;
  for (int s = 0; s < seeds; ++s) {
    Vector u0(mesh.num_dofs());
    for (Eigen::Index i = 0; i < u0.size(); ++i) u0(i) = normal(rng);
    const double target = max_norm * (1.0 - uniform(rng));  // in (0, max_norm]
    u0 *= target / solver.h1_norm(u0);
    result.runs.push_back(solver.solve(r, u0, newton));
  }
  return result;
}

}  // namespace smale
