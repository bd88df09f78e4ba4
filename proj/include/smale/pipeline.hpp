#pragma once

// Subcommand pipeline behind the command line tool. Stages share state so
// that `all` equals running scan, conjugate, crossing, verify-index and
// bifurcate in that order.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "smale/branch.hpp"
#include "smale/config.hpp"
#include "smale/conjugate.hpp"
#include "smale/mesh.hpp"

namespace smale {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitVerification = 2, kExitAssumption = 3 };

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"scan", "conjugate", "crossing", "verify-index", "bifurcate", "all"};
  return names;
}

/// Round-trip formatting of doubles (17 significant digits).
inline std::string format_real(double x) {
  char buffer[40];
  std::snprintf(buffer, sizeof buffer, "%.17g", x);
  return buffer;
}

/// File name of a branch trace, e.g. branch_0.217391.csv.
inline std::string branch_file_name(double r_star) {
  char buffer[48];
  std::snprintf(buffer, sizeof buffer, "branch_%.6f.csv", r_star);
  return buffer;
}

template <int Dim>
class Pipeline {
 public:
  Pipeline(RunConfig config, int threads, std::ostream& log)
      : config_(std::move(config)),
        threads_(threads),
        log_(log),
        mesh_(build_mesh<Dim>(config_.mesh_resolution)),
        metric_(config_.metric()),
        spec_(config_.problem()),
        out_(config_.output_dir) {
    std::filesystem::create_directories(out_);
  }

  /// Runs one subcommand; returns an exit code. Exceptions propagate.
  int run(const std::string& subcommand) {
    if (subcommand == "scan") return stage_scan();
    if (subcommand == "conjugate") return worst({stage_scan(), stage_conjugate()});
    if (subcommand == "crossing") return worst({stage_scan(), stage_conjugate(), stage_crossing()});
    if (subcommand == "verify-index") return worst({stage_scan(), stage_conjugate(), stage_index()});
    if (subcommand == "bifurcate") return worst({stage_scan(), stage_conjugate(), stage_bifurcate()});
    if (subcommand == "all")
      return worst({stage_scan(), stage_conjugate(), stage_crossing(), stage_index(), stage_bifurcate()});
    throw ConfigError("unknown subcommand '" + subcommand + "'");
  }

  const std::vector<ScanRow>& scan_rows() const { return rows_; }
  const std::vector<ConjugateRadius>& conjugates() const { return conjugates_; }

 private:
  static int worst(std::initializer_list<int> codes) {
    int w = kExitOk;
    for (int c : codes) w = std::max(w, c);
    return w;
  }

  std::ofstream open(const std::string& name) const {
    std::ofstream f(out_ / name);
    if (!f) throw std::runtime_error("cannot write " + (out_ / name).string());
    return f;
  }

  int stage_scan() {
    if (scanned_) return kExitOk;
    const auto grid = uniform_grid(config_.r_min, 1.0, config_.scan_points);
    rows_ = scan(mesh_, metric_, spec_, grid, ScanOptions{config_.scan_k, threads_, kDefaultPivotTolerance});
    scanned_ = true;

    auto f = open("scan.csv");
    f << 'r';
    const auto k = rows_.empty() ? 0 : rows_.front().eigenvalues.size();
    for (Eigen::Index i = 1; i <= k; ++i) f << ",lambda_" << i;
    f << ",n_neg\n";
    for (const auto& row : rows_) {
      f << format_real(row.r);
      for (Eigen::Index i = 0; i < row.eigenvalues.size(); ++i) f << ',' << format_real(row.eigenvalues(i));
      f << ',' << row.n_neg << '\n';
    }

    int code = kExitOk;
    if (!monotone_index(rows_)) {
      log_ << "verification failed: n_neg decreases along the scan\n";
      code = kExitVerification;
    }
    if (!rows_.empty() && rows_.front().n_neg != 0) {
      log_ << "verification failed: n_neg = " << rows_.front().n_neg << " at r_min (h_0 is positive)\n";
      code = kExitVerification;
    }
    log_ << "scan: " << rows_.size() << " radii, n_neg(1) = " << (rows_.empty() ? 0 : rows_.back().n_neg) << '\n';
    return code;
  }

  int stage_conjugate() {
    if (located_) return kExitOk;
    LocateOptions opts;
    opts.tolerance = Dim == 1 ? 1e-8 : 1e-6;
    conjugates_ = locate_all(mesh_, metric_, spec_, rows_, opts, threads_);
    located_ = true;
    auto f = open("conjugate.csv");
    f << "r_star,multiplicity,bracket_width\n";
    for (const auto& c : conjugates_)
      f << format_real(c.r_star) << ',' << c.multiplicity << ',' << format_real(c.bracket_width()) << '\n';
    log_ << "conjugate: " << conjugates_.size() << " radii located\n";
    return kExitOk;
  }

  int stage_crossing() {
    auto f = open("crossing.csv");
    f << "r_star,multiplicity,i,j,gamma_fd,gamma_bd,signature,agreement\n";
    const double tolerance = Dim == 1 ? 0.01 : 0.10;
    int code = kExitOk;
    for (const auto& c : conjugates_) {
      const auto report = crossing_report(mesh_, metric_, spec_, c);
      for (int i = 0; i < c.multiplicity; ++i)
        for (int j = 0; j < c.multiplicity; ++j)
          f << format_real(c.r_star) << ',' << c.multiplicity << ',' << i + 1 << ',' << j + 1 << ','
            << format_real(report.gamma_fd(i, j)) << ',' << format_real(report.gamma_bd(i, j)) << ','
            << report.signature << ',' << format_real(report.agreement) << '\n';
      if (!report.passed(tolerance)) {
        log_ << "verification failed: crossing form at r* = " << format_real(c.r_star)
             << (report.negative_definite ? "" : " is not negative definite")
             << " (signature " << report.signature << ", agreement " << report.agreement << ", step audit "
             << report.richardson_discrepancy << ")\n";
        code = kExitVerification;
      }
    }
    log_ << "crossing: " << conjugates_.size() << " crossing forms evaluated\n";
    return code;
  }

  int stage_index() {
    IndexOptions opts;
    opts.r_min = config_.r_min;
    const auto report = verify_index(mesh_, metric_, spec_, conjugates_, opts);
    auto f = open("index_report.txt");
    const bool pass = report.identity_holds && report.morse_index_small_r == 0;
    f << "mu=" << report.morse_index_at_1 << " sum_m=" << report.sum_m << ' ' << (pass ? "PASS" : "FAIL") << '\n';
    f << "morse_index_small_r=" << report.morse_index_small_r << '\n';
    f << "corollary_bound=" << report.corollary_bound << '\n';
    f << "lambda_nearest_zero_at_1=" << format_real(report.lambda_nearest_zero_at_1) << '\n';
    for (const auto& [r, m] : report.conjugate_list) f << "conjugate r=" << format_real(r) << " m=" << m << '\n';
    log_ << "verify-index: mu = " << report.morse_index_at_1 << ", sum m = " << report.sum_m << ", "
         << (pass ? "PASS" : "FAIL") << '\n';
    return pass ? kExitOk : kExitVerification;
  }

  int stage_bifurcate() {
    TraceOptions opts;
    opts.steps = config_.branch_steps;
    opts.step_size = config_.branch_step_size;
    const bool linear = spec_.nonlinearity == Nonlinearity::Linear;

    std::vector<std::array<BranchTrace, 2>> traces(conjugates_.size());
    parallel_for(conjugates_.size(), threads_, [&](std::size_t i) {
      traces[i] = {trace_branch(mesh_, metric_, spec_, conjugates_[i], -1, opts),
                   trace_branch(mesh_, metric_, spec_, conjugates_[i], +1, opts)};
    });

    auto report = open("bifurcation_report.txt");
    int code = kExitOk;
    const SparseMatrix S = assemble_gram(mesh_);
    for (std::size_t i = 0; i < conjugates_.size(); ++i) {
      const auto& c = conjugates_[i];
      auto f = open(branch_file_name(c.r_star));
      f << "r,h1_norm,residual_norm,newton_iters,converged\n";
      const auto& down = traces[i][0].samples;
      for (auto it = down.rbegin(); it != down.rend(); ++it)
        f << format_real(it->r) << ',' << format_real(it->h1_norm) << ',' << format_real(it->residual_norm) << ','
          << it->newton_iters << ',' << (it->converged ? 1 : 0) << '\n';
      for (const auto& s : traces[i][1].samples)
        f << format_real(s.r) << ',' << format_real(s.h1_norm) << ',' << format_real(s.residual_norm) << ','
          << s.newton_iters << ',' << (s.converged ? 1 : 0) << '\n';

      report << "r_star=" << format_real(c.r_star) << " m=" << c.multiplicity;
      if (linear) {
        // Linear problems bifurcate vertically: the kernel itself solves q_r* = 0.
        const SparseMatrix H = assemble_h_matrix(mesh_, metric_, spec_, c.r_star);
        double worst_residual = 0.0;
        for (Eigen::Index j = 0; j < c.kernel_basis.cols(); ++j)
          worst_residual = std::max(worst_residual, kernel_residual(H, S, c.kernel_basis.col(j)));
        const bool ok = worst_residual <= 1e-6;
        report << " vertical_branch kernel_residual=" << format_real(worst_residual) << (ok ? " CONFIRMED" : " FAILED")
               << '\n';
        if (!ok) code = kExitVerification;
        continue;
      }
      bool any = false;
      for (const auto& t : traces[i]) {
        report << (t.direction > 0 ? " above:" : " below:");
        if (t.confirmed) {
          any = true;
          report << "confirmed intercept=" << format_real(t.intercept)
                 << " exponent=" << format_real(amplitude_exponent(t.samples, c.r_star));
        } else {
          report << "none (" << t.failure << ')';
        }
      }
      report << (any ? " CONFIRMED" : " FAILED") << '\n';
      if (!any) code = kExitVerification;
    }

    // Necessity side: small nontrivial solutions must not exist between crossings.
    std::vector<double> probes;
    double previous = config_.r_min;
    for (const auto& c : conjugates_) {
      probes.push_back(0.5 * (previous + c.r_star));
      previous = c.r_star;
    }
    probes.push_back(0.5 * (previous + 1.0));
    for (double r : probes) {
      const auto result = multistart_newton(mesh_, metric_, spec_, r);
      const bool clean = !result.found_small_nontrivial();
      report << "multistart r=" << format_real(r) << " seeds=" << result.runs.size()
             << (clean ? " no_small_nontrivial PASS" : " small_nontrivial_found FAIL") << '\n';
      if (!clean) code = kExitVerification;
    }
    log_ << "bifurcate: " << conjugates_.size() << " conjugate radii traced, " << (code == kExitOk ? "PASS" : "FAIL")
         << '\n';
    return code;
  }

  RunConfig config_;
  int threads_;
  std::ostream& log_;
  Mesh<Dim> mesh_;
  MetricModel metric_;
  ProblemSpec spec_;
  std::filesystem::path out_;

  bool scanned_ = false;
  bool located_ = false;
  std::vector<ScanRow> rows_;
  std::vector<ConjugateRadius> conjugates_;
};

/// Runs a subcommand for a parsed configuration and maps failures to exit codes.
inline int run(const std::string& subcommand, const RunConfig& config, int threads, std::ostream& log = std::cerr) {
  try {
    if (config.mesh_dim == 1) return Pipeline<1>(config, threads, log).run(subcommand);
    return Pipeline<2>(config, threads, log).run(subcommand);
  } catch (const AssumptionViolation& e) {
    log << "assumption violated: " << e.what() << '\n';
    return kExitAssumption;
  } catch (const ConfigError& e) {
    log << "configuration error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const VerificationError& e) {
    log << "verification failed: " << e.what() << '\n';
    return kExitVerification;
  } catch (const FactorizationError& e) {
    log << "numerical failure: " << e.what() << '\n';
    return kExitVerification;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kExitVerification;
  }
}

/// Loads the config file, then runs; an unreadable or invalid config is exit 1.
inline int run(const std::string& subcommand, const std::string& config_path, int threads,
               const std::optional<std::string>& out_dir = std::nullopt, std::ostream& log = std::cerr) {
  RunConfig config;
  try {
    config = load_config(config_path);
  } catch (const ConfigError& e) {
    log << "configuration error: " << e.what() << '\n';
    return kExitUsage;
  }
  if (out_dir) config.output_dir = *out_dir;
  return run(subcommand, config, threads, log);
}

}  // namespace smale
