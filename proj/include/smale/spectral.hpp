#pragma once

// Inertia and generalized symmetric eigenpairs of the pencil (H, S).
//
// Inertia is read off the pivots of a symmetric factorization (Sylvester's
// law): Bunch-Kaufman via LAPACK for dense matrices, fill-reducing LDL^T for
// sparse ones. Eigenpairs come either from a dense Cholesky reduction or from
// a shift-and-invert block Krylov method with Rayleigh-Ritz extraction.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "smale/errors.hpp"

extern "C" void dsytrf_(const char* uplo, const int* n, double* a, const int* lda, int* ipiv, double* work,
                        const int* lwork, int* info);

namespace smale {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Vector = Eigen::VectorXd;

inline constexpr double kDefaultPivotTolerance = 1e-9;

struct Inertia {
  int n_neg = 0;
  int n_zero = 0;
  int n_pos = 0;
  double pivot_tolerance = kDefaultPivotTolerance;

  int dim() const { return n_neg + n_zero + n_pos; }
  friend bool operator==(const Inertia& a, const Inertia& b) {
    return a.n_neg == b.n_neg && a.n_zero == b.n_zero && a.n_pos == b.n_pos;
  }
};

struct EigenPairs {
  Vector values;          // ascending
  Eigen::MatrixXd vectors;  // S-orthonormal columns
};

/// Maximum absolute row sum.
inline double matrix_norm(const SparseMatrix& A) {
  Vector rows = Vector::Zero(A.rows());
  for (int j = 0; j < A.outerSize(); ++j)
    for (SparseMatrix::InnerIterator it(A, j); it; ++it) rows(it.row()) += std::abs(it.value());
  return rows.size() ? rows.maxCoeff() : 0.0;
}

inline double matrix_norm(const Eigen::MatrixXd& A) {
  return A.size() ? A.cwiseAbs().rowwise().sum().maxCoeff() : 0.0;
}

namespace detail {

inline void classify(double pivot, double threshold, Inertia& in) {
  if (!std::isfinite(pivot)) throw FactorizationError("non-finite pivot in symmetric factorization");
  if (std::abs(pivot) <= threshold) ++in.n_zero;
  else if (pivot < 0.0) ++in.n_neg;
  else ++in.n_pos;
}

}  // namespace detail

/// Inertia of a dense symmetric matrix from a Bunch-Kaufman factorization.
/// Pivots (or 2x2 block eigenvalues) with |p| <= tol * ||H|| count as zero.
inline Inertia inertia(const Eigen::MatrixXd& H, double pivot_tolerance = kDefaultPivotTolerance) {
  if (H.rows() != H.cols()) throw FactorizationError("inertia: matrix is not square");
  Inertia result;
  result.pivot_tolerance = pivot_tolerance;
  const int n = static_cast<int>(H.rows());
  if (n == 0) return result;
  if (!H.allFinite()) throw FactorizationError("inertia: matrix has non-finite entries");

  Eigen::MatrixXd a = 0.5 * (H + H.transpose());
  std::vector<int> ipiv(static_cast<std::size_t>(n));
  int info = 0;
  int lwork = -1;
  double query = 0.0;
  const char uplo = 'L';
  dsytrf_(&uplo, &n, a.data(), &n, ipiv.data(), &query, &lwork, &info);
  lwork = std::max(1, static_cast<int>(query));
  std::vector<double> work(static_cast<std::size_t>(lwork));
  dsytrf_(&uplo, &n, a.data(), &n, ipiv.data(), work.data(), &lwork, &info);
  if (info < 0) throw FactorizationError("dsytrf: illegal argument " + std::to_string(-info));
  // info > 0 only flags an exactly singular D; the pivots are still valid.

  const double threshold = pivot_tolerance * matrix_norm(H);
  for (int k = 0; k < n;) {
    if (ipiv[static_cast<std::size_t>(k)] > 0) {
      detail::classify(a(k, k), threshold, result);
      k += 1;
    } else {
      const double p = a(k, k), q = a(k + 1, k), s = a(k + 1, k + 1);
      const double mean = 0.5 * (p + s);
      const double radius = std::hypot(0.5 * (p - s), q);
      detail::classify(mean - radius, threshold, result);
      detail::classify(mean + radius, threshold, result);
      k += 2;
    }
  }
  return result;
}

/// Inertia of a sparse symmetric matrix from a fill-reducing LDL^T
/// factorization. A zero pivot during elimination is a breakdown: small
/// systems fall back to the dense Bunch-Kaufman path, large ones throw.
inline Inertia inertia(const SparseMatrix& H, double pivot_tolerance = kDefaultPivotTolerance) {
  if (H.rows() != H.cols()) throw FactorizationError("inertia: matrix is not square");
  Inertia result;
  result.pivot_tolerance = pivot_tolerance;
  if (H.rows() == 0) return result;
  constexpr int kDenseFallback = 4000;

  Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt(H);
  const bool ok = ldlt.info() == Eigen::Success && ldlt.vectorD().allFinite();
  if (!ok) {
    if (H.rows() <= kDenseFallback) return inertia(Eigen::MatrixXd(H), pivot_tolerance);
    throw FactorizationError("sparse LDL^T broke down on a matrix of dimension " + std::to_string(H.rows()));
  }
  const double threshold = pivot_tolerance * matrix_norm(H);
  const Vector& D = ldlt.vectorD();
  for (Eigen::Index i = 0; i < D.size(); ++i) detail::classify(D(i), threshold, result);
  return result;
}

namespace detail {

/// Flip signs so the entry of largest magnitude in each column is positive.
inline void fix_signs(Eigen::MatrixXd& V) {
  for (Eigen::Index j = 0; j < V.cols(); ++j) {
    Eigen::Index imax = 0;
    V.col(j).cwiseAbs().maxCoeff(&imax);
    if (V(imax, j) < 0.0) V.col(j) *= -1.0;
  }
}

inline void sort_pairs(EigenPairs& p) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(p.values.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return p.values(a) < p.values(b); });
  EigenPairs sorted{Vector(p.values.size()), Eigen::MatrixXd(p.vectors.rows(), p.vectors.cols())};
  for (std::size_t i = 0; i < order.size(); ++i) {
    sorted.values(static_cast<Eigen::Index>(i)) = p.values(order[i]);
    sorted.vectors.col(static_cast<Eigen::Index>(i)) = p.vectors.col(order[i]);
  }
  p = std::move(sorted);
}

}  // namespace detail

/// All generalized eigenpairs of a dense pencil by Cholesky reduction of S.
inline EigenPairs dense_eigenpairs(const Eigen::MatrixXd& H, const Eigen::MatrixXd& S) {
  Eigen::LLT<Eigen::MatrixXd> llt(S);
  if (llt.info() != Eigen::Success) throw FactorizationError("Gram matrix S is not positive definite");
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(0.5 * (H + H.transpose()), S);
  if (solver.info() != Eigen::Success) throw FactorizationError("dense generalized eigensolver failed");
  EigenPairs p{solver.eigenvalues(), solver.eigenvectors()};
  detail::fix_signs(p.vectors);
  return p;
}

inline EigenPairs smallest_eigenpairs(const Eigen::MatrixXd& H, const Eigen::MatrixXd& S, int k) {
  if (k < 1 || k > H.rows()) throw std::invalid_argument("smallest_eigenpairs: k out of range");
  auto all = dense_eigenpairs(H, S);
  return {all.values.head(k), all.vectors.leftCols(k)};
}

struct KrylovOptions {
  double tolerance = 1e-12;   // normwise backward error target per pair
  double acceptable = 1e-10;  // accepted when the basis cap is reached
  int max_basis = 400;
  std::uint64_t seed = 0x5eed5eedULL;
};

/// Normwise backward error ||H x - lambda S x|| / ((||H|| + |lambda| ||S||) ||x||).
inline double backward_error(const SparseMatrix& H, const SparseMatrix& S, double lambda, const Vector& x) {
  const double denom = (matrix_norm(H) + std::abs(lambda) * matrix_norm(S)) * x.norm();
  return denom > 0.0 ? (H * x - lambda * (S * x)).norm() / denom : 0.0;
}

/// The k generalized eigenpairs of (H, S) closest to sigma, by block Krylov
/// iteration with (H - sigma S)^{-1} S and Rayleigh-Ritz on H. The block
/// width exceeds k, so eigenvalues of multiplicity up to k are captured.
inline EigenPairs nearest_eigenpairs(const SparseMatrix& H, const SparseMatrix& S, int k, double sigma,
                                     const KrylovOptions& opts = {}) {
  const auto n = H.rows();
  if (k < 1 || k > n) throw std::invalid_argument("nearest_eigenpairs: k out of range");
  {
    Eigen::SimplicialLLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> llt(S);
    if (llt.info() != Eigen::Success) throw FactorizationError("Gram matrix S is not positive definite");
  }
  if (n <= 64) {
    auto all = dense_eigenpairs(Eigen::MatrixXd(H), Eigen::MatrixXd(S));
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) {
      return std::abs(all.values(a) - sigma) < std::abs(all.values(b) - sigma);
    });
    EigenPairs p{Vector(k), Eigen::MatrixXd(n, k)};
    for (int i = 0; i < k; ++i) {
      p.values(i) = all.values(idx[static_cast<std::size_t>(i)]);
      p.vectors.col(i) = all.vectors.col(idx[static_cast<std::size_t>(i)]);
    }
    detail::sort_pairs(p);
    return p;
  }

  SparseMatrix shifted = H - sigma * S;
  Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> solver(shifted);
  if (solver.info() != Eigen::Success || !solver.vectorD().allFinite()) {
    throw FactorizationError("shift-and-invert factorization failed at sigma = " + std::to_string(sigma));
  }

  const Eigen::Index block = std::min<Eigen::Index>(n, k + 2);
  const Eigen::Index cap = std::min<Eigen::Index>(n, std::max<Eigen::Index>(opts.max_basis, 4 * block));
  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> normal;
  auto random_block = [&](Eigen::Index cols) {
    Eigen::MatrixXd X(n, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
      for (Eigen::Index i = 0; i < n; ++i) X(i, j) = normal(rng);
    return X;
  };

  Eigen::MatrixXd V(n, 0), SV(n, 0), HV(n, 0);
  Eigen::MatrixXd W = random_block(block);
  EigenPairs best;
  double best_error = std::numeric_limits<double>::infinity();
  const double normH = matrix_norm(H), normS = matrix_norm(S);

  for (int iteration = 0; iteration < 10000; ++iteration) {
    // S-orthonormalize the new block against the basis and itself.
    std::vector<Vector> accepted;
    for (Eigen::Index j = 0; j < W.cols(); ++j) {
      Vector w = W.col(j);
      const double original = std::sqrt(std::max(0.0, w.dot(S * w)));
      if (original == 0.0) continue;
      for (int pass = 0; pass < 2; ++pass) {
        if (V.cols()) w -= V * (SV.transpose() * w);
        for (const auto& a : accepted) w -= a * a.dot(S * w);
      }
      const double norm = std::sqrt(std::max(0.0, w.dot(S * w)));
      if (norm > 1e-10 * original) accepted.push_back(w / norm);
    }
    if (accepted.empty()) {
      if (V.cols() >= n) break;
      W = random_block(block);
      continue;
    }
    const Eigen::Index old = V.cols();
    const auto added = static_cast<Eigen::Index>(accepted.size());
    V.conservativeResize(n, old + added);
    SV.conservativeResize(n, old + added);
    HV.conservativeResize(n, old + added);
    for (Eigen::Index j = 0; j < added; ++j) {
      V.col(old + j) = accepted[static_cast<std::size_t>(j)];
      SV.col(old + j) = S * V.col(old + j);
      HV.col(old + j) = H * V.col(old + j);
    }

    // Rayleigh-Ritz; V is S-orthonormal so the projected pencil is (V^T H V, I).
    Eigen::MatrixXd Hp = V.transpose() * HV;
    Hp = 0.5 * (Hp + Hp.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ritz(Hp);
    const Vector theta = ritz.eigenvalues();
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(theta.size()));
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](auto a, auto b) { return std::abs(theta(a) - sigma) < std::abs(theta(b) - sigma); });
    const Eigen::Index have = std::min<Eigen::Index>(k, theta.size());
    EigenPairs candidate{Vector(have), Eigen::MatrixXd(n, have)};
    double worst = 0.0;
    for (Eigen::Index i = 0; i < have; ++i) {
      const Eigen::Index c = idx[static_cast<std::size_t>(i)];
      const Vector y = ritz.eigenvectors().col(c);
      const Vector x = V * y;
      const Vector res = HV * y - theta(c) * (SV * y);
      const double denom = (normH + std::abs(theta(c)) * normS) * x.norm();
      worst = std::max(worst, denom > 0.0 ? res.norm() / denom : 0.0);
      candidate.values(i) = theta(c);
      candidate.vectors.col(i) = x;
    }
    if (have == k && worst < best_error) {
      best = candidate;
      best_error = worst;
    }
    if (have == k && worst <= opts.tolerance) break;
    if (V.cols() >= n) break;

    if (V.cols() + block > cap) {
      // Thick restart on the wanted Ritz vectors plus the next few.
      const Eigen::Index keep = std::min<Eigen::Index>(theta.size(), k + block);
      Eigen::MatrixXd Y(theta.size(), keep);
      for (Eigen::Index i = 0; i < keep; ++i) Y.col(i) = ritz.eigenvectors().col(idx[static_cast<std::size_t>(i)]);
      W = solver.solve(SV * Y.leftCols(std::min<Eigen::Index>(block, keep)));
      V = V * Y;
      SV = SV * Y;
      HV = HV * Y;
      continue;
    }
    W = solver.solve(SV.rightCols(added));
  }

  if (!(best_error <= opts.acceptable)) {
    throw FactorizationError("block Krylov eigensolver did not converge (backward error " +
                             std::to_string(best_error) + ")");
  }
  detail::fix_signs(best.vectors);
  detail::sort_pairs(best);
  return best;
}

/// The k algebraically smallest eigenpairs of (H, S). The shift is pushed
/// below the spectrum, certified by the inertia of H - sigma S.
inline EigenPairs smallest_eigenpairs(const SparseMatrix& H, const SparseMatrix& S, int k,
                                      const KrylovOptions& opts = {}) {
  if (k < 1 || k > H.rows()) throw std::invalid_argument("smallest_eigenpairs: k out of range");
  double sigma = -1.0;
  for (int attempt = 0; attempt < 64; ++attempt) {
    const SparseMatrix shifted = H - sigma * S;
    bool below = false;
    try {
      const auto in = inertia(shifted, 0.0);
      below = in.n_neg == 0 && in.n_zero == 0;
    } catch (const FactorizationError&) {
      below = false;
    }
    if (below) return nearest_eigenpairs(H, S, k, sigma, opts);
    sigma = 4.0 * sigma;
  }
  throw FactorizationError("could not place a shift below the spectrum");
}

}  // namespace smale
