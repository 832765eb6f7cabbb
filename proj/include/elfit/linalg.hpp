#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <vector>

#include "elfit/errors.hpp"

namespace elfit {

/// Dense symmetric matrix in packed lower-triangular storage
/// (row-major, order*(order+1)/2 doubles). One stored copy per
/// logical (i,j)/(j,i) pair; all entries finite.
class SymMatrix {
 public:
  explicit SymMatrix(int order);

  static SymMatrix identity(int order);
  /// Packs the lower triangle of a dense symmetric matrix.
  static SymMatrix from_dense(const Eigen::MatrixXd& dense);

  int order() const noexcept { return order_; }

  double operator()(int i, int j) const noexcept {
    return i >= j ? a_[idx(i, j)] : a_[idx(j, i)];
  }
  double& at(int i, int j) noexcept {
    return i >= j ? a_[idx(i, j)] : a_[idx(j, i)];
  }

  /// y = S*x
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;

  Eigen::MatrixXd to_dense() const;

  double frobenius_norm() const;
  double max_diagonal() const;
  double trace() const;

  std::vector<double>& packed() noexcept { return a_; }
  const std::vector<double>& packed() const noexcept { return a_; }

  /// Throws if any entry is non-finite.
  void check_finite() const;

 private:
  static std::size_t idx(int i, int j) noexcept {
    return static_cast<std::size_t>(i) * (i + 1) / 2 + j;
  }

  int order_;
  std::vector<double> a_;
};

/// Packed Cholesky factor S = L L^T, reusable across right-hand sides.
class CholeskyFactor {
 public:
  /// Factorizes a symmetric positive definite matrix. Throws
  /// NotPositiveDefinite(i) when pivot i drops to or below
  /// 1e-12 * max diagonal of S.
  static CholeskyFactor compute(const SymMatrix& s);

  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
  int order() const noexcept { return order_; }

 private:
  CholeskyFactor(int order, std::vector<double> l)
      : order_(order), l_(std::move(l)) {}

  int order_;
  std::vector<double> l_;  // packed lower-triangular factor
};

/// One-shot solve S x = b. Factor explicitly via CholeskyFactor::compute
/// when solving several right-hand sides against the same S.
Eigen::VectorXd cholesky_solve(const SymMatrix& s, const Eigen::VectorXd& b);

struct EigPair {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  int iterations = 0;  // matrix-vector products consumed
  bool converged = false;
};

/// Extremal eigenvalues of a symmetric matrix to residual tolerance
/// ||S v - lambda v|| <= tol * ||S||_F. Dense solve at order <= 64,
/// Lanczos with full reorthogonalization above. max_iterations == 0
/// selects the default cap of 10 * order. Throws NotConverged when the
/// cap is exhausted first.
EigPair extreme_eigenvalues(const SymMatrix& s, double tol,
                            int max_iterations = 0);

/// max(|lambda_min|, |lambda_max|). Propagates NotConverged.
double spectral_norm(const SymMatrix& s, double tol);

}  // namespace elfit
