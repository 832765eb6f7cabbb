#include "elfit/linalg.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>

namespace elfit {

namespace {

constexpr double kPivotRel = 1e-12;

// Deterministic uniform in (-1, 1); avoids std::uniform_real_distribution,
// whose output is not pinned by the standard.
double unit_uniform(std::mt19937_64& eng) {
  const double u = (static_cast<double>(eng() >> 11) + 0.5) * 0x1p-53;
  return 2.0 * u - 1.0;
}

}  // namespace

SymMatrix::SymMatrix(int order) : order_(order) {
  if (order < 1) throw std::invalid_argument("SymMatrix order must be >= 1");
  a_.assign(static_cast<std::size_t>(order) * (order + 1) / 2, 0.0);
}

SymMatrix SymMatrix::identity(int order) {
  SymMatrix s(order);
  for (int i = 0; i < order; ++i) s.at(i, i) = 1.0;
  return s;
}

SymMatrix SymMatrix::from_dense(const Eigen::MatrixXd& dense) {
  if (dense.rows() != dense.cols())
    throw std::invalid_argument("SymMatrix::from_dense needs a square matrix");
  SymMatrix s(static_cast<int>(dense.rows()));
  for (int i = 0; i < s.order_; ++i)
    for (int j = 0; j <= i; ++j) s.a_[idx(i, j)] = dense(i, j);
  s.check_finite();
  return s;
}

Eigen::VectorXd SymMatrix::apply(const Eigen::VectorXd& x) const {
  if (x.size() != order_)
    throw std::invalid_argument("SymMatrix::apply size mismatch");
  Eigen::VectorXd y = Eigen::VectorXd::Zero(order_);
  const double* a = a_.data();
  for (int i = 0; i < order_; ++i) {
    double acc = 0.0;
    const double xi = x[i];
    for (int j = 0; j < i; ++j) {
      const double v = *a++;
      acc += v * x[j];
      y[j] += v * xi;
    }
    acc += (*a++) * xi;
    y[i] += acc;
  }
  return y;
}

Eigen::MatrixXd SymMatrix::to_dense() const {
  Eigen::MatrixXd dense(order_, order_);
  for (int i = 0; i < order_; ++i)
    for (int j = 0; j <= i; ++j) dense(i, j) = dense(j, i) = a_[idx(i, j)];
  return dense;
}

double SymMatrix::frobenius_norm() const {
  double diag = 0.0, off = 0.0;
  const double* a = a_.data();
  for (int i = 0; i < order_; ++i) {
    for (int j = 0; j < i; ++j) {
      const double v = *a++;
      off += v * v;
    }
    const double v = *a++;
    diag += v * v;
  }
  return std::sqrt(diag + 2.0 * off);
}

double SymMatrix::max_diagonal() const {
  double m = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < order_; ++i) m = std::max(m, (*this)(i, i));
  return m;
}

double SymMatrix::trace() const {
  double t = 0.0;
  for (int i = 0; i < order_; ++i) t += (*this)(i, i);
  return t;
}

void SymMatrix::check_finite() const {
  for (double v : a_)
    if (!std::isfinite(v))
      throw std::invalid_argument("SymMatrix entry is not finite");
}

CholeskyFactor CholeskyFactor::compute(const SymMatrix& s) {
  s.check_finite();
  const int n = s.order();
  const double threshold = kPivotRel * std::max(s.max_diagonal(), 0.0);
  std::vector<double> l(s.packed().size());
  const auto row = [&l](int i) {
    return l.data() + static_cast<std::size_t>(i) * (i + 1) / 2;
  };
  for (int i = 0; i < n; ++i) {
    double* li = row(i);
    for (int j = 0; j <= i; ++j) {
      const double* lj = row(j);
      double sum = s(i, j);
      for (int k = 0; k < j; ++k) sum -= li[k] * lj[k];
      if (i == j) {
        if (sum <= threshold)
          throw NotPositiveDefinite(
              i, "cholesky pivot " + std::to_string(i) +
                     " collapsed below the relative threshold");
        li[j] = std::sqrt(sum);
      } else {
        li[j] = sum / lj[j];
      }
    }
  }
  return CholeskyFactor(n, std::move(l));
}

Eigen::VectorXd CholeskyFactor::solve(const Eigen::VectorXd& b) const {
  if (b.size() != order_)
    throw std::invalid_argument("CholeskyFactor::solve size mismatch");
  const int n = order_;
  const auto row = [this](int i) {
    return l_.data() + static_cast<std::size_t>(i) * (i + 1) / 2;
  };
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) {
    const double* li = row(i);
    double sum = b[i];
    for (int k = 0; k < i; ++k) sum -= li[k] * x[k];
    x[i] = sum / li[i];
  }
  for (int i = n - 1; i >= 0; --i) {
    double sum = x[i];
    for (int k = i + 1; k < n; ++k) sum -= row(k)[i] * x[k];
    x[i] = sum / row(i)[i];
  }
  return x;
}

Eigen::VectorXd cholesky_solve(const SymMatrix& s, const Eigen::VectorXd& b) {
  return CholeskyFactor::compute(s).solve(b);
}

namespace {

struct RitzState {
  double theta_min = 0.0;
  double theta_max = 0.0;
  double res_min = 0.0;
  double res_max = 0.0;
};

RitzState ritz_extremes(const std::vector<double>& alpha,
                        const std::vector<double>& beta, double beta_open) {
  const int k = static_cast<int>(alpha.size());
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(k, k);
  for (int i = 0; i < k; ++i) t(i, i) = alpha[i];
  for (int i = 0; i + 1 < k; ++i) t(i, i + 1) = t(i + 1, i) = beta[i];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
  RitzState r;
  r.theta_min = es.eigenvalues()(0);
  r.theta_max = es.eigenvalues()(k - 1);
  r.res_min = beta_open * std::abs(es.eigenvectors()(k - 1, 0));
  r.res_max = beta_open * std::abs(es.eigenvectors()(k - 1, k - 1));
  return r;
}

}  // namespace

EigPair extreme_eigenvalues(const SymMatrix& s, double tol,
                            int max_iterations) {
  if (tol <= 0.0) throw std::invalid_argument("tol must be positive");
  s.check_finite();
  const int n = s.order();
  const double fnorm = s.frobenius_norm();
  const double res_budget = tol * fnorm;

  if (n <= 64) {
    const Eigen::MatrixXd dense = s.to_dense();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense);
    EigPair out;
    out.lambda_min = es.eigenvalues()(0);
    out.lambda_max = es.eigenvalues()(n - 1);
    out.iterations = 0;
    const Eigen::VectorXd vmin = es.eigenvectors().col(0);
    const Eigen::VectorXd vmax = es.eigenvectors().col(n - 1);
    const double rmin = (dense * vmin - out.lambda_min * vmin).norm();
    const double rmax = (dense * vmax - out.lambda_max * vmax).norm();
    out.converged = rmin <= res_budget && rmax <= res_budget;
    if (!out.converged)
      throw NotConverged(0, "dense eigensolve missed the residual tolerance");
    return out;
  }

  const int cap = max_iterations > 0 ? max_iterations : 10 * n;
  const double breakdown_tol = 1e-13 * std::max(fnorm, 1e-300);

  std::mt19937_64 eng(0x9e3779b97f4a7c15ULL);
  std::vector<Eigen::VectorXd> basis;
  basis.reserve(64);

  const auto fresh_vector = [&]() {
    for (int attempt = 0; attempt < 64; ++attempt) {
      Eigen::VectorXd v(n);
      for (int i = 0; i < n; ++i) v[i] = unit_uniform(eng);
      for (int pass = 0; pass < 2; ++pass)
        for (const auto& q : basis) v -= q.dot(v) * q;
      const double norm = v.norm();
      if (norm > 1e-8) return Eigen::VectorXd(v / norm);
    }
    throw NotConverged(0, "could not draw a restart vector (basis full)");
  };

  basis.push_back(fresh_vector());
  std::vector<double> alpha, beta;
  int matvecs = 0;

  while (true) {
    Eigen::VectorXd w = s.apply(basis.back());
    ++matvecs;
    alpha.push_back(basis.back().dot(w));
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& q : basis) w -= q.dot(w) * q;
    const double b = w.norm();

    const RitzState r = ritz_extremes(alpha, beta, b);
    if (r.res_min <= res_budget && r.res_max <= res_budget)
      return {r.theta_min, r.theta_max, matvecs, true};

    const int k = static_cast<int>(alpha.size());
    if (k == n || matvecs >= cap)
      throw NotConverged(matvecs, "lanczos iteration cap reached");

    if (b <= breakdown_tol) {
      beta.push_back(0.0);
      basis.push_back(fresh_vector());
    } else {
      beta.push_back(b);
      basis.push_back(w / b);
    }
  }
}

double spectral_norm(const SymMatrix& s, double tol) {
  const EigPair p = extreme_eigenvalues(s, tol);
  return std::max(std::abs(p.lambda_min), std::abs(p.lambda_max));
}

}  // namespace elfit
