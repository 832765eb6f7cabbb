#include "elfit/ellipsoid.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace elfit {

namespace {

constexpr int kMaxGramOrder = 20000;
constexpr double kEigTol = 1e-10;
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

}  // namespace

const char* fit_status_name(FitStatus s) {
  switch (s) {
    case FitStatus::Success:
      return "Success";
    case FitStatus::GramDegenerate:
      return "GramDegenerate";
    case FitStatus::NotPSD:
      return "NotPSD";
    case FitStatus::EigFailed:
      return "EigFailed";
  }
  return "Unknown";
}

FitStatus parse_fit_status(const std::string& name) {
  if (name == "Success") return FitStatus::Success;
  if (name == "GramDegenerate") return FitStatus::GramDegenerate;
  if (name == "NotPSD") return FitStatus::NotPSD;
  if (name == "EigFailed") return FitStatus::EigFailed;
  throw std::invalid_argument("unknown fit status: " + name);
}

SymMatrix build_gram(const PointCloud& cloud) {
  const int n = cloud.n;
  if (n > kMaxGramOrder)
    throw InstanceTooLarge("gram matrix order " + std::to_string(n) +
                           " exceeds the 2e4 memory guard");
  SymMatrix m(n);
  constexpr int kBlock = 256;
  Eigen::MatrixXd block;
  for (int i0 = 0; i0 < n; i0 += kBlock) {
    const int rows = std::min(kBlock, n - i0);
    block.noalias() = cloud.directions.middleRows(i0, rows) *
                      cloud.directions.leftCols(cloud.d).transpose();
    for (int r = 0; r < rows; ++r) {
      const int i = i0 + r;
      for (int j = 0; j <= i; ++j) {
        const double v = block(r, j);
        m.at(i, j) = v * v;
      }
    }
  }
  return m;
}

DeviationVector build_deviations(const PointCloud& cloud) {
  DeviationVector eps;
  eps.values = cloud.norms.array().square().inverse() - 1.0;
  return eps;
}

Eigen::VectorXd solve_dual(const SymMatrix& m, const DeviationVector& eps) {
  if (m.order() != eps.values.size())
    throw ShapeMismatch("gram order disagrees with deviation length");
  try {
    return cholesky_solve(m, eps.values);
  } catch (const NotPositiveDefinite& e) {
    throw GramDegenerate(e.pivot_index(),
                         "gram matrix degenerated during factorization");
  }
}

SymMatrix perturbation(const PointCloud& cloud, const Eigen::VectorXd& delta) {
  if (delta.size() != cloud.n)
    throw ShapeMismatch("delta length disagrees with point count");
  Eigen::MatrixXd p = cloud.directions.transpose() *
                      (delta.asDiagonal() * cloud.directions);
  return SymMatrix::from_dense(p);
}

namespace {

double direct_max_residual(const PointCloud& cloud,
                           const Eigen::MatrixXd& q_dense) {
  double worst = 0.0;
  for (int i = 0; i < cloud.n; ++i) {
    const auto g = cloud.points.row(i);
    const double form = g.dot(q_dense * g.transpose());
    worst = std::max(worst, std::abs(form - 1.0));
  }
  return worst;
}

}  // namespace

FitResult fit_ellipsoid(const PointCloud& cloud) {
  FitResult out;
  out.max_residual = kNan;
  out.q_min_eig = kNan;
  out.perturbation_norm = kNan;
  out.m_min_eig = kNan;

  const SymMatrix m = build_gram(cloud);
  const DeviationVector eps = build_deviations(cloud);

  try {
    out.m_min_eig = extreme_eigenvalues(m, kEigTol).lambda_min;
  } catch (const NotConverged&) {
    out.status = FitStatus::EigFailed;
    return out;
  }

  try {
    out.delta = solve_dual(m, eps);
  } catch (const GramDegenerate&) {
    out.status = FitStatus::GramDegenerate;
    return out;
  }

  const SymMatrix p = perturbation(cloud, out.delta);
  EigPair p_eig;
  try {
    p_eig = extreme_eigenvalues(p, kEigTol);
  } catch (const NotConverged&) {
    out.status = FitStatus::EigFailed;
    return out;
  }
  out.q_min_eig = 1.0 + p_eig.lambda_min;
  out.perturbation_norm =
      std::max(std::abs(p_eig.lambda_min), std::abs(p_eig.lambda_max));

  Eigen::MatrixXd q_dense = p.to_dense();
  q_dense.diagonal().array() += 1.0;
  out.max_residual = direct_max_residual(cloud, q_dense);

  if (out.q_min_eig < -kPsdPass)
    out.status = FitStatus::NotPSD;
  else if (out.max_residual > kResidualPass)
    out.status = FitStatus::GramDegenerate;
  else
    out.status = FitStatus::Success;
  return out;
}

SymMatrix least_norm_oracle(const PointCloud& cloud) {
  const int n = cloud.n;
  const int d = cloud.d;
  if (n > 200 || d > 30)
    throw std::invalid_argument("least_norm_oracle is limited to n <= 200, d <= 30");

  Eigen::MatrixXd a(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const double dot = cloud.points.row(i).dot(cloud.points.row(j));
      a(j, i) = dot * dot;
    }
  Eigen::VectorXd b(n);
  for (int j = 0; j < n; ++j) b[j] = 1.0 - cloud.norms[j] * cloud.norms[j];

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < n)
    throw GramDegenerate(static_cast<int>(qr.rank()),
                         "KKT system is rank deficient");
  const Eigen::VectorXd lambda = qr.solve(b);

  Eigen::MatrixXd q = Eigen::MatrixXd::Identity(d, d);
  q += cloud.points.transpose() * (lambda.asDiagonal() * cloud.points);
  return SymMatrix::from_dense(q);
}

VerifyResult verify(const PointCloud& cloud, const SymMatrix& q) {
  if (q.order() != cloud.d)
    throw ShapeMismatch("Q order disagrees with cloud dimension");
  VerifyResult out;
  out.max_residual = direct_max_residual(cloud, q.to_dense());
  out.min_eig = extreme_eigenvalues(q, kEigTol).lambda_min;
  return out;
}

}  // namespace elfit
