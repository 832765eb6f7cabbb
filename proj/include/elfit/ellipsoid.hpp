#pragma once

#include <Eigen/Core>
#include <string>

#include "elfit/linalg.hpp"
#include "elfit/sampling.hpp"

namespace elfit {

/// Per-point norm deviations eps_i = 1/r_i^2 - 1.
struct DeviationVector {
  Eigen::VectorXd values;
};

enum class FitStatus { Success, GramDegenerate, NotPSD, EigFailed };

/// Certificate thresholds: a fit counts as Success iff
/// max_residual <= kResidualPass and q_min_eig >= -kPsdPass.
inline constexpr double kResidualPass = 1e-8;
inline constexpr double kPsdPass = 1e-9;

const char* fit_status_name(FitStatus s);
FitStatus parse_fit_status(const std::string& name);

/// Outcome of one identity-perturbation fit. On Success,
/// max_residual <= 1e-8 and q_min_eig >= -1e-9; on earlier failures the
/// fields that were never computed hold NaN (delta may be empty).
struct FitResult {
  Eigen::VectorXd delta;
  double max_residual = 0.0;
  double q_min_eig = 0.0;
  double perturbation_norm = 0.0;
  double m_min_eig = 0.0;
  FitStatus status = FitStatus::Success;
};

/// n x n matrix of squared direction inner products, unit diagonal.
/// Throws InstanceTooLarge for n > 2*10^4 (packed storage would pass
/// ~1.6 GB).
SymMatrix build_gram(const PointCloud& cloud);

DeviationVector build_deviations(const PointCloud& cloud);

/// Solves M delta = eps by packed Cholesky. Throws GramDegenerate when a
/// pivot collapses; callers record that as a construction failure.
Eigen::VectorXd solve_dual(const SymMatrix& m, const DeviationVector& eps);

/// d x d matrix P = sum_i delta_i X_i X_i^T.
SymMatrix perturbation(const PointCloud& cloud, const Eigen::VectorXd& delta);

/// Full pipeline: gram -> deviations -> dual solve -> perturbation ->
/// certificates. max_residual is recomputed from the raw points, never
/// taken from the linear solver. Construction failures come back as
/// statuses, not exceptions.
FitResult fit_ellipsoid(const PointCloud& cloud);

/// Minimum-Frobenius-distance-from-identity matrix meeting every
/// interpolation constraint, found by a dense KKT solve that shares no
/// code path with fit_ellipsoid. Slow by design; n <= 200, d <= 30.
SymMatrix least_norm_oracle(const PointCloud& cloud);

struct VerifyResult {
  double max_residual = 0.0;
  double min_eig = 0.0;
};

/// Recomputes both certificates for a candidate Q from scratch.
/// Throws ShapeMismatch when Q is not d x d.
VerifyResult verify(const PointCloud& cloud, const SymMatrix& q);

}  // namespace elfit
