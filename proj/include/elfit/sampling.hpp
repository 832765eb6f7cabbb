#pragma once

#include <Eigen/Core>
#include <cstdint>

#include "elfit/errors.hpp"

namespace elfit {

/// n Gaussian samples in R^d, rows G_i ~ N(0, (1/d) I), factored into
/// norms r_i = ||G_i|| and unit directions X_i = G_i / r_i.
struct PointCloud {
  int d = 0;
  int n = 0;
  std::uint64_t seed = 0;
  Eigen::MatrixXd points;      // n x d, row i = G_i
  Eigen::VectorXd norms;       // r_i > 0
  Eigen::MatrixXd directions;  // n x d, row i = X_i

  /// Rebuilds norms/directions from raw points (used by file loading).
  /// Throws on zero-norm rows or non-finite entries.
  static PointCloud from_points(int d, int n, std::uint64_t seed,
                                Eigen::MatrixXd pts);

  /// Asserts the factorization invariants; throws std::logic_error on
  /// violation.
  void validate() const;
};

/// Deterministic cloud generation: mt19937_64 keyed by seed, one draw per
/// entry in row-major order, entries mapped through the inverse normal CDF
/// and scaled by 1/sqrt(d). Zero-norm rows (measure zero) are refilled from
/// the same stream. Throws DimensionTooSmall when d < 2.
PointCloud sample_cloud(int d, int n, std::uint64_t seed);

/// Splitmix-style finalizer over master_seed XOR trial_index; stable across
/// platforms, used to give parallel trials order-independent streams.
std::uint64_t derive_trial_seed(std::uint64_t master_seed,
                                std::uint64_t trial_index);

/// Inverse standard normal CDF (Wichura's PPND16), accurate to ~1e-15 on
/// (0,1). Exposed for direct testing.
double inverse_normal_cdf(double p);

}  // namespace elfit
