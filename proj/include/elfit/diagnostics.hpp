#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "elfit/ellipsoid.hpp"
#include "elfit/linalg.hpp"
#include "elfit/sampling.hpp"

namespace elfit {

/// Cutoffs for the three per-trial events. E1 compares the inverse norm of
/// the gram matrix against a fixed bound; E2/E3 use dimension-dependent
/// envelopes scaled by configurable multipliers.
struct EventCutoffs {
  double m_inv_norm_bound = 3.0;
  double c2 = 4.0;  // eps_inf <= c2 * sqrt(log d / d)
  double c3 = 4.0;  // delta_inf <= c3 * log d / sqrt(d)
};

struct EventReport {
  bool e1_holds = false;
  double m_min_eig = 0.0;
  double m_inv_norm = 0.0;
  double m_dev_norm = 0.0;  // spectral norm of M - EM
  bool e2_holds = false;
  double eps_inf = 0.0;
  bool e3_holds = false;
  double delta_inf = 0.0;
  EventCutoffs thresholds_used;
};

struct SplitResult {
  double threshold_t0 = 0.0;
  std::vector<int> heavy_support;
  Eigen::VectorXd beta;  // beta_i = <u, X_i>^2
  double light_norm_sq = 0.0;
  double heavy_l1 = 0.0;
};

/// Tail summary of |statistic| over a threshold grid. The psi estimates
/// come from least-squares slopes of -log(survival) against t (psi1) and
/// t^2 (psi2) over the 10%..0.1% survival band; they are 0 when fewer than
/// two grid points land in the band.
struct TailEstimate {
  long long sample_count = 0;
  std::vector<double> thresholds;
  std::vector<double> empirical_tail;
  double fitted_psi1 = 0.0;
  double fitted_psi2 = 0.0;
};

/// Closed-form moments of eps_i = 1/||G||^2 - 1: mean 2/(d-2), variance
/// 2 d^2 / ((d-2)^2 (d-4)). Throws DimensionTooSmall for d < 5.
struct EpsilonMoments {
  double mean = 0.0;
  double variance = 0.0;
};
EpsilonMoments epsilon_moments(int d);

/// Evaluates the three events for one fitted instance. The expectation of
/// the gram matrix is formed analytically ((1 - 1/d) on the diagonal, 1/d
/// off it), never estimated. Eigen iterations may throw NotConverged.
EventReport check_events(const PointCloud& cloud, const SymMatrix& m,
                         const DeviationVector& eps,
                         const Eigen::VectorXd& delta,
                         const EventCutoffs& cutoffs = EventCutoffs{});

/// Splits beta_i = <u, X_i>^2 at threshold t0 (strictly greater ->
/// heavy). t0 = 0 selects the default d^(-1/4). Throws NotUnitVector
/// unless ||u|| = 1 within 1e-10.
SplitResult heavy_light_split(const PointCloud& cloud,
                              const Eigen::VectorXd& u, double t0);

/// Tail of X^T A X - tr(A)/d for X uniform on the sphere, where A is the
/// probe reshaped to d x d (row-major) with unit Frobenius norm. The
/// threshold grid is 128 equal steps up to the largest observed
/// |statistic|, so thresholds.back() equals that maximum.
TailEstimate tensor_tail(int d, long long samples,
                         const Eigen::VectorXd& probe, std::uint64_t seed);

/// Tail of |eps - E eps| for eps sampled from fresh Gaussian norms, with
/// E eps taken from the closed form. Fixed threshold grid k/100 for
/// k = 1..100 so survival can be read off at t = 0.05, 0.10, ... exactly.
TailEstimate epsilon_tail(int d, long long samples, std::uint64_t seed);

}  // namespace elfit
