#include "elfit/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace elfit {

namespace {

constexpr double kEigTol = 1e-10;

double open_unit_uniform(std::mt19937_64& eng) {
  return (static_cast<double>(eng() >> 11) + 0.5) * 0x1p-53;
}

// Standard-normal row of length d; rejects the measure-zero all-zero draw.
void fill_gaussian(std::mt19937_64& eng, Eigen::VectorXd& z) {
  do {
    for (int i = 0; i < z.size(); ++i)
      z[i] = inverse_normal_cdf(open_unit_uniform(eng));
  } while (z.norm() == 0.0);
}

std::vector<double> survival_at(const std::vector<double>& sorted_abs,
                                const std::vector<double>& thresholds) {
  std::vector<double> tail(thresholds.size());
  const double total = static_cast<double>(sorted_abs.size());
  for (std::size_t k = 0; k < thresholds.size(); ++k) {
    const auto it = std::lower_bound(sorted_abs.begin(), sorted_abs.end(),
                                     thresholds[k]);
    tail[k] = static_cast<double>(sorted_abs.end() - it) / total;
  }
  return tail;
}

// Least-squares slope (with intercept) of -log(tail) against x over the
// 10%..0.1% survival band; returns 0 when the band holds < 2 points or the
// slope is not positive.
double band_slope(const std::vector<double>& xs,
                  const std::vector<double>& tail) {
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int count = 0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    if (tail[k] < 0.001 || tail[k] > 0.1) continue;
    const double y = -std::log(tail[k]);
    sx += xs[k];
    sy += y;
    sxx += xs[k] * xs[k];
    sxy += xs[k] * y;
    ++count;
  }
  if (count < 2) return 0.0;
  const double var = sxx - sx * sx / count;
  if (var <= 0.0) return 0.0;
  const double slope = (sxy - sx * sy / count) / var;
  return slope > 0.0 ? slope : 0.0;
}

void fit_psis(TailEstimate& te) {
  std::vector<double> sq(te.thresholds.size());
  for (std::size_t k = 0; k < sq.size(); ++k)
    sq[k] = te.thresholds[k] * te.thresholds[k];
  const double s1 = band_slope(te.thresholds, te.empirical_tail);
  const double s2 = band_slope(sq, te.empirical_tail);
  te.fitted_psi1 = s1 > 0.0 ? 1.0 / s1 : 0.0;
  te.fitted_psi2 = s2 > 0.0 ? 1.0 / std::sqrt(s2) : 0.0;
}

}  // namespace

EpsilonMoments epsilon_moments(int d) {
  if (d < 5)
    throw DimensionTooSmall("epsilon moments need d >= 5 for finite variance");
  const double dd = d;
  EpsilonMoments m;
  m.mean = 2.0 / (dd - 2.0);
  m.variance = 2.0 * dd * dd / ((dd - 2.0) * (dd - 2.0) * (dd - 4.0));
  return m;
}

EventReport check_events(const PointCloud& cloud, const SymMatrix& m,
                         const DeviationVector& eps,
                         const Eigen::VectorXd& delta,
                         const EventCutoffs& cutoffs) {
  const int n = cloud.n;
  const int d = cloud.d;
  if (m.order() != n || eps.values.size() != n || delta.size() != n)
    throw ShapeMismatch("check_events inputs disagree on point count");

  EventReport rep;
  rep.thresholds_used = cutoffs;

  rep.m_min_eig = extreme_eigenvalues(m, kEigTol).lambda_min;
  rep.m_inv_norm = rep.m_min_eig > 0.0
                       ? 1.0 / rep.m_min_eig
                       : std::numeric_limits<double>::infinity();
  rep.e1_holds = rep.m_min_eig >= 1.0 / cutoffs.m_inv_norm_bound - 1e-9;

  SymMatrix dev = m;
  const double off = 1.0 / d;
  for (int i = 0; i < n; ++i) {
    dev.at(i, i) -= 1.0;
    for (int j = 0; j < i; ++j) dev.at(i, j) -= off;
  }
  rep.m_dev_norm = spectral_norm(dev, kEigTol);

  const double logd = std::log(static_cast<double>(d));
  rep.eps_inf = eps.values.cwiseAbs().maxCoeff();
  rep.e2_holds = rep.eps_inf <= cutoffs.c2 * std::sqrt(logd / d);
  rep.delta_inf = delta.cwiseAbs().maxCoeff();
  rep.e3_holds = rep.delta_inf <= cutoffs.c3 * logd / std::sqrt(double(d));
  return rep;
}

SplitResult heavy_light_split(const PointCloud& cloud,
                              const Eigen::VectorXd& u, double t0) {
  if (u.size() != cloud.d)
    throw ShapeMismatch("probe length disagrees with cloud dimension");
  if (std::abs(u.norm() - 1.0) > 1e-10)
    throw NotUnitVector("heavy_light_split probe is not unit length");
  if (t0 == 0.0) t0 = std::pow(static_cast<double>(cloud.d), -0.25);
  if (!(t0 > 0.0 && t0 <= 1.0))
    throw std::invalid_argument("threshold t0 must lie in (0, 1]");

  SplitResult out;
  out.threshold_t0 = t0;
  out.beta = (cloud.directions * u).array().square();
  for (int i = 0; i < cloud.n; ++i) {
    const double b = out.beta[i];
    if (b > t0) {
      out.heavy_support.push_back(i);
      out.heavy_l1 += b;
    } else {
      out.light_norm_sq += b * b;
    }
  }
  return out;
}

TailEstimate tensor_tail(int d, long long samples, const Eigen::VectorXd& probe,
                         std::uint64_t seed) {
  if (d < 2) throw DimensionTooSmall("tensor_tail needs d >= 2");
  if (samples < 10000)
    throw std::invalid_argument("tensor_tail needs at least 1e4 samples");
  if (probe.size() != static_cast<Eigen::Index>(d) * d)
    throw ShapeMismatch("probe is not reshapeable to d x d");
  if (std::abs(probe.norm() - 1.0) > 1e-10)
    throw NotUnitVector("tensor_tail probe must have unit Frobenius norm");

  Eigen::MatrixXd a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = probe[static_cast<Eigen::Index>(i) * d + j];
  const double centering = a.trace() / d;

  std::mt19937_64 eng(seed);
  Eigen::VectorXd z(d);
  std::vector<double> abs_stats(static_cast<std::size_t>(samples));
  for (long long s = 0; s < samples; ++s) {
    fill_gaussian(eng, z);
    const Eigen::VectorXd x = z / z.norm();
    abs_stats[static_cast<std::size_t>(s)] =
        std::abs(x.dot(a * x) - centering);
  }
  std::sort(abs_stats.begin(), abs_stats.end());

  TailEstimate te;
  te.sample_count = samples;
  const double t_max = abs_stats.back();
  // statistics at rounding-noise scale are identically zero in substance
  if (t_max <= 1e-14) {
    te.thresholds = {0.0};
    te.empirical_tail = {1.0};
    return te;
  }
  constexpr int kGrid = 128;
  te.thresholds.resize(kGrid);
  for (int k = 1; k <= kGrid; ++k)
    te.thresholds[k - 1] = t_max * k / kGrid;
  te.empirical_tail = survival_at(abs_stats, te.thresholds);
  fit_psis(te);
  return te;
}

TailEstimate epsilon_tail(int d, long long samples, std::uint64_t seed) {
  if (d < 5) throw DimensionTooSmall("epsilon_tail needs d >= 5");
  if (samples < 10000)
    throw std::invalid_argument("epsilon_tail needs at least 1e4 samples");

  const double mean = epsilon_moments(d).mean;
  std::mt19937_64 eng(seed);
  Eigen::VectorXd z(d);
  std::vector<double> abs_stats(static_cast<std::size_t>(samples));
  for (long long s = 0; s < samples; ++s) {
    fill_gaussian(eng, z);
    const double r_sq = z.squaredNorm() / d;
    abs_stats[static_cast<std::size_t>(s)] =
        std::abs(1.0 / r_sq - 1.0 - mean);
  }
  std::sort(abs_stats.begin(), abs_stats.end());

  TailEstimate te;
  te.sample_count = samples;
  te.thresholds.resize(100);
  for (int k = 1; k <= 100; ++k) te.thresholds[k - 1] = k / 100.0;
  te.empirical_tail = survival_at(abs_stats, te.thresholds);
  fit_psis(te);
  return te;
}

}  // namespace elfit
