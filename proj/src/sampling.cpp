#include "elfit/sampling.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace elfit {

namespace {

// Uniform in (0,1), excluding both endpoints: top 53 bits of the draw,
// centered. Avoids std::uniform_real_distribution, whose exact output
// the standard leaves unspecified.
double open_unit_uniform(std::mt19937_64& eng) {
  return (static_cast<double>(eng() >> 11) + 0.5) * 0x1p-53;
}

}  // namespace

double inverse_normal_cdf(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw std::invalid_argument("inverse_normal_cdf needs p in (0,1)");
  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    const double num =
        (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
              6.7265770927008700853e4) *
                 r +
             4.5921953931549871457e4) *
                r +
            1.3731693765509461125e4) *
               r +
           1.9715909503065514427e3) *
              r +
          1.3314166789178437745e2) *
             r +
         3.3871328727963666080e0);
    const double den =
        (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
              3.9307895800092710610e4) *
                 r +
             2.1213794301586595867e4) *
                r +
            5.3941960214247511077e3) *
               r +
           6.8718700749205790830e2) *
              r +
          4.2313330701600911252e1) *
             r +
         1.0);
    return q * num / den;
  }
  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    const double num =
        (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
              2.41780725177450611770e-1) *
                 r +
             1.27045825245236838258e0) *
                r +
            3.64784832476320460504e0) *
               r +
           5.76949722146069140550e0) *
              r +
          4.63033784615654529590e0) *
             r +
         1.42343711074968357734e0);
    const double den =
        (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
              1.51986665636164571966e-2) *
                 r +
             1.48103976427480074590e-1) *
                r +
            6.89767334985100004550e-1) *
               r +
           1.67638483018380384940e0) *
              r +
          2.05319162663775882187e0) *
             r +
         1.0);
    val = num / den;
  } else {
    r -= 5.0;
    const double num =
        (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
              1.24266094738807843860e-3) *
                 r +
             2.65321895265761230930e-2) *
                r +
            2.96560571828504891230e-1) *
               r +
           1.78482653991729133580e0) *
              r +
          5.46378491116411436990e0) *
             r +
         6.65790464350110377720e0);
    const double den =
        (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) *
                  r +
              1.84631831751005468180e-5) *
                 r +
             7.86869131145613259100e-4) *
                r +
            1.48753612908506148525e-2) *
               r +
           1.36929880922735805310e-1) *
              r +
          5.99832206555887937690e-1) *
             r +
         1.0);
    val = num / den;
  }
  return q < 0.0 ? -val : val;
}

std::uint64_t derive_trial_seed(std::uint64_t master_seed,
                                std::uint64_t trial_index) {
  std::uint64_t z = (master_seed ^ trial_index) + 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void PointCloud::validate() const {
  if (points.rows() != n || points.cols() != d || norms.size() != n ||
      directions.rows() != n || directions.cols() != d)
    throw std::logic_error("PointCloud field shapes disagree");
  for (int i = 0; i < n; ++i) {
    if (!(norms[i] > 0.0)) throw std::logic_error("PointCloud norm <= 0");
    if (std::abs(directions.row(i).norm() - 1.0) > 1e-12)
      throw std::logic_error("PointCloud direction is not unit length");
    const double tol = 1e-12 * norms[i];
    for (int j = 0; j < d; ++j)
      if (std::abs(points(i, j) - norms[i] * directions(i, j)) > tol)
        throw std::logic_error("PointCloud factorization mismatch");
  }
}

PointCloud PointCloud::from_points(int d, int n, std::uint64_t seed,
                                   Eigen::MatrixXd pts) {
  if (d < 2) throw DimensionTooSmall("point cloud needs d >= 2");
  if (n < 1) throw std::invalid_argument("point cloud needs n >= 1");
  if (pts.rows() != n || pts.cols() != d)
    throw std::invalid_argument("point matrix shape disagrees with (n, d)");
  if (!pts.allFinite())
    throw std::invalid_argument("point matrix has non-finite entries");
  PointCloud cloud;
  cloud.d = d;
  cloud.n = n;
  cloud.seed = seed;
  cloud.points = std::move(pts);
  cloud.norms.resize(n);
  cloud.directions.resize(n, d);
  for (int i = 0; i < n; ++i) {
    const double r = cloud.points.row(i).norm();
    if (r == 0.0) throw std::invalid_argument("point cloud has a zero row");
    cloud.norms[i] = r;
    cloud.directions.row(i) = cloud.points.row(i) / r;
  }
  cloud.validate();
  return cloud;
}

PointCloud sample_cloud(int d, int n, std::uint64_t seed) {
  if (d < 2) throw DimensionTooSmall("sample_cloud needs d >= 2");
  if (n < 1) throw std::invalid_argument("sample_cloud needs n >= 1");
  std::mt19937_64 eng(seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  Eigen::MatrixXd pts(n, d);
  for (int i = 0; i < n; ++i) {
    do {
      for (int j = 0; j < d; ++j)
        pts(i, j) = scale * inverse_normal_cdf(open_unit_uniform(eng));
    } while (pts.row(i).norm() == 0.0);
  }
  return PointCloud::from_points(d, n, seed, std::move(pts));
}

}  // namespace elfit
