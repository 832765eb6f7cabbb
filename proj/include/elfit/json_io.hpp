#pragma once

#include <string>

#include "elfit/ellipsoid.hpp"
#include "elfit/linalg.hpp"
#include "elfit/sampling.hpp"

namespace elfit {

/// Cloud file: {"d": int, "n": int, "seed": uint64, "points": [[...], ...]}
/// with rows in point order. Norms and directions are recomputed on load.
void save_cloud(const PointCloud& cloud, const std::string& path);
PointCloud load_cloud(const std::string& path);

/// Q file: {"d": int, "q": [[...], ...]} dense row-major. The loader
/// rejects asymmetric input.
void save_q_matrix(const SymMatrix& q, const std::string& path);
SymMatrix load_q_matrix(const std::string& path);

}  // namespace elfit
