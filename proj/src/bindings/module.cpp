#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "elfit/diagnostics.hpp"
#include "elfit/ellipsoid.hpp"
#include "elfit/harness.hpp"
#include "elfit/linalg.hpp"
#include "elfit/sampling.hpp"
#include "elfit/version.hpp"

namespace py = pybind11;
using namespace elfit;

namespace {

Eigen::MatrixXd q_from_delta(const PointCloud& cloud,
                             const Eigen::VectorXd& delta) {
  Eigen::MatrixXd q = perturbation(cloud, delta).to_dense();
  q.diagonal().array() += 1.0;
  return q;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "identity-perturbation ellipsoid fitting for random point clouds";
  m.attr("__version__") = kVersion;

  py::register_exception<NotPositiveDefinite>(m, "NotPositiveDefinite");
  py::register_exception<NotConverged>(m, "NotConverged");
  py::register_exception<GramDegenerate>(m, "GramDegenerateError");

  py::class_<PointCloud>(m, "PointCloud")
      .def_readonly("d", &PointCloud::d)
      .def_readonly("n", &PointCloud::n)
      .def_readonly("seed", &PointCloud::seed)
      .def_readonly("points", &PointCloud::points)
      .def_readonly("norms", &PointCloud::norms)
      .def_readonly("directions", &PointCloud::directions);

  py::class_<FitResult>(m, "FitResult")
      .def_readonly("delta", &FitResult::delta)
      .def_readonly("max_residual", &FitResult::max_residual)
      .def_readonly("q_min_eig", &FitResult::q_min_eig)
      .def_readonly("perturbation_norm", &FitResult::perturbation_norm)
      .def_readonly("m_min_eig", &FitResult::m_min_eig)
      .def_property_readonly("status", [](const FitResult& r) {
        return std::string(fit_status_name(r.status));
      });

  py::class_<SplitResult>(m, "SplitResult")
      .def_readonly("threshold_t0", &SplitResult::threshold_t0)
      .def_readonly("heavy_support", &SplitResult::heavy_support)
      .def_readonly("beta", &SplitResult::beta)
      .def_readonly("light_norm_sq", &SplitResult::light_norm_sq)
      .def_readonly("heavy_l1", &SplitResult::heavy_l1);

  py::class_<TailEstimate>(m, "TailEstimate")
      .def_readonly("sample_count", &TailEstimate::sample_count)
      .def_readonly("thresholds", &TailEstimate::thresholds)
      .def_readonly("empirical_tail", &TailEstimate::empirical_tail)
      .def_readonly("fitted_psi1", &TailEstimate::fitted_psi1)
      .def_readonly("fitted_psi2", &TailEstimate::fitted_psi2);

  m.def("sample_cloud", &sample_cloud, py::arg("d"), py::arg("n"),
        py::arg("seed"),
        "Deterministic Gaussian cloud with rows ~ N(0, I/d)");
  m.def("derive_trial_seed", &derive_trial_seed, py::arg("master_seed"),
        py::arg("trial_index"));
  m.def("fit_ellipsoid", &fit_ellipsoid, py::arg("cloud"));
  m.def(
      "fit",
      [](int d, int n, std::uint64_t seed) {
        return fit_ellipsoid(sample_cloud(d, n, seed));
      },
      py::arg("d"), py::arg("n"), py::arg("seed") = 0,
      "sample_cloud + fit_ellipsoid in one call");
  m.def(
      "gram",
      [](const PointCloud& cloud) { return build_gram(cloud).to_dense(); },
      py::arg("cloud"), "dense n x n matrix of squared direction inner products");
  m.def(
      "deviations",
      [](const PointCloud& cloud) { return build_deviations(cloud).values; },
      py::arg("cloud"));
  m.def("q_matrix", &q_from_delta, py::arg("cloud"), py::arg("delta"),
        "dense Q = I + sum_i delta_i X_i X_i^T");
  m.def(
      "verify",
      [](const PointCloud& cloud, const Eigen::MatrixXd& q) {
        const VerifyResult v = verify(cloud, SymMatrix::from_dense(q));
        return py::make_tuple(v.max_residual, v.min_eig);
      },
      py::arg("cloud"), py::arg("q"),
      "recomputes (max_residual, min_eig) for a candidate Q");
  m.def(
      "least_norm_oracle",
      [](const PointCloud& cloud) {
        return least_norm_oracle(cloud).to_dense();
      },
      py::arg("cloud"));
  m.def(
      "epsilon_moments",
      [](int d) {
        const EpsilonMoments mm = epsilon_moments(d);
        return py::make_tuple(mm.mean, mm.variance);
      },
      py::arg("d"), "closed-form (mean, variance) of 1/||G||^2 - 1");
  m.def("heavy_light_split", &heavy_light_split, py::arg("cloud"),
        py::arg("u"), py::arg("t0") = 0.0);
  m.def("epsilon_tail", &epsilon_tail, py::arg("d"), py::arg("samples"),
        py::arg("seed"));
  m.def("tensor_tail", &tensor_tail, py::arg("d"), py::arg("samples"),
        py::arg("probe"), py::arg("seed"));
}
