"""Identity-perturbation ellipsoid fitting for random Gaussian point clouds."""

from ._core import (
    FitResult,
    GramDegenerateError,
    NotConverged,
    NotPositiveDefinite,
    PointCloud,
    SplitResult,
    TailEstimate,
    __version__,
    derive_trial_seed,
    deviations,
    epsilon_moments,
    epsilon_tail,
    fit,
    fit_ellipsoid,
    gram,
    heavy_light_split,
    least_norm_oracle,
    q_matrix,
    sample_cloud,
    tensor_tail,
    verify,
)

__all__ = [
    "FitResult",
    "GramDegenerateError",
    "NotConverged",
    "NotPositiveDefinite",
    "PointCloud",
    "SplitResult",
    "TailEstimate",
    "__version__",
    "derive_trial_seed",
    "deviations",
    "epsilon_moments",
    "epsilon_tail",
    "fit",
    "fit_ellipsoid",
    "gram",
    "heavy_light_split",
    "least_norm_oracle",
    "q_matrix",
    "sample_cloud",
    "tensor_tail",
    "verify",
]
