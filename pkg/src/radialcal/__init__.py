"""Radial lens distortion modeling and plane-based camera calibration.

Ten radial distortion profiles (polynomial and rational), exact analytical
undistortion for the nine invertible ones, and a calibration harness that
fits each model to multi-view planar-target data and ranks them by the
reprojection objective.
"""

from .calibration import (
    CalibrationDataset,
    CalibrationResult,
    Homography,
    ModelFitReport,
    ModelFitRow,
    OptimizerOptions,
    apply_homography,
    calibrate,
    compare_models,
    compute_objective,
    estimate_extrinsics,
    estimate_homography,
    estimate_intrinsics_linear,
    fit_distortion,
    linear_initialize,
    project_distorted,
    refine,
)
from .core import (
    Extrinsics,
    IntrinsicParams,
    denormalize,
    normalize,
    project_ideal,
    rotation_from_matrix,
    rotation_to_matrix,
    world_to_camera,
)
from .dataio import (
    REPORT_HEADER,
    SynthSpec,
    generate_synthetic,
    load_dataset,
    load_intrinsics,
    planar_grid,
    render_report,
    truth_record,
    write_dataset,
    write_intrinsics,
)
from .distortion import (
    MODEL_IDS,
    DistortionModel,
    RadialAuxiliaries,
    coefficient_arity,
    distort_normalized,
    distort_pixel,
    eval_profile,
)
from .errors import (
    BehindCamera,
    BracketNotFound,
    CountMismatch,
    DegenerateConfiguration,
    DegenerateLeadingCoefficient,
    NoRealCandidate,
    NonPositiveDepth,
    ParseError,
    RadialCalError,
    SingularConfiguration,
    SingularProfile,
    UnknownModel,
    UnsupportedModel,
    ZeroPolynomial,
)
from .reference import reference_coefficients, reference_report, reference_sessions
from .undistortion import (
    CubicProblem,
    branch_reduce,
    solve_cubic_closed,
    solve_poly_real,
    undistort_normalized,
    undistort_numeric,
    undistort_pixel,
)

__version__ = "0.1.0"

__all__ = [
    "BehindCamera",
    "BracketNotFound",
    "CalibrationDataset",
    "CalibrationResult",
    "CountMismatch",
    "CubicProblem",
    "DegenerateConfiguration",
    "DegenerateLeadingCoefficient",
    "DistortionModel",
    "Extrinsics",
    "Homography",
    "IntrinsicParams",
    "MODEL_IDS",
    "ModelFitReport",
    "ModelFitRow",
    "NoRealCandidate",
    "NonPositiveDepth",
    "OptimizerOptions",
    "ParseError",
    "RadialCalError",
    "RadialAuxiliaries",
    "REPORT_HEADER",
    "SingularConfiguration",
    "SingularProfile",
    "SynthSpec",
    "UnknownModel",
    "UnsupportedModel",
    "ZeroPolynomial",
    "apply_homography",
    "branch_reduce",
    "calibrate",
    "coefficient_arity",
    "compare_models",
    "compute_objective",
    "denormalize",
    "distort_normalized",
    "distort_pixel",
    "estimate_extrinsics",
    "estimate_homography",
    "estimate_intrinsics_linear",
    "eval_profile",
    "fit_distortion",
    "generate_synthetic",
    "linear_initialize",
    "load_dataset",
    "load_intrinsics",
    "normalize",
    "planar_grid",
    "project_distorted",
    "project_ideal",
    "reference_coefficients",
    "reference_report",
    "reference_sessions",
    "refine",
    "render_report",
    "rotation_from_matrix",
    "rotation_to_matrix",
    "solve_cubic_closed",
    "solve_poly_real",
    "truth_record",
    "undistort_normalized",
    "undistort_numeric",
    "undistort_pixel",
    "world_to_camera",
    "write_dataset",
    "write_intrinsics",
    "__version__",
]
