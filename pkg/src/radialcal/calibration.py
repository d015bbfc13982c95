"""Plane-based calibration and the multi-model comparison harness.

Pipeline: per-view homographies (normalized DLT), intrinsics from the
absolute-conic constraints, extrinsics by decomposing A^-1 H, then joint
nonlinear refinement of intrinsics + distortion coefficients + all poses,
minimizing the sum of squared pixel distances between observations and
distorted forward projections:

    J = sum_i sum_j || m_ij - distort(project(A, R_i, t_i, M_j)) ||^2

compare_models runs the linear stage once and refines every requested
distortion model from that identical starting point (coefficients at zero),
ranking models by final J.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .core import (
    DEPTH_EPS,
    Extrinsics,
    IntrinsicParams,
    Mat,
    Vec,
    rotation_from_matrix,
    rotation_to_matrix,
)
from .distortion import DistortionModel, _profile_array, coefficient_arity
from .errors import (
    BehindCamera,
    DegenerateConfiguration,
    NonPositiveDepth,
    RadialCalError,
    SingularConfiguration,
)

# Relative singular-value floor below which the conic constraint system is
# considered rank-deficient (parallel target planes land around 1e-19 here,
# well-posed pose sets around 1e-4).
RANK_EPS = 1e-8


@dataclass(frozen=True, slots=True)
class CalibrationDataset:
    """Planar model points plus index-aligned per-view pixel observations.

    model_points has shape (n, 2); the world Z coordinate is implicitly 0.
    observations is one (n, 2) pixel array per view.
    """

    model_points: Mat
    observations: tuple[Mat, ...]

    def __post_init__(self):
        pts = np.asarray(self.model_points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 1:
            raise ValueError("model_points must be an (n, 2) array")
        obs = tuple(np.asarray(o, dtype=float) for o in self.observations)
        if not obs:
            raise ValueError("dataset needs at least one view")
        for i, o in enumerate(obs):
            if o.shape != pts.shape:
                raise ValueError(
                    f"view {i} has shape {o.shape}, expected {pts.shape}"
                )
        object.__setattr__(self, "model_points", pts)
        object.__setattr__(self, "observations", obs)

    @property
    def n_points(self) -> int:
        return self.model_points.shape[0]

    @property
    def n_views(self) -> int:
        return len(self.observations)

    @property
    def world_points(self) -> Mat:
        """Model points lifted to 3-D with Z = 0, shape (n, 3)."""
        return np.column_stack([self.model_points, np.zeros(self.n_points)])


@dataclass(frozen=True, slots=True)
class Homography:
    """Plane-to-image projective map, Frobenius-normalized.

    residual is the largest pixel reprojection error over the points the
    matrix was fitted from (zero for manually built homographies).
    """

    matrix: Mat
    residual: float = 0.0

    def __post_init__(self):
        H = np.asarray(self.matrix, dtype=float)
        if H.shape != (3, 3):
            raise ValueError("homography must be 3x3")
        H = H / np.linalg.norm(H)
        if H[2, 2] < 0:
            H = -H
        object.__setattr__(self, "matrix", H)


@dataclass(frozen=True, slots=True)
class OptimizerOptions:
    """Termination settings for refine (defaults match the library's tests)."""

    step_tolerance: float = 1e-5
    objective_tolerance: float = 1e-5
    max_iterations: int = 120
    max_function_evaluations: int = 8000

    def __post_init__(self):
        for name in (
            "step_tolerance",
            "objective_tolerance",
            "max_iterations",
            "max_function_evaluations",
        ):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True, slots=True)
class CalibrationResult:
    """Parameters plus the objective they achieve on their dataset."""

    intrinsics: IntrinsicParams
    extrinsics: tuple[Extrinsics, ...]
    model: DistortionModel
    objective: float
    iterations: int
    converged: bool
    status: str = ""
    evaluations: int = 0
    objective_trace: tuple[float, ...] = ()


@dataclass(frozen=True, slots=True)
class ModelFitRow:
    """One line of a comparison report."""

    model_id: int
    objective: float
    rank: int
    coefficients: tuple[float, ...]
    intrinsics: IntrinsicParams
    converged: bool = True
    iterations: int = 0
    initial_objective: float | None = None


@dataclass(frozen=True, slots=True)
class ModelFitReport:
    """Comparison rows in model-id order; ranks follow ascending objective."""

    rows: tuple[ModelFitRow, ...]

    def __post_init__(self):
        rows = tuple(self.rows)
        ids = [r.model_id for r in rows]
        if ids != sorted(ids):
            raise ValueError("report rows must be sorted by model_id")
        if sorted(r.rank for r in rows) != list(range(len(rows))):
            raise ValueError("ranks must be a permutation of 0..n-1")
        object.__setattr__(self, "rows", rows)


def apply_homography(H: Homography, points: Mat) -> Mat:
    """Map (n, 2) points through H and dehomogenize."""
    pts = np.asarray(points, dtype=float)
    ph = np.column_stack([pts, np.ones(len(pts))]) @ H.matrix.T
    return ph[:, :2] / ph[:, 2:3]


def _isotropic_normalization(pts: Mat) -> Mat:
    """Similarity moving the centroid to the origin at mean distance sqrt(2)."""
    centroid = pts.mean(axis=0)
    mean_dist = float(np.sqrt(((pts - centroid) ** 2).sum(axis=1)).mean())
    if mean_dist < 1e-12:
        raise DegenerateConfiguration("all points coincide")
    s = math.sqrt(2.0) / mean_dist
    return np.array(
        [[s, 0.0, -s * centroid[0]], [0.0, s, -s * centroid[1]], [0.0, 0.0, 1.0]]
    )


def estimate_homography(model_points: Mat, image_points: Mat) -> Homography:
    """Normalized direct linear transform from >= 4 correspondences.

    Raises DegenerateConfiguration when the correspondences do not determine
    a unique homography (too few points, collinear or duplicated points).
    """
    mp = np.asarray(model_points, dtype=float)
    ip = np.asarray(image_points, dtype=float)
    if mp.shape != ip.shape or mp.ndim != 2 or mp.shape[1] != 2:
        raise ValueError("point sets must share shape (n, 2)")
    if len(mp) < 4:
        raise DegenerateConfiguration(f"need at least 4 points, got {len(mp)}")
    Tm = _isotropic_normalization(mp)
    Ti = _isotropic_normalization(ip)
    mh = np.column_stack([mp, np.ones(len(mp))]) @ Tm.T
    ih = np.column_stack([ip, np.ones(len(ip))]) @ Ti.T
    rows = []
    for (X, Y, W), (u, v, _) in zip(mh, ih):
        rows.append([0.0, 0.0, 0.0, -X, -Y, -W, v * X, v * Y, v * W])
        rows.append([X, Y, W, 0.0, 0.0, 0.0, -u * X, -u * Y, -u * W])
    L = np.asarray(rows)
    _, s, Vt = np.linalg.svd(L)
    # A unique solution needs rank 8: one vanishing direction, not two.
    if s[7] < 1e-10 * s[0]:
        raise DegenerateConfiguration(
            "correspondences underdetermine the homography (collinear points?)"
        )
    H = np.linalg.inv(Ti) @ Vt[-1].reshape(3, 3) @ Tm
    fitted = Homography(matrix=H)
    err = float(np.max(np.linalg.norm(apply_homography(fitted, mp) - ip, axis=1)))
    return Homography(matrix=fitted.matrix, residual=err)


def _conic_row(H: Mat, i: int, j: int) -> Vec:
    hi, hj = H[:, i], H[:, j]
    return np.array(
        [
            hi[0] * hj[0],
            hi[0] * hj[1] + hi[1] * hj[0],
            hi[1] * hj[1],
            hi[2] * hj[0] + hi[0] * hj[2],
            hi[2] * hj[1] + hi[1] * hj[2],
            hi[2] * hj[2],
        ]
    )


def estimate_intrinsics_linear(homographies) -> IntrinsicParams:
    """Closed-form intrinsics from the absolute-conic constraints.

    Each homography contributes two linear constraints on the symmetric
    conic B = A^-T A^-1; the stacked system's null vector yields B, from
    which the five parameters unfold in closed form.

    Raises SingularConfiguration when fewer than three views are given or
    the constraint system is rank-deficient (parallel target planes give the
    same two constraints repeatedly).
    """
    Hs = [h.matrix for h in homographies]
    if len(Hs) < 3:
        raise SingularConfiguration(f"need at least 3 views, got {len(Hs)}")
    V = []
    for H in Hs:
        V.append(_conic_row(H, 0, 1))
        V.append(_conic_row(H, 0, 0) - _conic_row(H, 1, 1))
    V = np.asarray(V)
    _, s, Vt = np.linalg.svd(V)
    if s[4] < RANK_EPS * s[0]:
        raise SingularConfiguration(
            "conic constraints are rank-deficient (near-parallel target planes)"
        )
    b = Vt[-1]
    if b[0] < 0:
        b = -b
    B11, B12, B22, B13, B23, B33 = b
    den = B11 * B22 - B12 * B12
    if B11 <= 0 or den <= 0:
        raise SingularConfiguration("recovered conic is not positive definite")
    v0 = (B12 * B13 - B11 * B23) / den
    lam = B33 - (B13 * B13 + v0 * (B12 * B13 - B11 * B23)) / B11
    if lam <= 0:
        raise SingularConfiguration("recovered conic is not positive definite")
    alpha = math.sqrt(lam / B11)
    beta = math.sqrt(lam * B11 / den)
    gamma = -B12 * alpha * alpha * beta / lam
    u0 = gamma * v0 / beta - B13 * alpha * alpha / lam
    return IntrinsicParams(alpha=alpha, beta=beta, gamma=gamma, u0=u0, v0=v0)


def estimate_extrinsics(A: IntrinsicParams, H: Homography) -> Extrinsics:
    """Decompose A^-1 H into a rotation and translation.

    The two leading columns of A^-1 H are the first two rotation columns up
    to a common scale; the third rotation column is their cross product and
    the result is snapped to the nearest orthonormal matrix. The overall
    sign is chosen so the plane origin sits at positive depth.

    Raises BehindCamera when the depth sign cannot be fixed (plane passes
    through the projection center).
    """
    Ainv = A.matrix_inv
    h1, h2, h3 = (Ainv @ H.matrix[:, i] for i in range(3))
    scale = 1.0 / float(np.linalg.norm(h1))
    r1, r2, t = scale * h1, scale * h2, scale * h3
    if abs(t[2]) < DEPTH_EPS:
        raise BehindCamera("target plane passes through the camera center")
    if t[2] < 0:
        r1, r2, t = -r1, -r2, -t
    Q = np.column_stack([r1, r2, np.cross(r1, r2)])
    U, _, Vt = np.linalg.svd(Q)
    R = U @ Vt
    if np.linalg.det(R) < 0:
        R = U @ np.diag([1.0, 1.0, -1.0]) @ Vt
    return Extrinsics(rotation=rotation_from_matrix(R), translation=t)


def _objective_terms(
    intr: tuple[float, float, float, float, float],
    model_id: int,
    k: tuple[float, ...],
    rotations,
    translations,
    pts3: Mat,
    observations,
) -> float:
    """Shared objective kernel. Raises NonPositiveDepth/SingularProfile."""
    alpha, gamma, u0, beta, v0 = intr
    J = 0.0
    for i, (w, t, obs) in enumerate(zip(rotations, translations, observations)):
        R = rotation_to_matrix(w)
        Pc = pts3 @ R.T + t
        z = Pc[:, 2]
        bad = z < DEPTH_EPS
        if np.any(bad):
            j = int(np.argmax(bad))
            raise NonPositiveDepth(f"view {i}, point {j}: Z^c = {z[j]!r}")
        x = Pc[:, 0] / z
        y = Pc[:, 1] / z
        f = _profile_array(model_id, k, np.hypot(x, y))
        xd = x * f
        yd = y * f
        du = alpha * xd + gamma * yd + u0 - obs[:, 0]
        dv = beta * yd + v0 - obs[:, 1]
        J += float(np.sum(du * du + dv * dv))
    return J


def project_distorted(
    A: IntrinsicParams, ext: Extrinsics, model: DistortionModel, world_points: Mat
) -> Mat:
    """Distorted forward projection of (n, 3) world points, in pixels."""
    pts = np.asarray(world_points, dtype=float)
    Pc = pts @ ext.matrix.T + ext.translation
    z = Pc[:, 2]
    bad = z < DEPTH_EPS
    if np.any(bad):
        j = int(np.argmax(bad))
        raise NonPositiveDepth(f"point {j}: Z^c = {z[j]!r}")
    x = Pc[:, 0] / z
    y = Pc[:, 1] / z
    f = _profile_array(model.model_id, model.coefficients, np.hypot(x, y))
    xd = x * f
    yd = y * f
    u = A.alpha * xd + A.gamma * yd + A.u0
    v = A.beta * yd + A.v0
    return np.column_stack([u, v])


def compute_objective(
    A: IntrinsicParams,
    extrinsics,
    model: DistortionModel,
    data: CalibrationDataset,
) -> float:
    """Sum of squared pixel distances between observations and predictions."""
    extrinsics = tuple(extrinsics)
    if len(extrinsics) != data.n_views:
        raise ValueError(
            f"got {len(extrinsics)} extrinsics for {data.n_views} views"
        )
    return _objective_terms(
        (A.alpha, A.gamma, A.u0, A.beta, A.v0),
        model.model_id,
        model.coefficients,
        [e.rotation for e in extrinsics],
        [e.translation for e in extrinsics],
        data.world_points,
        data.observations,
    )


# ---------------------------------------------------------------------------
# Parameter packing for refinement.
#
# theta = [alpha, gamma, u0, beta, v0,
#          k_1 .. k_arity,
#          w_1 (3), t_1 (3), ..., w_N (3), t_N (3)]
# ---------------------------------------------------------------------------


def _pack(result: CalibrationResult) -> np.ndarray:
    A = result.intrinsics
    parts = [A.alpha, A.gamma, A.u0, A.beta, A.v0]
    parts.extend(result.model.coefficients)
    for e in result.extrinsics:
        parts.extend(e.rotation)
        parts.extend(e.translation)
    return np.array(parts, dtype=float)


def _unpack(theta: np.ndarray, model_id: int, n_views: int):
    arity = coefficient_arity(model_id)
    intr = tuple(float(v) for v in theta[:5])
    k = tuple(float(v) for v in theta[5 : 5 + arity])
    rotations = []
    translations = []
    base = 5 + arity
    for i in range(n_views):
        rotations.append(theta[base + 6 * i : base + 6 * i + 3].copy())
        translations.append(theta[base + 6 * i + 3 : base + 6 * i + 6].copy())
    return intr, k, rotations, translations


def refine(
    initial: CalibrationResult,
    data: CalibrationDataset,
    opts: OptimizerOptions | None = None,
    freeze_intrinsics: bool = False,
) -> CalibrationResult:
    """Jointly minimize the objective by quasi-Newton descent.

    BFGS with central-difference gradients (relative step 1e-6) and a
    backtracking Armijo line search with quadratic interpolation. Parameters
    are the 5 intrinsics, the model's coefficients and all 6N pose entries;
    freeze_intrinsics pins the first five.

    Termination: relative step below step_tolerance, relative objective
    improvement below objective_tolerance on two consecutive iterations, a
    numerically zero gradient, or the iteration/evaluation caps. The caps
    and a failed line search report converged=False carrying the best point
    reached; the accepted-step objective sequence (objective_trace) is
    non-increasing by construction.
    """
    opts = opts or OptimizerOptions()
    model_id = initial.model.model_id
    n_views = data.n_views
    if len(initial.extrinsics) != n_views:
        raise ValueError("initial extrinsics count does not match the dataset")
    pts3 = data.world_points
    observations = data.observations

    def objective_full(theta: np.ndarray) -> float:
        intr, k, rotations, translations = _unpack(theta, model_id, n_views)
        if intr[0] <= 0 or intr[3] <= 0:
            return math.inf
        try:
            return _objective_terms(
                intr, model_id, k, rotations, translations, pts3, observations
            )
        except RadialCalError:
            return math.inf

    theta_full = _pack(initial)
    if freeze_intrinsics:
        free = np.arange(5, len(theta_full))
    else:
        free = np.arange(len(theta_full))

    def embed(tred: np.ndarray) -> np.ndarray:
        th = theta_full.copy()
        th[free] = tred
        return th

    fun = lambda tr: objective_full(embed(tr))
    theta = theta_full[free].copy()
    n = len(theta)

    evals = 0

    def gradient(tr: np.ndarray, f0: float) -> np.ndarray:
        nonlocal evals
        g = np.empty(n)
        for i in range(n):
            h = 1e-6 * max(1.0, abs(tr[i]))
            tp = tr.copy()
            tp[i] += h
            tm = tr.copy()
            tm[i] -= h
            fp = fun(tp)
            fm = fun(tm)
            evals += 2
            if math.isfinite(fp) and math.isfinite(fm):
                g[i] = (fp - fm) / (2.0 * h)
            elif math.isfinite(fp):
                g[i] = (fp - f0) / h
            elif math.isfinite(fm):
                g[i] = (f0 - fm) / h
            else:
                g[i] = 0.0
        return g

    J = fun(theta)
    evals += 1
    if not math.isfinite(J):
        raise ValueError("initial parameters do not give a finite objective")
    trace = [J]
    best_J, best_theta = J, theta.copy()
    iterations = 0
    status = "max_iterations"
    converged = False

    g = gradient(theta, J)
    if float(np.max(np.abs(g))) <= 1e-9 * max(1.0, abs(J)):
        status, converged = "stationary", True
    else:
        Hinv = np.eye(n)
        flat_streak = 0
        while iterations < opts.max_iterations:
            d = -Hinv @ g
            gd = float(g @ d)
            if gd >= 0.0:
                Hinv = np.eye(n)
                d = -g
                gd = float(g @ d)
            alpha = 1.0
            accepted = False
            J_new = J
            for _ in range(30):
                if evals >= opts.max_function_evaluations:
                    break
                trial = theta + alpha * d
                J_try = fun(trial)
                evals += 1
                if J_try <= J + 1e-4 * alpha * gd:
                    J_new, accepted = J_try, True
                    break
                denom = 2.0 * (J_try - J - alpha * gd)
                if math.isfinite(denom) and denom > 0.0:
                    alpha = min(max(-gd * alpha * alpha / denom, 0.1 * alpha), 0.5 * alpha)
                else:
                    alpha *= 0.5
            if not accepted:
                status = (
                    "max_function_evaluations"
                    if evals >= opts.max_function_evaluations
                    else "line_search_failure"
                )
                break
            step = alpha * d
            theta_new = theta + step
            iterations += 1
            trace.append(J_new)
            if J_new < best_J:
                best_J, best_theta = J_new, theta_new.copy()
            rel_step = float(np.max(np.abs(step) / np.maximum(1.0, np.abs(theta))))
            rel_dJ = (J - J_new) / max(1.0, abs(J_new))
            if evals + 2 * n > opts.max_function_evaluations:
                theta, J = theta_new, J_new
                status = "max_function_evaluations"
                break
            g_new = gradient(theta_new, J_new)
            yk = g_new - g
            sy = float(step @ yk)
            if sy > 1e-12 * float(np.linalg.norm(step)) * float(np.linalg.norm(yk)):
                rho = 1.0 / sy
                Vk = np.eye(n) - rho * np.outer(step, yk)
                Hinv = Vk @ Hinv @ Vk.T + rho * np.outer(step, step)
            theta, J, g = theta_new, J_new, g_new
            if rel_step < opts.step_tolerance:
                status, converged = "step_tolerance", True
                break
            flat_streak = flat_streak + 1 if rel_dJ < opts.objective_tolerance else 0
            if flat_streak >= 2:
                status, converged = "objective_tolerance", True
                break
            if float(np.max(np.abs(g))) <= 1e-9 * max(1.0, abs(J)):
                status, converged = "stationary", True
                break

    final_full = embed(best_theta)
    intr, k, rotations, translations = _unpack(final_full, model_id, n_views)
    return CalibrationResult(
        intrinsics=IntrinsicParams(
            alpha=intr[0], gamma=intr[1], u0=intr[2], beta=intr[3], v0=intr[4]
        ),
        extrinsics=tuple(
            Extrinsics(rotation=w, translation=t)
            for w, t in zip(rotations, translations)
        ),
        model=DistortionModel(model_id=model_id, coefficients=k),
        objective=best_J,
        iterations=iterations,
        converged=converged,
        status=status,
        evaluations=evals,
        objective_trace=tuple(trace),
    )


def linear_initialize(data: CalibrationDataset, model_id: int) -> CalibrationResult:
    """Linear estimation stage: homographies, intrinsics, extrinsics, k = 0."""
    homographies = [
        estimate_homography(data.model_points, obs) for obs in data.observations
    ]
    A = estimate_intrinsics_linear(homographies)
    extrinsics = tuple(estimate_extrinsics(A, H) for H in homographies)
    model = DistortionModel(
        model_id=model_id, coefficients=(0.0,) * coefficient_arity(model_id)
    )
    J0 = compute_objective(A, extrinsics, model, data)
    return CalibrationResult(
        intrinsics=A,
        extrinsics=extrinsics,
        model=model,
        objective=J0,
        iterations=0,
        converged=False,
        status="linear",
        objective_trace=(J0,),
    )


def calibrate(
    data: CalibrationDataset, model_id: int, opts: OptimizerOptions | None = None
) -> CalibrationResult:
    """Full pipeline for a single distortion model."""
    return refine(linear_initialize(data, model_id), data, opts)


def fit_distortion(
    data: CalibrationDataset,
    A: IntrinsicParams,
    model_id: int,
    opts: OptimizerOptions | None = None,
) -> CalibrationResult:
    """Fit distortion coefficients and poses under known, fixed intrinsics.

    Extrinsics are initialized per view from the homography decomposition
    using the supplied intrinsics; refinement then optimizes coefficients
    and poses only.
    """
    homographies = [
        estimate_homography(data.model_points, obs) for obs in data.observations
    ]
    extrinsics = tuple(estimate_extrinsics(A, H) for H in homographies)
    model = DistortionModel(
        model_id=model_id, coefficients=(0.0,) * coefficient_arity(model_id)
    )
    J0 = compute_objective(A, extrinsics, model, data)
    initial = CalibrationResult(
        intrinsics=A,
        extrinsics=extrinsics,
        model=model,
        objective=J0,
        iterations=0,
        converged=False,
        status="linear",
        objective_trace=(J0,),
    )
    return refine(initial, data, opts, freeze_intrinsics=True)


def compare_models(
    data: CalibrationDataset, model_ids, opts: OptimizerOptions | None = None
) -> ModelFitReport:
    """Fit every requested model from one shared linear initialization.

    The linear stage runs once; each model is refined from the identical
    intrinsics/extrinsics with its coefficients at zero, so every row's
    initial objective is the same number. A model whose refinement fails is
    recorded with converged=False instead of aborting the report.
    """
    model_ids = sorted(set(int(m) for m in model_ids))
    base = linear_initialize(data, model_ids[0])
    results: dict[int, CalibrationResult] = {}
    for mid in model_ids:
        start = replace(
            base,
            model=DistortionModel(
                model_id=mid, coefficients=(0.0,) * coefficient_arity(mid)
            ),
        )
        try:
            results[mid] = refine(start, data, opts)
        except RadialCalError:
            results[mid] = replace(start, converged=False, status="failed")
    order = sorted(model_ids, key=lambda m: (results[m].objective, m))
    ranks = {mid: rank for rank, mid in enumerate(order)}
    rows = tuple(
        ModelFitRow(
            model_id=mid,
            objective=results[mid].objective,
            rank=ranks[mid],
            coefficients=results[mid].model.coefficients,
            intrinsics=results[mid].intrinsics,
            converged=results[mid].converged,
            iterations=results[mid].iterations,
            initial_objective=results[mid].objective_trace[0]
            if results[mid].objective_trace
            else None,
        )
        for mid in model_ids
    )
    return ModelFitReport(rows=rows)
