"""Dataset files, synthetic data generation, and report rendering.

A dataset directory holds model.txt (planar target points, "X Y" per line,
world Z fixed at 0) plus image001.txt, image002.txt, ... with the matching
pixel observations "u v", index-aligned line by line. Lines starting with
'#' and blank lines are skipped. Values are written back at full %.17g
precision so a write/load cycle is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .calibration import CalibrationDataset, ModelFitReport, project_distorted
from .core import Extrinsics, IntrinsicParams, Mat
from .distortion import DistortionModel
from .errors import CountMismatch, NonPositiveDepth, ParseError

REPORT_HEADER = "model\tJ\trank\tk1\tk2\tk3\talpha\tgamma\tu0\tbeta\tv0"


def _read_rows(path: Path, width: int, label: str) -> Mat:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            text = raw.strip()
            if not text or text.startswith("#"):
                continue
            parts = text.split()
            if len(parts) != width:
                raise ParseError(
                    str(path), lineno, f"expected {width} values, got {len(parts)}"
                )
            try:
                rows.append([float(p) for p in parts])
            except ValueError:
                raise ParseError(str(path), lineno, "not a decimal number") from None
    if not rows:
        raise ParseError(str(path), 0, f"no {label} lines found")
    return np.asarray(rows, dtype=float)


def load_dataset(path) -> CalibrationDataset:
    """Read model.txt plus every image*.txt from a dataset directory."""
    d = Path(path)
    model_file = d / "model.txt"
    if not model_file.is_file():
        raise FileNotFoundError(f"missing {model_file}")
    model_points = _read_rows(model_file, 2, "point")
    image_files = sorted(d.glob("image*.txt"))
    if not image_files:
        raise FileNotFoundError(f"no image*.txt files in {d}")
    observations = []
    for f in image_files:
        pts = _read_rows(f, 2, "point")
        if len(pts) != len(model_points):
            raise CountMismatch(str(f), len(model_points), len(pts))
        observations.append(pts)
    return CalibrationDataset(
        model_points=model_points, observations=tuple(observations)
    )


def _write_rows(path: Path, rows: Mat) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")


def write_dataset(path, data: CalibrationDataset) -> None:
    """Write a dataset directory in the model.txt / imageNNN.txt layout."""
    d = Path(path)
    d.mkdir(parents=True, exist_ok=True)
    _write_rows(d / "model.txt", data.model_points)
    for i, obs in enumerate(data.observations, start=1):
        _write_rows(d / f"image{i:03d}.txt", obs)


def load_intrinsics(path) -> IntrinsicParams:
    """Read one "alpha gamma u0 beta v0" line."""
    rows = _read_rows(Path(path), 5, "intrinsics")
    if len(rows) != 1:
        raise ParseError(str(path), 0, f"expected 1 intrinsics line, got {len(rows)}")
    alpha, gamma, u0, beta, v0 = rows[0]
    return IntrinsicParams(alpha=alpha, gamma=gamma, u0=u0, beta=beta, v0=v0)


def write_intrinsics(path, A: IntrinsicParams) -> None:
    values = (A.alpha, A.gamma, A.u0, A.beta, A.v0)
    Path(path).write_text(" ".join(f"{v:.17g}" for v in values) + "\n", encoding="utf-8")


def planar_grid(rows: int = 8, cols: int = 8, spacing: float = 1.0) -> Mat:
    """Centered rows x cols target grid in world units, shape (rows*cols, 2)."""
    if rows < 1 or cols < 1 or spacing <= 0:
        raise ValueError("grid needs positive dimensions and spacing")
    xs = (np.arange(cols) - (cols - 1) / 2.0) * spacing
    ys = (np.arange(rows) - (rows - 1) / 2.0) * spacing
    X, Y = np.meshgrid(xs, ys)
    return np.column_stack([X.ravel(), Y.ravel()])


@dataclass(frozen=True, slots=True)
class SynthSpec:
    """Everything that determines a synthetic dataset, including the seed."""

    intrinsics: IntrinsicParams
    extrinsics: tuple[Extrinsics, ...]
    model: DistortionModel
    sigma: float = 0.0
    seed: int = 0
    model_points: Mat | None = None

    def __post_init__(self):
        object.__setattr__(self, "extrinsics", tuple(self.extrinsics))
        if not self.extrinsics:
            raise ValueError("need at least one view")
        if not (self.sigma >= 0) or not math.isfinite(self.sigma):
            raise ValueError("sigma must be finite and >= 0")
        if self.model_points is not None:
            pts = np.asarray(self.model_points, dtype=float)
            if pts.ndim != 2 or pts.shape[1] != 2:
                raise ValueError("model_points must be an (n, 2) array")
            object.__setattr__(self, "model_points", pts)


def generate_synthetic(spec: SynthSpec) -> tuple[CalibrationDataset, SynthSpec]:
    """Forward-project the target through every view, optionally adding noise.

    Observations are the distorted projections plus isotropic Gaussian pixel
    noise of the spec's sigma, drawn from a generator seeded with the spec's
    seed (no draws happen when sigma is 0). Returns the dataset together
    with the resolved spec: identical to the input except that a None
    model_points is replaced by the default 8x8 grid actually used.
    """
    pts2 = spec.model_points if spec.model_points is not None else planar_grid()
    resolved = replace(spec, model_points=pts2)
    world = np.column_stack([pts2, np.zeros(len(pts2))])
    rng = np.random.default_rng(spec.seed)
    observations = []
    for i, ext in enumerate(spec.extrinsics):
        try:
            uv = project_distorted(spec.intrinsics, ext, spec.model, world)
        except NonPositiveDepth as exc:
            raise NonPositiveDepth(f"view {i}: {exc}") from None
        if spec.sigma > 0:
            uv = uv + rng.normal(0.0, spec.sigma, size=uv.shape)
        observations.append(uv)
    dataset = CalibrationDataset(model_points=pts2, observations=tuple(observations))
    return dataset, resolved


def truth_record(spec: SynthSpec) -> dict:
    """JSON-ready ground-truth document for a resolved SynthSpec."""
    A = spec.intrinsics
    return {
        "intrinsics": {
            "alpha": A.alpha,
            "gamma": A.gamma,
            "u0": A.u0,
            "beta": A.beta,
            "v0": A.v0,
        },
        "model_id": spec.model.model_id,
        "coefficients": list(spec.model.coefficients),
        "views": [
            {"rotation": [float(v) for v in e.rotation],
             "translation": [float(v) for v in e.translation]}
            for e in spec.extrinsics
        ],
        "sigma": spec.sigma,
        "seed": spec.seed,
    }


def render_report(report: ModelFitReport) -> str:
    """TSV comparison table: one row per model, 4 decimal places throughout.

    Coefficient columns k2/k3 are left empty for models with fewer than
    two/three coefficients.
    """
    lines = [REPORT_HEADER]
    for row in report.rows:
        k = list(row.coefficients)[:3]
        k += [None] * (3 - len(k))
        A = row.intrinsics
        cells = [
            str(row.model_id),
            f"{row.objective:.4f}",
            str(row.rank),
            *("" if v is None else f"{v:.4f}" for v in k),
            f"{A.alpha:.4f}",
            f"{A.gamma:.4f}",
            f"{A.u0:.4f}",
            f"{A.beta:.4f}",
            f"{A.v0:.4f}",
        ]
        lines.append("\t".join(cells))
    return "\n".join(lines) + "\n"
