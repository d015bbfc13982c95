"""The ten radial profile models and the forward distortion maps.

Every model is a scalar profile f(r) applied multiplicatively along the ray
through the origin of the normalized frame:

    (x_d, y_d) = (x f(r), y f(r)),   r^2 = x^2 + y^2.

Model ids and coefficient counts:

    0: 1 + k1 r^2 + k2 r^4                      (2 coefficients)
    1: 1 + k r                                  (1)
    2: 1 + k r^2                                (1)
    3: 1 + k1 r + k2 r^2                        (2)
    4: 1 / (1 + k r)                            (1)
    5: 1 / (1 + k r^2)                          (1)
    6: (1 + k1 r) / (1 + k2 r^2)                (2)
    7: 1 / (1 + k1 r + k2 r^2)                  (2)
    8: (1 + k1 r) / (1 + k2 r + k3 r^2)         (3)
    9: (1 + k1 r^2) / (1 + k2 r + k3 r^2)       (3)

All profiles satisfy f(0) = 1, so the origin is always a fixed point and
F(r) = r f(r) vanishes only at r = 0 within each model's valid range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import IntrinsicParams, Vec, denormalize, normalize
from .errors import SingularProfile, UnknownModel

MODEL_IDS = tuple(range(10))

_ARITY = {0: 2, 1: 1, 2: 1, 3: 2, 4: 1, 5: 1, 6: 2, 7: 2, 8: 3, 9: 3}

# Rational denominators below this magnitude are treated as singular.
DENOM_EPS = 1e-12


def coefficient_arity(model_id: int) -> int:
    """Number of distortion coefficients the model takes."""
    try:
        return _ARITY[model_id]
    except (KeyError, TypeError):
        raise UnknownModel(f"no distortion model with id {model_id!r}") from None


@dataclass(frozen=True, slots=True)
class DistortionModel:
    """A model id together with its coefficient vector."""

    model_id: int
    coefficients: tuple[float, ...]

    def __post_init__(self):
        arity = coefficient_arity(self.model_id)
        coeffs = tuple(float(k) for k in self.coefficients)
        if len(coeffs) != arity:
            raise ValueError(
                f"model {self.model_id} takes {arity} coefficient(s), got {len(coeffs)}"
            )
        object.__setattr__(self, "coefficients", coeffs)


@dataclass(frozen=True, slots=True)
class RadialAuxiliaries:
    """Fixed-ray factorization terms for points with slope c = y_d/x_d.

    Along the ray y = c x the radius factors as r = s |x| with s = sqrt(1+c^2),
    and the squared factor t = 1 + c^2 = s^2 multiplies even powers. sigma
    carries the sign of the undistorted coordinate x: during inversion it is
    the branch assumption being tested.
    """

    c: float
    s: float
    t: float
    sigma: int

    @classmethod
    def from_slope(cls, c: float, sigma: int = 1) -> "RadialAuxiliaries":
        t = 1.0 + c * c
        return cls(c=c, s=math.sqrt(t), t=t, sigma=sigma)


def _profile_scalar(model_id: int, k: tuple[float, ...], r: float) -> float:
    # Expression shapes mirror _profile_array exactly so the two paths agree
    # to the last bit.
    r2 = r * r
    if model_id == 0:
        return 1.0 + k[0] * r2 + k[1] * r2 * r2
    if model_id == 1:
        return 1.0 + k[0] * r
    if model_id == 2:
        return 1.0 + k[0] * r2
    if model_id == 3:
        return 1.0 + k[0] * r + k[1] * r2
    if model_id == 4:
        num, den = 1.0, 1.0 + k[0] * r
    elif model_id == 5:
        num, den = 1.0, 1.0 + k[0] * r2
    elif model_id == 6:
        num, den = 1.0 + k[0] * r, 1.0 + k[1] * r2
    elif model_id == 7:
        num, den = 1.0, 1.0 + k[0] * r + k[1] * r2
    elif model_id == 8:
        num, den = 1.0 + k[0] * r, 1.0 + k[1] * r + k[2] * r2
    elif model_id == 9:
        num, den = 1.0 + k[0] * r2, 1.0 + k[1] * r + k[2] * r2
    else:
        raise UnknownModel(f"no distortion model with id {model_id!r}")
    if abs(den) < DENOM_EPS:
        raise SingularProfile(f"model {model_id} denominator vanished at r={r!r}")
    return num / den


def _profile_array(model_id: int, k: tuple[float, ...], r: np.ndarray) -> np.ndarray:
    r2 = r * r
    if model_id == 0:
        return 1.0 + k[0] * r2 + k[1] * r2 * r2
    if model_id == 1:
        return 1.0 + k[0] * r
    if model_id == 2:
        return 1.0 + k[0] * r2
    if model_id == 3:
        return 1.0 + k[0] * r + k[1] * r2
    if model_id == 4:
        num, den = 1.0, 1.0 + k[0] * r
    elif model_id == 5:
        num, den = 1.0, 1.0 + k[0] * r2
    elif model_id == 6:
        num, den = 1.0 + k[0] * r, 1.0 + k[1] * r2
    elif model_id == 7:
        num, den = 1.0, 1.0 + k[0] * r + k[1] * r2
    elif model_id == 8:
        num, den = 1.0 + k[0] * r, 1.0 + k[1] * r + k[2] * r2
    elif model_id == 9:
        num, den = 1.0 + k[0] * r2, 1.0 + k[1] * r + k[2] * r2
    else:
        raise UnknownModel(f"no distortion model with id {model_id!r}")
    small = np.abs(den) < DENOM_EPS
    if np.any(small):
        where = float(np.atleast_1d(r)[np.argwhere(np.atleast_1d(small))[0][0]])
        raise SingularProfile(f"model {model_id} denominator vanished at r={where!r}")
    return num / den


def eval_profile(model: DistortionModel, r):
    """Evaluate the radial scale factor f(r).

    r may be a nonnegative scalar or an ndarray of radii; the return type
    matches. Raises SingularProfile if any rational denominator falls below
    DENOM_EPS in magnitude.
    """
    if isinstance(r, np.ndarray):
        return _profile_array(model.model_id, model.coefficients, r)
    return _profile_scalar(model.model_id, model.coefficients, float(r))


def distort_normalized(model: DistortionModel, p: Vec) -> Vec:
    """Forward distortion in the normalized frame: p -> p * f(|p|).

    Accepts a single (x, y) pair or an (..., 2) array.
    """
    p = np.asarray(p, dtype=float)
    if p.shape == (2,):
        x, y = float(p[0]), float(p[1])
        f = _profile_scalar(model.model_id, model.coefficients, math.hypot(x, y))
        return np.array([x * f, y * f])
    r = np.hypot(p[..., 0], p[..., 1])
    f = _profile_array(model.model_id, model.coefficients, r)
    return p * f[..., None]


def distort_pixel(A: IntrinsicParams, model: DistortionModel, p: Vec) -> Vec:
    """Forward distortion acting on pixel coordinates.

    The distorted pixel is A applied to the distorted normalized point, which
    coincides with distorting in the pixel frame directly: both orderings
    describe the same map because A is shared by (x, y) and (x_d, y_d).
    """
    return denormalize(A, distort_normalized(model, normalize(A, p)))
