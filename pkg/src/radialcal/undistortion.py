"""Inversion of the radial distortion models.

Every model except 0 inverts analytically. Fixing the ray slope c = y_d/x_d
and assuming a sign sigma for the unknown x turns x_d = x f(r) into a
polynomial in x of degree at most three (see branch_reduce). The algorithm:

1. the origin maps to the origin;
2. solve the sigma=+1 reduction, discard complex roots and roots with the
   wrong sign, keep the survivor closest to x_d;
3. repeat with sigma=-1;
4. of the (up to) two branch candidates, return the one closest to x_d,
   preferring the candidate matching the sign of x_d on a tie.

Model 0 reduces to a quintic, so it is inverted numerically instead
(undistort_numeric, which also serves as a cross-check oracle for the
analytic path).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .core import IntrinsicParams, Vec, denormalize, normalize
from .distortion import DistortionModel, RadialAuxiliaries, _profile_scalar
from .errors import (
    BracketNotFound,
    DegenerateLeadingCoefficient,
    NoRealCandidate,
    SingularProfile,
    UnsupportedModel,
    ZeroPolynomial,
)

_SQRT3 = math.sqrt(3.0)

# |imag| above this relative threshold marks a root as genuinely complex.
IMAG_EPS = 1e-8
# Leading coefficients below this magnitude collapse the polynomial degree.
COEFF_EPS = 1e-12


@dataclass(frozen=True, slots=True)
class CubicProblem:
    """The cubic y = x + p x^2 + q x^3 in its inversion normal form."""

    y: float
    p: float
    q: float


def solve_cubic_closed(prob: CubicProblem) -> tuple[complex, complex, complex]:
    """All three roots of y = x + p x^2 + q x^3 by closed-form radicals.

    The three roots come out of one cube root E1 and its companion
    E2 = (p^2 - 3q) / (q E1):

        x1 = E1/(6q) + 2 E2/3 - p/(3q)
        x2,3 = -E1/(12q) - E2/3 - p/(3q) +- (sqrt(3)/2) (E1/(6q) - 2 E2/3) j

    Of the two square-root signs available inside E1 we take the one whose
    bracket has the larger magnitude: the other choice can cancel to machine
    noise and poison the cube root. Either sign is algebraically valid (they
    swap the two halves of the root pair E1/(6q) and 2 E2/3).

    Raises DegenerateLeadingCoefficient when |q| < COEFF_EPS; the formulas
    divide by q, so degenerate cubics belong in solve_poly_real.
    """
    y, p, q = prob.y, prob.p, prob.q
    if abs(q) < COEFF_EPS:
        raise DegenerateLeadingCoefficient(f"|q|={abs(q)!r} too small for the closed form")
    inner = 4.0 * q - p * p + 18.0 * p * q * y + 27.0 * y * y * q * q - 4.0 * y * p**3
    sq = 12.0 * _SQRT3 * q * cmath.sqrt(complex(inner))
    base = 36.0 * p * q + 108.0 * y * q * q - 8.0 * p**3
    bracket = base + sq if abs(base + sq) >= abs(base - sq) else base - sq
    e1 = bracket ** (1.0 / 3.0)
    if e1 == 0:
        # Triple root: only possible when the depressed cubic degenerates.
        x = complex(-p / (3.0 * q))
        return (x, x, x)
    e2 = (p * p - 3.0 * q) / (q * e1)
    a = e1 / (6.0 * q)
    b = (2.0 / 3.0) * e2
    shift = -p / (3.0 * q)
    x1 = a + b + shift
    re = -0.5 * a - 0.5 * b + shift
    im = (_SQRT3 / 2.0) * (a - b)
    return (x1, re + 1j * im, re - 1j * im)


def solve_poly_real(coeffs) -> list[float]:
    """Real roots of a polynomial of degree <= 3, ascending coefficients.

    Leading coefficients below COEFF_EPS collapse the degree. Each root gets
    one Newton polish step. Raises ZeroPolynomial if every coefficient is
    below 1e-15 in magnitude.
    """
    c = [float(v) for v in coeffs]
    if all(abs(v) < 1e-15 for v in c):
        raise ZeroPolynomial("all coefficients are numerically zero")
    while len(c) > 1 and abs(c[-1]) < COEFF_EPS:
        c.pop()
    deg = len(c) - 1
    if deg == 0:
        return []
    if deg == 1:
        roots = [-c[0] / c[1]]
    elif deg == 2:
        a2, a1, a0 = c[2], c[1], c[0]
        disc = a1 * a1 - 4.0 * a2 * a0
        if disc < 0.0:
            return []
        # Avoid cancellation: compute the large-magnitude root first, then
        # get the other from the product a0/a2.
        sd = math.sqrt(disc)
        qq = -0.5 * (a1 + sd) if a1 >= 0.0 else -0.5 * (a1 - sd)
        roots = [qq / a2]
        roots.append(a0 / qq if qq != 0.0 else 0.0)
    else:
        roots = [
            float(z.real)
            for z in np.roots(c[::-1])
            if abs(z.imag) <= IMAG_EPS * max(1.0, abs(z.real))
        ]
    return [_newton_polish(c, x) for x in roots]


def _newton_polish(c: list[float], x: float) -> float:
    val = 0.0
    dval = 0.0
    for coef in reversed(c):
        dval = dval * x + val
        val = val * x + coef
    if abs(dval) < 1e-300:
        return x
    return x - val / dval


def branch_reduce(
    model: DistortionModel, x_d: float, aux: RadialAuxiliaries
) -> tuple[float, ...]:
    """Polynomial whose admissible real roots are the inversion candidates.

    Returns ascending coefficients (a0, a1, ...) of the polynomial in x
    obtained by substituting r = aux.s * sigma * x into x_d = x f(r), for the
    sign assumption sigma = aux.sigma. Model 0 has no such reduction.
    """
    k = model.coefficients
    s, t, sg = aux.s, aux.t, aux.sigma
    mid = model.model_id
    if mid == 1:
        return (-x_d, 1.0, k[0] * sg * s)
    if mid == 2:
        return (-x_d, 1.0, 0.0, k[0] * t)
    if mid == 3:
        return (-x_d, 1.0, k[0] * sg * s, k[1] * t)
    if mid == 4:
        return (-x_d, 1.0 - x_d * k[0] * sg * s)
    if mid == 5:
        return (x_d, -1.0, x_d * k[0] * t)
    if mid == 6:
        return (-x_d, 1.0, k[0] * sg * s - x_d * k[1] * t)
    if mid == 7:
        return (x_d, x_d * k[0] * sg * s - 1.0, x_d * k[1] * t)
    if mid == 8:
        return (-x_d, 1.0 - x_d * k[1] * sg * s, k[0] * sg * s - x_d * k[2] * t)
    if mid == 9:
        return (-x_d, 1.0 - x_d * k[1] * sg * s, -x_d * k[2] * t, k[0] * t)
    raise UnsupportedModel(f"model {mid} has no polynomial branch reduction")


def _branch_candidate(
    model: DistortionModel, x_d: float, aux: RadialAuxiliaries
) -> float | None:
    """Best admissible real root for one sign branch, or None."""
    coeffs = branch_reduce(model, x_d, aux)
    roots: list[float] = []
    if len(coeffs) == 4 and abs(coeffs[3]) >= COEFF_EPS and abs(coeffs[1]) >= COEFF_EPS:
        # Normalize a0 + a1 x + a2 x^2 + a3 x^3 = 0 to y = x + p x^2 + q x^3.
        a1 = coeffs[1]
        prob = CubicProblem(y=-coeffs[0] / a1, p=coeffs[2] / a1, q=coeffs[3] / a1)
        try:
            for z in solve_cubic_closed(prob):
                if abs(z.imag) <= IMAG_EPS * max(1.0, abs(z.real)):
                    roots.append(z.real)
        except DegenerateLeadingCoefficient:
            roots = solve_poly_real(coeffs)
    else:
        roots = solve_poly_real(coeffs)
    best = None
    sg = aux.sigma
    for x in roots:
        if x * sg <= 0.0:
            continue
        if best is None or abs(x - x_d) < abs(best - x_d):
            best = x
    return best


def undistort_normalized(model: DistortionModel, pd: Vec) -> Vec:
    """Invert distort_normalized for models 1-9 (model 0 goes numeric).

    Raises NoRealCandidate when neither sign branch has an admissible root,
    i.e. pd lies outside the model's invertible range for these coefficients.
    """
    if model.model_id == 0:
        return undistort_numeric(model, pd)
    pd = np.asarray(pd, dtype=float)
    xd, yd = float(pd[0]), float(pd[1])
    if xd == 0.0 and yd == 0.0:
        return np.array([0.0, 0.0])
    # Drive the reduction from the larger coordinate so |c| <= 1; this keeps
    # the slope factors bounded (t <= 2) and handles x_d = 0 exactly.
    swap = abs(xd) < abs(yd)
    if swap:
        xd, yd = yd, xd
    c = yd / xd
    cand_pos = _branch_candidate(model, xd, RadialAuxiliaries.from_slope(c, +1))
    cand_neg = _branch_candidate(model, xd, RadialAuxiliaries.from_slope(c, -1))
    if cand_pos is None and cand_neg is None:
        raise NoRealCandidate(
            f"model {model.model_id} has no admissible preimage for ({xd!r}, {yd!r})"
        )
    if cand_pos is None:
        x = cand_neg
    elif cand_neg is None:
        x = cand_pos
    else:
        dp = abs(cand_pos - xd)
        dn = abs(cand_neg - xd)
        if dp < dn:
            x = cand_pos
        elif dn < dp:
            x = cand_neg
        else:
            x = cand_pos if xd > 0.0 else cand_neg
    y = c * x
    if swap:
        x, y = y, x
    return np.array([x, y])


def undistort_numeric(model: DistortionModel, pd: Vec, r_max: float = 2.0) -> Vec:
    """Invert any model by bracketed bisection along the fixed ray.

    Solves x f(s x) = x_d for x in (0, r_max/s] after mirroring the problem
    so the driving distorted coordinate is positive (every profile is even in
    r, making the ray map odd). The first sign change of the residual away
    from the origin is bracketed, bisected, and Newton-polished.

    Raises BracketNotFound when no sign change exists on the interval.
    """
    pd = np.asarray(pd, dtype=float)
    xd, yd = float(pd[0]), float(pd[1])
    if xd == 0.0 and yd == 0.0:
        return np.array([0.0, 0.0])
    swap = abs(xd) < abs(yd)
    if swap:
        xd, yd = yd, xd
    mirror = xd < 0.0
    if mirror:
        xd, yd = -xd, -yd
    c = yd / xd
    s = math.sqrt(1.0 + c * c)
    mid, k = model.model_id, model.coefficients

    def residual(x: float) -> float:
        return x * _profile_scalar(mid, k, s * x) - xd

    x_hi = r_max / s
    lo, f_lo = 0.0, -xd
    hi = None
    steps = 512
    for i in range(1, steps + 1):
        x = x_hi * i / steps
        try:
            f = residual(x)
        except SingularProfile:
            break  # singular profile ahead; the bracket must precede it
        if not math.isfinite(f):
            break
        if f == 0.0:
            lo, hi, f_lo = x, x, 0.0
            break
        if f_lo < 0.0 < f or f < 0.0 < f_lo:
            hi = x
            break
        lo, f_lo = x, f
    if hi is None:
        raise BracketNotFound(
            f"model {mid}: no sign change on (0, {x_hi!r}] for x_d={xd!r}"
        )
    if hi > lo:
        for _ in range(48):
            m = 0.5 * (lo + hi)
            fm = residual(m)
            if fm == 0.0:
                lo = hi = m
                break
            if (fm < 0.0) == (f_lo < 0.0):
                lo, f_lo = m, fm
            else:
                hi = m
    x = 0.5 * (lo + hi)
    try:
        for _ in range(2):
            h = 1e-7 * max(1.0, abs(x))
            d = (residual(x + h) - residual(x - h)) / (2.0 * h)
            if d == 0.0 or not math.isfinite(d):
                break
            x -= residual(x) / d
    except SingularProfile:
        pass  # keep the bisection value; the polish probe stepped too far
    y = c * x
    if mirror:
        x, y = -x, -y
    if swap:
        x, y = y, x
    return np.array([x, y])


def undistort_pixel(A: IntrinsicParams, model: DistortionModel, pd: Vec) -> Vec:
    """Inverse of distort_pixel: undistort in the normalized frame."""
    return denormalize(A, undistort_normalized(model, normalize(A, pd)))
