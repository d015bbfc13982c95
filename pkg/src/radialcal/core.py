"""Pinhole geometry: intrinsics, extrinsics, and the ideal projection chain.

Conventions used throughout the library:

* Pixel coordinates (u, v) relate to normalized camera-frame coordinates
  (x, y) = (X^c/Z^c, Y^c/Z^c) through the upper-triangular intrinsic matrix A.
* Rotations are parameterized as axis-angle 3-vectors (direction = axis,
  magnitude = angle in radians); world points map into the camera frame by
  P^c = R P^w + t.
* All geometry is double precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TypeAlias

import numpy as np

from .errors import NonPositiveDepth

Vec: TypeAlias = np.ndarray
Mat: TypeAlias = np.ndarray

# Homogeneous scale below this magnitude counts as "on the camera plane".
DEPTH_EPS = 1e-12


@dataclass(frozen=True, slots=True)
class IntrinsicParams:
    """The five intrinsic parameters forming the matrix A.

    alpha, beta are the focal scales along u and v in pixels, gamma is the
    skew coefficient, (u0, v0) the principal point.
    """

    alpha: float
    beta: float
    gamma: float
    u0: float
    v0: float

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise ValueError(
                f"focal scales must be positive, got alpha={self.alpha}, beta={self.beta}"
            )

    @property
    def matrix(self) -> Mat:
        return np.array(
            [
                [self.alpha, self.gamma, self.u0],
                [0.0, self.beta, self.v0],
                [0.0, 0.0, 1.0],
            ]
        )

    @property
    def matrix_inv(self) -> Mat:
        """Closed-form inverse of the upper-triangular A."""
        a, b, g, u0, v0 = self.alpha, self.beta, self.gamma, self.u0, self.v0
        return np.array(
            [
                [1.0 / a, -g / (a * b), (g * v0 - b * u0) / (a * b)],
                [0.0, 1.0 / b, -v0 / b],
                [0.0, 0.0, 1.0],
            ]
        )

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        """Parameters in report column order (alpha, gamma, u0, beta, v0)."""
        return (self.alpha, self.gamma, self.u0, self.beta, self.v0)


@dataclass(frozen=True, slots=True)
class Extrinsics:
    """World-to-camera transform: axis-angle rotation plus translation."""

    rotation: Vec
    translation: Vec

    def __post_init__(self):
        object.__setattr__(self, "rotation", np.asarray(self.rotation, dtype=float))
        object.__setattr__(self, "translation", np.asarray(self.translation, dtype=float))
        if self.rotation.shape != (3,) or self.translation.shape != (3,):
            raise ValueError("rotation and translation must be 3-vectors")

    @property
    def matrix(self) -> Mat:
        return rotation_to_matrix(self.rotation)


def rotation_to_matrix(rotation: Vec) -> Mat:
    """Expand an axis-angle 3-vector into an orthonormal rotation matrix.

    The zero vector maps to the identity.
    """
    w = np.asarray(rotation, dtype=float)
    theta = float(np.linalg.norm(w))
    K = np.array(
        [
            [0.0, -w[2], w[1]],
            [w[2], 0.0, -w[0]],
            [-w[1], w[0], 0.0],
        ]
    )
    if theta < 1e-12:
        # First-order expansion; deviation from orthonormality is O(theta^2).
        return np.eye(3) + K
    K /= theta
    return np.eye(3) + math.sin(theta) * K + (1.0 - math.cos(theta)) * (K @ K)


def rotation_from_matrix(R: Mat) -> Vec:
    """Recover the axis-angle 3-vector from a rotation matrix.

    Inverse of rotation_to_matrix up to the usual 2*pi ambiguity; angles are
    returned in [0, pi].
    """
    R = np.asarray(R, dtype=float)
    v = np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    # The antisymmetric part gives 2 sin(theta) directly, so the angle comes
    # from atan2 and stays well conditioned at both ends of [0, pi].
    sin_theta = float(np.linalg.norm(v)) / 2.0
    cos_theta = min(1.0, max(-1.0, (float(np.trace(R)) - 1.0) / 2.0))
    theta = math.atan2(sin_theta, cos_theta)
    if theta < 1e-12:
        return v / 2.0
    if sin_theta >= 1e-10:
        return (theta / (2.0 * sin_theta)) * v
    # Within rounding distance of a half turn the antisymmetric part carries
    # no signal; take the axis from the structure (R + I)/2 = axis axis^T.
    M = (R + np.eye(3)) / 2.0
    axis = np.sqrt(np.maximum(np.diag(M), 0.0))
    lead = int(np.argmax(axis))
    for i in range(3):
        if i != lead and M[lead, i] < 0.0:
            axis[i] = -axis[i]
    axis /= np.linalg.norm(axis)
    return theta * axis


def normalize(A: IntrinsicParams, p: Vec) -> Vec:
    """Map pixel coordinates to normalized coordinates by applying A^-1.

    Accepts a single (u, v) pair or an (..., 2) array.
    """
    p = np.asarray(p, dtype=float)
    u = p[..., 0]
    v = p[..., 1]
    y = (v - A.v0) / A.beta
    x = (u - A.u0 - A.gamma * y) / A.alpha
    return np.stack([x, y], axis=-1)


def denormalize(A: IntrinsicParams, n: Vec) -> Vec:
    """Map normalized coordinates to pixel coordinates by applying A."""
    n = np.asarray(n, dtype=float)
    x = n[..., 0]
    y = n[..., 1]
    u = A.alpha * x + A.gamma * y + A.u0
    v = A.beta * y + A.v0
    return np.stack([u, v], axis=-1)


def world_to_camera(ext: Extrinsics, P: Vec) -> Vec:
    """Apply P^c = R P^w + t. Accepts (..., 3) arrays."""
    P = np.asarray(P, dtype=float)
    return P @ ext.matrix.T + ext.translation


def project_ideal(A: IntrinsicParams, ext: Extrinsics, P: Vec) -> Vec:
    """Distortion-free projection of world points to pixels.

    Computes the homogeneous product A [R | t] [P; 1] and dehomogenizes.
    Accepts a single world point or an (..., 3) array.
    """
    P = np.asarray(P, dtype=float)
    M = A.matrix @ np.column_stack([ext.matrix, ext.translation])
    Ph = np.concatenate([P, np.ones(P.shape[:-1] + (1,))], axis=-1)
    m = Ph @ M.T
    z = m[..., 2]
    if np.any(z < DEPTH_EPS):
        bad = np.argwhere(np.atleast_1d(z) < DEPTH_EPS)[0]
        raise NonPositiveDepth(f"point at index {tuple(bad)} has Z^c <= 0")
    return m[..., :2] / z[..., None]
