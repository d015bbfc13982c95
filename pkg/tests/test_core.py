import numpy as np
import pytest

import radialcal as rc
from _helpers import random_intrinsics


def quaternion_rotation(w):
    """Independent rotation construction via unit quaternions."""
    angle = np.linalg.norm(w)
    if angle < 1e-300:
        return np.eye(3)
    ax = np.asarray(w) / angle
    qw = np.cos(angle / 2.0)
    qx, qy, qz = np.sin(angle / 2.0) * ax
    return np.array(
        [
            [1 - 2 * (qy * qy + qz * qz), 2 * (qx * qy - qz * qw), 2 * (qx * qz + qy * qw)],
            [2 * (qx * qy + qz * qw), 1 - 2 * (qx * qx + qz * qz), 2 * (qy * qz - qx * qw)],
            [2 * (qx * qz - qy * qw), 2 * (qy * qz + qx * qw), 1 - 2 * (qx * qx + qy * qy)],
        ]
    )


class TestIntrinsicParams:
    def test_rejects_nonpositive_focals(self):
        with pytest.raises(ValueError):
            rc.IntrinsicParams(alpha=0.0, gamma=0.0, u0=0.0, beta=1.0, v0=0.0)
        with pytest.raises(ValueError):
            rc.IntrinsicParams(alpha=1.0, gamma=0.0, u0=0.0, beta=-2.0, v0=0.0)

    def test_matrix_layout(self):
        A = rc.IntrinsicParams(alpha=2.0, gamma=5.0, u0=10.0, beta=3.0, v0=20.0)
        M = A.matrix
        assert M[1, 0] == 0.0 and M[2, 0] == 0.0 and M[2, 1] == 0.0
        assert M[2, 2] == 1.0
        assert M[0, 0] == 2.0 and M[0, 1] == 5.0 and M[0, 2] == 10.0

    def test_inverse_is_exact(self):
        rng = np.random.default_rng(7)
        for _ in range(500):
            A = random_intrinsics(rng)
            err = np.max(np.abs(A.matrix @ A.matrix_inv - np.eye(3)))
            assert err < 1e-12

    def test_tuple_order(self):
        A = rc.IntrinsicParams(alpha=1.0, gamma=2.0, u0=3.0, beta=4.0, v0=5.0)
        assert A.as_tuple() == (1.0, 2.0, 3.0, 4.0, 5.0)


class TestRotation:
    def test_zero_vector_gives_identity(self):
        R = rc.rotation_to_matrix(np.zeros(3))
        assert np.allclose(R, np.eye(3), atol=1e-15)

    def test_quarter_turn_about_z(self):
        R = rc.rotation_to_matrix(np.array([0.0, 0.0, np.pi / 2]))
        assert np.max(np.abs(R @ [1.0, 0.0, 0.0] - [0.0, 1.0, 0.0])) < 1e-12

    def test_matches_quaternion_construction(self):
        rng = np.random.default_rng(11)
        for _ in range(500):
            w = rng.uniform(-1.0, 1.0, 3)
            w *= rng.uniform(0.0, np.pi) / max(np.linalg.norm(w), 1e-12)
            assert np.max(np.abs(rc.rotation_to_matrix(w) - quaternion_rotation(w))) < 1e-12

    def test_orthonormal_and_right_handed(self):
        rng = np.random.default_rng(13)
        for _ in range(1000):
            w = rng.normal(size=3)
            w *= rng.uniform(0.0, np.pi) / np.linalg.norm(w)
            R = rc.rotation_to_matrix(w)
            assert np.max(np.abs(R.T @ R - np.eye(3))) < 1e-12
            assert abs(np.linalg.det(R) - 1.0) < 1e-12

    def test_axis_angle_round_trip(self):
        rng = np.random.default_rng(17)
        for _ in range(500):
            w = rng.normal(size=3)
            w *= rng.uniform(1e-6, np.pi - 1e-6) / np.linalg.norm(w)
            back = rc.rotation_from_matrix(rc.rotation_to_matrix(w))
            assert np.max(np.abs(back - w)) < 1e-9

    def test_round_trip_near_half_turn(self):
        rng = np.random.default_rng(19)
        for _ in range(100):
            w = rng.normal(size=3)
            w *= rng.uniform(np.pi - 1e-4, np.pi) / np.linalg.norm(w)
            R = rc.rotation_to_matrix(w)
            R2 = rc.rotation_to_matrix(rc.rotation_from_matrix(R))
            assert np.max(np.abs(R2 - R)) < 1e-9

    def test_extrinsics_matrix_property(self):
        w = np.array([0.3, -0.2, 0.1])
        ext = rc.Extrinsics(rotation=w, translation=np.array([1.0, 2.0, 3.0]))
        assert np.array_equal(ext.matrix, rc.rotation_to_matrix(w))


class TestProjection:
    def test_optical_axis(self):
        A = rc.IntrinsicParams(alpha=1.0, gamma=0.0, u0=0.0, beta=1.0, v0=0.0)
        ext = rc.Extrinsics(rotation=np.zeros(3), translation=np.zeros(3))
        uv = rc.project_ideal(A, ext, np.array([0.0, 0.0, 1.0]))
        assert np.max(np.abs(uv)) < 1e-15

    def test_hand_value(self):
        A = rc.IntrinsicParams(alpha=2.0, gamma=0.0, u0=10.0, beta=3.0, v0=20.0)
        ext = rc.Extrinsics(rotation=np.zeros(3), translation=np.zeros(3))
        uv = rc.project_ideal(A, ext, np.array([1.0, 1.0, 2.0]))
        assert np.max(np.abs(uv - [11.0, 21.5])) < 1e-12

    def test_behind_camera(self):
        A = rc.IntrinsicParams(alpha=1.0, gamma=0.0, u0=0.0, beta=1.0, v0=0.0)
        ext = rc.Extrinsics(rotation=np.zeros(3), translation=np.zeros(3))
        with pytest.raises(rc.NonPositiveDepth):
            rc.project_ideal(A, ext, np.array([0.0, 0.0, -1.0]))
        with pytest.raises(rc.NonPositiveDepth):
            rc.project_ideal(A, ext, np.array([0.1, 0.1, 0.0]))

    def test_world_to_camera_is_rigid_motion(self):
        rng = np.random.default_rng(23)
        for _ in range(200):
            w = rng.normal(size=3) * 0.5
            t = rng.normal(size=3)
            ext = rc.Extrinsics(rotation=w, translation=t)
            p = rng.normal(size=3)
            expected = rc.rotation_to_matrix(w) @ p + t
            assert np.max(np.abs(rc.world_to_camera(ext, p) - expected)) < 1e-14

    def test_two_projection_paths_agree(self):
        rng = np.random.default_rng(29)
        checked = 0
        while checked < 500:
            A = random_intrinsics(rng)
            w = rng.normal(size=3) * 0.4
            t = np.array([rng.normal(scale=0.5), rng.normal(scale=0.5), rng.uniform(4.0, 20.0)])
            ext = rc.Extrinsics(rotation=w, translation=t)
            P = np.array([rng.uniform(-3, 3), rng.uniform(-3, 3), 0.0])
            Pc = rc.world_to_camera(ext, P)
            if Pc[2] < 1e-6:
                continue
            direct = rc.project_ideal(A, ext, P)
            via_ratios = rc.denormalize(A, Pc[:2] / Pc[2])
            assert np.max(np.abs(direct - via_ratios)) < 1e-10
            checked += 1


class TestNormalize:
    def test_principal_point_maps_to_origin(self):
        A = rc.IntrinsicParams(alpha=1.0, gamma=0.0, u0=160.0, beta=1.0, v0=120.0)
        assert np.max(np.abs(rc.normalize(A, np.array([160.0, 120.0])))) < 1e-15

    def test_hand_value(self):
        A = rc.IntrinsicParams(alpha=2.0, gamma=0.0, u0=10.0, beta=4.0, v0=20.0)
        n = rc.normalize(A, np.array([14.0, 28.0]))
        assert np.max(np.abs(n - [2.0, 2.0])) < 1e-14

    def test_denormalize_hand_value(self):
        A = rc.IntrinsicParams(alpha=2.0, gamma=5.0, u0=0.0, beta=3.0, v0=0.0)
        uv = rc.denormalize(A, np.array([1.0, 1.0]))
        assert np.max(np.abs(uv - [7.0, 3.0])) < 1e-14

    def test_inverse_pair(self):
        rng = np.random.default_rng(31)
        for _ in range(1000):
            A = random_intrinsics(rng)
            p = rng.uniform(-2000.0, 2000.0, 2)
            back = rc.denormalize(A, rc.normalize(A, p))
            assert np.max(np.abs(back - p)) < 1e-12 * max(1.0, np.max(np.abs(p)))

    def test_broadcasts_over_point_arrays(self):
        rng = np.random.default_rng(37)
        A = random_intrinsics(rng)
        pts = rng.uniform(-500.0, 500.0, (40, 2))
        batch = rc.normalize(A, pts)
        rows = np.array([rc.normalize(A, p) for p in pts])
        assert np.array_equal(batch, rows)
