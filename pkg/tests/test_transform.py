import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tsallisreg.transform import (
    CornerSet,
    RigidTransform,
    apply,
    compose,
    corner_rms,
    inverse,
    matrix_to_euler,
    parse_corners,
    random_perturbation,
    rotation_angle,
    serialize_corners,
    to_corner_set,
)
from tsallisreg.volume import Volume


def _homogeneous_oracle(t: RigidTransform) -> np.ndarray:
    """4x4 matrix built from elementary rotations, independent of the module's helpers."""
    def rot(axis, deg):
        a = math.radians(deg)
        c, s = math.cos(a), math.sin(a)
        m = np.eye(4)
        i, j = [(1, 2), (0, 2), (0, 1)][axis]
        m[i, i], m[j, j] = c, c
        m[i, j], m[j, i] = -s, s
        if axis == 1:
            m[i, j], m[j, i] = s, -s
        return m

    def shift(v):
        m = np.eye(4)
        m[:3, 3] = v
        return m

    c = np.asarray(t.center)
    R = rot(2, t.rotation[2]) @ rot(1, t.rotation[1]) @ rot(0, t.rotation[0])
    return shift(np.asarray(t.translation)) @ shift(c) @ R @ shift(-c)


def _random_transform(rng, center=None):
    rot = rng.uniform(-60, 60, 3)
    tr = rng.uniform(-30, 30, 3)
    c = rng.uniform(-10, 10, 3) if center is None else center
    return RigidTransform(tuple(rot), tuple(tr), tuple(c))


params = st.tuples(*[st.floats(-170, 170)] * 3, *[st.floats(-100, 100)] * 3)


class TestApply:
    def test_identity(self):
        np.testing.assert_array_equal(apply(RigidTransform(), (5, -3, 2)), (5, -3, 2))

    def test_quarter_turn(self):
        np.testing.assert_allclose(apply(RigidTransform((0, 0, 90)), (1, 0, 0)), (0, 1, 0), atol=1e-15)

    def test_homogeneous_oracle(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            t = _random_transform(rng)
            p = rng.uniform(-100, 100, 3)
            expected = (_homogeneous_oracle(t) @ np.append(p, 1.0))[:3]
            assert np.linalg.norm(apply(t, p) - expected) < 1e-9

    @settings(max_examples=100, deadline=None)
    @given(params)
    def test_orthonormal(self, p):
        R = RigidTransform.from_params(p).matrix
        np.testing.assert_allclose(R.T @ R, np.eye(3), atol=1e-9)
        assert abs(np.linalg.det(R) - 1.0) < 1e-9

    @settings(max_examples=100, deadline=None)
    @given(params, st.tuples(*[st.floats(-200, 200)] * 6))
    def test_rigidity(self, p, pts):
        t = RigidTransform.from_params(p)
        a, b = np.array(pts[:3]), np.array(pts[3:])
        d0 = np.linalg.norm(a - b)
        d1 = np.linalg.norm(apply(t, a) - apply(t, b))
        assert abs(d1 - d0) < 1e-9


class TestCompose:
    def test_right_identity_parameterwise(self):
        t = RigidTransform((10.0, -20.0, 35.0), (1.0, 2.0, 3.0))
        c = compose(t, RigidTransform())
        np.testing.assert_allclose(c.params, t.params, atol=1e-12)

    def test_inverse_law(self):
        rng = np.random.default_rng(2)
        t = _random_transform(rng)
        ident = compose(t, inverse(t))
        pts = rng.uniform(-100, 100, (100, 3))
        assert np.max(np.linalg.norm(apply(ident, pts) - pts, axis=1)) < 1e-6

    def test_matrix_product_oracle(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            a, b = _random_transform(rng), _random_transform(rng)
            c = compose(a, b)
            np.testing.assert_allclose(c.matrix, a.matrix @ b.matrix, atol=1e-9)
            p = rng.uniform(-50, 50, 3)
            assert np.linalg.norm(apply(c, p) - apply(a, apply(b, p))) < 1e-9

    @settings(max_examples=100, deadline=None)
    @given(params, params)
    def test_composition_law(self, pa, pb):
        a, b = RigidTransform.from_params(pa), RigidTransform.from_params(pb, center=(3.0, -1.0, 2.0))
        p = np.array([12.0, -7.0, 30.0])
        assert np.linalg.norm(apply(compose(a, b), p) - apply(a, apply(b, p))) < 1e-9

    def test_gimbal_flagged(self):
        t = RigidTransform((30.0, 90.0, 0.0))
        (rx, ry, rz), degenerate = matrix_to_euler(t.matrix)
        assert degenerate and rz == 0.0
        c = compose(t, RigidTransform())
        assert c.degenerate
        np.testing.assert_allclose(c.matrix, t.matrix, atol=1e-9)
        assert not compose(RigidTransform((30.0, 45.0, 0.0)), RigidTransform()).degenerate


class TestPerturbation:
    def test_zero(self):
        t = random_perturbation(0, 0, seed=5)
        assert t.params.tolist() == [0.0] * 6

    @pytest.mark.parametrize("seed", range(10))
    def test_exact_sizes(self, seed):
        t = random_perturbation(10, 10, seed)
        assert abs(np.linalg.norm(t.translation) - 10.0) < 1e-9
        # independent recovery of the angle from the trace of R
        c = (np.trace(t.matrix) - 1.0) / 2.0
        assert abs(math.degrees(math.acos(c)) - 10.0) < 1e-9

    def test_deterministic(self):
        assert random_perturbation(20, 20, 7) == random_perturbation(20, 20, 7)
        assert random_perturbation(20, 20, 7) != random_perturbation(20, 20, 8)

    def test_rotation_angle_helper(self):
        assert abs(rotation_angle(random_perturbation(30, 30, 1).matrix) - 30.0) < 1e-9


def _cube(n=2, spacing=1.0):
    return Volume(np.zeros((n, n, n)), (spacing,) * 3)


class TestCorners:
    def test_identity(self):
        cs = to_corner_set(RigidTransform(), _cube())
        np.testing.assert_array_equal(cs.original, cs.transformed)
        assert cs.numbers().size == 48

    def test_order_z_then_y_then_x(self):
        orig = to_corner_set(RigidTransform(), _cube()).original
        keys = [(z, y, x) for x, y, z in orig]
        assert keys == sorted(keys)

    def test_translation(self):
        cs = to_corner_set(RigidTransform(translation=(1, 2, 3)), _cube())
        np.testing.assert_allclose(cs.transformed - cs.original, np.tile([1, 2, 3], (8, 1)))

    def test_quarter_turn_hand_rotated(self):
        # corners of a centered 2-voxel cube sit at +-0.5; rz = 90 sends (x, y) to (-y, x)
        cs = to_corner_set(RigidTransform((0, 0, 90)), _cube())
        hand = np.array([[-y, x, z] for x, y, z in cs.original])
        np.testing.assert_allclose(cs.transformed, hand, atol=1e-12)
        # the transformed set is a permutation of the original set
        assert sorted(map(tuple, np.round(cs.transformed, 9))) == sorted(map(tuple, cs.original))

    def test_rigidity(self):
        rng = np.random.default_rng(4)
        cs = to_corner_set(_random_transform(rng), Volume(np.zeros((5, 6, 7)), (1.0, 1.5, 3.0)))
        d0 = np.linalg.norm(cs.original[:, None] - cs.original[None], axis=-1)
        d1 = np.linalg.norm(cs.transformed[:, None] - cs.transformed[None], axis=-1)
        assert np.max(np.abs(d0 - d1)) < 1e-6

    def test_serialize_format(self):
        text = serialize_corners(to_corner_set(RigidTransform(translation=(1, 2, 3)), _cube()))
        lines = text.splitlines()
        assert len(lines) == 8
        assert lines[0] == "-0.5000 -0.5000 -0.5000 0.5000 1.5000 2.5000"
        assert sum(len(l.split()) for l in lines) == 48

    @settings(max_examples=100, deadline=None)
    @given(params)
    def test_round_trip(self, p):
        cs = to_corner_set(RigidTransform.from_params(p), Volume(np.zeros((3, 4, 5)), (1.25, 1.25, 4.0)))
        text = serialize_corners(cs)
        back = parse_corners(text)
        assert serialize_corners(back) == text
        assert back == CornerSet(np.round(cs.original, 4), np.round(cs.transformed, 4))

    def test_parse_rejects_short_table(self):
        with pytest.raises(ValueError):
            parse_corners("1 2 3 4 5 6\n")

    def test_corner_rms_one_degree(self):
        # 256 mm cube, 1 degree about z through the center: each corner moves 2 r sin(0.5 deg)
        vol = Volume(np.zeros((2, 2, 2)), (256.0,) * 3)
        r = math.hypot(128.0, 128.0)
        expected = 2 * r * math.sin(math.radians(0.5))
        assert abs(corner_rms(RigidTransform((0, 0, 1)), RigidTransform(), vol) - expected) < 1e-9
