import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tsallisreg.resample import (
    build_pyramid,
    gaussian_blur,
    gaussian_kernel,
    match_resolution,
    resample_cubic,
    sample,
    trilinear,
)
from tsallisreg.volume import Volume


def _affine_volume(dims=(7, 6, 5), spacing=(1.0, 1.5, 2.0)):
    vol = Volume(np.zeros(dims[::-1]), spacing)
    k, j, i = np.meshgrid(*[np.arange(n) for n in dims[::-1]], indexing="ij")
    x, y, z = (np.stack([i, j, k], -1) * spacing + vol.origin).transpose(3, 0, 1, 2)
    return Volume(2 * x - y + 3 * z, spacing)


class TestTrilinear:
    def test_grid_points_exact(self):
        rng = np.random.default_rng(0)
        vol = Volume(rng.normal(size=(4, 5, 6)), (1.0, 2.0, 3.0))
        for i, j, k in [(0, 0, 0), (5, 4, 3), (2, 3, 1)]:
            assert trilinear(vol, vol.world(i, j, k)) == vol.data[k, j, i]

    def test_midpoint(self):
        vol = Volume(np.array([[[0.0, 10.0]]]), (1, 1, 1))
        assert trilinear(vol, (0.0, 0.0, 0.0)) == 5.0

    def test_affine_field_exact(self):
        vol = _affine_volume()
        rng = np.random.default_rng(1)
        lo, hi = vol.world(0, 0, 0), vol.world(*(np.array(vol.dims) - 1))
        pts = rng.uniform(lo, hi, (100, 3))
        values, inside = sample(vol, pts)
        assert inside.all()
        expected = 2 * pts[:, 0] - pts[:, 1] + 3 * pts[:, 2]
        np.testing.assert_allclose(values, expected, atol=1e-9, rtol=0)

    def test_outside(self):
        vol = Volume(np.ones((2, 2, 2)), (1, 1, 1))
        assert trilinear(vol, (0.6, 0.0, 0.0)) is None
        assert trilinear(vol, (0.5, 0.5, 0.5)) == 1.0

    @settings(max_examples=100, deadline=None)
    @given(st.tuples(*[st.floats(-10, 10)] * 3))
    def test_within_neighbor_range(self, p):
        rng = np.random.default_rng(2)
        vol = Volume(rng.uniform(-5, 5, (5, 5, 5)), (2, 2, 2))
        v = trilinear(vol, p)
        if v is not None:
            assert vol.data.min() - 1e-12 <= v <= vol.data.max() + 1e-12


class TestBlur:
    def test_zero_fwhm_identity(self):
        vol = Volume(np.random.default_rng(3).normal(size=(4, 4, 4)), (1, 1, 1))
        np.testing.assert_array_equal(gaussian_blur(vol, (0, 0, 0)).data, vol.data)

    def test_constant_unit_dc(self):
        vol = Volume(np.full((9, 10, 11), 3.5), (1, 1, 2))
        np.testing.assert_allclose(gaussian_blur(vol, (8, 5, 3)).data, 3.5, atol=1e-12, rtol=0)

    def test_impulse_matches_kernel(self):
        n = 41
        data = np.zeros((n, n, n))
        data[20, 20, 20] = 1.0
        out = gaussian_blur(Volume(data, (1, 1, 1)), 8.0).data
        # direct evaluation of the sampled, truncated, normalized Gaussian
        sigma = 8.0 / 2.3548
        r = math.floor(3 * sigma)
        x = np.arange(-r, r + 1)
        w = np.exp(-0.5 * (x / sigma) ** 2)
        w /= w.sum()
        column = out[:, 20, 20]
        expected = np.zeros(n)
        expected[20 - r : 20 + r + 1] = w * w[r] * w[r]
        np.testing.assert_allclose(column, expected, atol=1e-9, rtol=0)

    def test_kernel_unit_sum(self):
        for s in (0.3, 1.0, 3.4):
            assert abs(gaussian_kernel(s).sum() - 1.0) < 1e-12

    def test_range_never_expands(self):
        vol = Volume(np.random.default_rng(4).uniform(-2, 7, (8, 9, 10)), (1, 1, 1))
        out = gaussian_blur(vol, 4.0).data
        assert out.min() >= vol.data.min() - 1e-12 and out.max() <= vol.data.max() + 1e-12

    def test_negative_fwhm_rejected(self):
        with pytest.raises(ValueError):
            gaussian_blur(Volume(np.zeros((2, 2, 2)), (1, 1, 1)), -1.0)


class TestMatchResolution:
    def test_equal_unchanged(self):
        a = Volume(np.random.default_rng(5).normal(size=(5, 5, 5)), (1, 1, 1))
        b = Volume(np.random.default_rng(6).normal(size=(5, 5, 5)), (1, 1, 1))
        for f in (0.0, 4.0):
            a2, b2 = match_resolution(a, f, b, f)
            assert a2 is a and b2 is b

    def test_quadrature(self):
        rng = np.random.default_rng(7)
        a = Volume(rng.normal(size=(20, 20, 20)), (1, 1, 1))
        b = Volume(rng.normal(size=(20, 20, 20)), (1, 1, 1))
        a2, b2 = match_resolution(a, 1.0, b, 8.0)
        assert b2 is b
        assert abs(math.sqrt(8.0**2 - 1.0**2) - 7.937253933193772) < 1e-12
        np.testing.assert_array_equal(a2.data, gaussian_blur(a, math.sqrt(63.0)).data)

    def test_negative_rejected(self):
        a = Volume(np.zeros((2, 2, 2)), (1, 1, 1))
        with pytest.raises(ValueError):
            match_resolution(a, -1.0, a, 1.0)


class TestResampleCubic:
    def test_identity_when_already_cubic(self):
        vol = Volume(np.random.default_rng(8).normal(size=(4, 4, 4)), (1.5, 1.5, 1.5))
        assert resample_cubic(vol, 1.5) is vol

    def test_ramp_upsample(self):
        n = 10
        x = np.arange(n) * 2.0
        data = np.broadcast_to(x[None, None, :] + 0.5 * x[None, :, None] - x[:, None, None], (n, n, n))
        vol = Volume(np.array(data), (2, 2, 2))
        out = resample_cubic(vol, 1.0)
        assert out.spacing == (1.0, 1.0, 1.0)
        k, j, i = np.meshgrid(*[np.arange(d) for d in out.data.shape], indexing="ij")
        pts = np.stack([i, j, k], -1) * 1.0 + out.origin - np.asarray(vol.origin)
        expected = pts[..., 0] + 0.5 * pts[..., 1] - pts[..., 2]
        interior = (slice(2, -2),) * 3
        np.testing.assert_allclose(out.data[interior], expected[interior], atol=1e-6, rtol=0)

    def test_constant_downsample(self):
        vol = Volume(np.full((30, 31, 32), -4.0), (1, 1, 1))
        out = resample_cubic(vol, 6.0)
        assert out.spacing == (6.0, 6.0, 6.0)
        np.testing.assert_allclose(out.data, -4.0, atol=1e-9, rtol=0)

    def test_extent_and_center_preserved(self):
        vol = Volume(np.zeros((26, 40, 40)), (1.25, 1.25, 4.0))
        out = resample_cubic(vol, 3.0)
        np.testing.assert_allclose(out.center, vol.center, atol=1e-9)
        ext_in = (np.array(vol.dims) - 1) * vol.spacing
        ext_out = (np.array(out.dims) - 1) * 3.0
        assert np.all(ext_in - ext_out >= -1e-9) and np.all(ext_in - ext_out < 3.0)

    def test_bad_target(self):
        with pytest.raises(ValueError):
            resample_cubic(Volume(np.zeros((2, 2, 2)), (1, 1, 1)), 0.0)


class TestPyramid:
    def test_single_level_identity(self):
        vol = Volume(np.ones((3, 3, 3)), (1.5, 1.5, 1.5))
        levels = build_pyramid(vol, [1.5])
        assert len(levels) == 1 and levels[0] == vol

    def test_dims_halve(self):
        vol = Volume(np.random.default_rng(9).normal(size=(97, 97, 97)), (1.5, 1.5, 1.5))
        coarse, mid, fine = build_pyramid(vol, [6, 3, 1.5])
        assert fine.dims == (97, 97, 97)
        assert mid.dims == (49, 49, 49)
        assert coarse.dims == (25, 25, 25)
        assert coarse.data.size <= mid.data.size <= fine.data.size

    def test_constant_every_level(self):
        vol = Volume(np.full((20, 20, 20), 2.0), (1, 1, 1))
        for level in build_pyramid(vol, [6, 3, 1.5]):
            np.testing.assert_allclose(level.data, 2.0, atol=1e-9, rtol=0)

    @pytest.mark.parametrize("levels", [[], [1.5, 3.0], [3.0, 3.0]])
    def test_bad_levels(self, levels):
        with pytest.raises(ValueError):
            build_pyramid(Volume(np.zeros((4, 4, 4)), (1, 1, 1)), levels)
