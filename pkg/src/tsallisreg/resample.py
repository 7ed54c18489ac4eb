"""Trilinear sampling, Gaussian blurring and cubic-grid pyramids."""

from __future__ import annotations

import math

import numpy as np
from scipy import ndimage

from .volume import Volume

FWHM_TO_SIGMA = 2.3548
TRUNCATE_SIGMAS = 3.0
# continuous-index slack for boundary and grid-point snapping
INDEX_TOL = 1e-9


def continuous_index(volume: Volume, points) -> np.ndarray:
    """World points ``(..., 3)`` to fractional voxel indices ``(i, j, k)``."""
    p = np.asarray(points, dtype=float)
    return (p - np.asarray(volume.origin)) / np.asarray(volume.spacing)


def sample_index(data: np.ndarray, u) -> tuple[np.ndarray, np.ndarray]:
    """Trilinear sampling of ``data`` (shape ``(nz, ny, nx)``) at fractional
    indices ``u`` (``(n, 3)`` as i, j, k).

    Returns ``(values, inside)``; ``values`` is 0 where ``inside`` is False.
    Points beyond the voxel-center bounding box are outside; nothing is
    extrapolated.
    """
    u = np.atleast_2d(np.asarray(u, dtype=float))
    shape = np.array(data.shape[::-1])
    inside = np.all((u >= -INDEX_TOL) & (u <= shape - 1 + INDEX_TOL), axis=1)
    r = np.rint(u)
    u = np.where(np.abs(u - r) <= INDEX_TOL, r, u)
    u = np.clip(u, 0, shape - 1)
    lo = np.minimum(np.floor(u).astype(np.intp), np.maximum(shape - 2, 0))
    f = u - lo
    hi = np.minimum(lo + 1, shape - 1)
    i0, j0, k0 = lo.T
    i1, j1, k1 = hi.T
    fx, fy, fz = f.T
    gx, gy, gz = 1.0 - fx, 1.0 - fy, 1.0 - fz
    d = data
    values = (
        gz * (gy * (gx * d[k0, j0, i0] + fx * d[k0, j0, i1]) + fy * (gx * d[k0, j1, i0] + fx * d[k0, j1, i1]))
        + fz * (gy * (gx * d[k1, j0, i0] + fx * d[k1, j0, i1]) + fy * (gx * d[k1, j1, i0] + fx * d[k1, j1, i1]))
    )
    return np.where(inside, values, 0.0), inside


def sample(volume: Volume, points) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized :func:`trilinear` over world points ``(n, 3)``."""
    return sample_index(volume.data, continuous_index(volume, points))


def trilinear(volume: Volume, point) -> float | None:
    """Intensity at a world point, or None when the point is outside the volume."""
    values, inside = sample(volume, np.asarray(point, dtype=float).reshape(1, 3))
    return float(values[0]) if inside[0] else None


def gaussian_kernel(sigma_vox: float) -> np.ndarray:
    """Unit-sum sampled Gaussian truncated at +-3 sigma."""
    if sigma_vox <= 0:
        return np.ones(1)
    radius = int(math.floor(TRUNCATE_SIGMAS * sigma_vox))
    x = np.arange(-radius, radius + 1, dtype=float)
    w = np.exp(-0.5 * (x / sigma_vox) ** 2)
    return w / w.sum()


def _blur_axis(data, kernel, axis):
    if kernel.size == 1:
        return data
    num = ndimage.correlate1d(data, kernel, axis=axis, mode="constant", cval=0.0)
    # renormalize over in-bounds taps; only the ends of each line need it
    ones = np.ones(data.shape[axis])
    den = ndimage.correlate1d(ones, kernel, mode="constant", cval=0.0)
    shape = [1, 1, 1]
    shape[axis] = -1
    return num / den.reshape(shape)


def gaussian_blur(volume: Volume, fwhm_mm) -> Volume:
    """Separable Gaussian blur with per-axis FWHM in mm (0 leaves an axis alone)."""
    fwhm = np.broadcast_to(np.asarray(fwhm_mm, dtype=float), (3,))
    if np.any(fwhm < 0):
        raise ValueError(f"fwhm must be non-negative, got {tuple(fwhm)}")
    data = volume.data
    for xyz_axis, (f, s) in enumerate(zip(fwhm, volume.spacing)):
        kernel = gaussian_kernel(f / FWHM_TO_SIGMA / s)
        data = _blur_axis(data, kernel, 2 - xyz_axis)
    return Volume(data, volume.spacing, volume.origin)


def match_resolution(a: Volume, fwhm_a, b: Volume, fwhm_b) -> tuple[Volume, Volume]:
    """Blur the sharper of two volumes so both share one impulse response.

    FWHMs (scalar or per-axis, mm) add in quadrature under Gaussian
    convolution, so the sharper image on each axis receives
    ``sqrt(fwhm_blurry**2 - fwhm_sharp**2)``.
    """
    fa = np.broadcast_to(np.asarray(fwhm_a, dtype=float), (3,))
    fb = np.broadcast_to(np.asarray(fwhm_b, dtype=float), (3,))
    if np.any(fa < 0) or np.any(fb < 0):
        raise ValueError("declared fwhm must be non-negative")
    add_a = np.sqrt(np.maximum(0.0, fb**2 - fa**2))
    add_b = np.sqrt(np.maximum(0.0, fa**2 - fb**2))
    if np.any(add_a > 0):
        a = gaussian_blur(a, add_a)
    if np.any(add_b > 0):
        b = gaussian_blur(b, add_b)
    return a, b


def _interp_axis(data, axis, u):
    """Linear interpolation along one array axis at in-range fractional indices."""
    n = data.shape[axis]
    if n == 1:
        return np.repeat(data, len(u), axis=axis)
    r = np.rint(u)
    u = np.clip(np.where(np.abs(u - r) <= INDEX_TOL, r, u), 0, n - 1)
    lo = np.minimum(np.floor(u).astype(np.intp), n - 2)
    f = u - lo
    shape = [1, 1, 1]
    shape[axis] = -1
    f = f.reshape(shape)
    a = np.take(data, lo, axis=axis)
    b = np.take(data, lo + 1, axis=axis)
    return a * (1.0 - f) + b * f


def resample_cubic(volume: Volume, target_mm: float) -> Volume:
    """Resample onto a cubic grid of spacing ``target_mm`` about the same center.

    Axes coarser than their current spacing are first blurred with
    ``fwhm = sqrt(target**2 - spacing**2)``; finer axes are only
    interpolated.
    """
    t = float(target_mm)
    if not t > 0:
        raise ValueError(f"target spacing must be positive, got {target_mm}")
    if volume.spacing == (t, t, t):
        return volume
    spacing = np.asarray(volume.spacing)
    fwhm = np.sqrt(np.maximum(0.0, t * t - spacing**2))
    src = gaussian_blur(volume, fwhm) if np.any(fwhm > 0) else volume
    dims = np.asarray(volume.dims)
    extent = (dims - 1) * spacing
    new_dims = np.floor(extent / t + INDEX_TOL).astype(int) + 1
    if np.any(new_dims < 1):
        raise ValueError("resampled grid would be empty")
    center = volume.center
    new_origin = center - 0.5 * (new_dims - 1) * t
    data = src.data
    for xyz_axis in range(3):
        coords = new_origin[xyz_axis] + t * np.arange(new_dims[xyz_axis])
        u = (coords - volume.origin[xyz_axis]) / spacing[xyz_axis]
        data = _interp_axis(data, 2 - xyz_axis, u)
    return Volume(data, (t, t, t), tuple(new_origin))


def build_pyramid(volume: Volume, levels_mm) -> list[Volume]:
    """One cubic resampling per level, coarsest first (e.g. ``[6, 3, 1.5]``)."""
    levels = [float(v) for v in levels_mm]
    if not levels:
        raise ValueError("pyramid needs at least one level")
    if any(b >= a for a, b in zip(levels, levels[1:])):
        raise ValueError(f"pyramid levels must be strictly decreasing, got {levels}")
    return [resample_cubic(volume, t) for t in levels]
