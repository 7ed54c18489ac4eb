"""Synthetic head-like phantoms with a known rigid misalignment."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .resample import gaussian_blur
from .transform import RigidTransform, apply, inverse
from .volume import Volume, centered_origin

# (center as fraction of half-extent, radii as fraction of half-extent, intensity)
_BLOBS = (
    ((0.0, 0.0, 0.0), (0.78, 0.88, 0.72), 0.55),  # head
    ((-0.22, 0.18, 0.10), (0.20, 0.30, 0.22), 0.35),  # left lobe
    ((0.25, 0.12, -0.05), (0.16, 0.22, 0.18), 0.25),  # right lobe
    ((0.05, -0.40, 0.20), (0.14, 0.10, 0.12), -0.30),  # ventricle-like hollow
    ((0.30, -0.30, -0.30), (0.10, 0.12, 0.10), 0.40),  # bright asymmetric nodule
    ((-0.35, -0.15, -0.35), (0.12, 0.16, 0.09), 0.20),
)


def blob_field(points, half_extent, edge=0.04) -> np.ndarray:
    """Analytic intensity at world points: sum of soft-edged ellipsoids."""
    p = np.asarray(points, dtype=float) / half_extent
    out = np.zeros(p.shape[:-1])
    for center, radii, value in _BLOBS:
        r = np.sqrt(np.sum(((p - center) / radii) ** 2, axis=-1))
        out += value * 0.5 * (1.0 - np.tanh((r - 1.0) / edge))
    return out


def monotone_lut(v) -> np.ndarray:
    """Nonlinear, strictly increasing intensity remap."""
    v = np.asarray(v, dtype=float)
    return 1000.0 * (1.0 - np.exp(-2.5 * v)) + 200.0 * v**3


def _grid_points(dims, spacing):
    origin = np.asarray(centered_origin(dims, spacing))
    nx, ny, nz = dims
    k, j, i = np.meshgrid(np.arange(nz), np.arange(ny), np.arange(nx), indexing="ij")
    ijk = np.stack([i, j, k], axis=-1).astype(float)
    return origin + ijk * np.asarray(spacing)


@dataclass(frozen=True)
class PhantomPair:
    fixed: Volume
    moving: Volume
    gold: RigidTransform
    fwhm_fixed: float
    fwhm_moving: float


def make_phantom_pair(
    gold: RigidTransform,
    n: int = 64,
    spacing: float = 2.0,
    blur_fwhm: float = 8.0,
    noise: float = 0.01,
    seed: int = 0,
) -> PhantomPair:
    """A sharp blob volume and a remapped, blurred copy displaced by ``gold``.

    ``gold`` maps fixed world coordinates to moving world coordinates, so
    ``moving(gold(p)) == lut(blur(fixed))(p)`` up to noise.
    """
    dims = (n, n, n)
    sp = (spacing,) * 3
    half = 0.5 * (n - 1) * spacing
    points = _grid_points(dims, sp)
    rng = np.random.default_rng(seed)
    fixed_data = blob_field(points, half)
    fixed_data = fixed_data + noise * rng.standard_normal(fixed_data.shape)
    back = apply(inverse(gold), points.reshape(-1, 3)).reshape(points.shape)
    moved = Volume(blob_field(back, half), sp)
    if blur_fwhm > 0:
        moved = gaussian_blur(moved, blur_fwhm)
    moving_data = monotone_lut(np.clip(moved.data, 0.0, None))
    scale = float(moving_data.max())
    moving_data = moving_data + noise * scale * rng.standard_normal(moving_data.shape)
    return PhantomPair(Volume(fixed_data, sp), Volume(moving_data, sp), gold, 0.0, blur_fwhm)
