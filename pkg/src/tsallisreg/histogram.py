"""Joint intensity histograms over the overlap of a fixed and a moving volume."""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .resample import INDEX_TOL
from .transform import RigidTransform
from .volume import Volume

NBINS = 64


class EmptyOverlap(ValueError):
    """No fixed voxel maps inside the moving volume; the measure is undefined."""


@dataclass(frozen=True)
class BinMap:
    """Linear intensity-to-bin mapping over ``[vmin, vmax]``."""

    vmin: float
    vmax: float
    nbins: int = NBINS

    @property
    def width(self) -> float:
        return (self.vmax - self.vmin) / self.nbins

    def __call__(self, values) -> np.ndarray:
        v = np.asarray(values, dtype=float)
        if self.width <= 0:
            return np.zeros(v.shape, dtype=np.intp)
        idx = np.floor((v - self.vmin) / self.width)
        return np.clip(idx, 0, self.nbins - 1).astype(np.intp)


def make_bin_map(volume, nbins: int = NBINS) -> BinMap:
    data = volume.data if isinstance(volume, Volume) else np.asarray(volume, dtype=float)
    if data.size == 0:
        raise ValueError("cannot bin an empty volume")
    return BinMap(float(data.min()), float(data.max()), nbins)


@dataclass(frozen=True)
class JointHistogram:
    """Co-occurrence counts; rows index the fixed image, columns the moving one.

    ``moments`` holds ``(n, sum_a, sum_b, sum_aa, sum_bb, sum_ab)`` of the raw
    intensity pairs that fed the counts, for the correlation measure.
    """

    counts: np.ndarray
    moments: tuple = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0)

    @property
    def marginal_a(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def marginal_b(self) -> np.ndarray:
        return self.counts.sum(axis=0)

    @property
    def total(self) -> float:
        return float(self.counts.sum())

    @property
    def empty(self) -> bool:
        return self.total == 0

    def transpose(self) -> "JointHistogram":
        n, sa, sb, saa, sbb, sab = self.moments
        return JointHistogram(self.counts.T.copy(), (n, sb, sa, sbb, saa, sab))

    def scaled(self, factor: float) -> "JointHistogram":
        return JointHistogram(self.counts * factor, tuple(m * factor for m in self.moments))


def _moments(a, b):
    return (float(a.size), float(a.sum()), float(b.sum()), float(a @ a), float(b @ b), float(a @ b))


def histogram_from_pairs(a, b, map_a: BinMap, map_b: BinMap) -> JointHistogram:
    """Histogram of co-located intensity pairs ``(a[n], b[n])``."""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    return _histogram_from_bins(map_a(a), map_b(b), map_a.nbins, map_b.nbins, _moments(a, b))


def _histogram_from_bins(bins_a, bins_b, na, nb, moments):
    flat = np.bincount(bins_a * nb + bins_b, minlength=na * nb)
    return JointHistogram(flat.reshape(na, nb).astype(float), moments)


def normalize(hist: JointHistogram) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Joint and marginal probabilities ``(p_ab, p_a, p_b)``."""
    total = hist.total
    if total <= 0:
        raise EmptyOverlap("histogram has no samples")
    p_ab = hist.counts / total
    return p_ab, p_ab.sum(axis=1), p_ab.sum(axis=0)


@numba.njit(cache=True, inline="always")
def _axis(v, limit):
    """Snap/clip one fractional index; returns (inside, lo, hi, frac)."""
    if v < -INDEX_TOL or v > limit + INDEX_TOL:
        return False, 0, 0, 0.0
    r = np.rint(v)
    if abs(v - r) <= INDEX_TOL:
        v = r
    v = min(max(v, 0.0), limit)
    top = int(limit)
    lo = min(int(np.floor(v)), max(top - 1, 0))
    return True, lo, min(lo + 1, top), v - lo


@numba.njit(cache=True)
def _accumulate_kernel(fixed_bins, fixed_values, dims, A, b, moving, vmin, width, nbins_b, counts, moments):
    nx, ny, nz = dims[0], dims[1], dims[2]
    mz, my, mx = moving.shape
    lx, ly, lz = mx - 1.0, my - 1.0, mz - 1.0
    n = 0
    sa = sb = saa = sbb = sab = 0.0
    for k in range(nz):
        for j in range(ny):
            cx = A[0, 1] * j + A[0, 2] * k + b[0]
            cy = A[1, 1] * j + A[1, 2] * k + b[1]
            cz = A[2, 1] * j + A[2, 2] * k + b[2]
            row = nx * (j + ny * k)
            for i in range(nx):
                ok, i0, i1, fx = _axis(A[0, 0] * i + cx, lx)
                if not ok:
                    continue
                ok, j0, j1, fy = _axis(A[1, 0] * i + cy, ly)
                if not ok:
                    continue
                ok, k0, k1, fz = _axis(A[2, 0] * i + cz, lz)
                if not ok:
                    continue
                gx, gy, gz = 1.0 - fx, 1.0 - fy, 1.0 - fz
                val = gz * (
                    gy * (gx * moving[k0, j0, i0] + fx * moving[k0, j0, i1])
                    + fy * (gx * moving[k0, j1, i0] + fx * moving[k0, j1, i1])
                ) + fz * (
                    gy * (gx * moving[k1, j0, i0] + fx * moving[k1, j0, i1])
                    + fy * (gx * moving[k1, j1, i0] + fx * moving[k1, j1, i1])
                )
                if width > 0:
                    mb = min(max(int(np.floor((val - vmin) / width)), 0), nbins_b - 1)
                else:
                    mb = 0
                flat = row + i
                counts[fixed_bins[flat], mb] += 1.0
                fv = fixed_values[flat]
                n += 1
                sa += fv
                sb += val
                saa += fv * fv
                sbb += val * val
                sab += fv * val
    moments[0] = n
    moments[1] = sa
    moments[2] = sb
    moments[3] = saa
    moments[4] = sbb
    moments[5] = sab


class OverlapSampler:
    """Builds joint histograms of ``fixed`` against ``moving`` under varying transforms.

    Fixed-side bins and voxel index grids are computed once. ``transform``
    maps fixed world coordinates into moving world coordinates.
    """

    def __init__(self, fixed: Volume, moving: Volume, maps=None):
        self.fixed = fixed
        self.moving = moving
        if maps is None:
            maps = (make_bin_map(fixed), make_bin_map(moving))
        self.map_fixed, self.map_moving = maps
        self.fixed_values = fixed.data.ravel()
        self.fixed_bins = self.map_fixed(self.fixed_values).astype(np.int64)
        self._moving_data = np.ascontiguousarray(moving.data)

    def index_map(self, transform: RigidTransform) -> tuple[np.ndarray, np.ndarray]:
        """``(A, b)`` with moving index ``= A @ (i, j, k) + b`` for fixed voxel ``(i, j, k)``."""
        sf = np.asarray(self.fixed.spacing)
        sm = np.asarray(self.moving.spacing)
        R = transform.matrix
        A = (R * sf[None, :]) / sm[:, None]
        b = (R @ np.asarray(self.fixed.origin) + transform.offset - np.asarray(self.moving.origin)) / sm
        return A, b

    def histogram(self, transform: RigidTransform) -> JointHistogram:
        A, b = self.index_map(transform)
        counts = np.zeros((self.map_fixed.nbins, self.map_moving.nbins))
        moments = np.zeros(6)
        _accumulate_kernel(
            self.fixed_bins,
            self.fixed_values,
            np.asarray(self.fixed.dims, dtype=np.int64),
            A,
            b,
            self._moving_data,
            self.map_moving.vmin,
            self.map_moving.width,
            self.map_moving.nbins,
            counts,
            moments,
        )
        return JointHistogram(counts, tuple(float(m) for m in moments))


def accumulate(fixed: Volume, moving: Volume, transform: RigidTransform, maps=None) -> JointHistogram:
    """Joint histogram over every fixed voxel whose mapped center lands inside ``moving``.

    An empty overlap yields a histogram with ``total == 0`` (``hist.empty``).
    """
    return OverlapSampler(fixed, moving, maps).histogram(transform)


def dump_counts_csv(hist: JointHistogram, path) -> None:
    np.savetxt(path, hist.counts, fmt="%d", delimiter=",")
