"""Half-circle overlap model: measure response to in-plane rotation under a limited field of view.

Image A holds a half-disc rotated by ``theta`` and covers the whole grid.
Image B holds the unrotated half-disc but only exists for ``|x| <= fov``;
pixels outside that strip are absent and excluded from the statistics.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .histogram import BinMap, histogram_from_pairs
from .measures import MeasureSpec, evaluate

SUPERSAMPLE = 4


@dataclass(frozen=True)
class SimModel:
    size: int = 256
    radius_fraction: float = 0.4
    fov: float = 128.0
    theta: float = 0.0

    def __post_init__(self):
        if self.size < 2:
            raise ValueError("grid too small")
        if not 0 < self.fov <= self.size / 2:
            raise ValueError(f"fov must lie in (0, {self.size / 2}], got {self.fov}")
        if not 0 < self.radius <= (self.size - 1) / 2:
            raise ValueError("half-disc does not fit in the grid")

    @property
    def radius(self) -> float:
        return self.radius_fraction * self.size


def default_fovs(size: int = 256) -> tuple[float, ...]:
    """Quarter, three-eighths and half of the grid width."""
    return (size / 4, 3 * size / 8, size / 2)


def _pixel_centers(size):
    return np.arange(size) - 0.5 * (size - 1)


def _subsamples(size):
    offsets = (np.arange(SUPERSAMPLE) + 0.5) / SUPERSAMPLE - 0.5
    c = _pixel_centers(size)
    # (size, SUPERSAMPLE) sub-pixel coordinates along one axis
    return c[:, None] + offsets[None, :]


def _half_disc(x, y, r):
    return (x * x + y * y <= r * r) & (y >= 0)


def _inside_masks(model: SimModel):
    """Boolean sub-sample masks ``(size, size, S, S)`` for A (rotated) and B."""
    s = _subsamples(model.size)
    x = s[None, :, None, :]  # columns
    y = s[:, None, :, None]  # rows, y up = increasing row index
    x, y = np.broadcast_arrays(x, y)
    t = math.radians(model.theta)
    c, sn = math.cos(t), math.sin(t)
    # A(p) = H(R(-theta) p)
    xa = c * x + sn * y
    ya = -sn * x + c * y
    return _half_disc(xa, ya, model.radius), _half_disc(x, y, model.radius)


def _render(model: SimModel):
    in_a, in_b = _inside_masks(model)
    a = in_a.mean(axis=(2, 3))
    b = in_b.mean(axis=(2, 3))
    present = np.broadcast_to(np.abs(_pixel_centers(model.size))[None, :] <= model.fov, a.shape)
    area = float((in_a & in_b).mean(axis=(2, 3))[present].sum())
    return a, np.where(present, b, 0.0), present, area


def render(model: SimModel):
    """Coverage-fraction rasters ``(A, B, present)``.

    ``present`` marks pixels inside B's field of view; B is zero elsewhere.
    """
    return _render(model)[:3]


def overlap_area(model: SimModel) -> float:
    """Area (pixels) shared by both half-discs inside B's field of view."""
    return _render(model)[3]


_UNIT = BinMap(0.0, 1.0)


def measure_at(model: SimModel, spec: MeasureSpec) -> float:
    a, b, present = render(model)
    hist = histogram_from_pairs(b[present], a[present], _UNIT, _UNIT)
    mv = evaluate(spec, hist)
    return mv.value if mv.defined else math.nan


def parse_theta_range(text: str) -> np.ndarray:
    """``"start:stop:step"`` inclusive of ``stop`` (degrees)."""
    parts = [float(p) for p in text.split(":")]
    if len(parts) != 3 or parts[2] <= 0 or parts[1] < parts[0]:
        raise ValueError(f"theta range must be start:stop:step with step > 0, got {text!r}")
    start, stop, step = parts
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return start + step * np.arange(n)


def response_curve(
    measures,
    thetas=None,
    fovs=None,
    size: int = 256,
    radius_fraction: float = 0.4,
) -> list[dict]:
    """One row per (fov, theta, measure); rendering is shared across measures."""
    thetas = parse_theta_range("-90:90:1") if thetas is None else np.asarray(thetas, dtype=float)
    fovs = default_fovs(size) if fovs is None else tuple(float(f) for f in fovs)
    rows = []
    for fov in fovs:
        for theta in thetas:
            model = SimModel(size, radius_fraction, fov, float(theta))
            a, b, present, area = _render(model)
            hist = histogram_from_pairs(b[present], a[present], _UNIT, _UNIT)
            for spec in measures:
                mv = evaluate(spec, hist)
                rows.append(
                    {
                        "fov": fov,
                        "theta_deg": float(theta),
                        "measure": spec.kind.value,
                        "q": spec.q,
                        "value": mv.value if mv.defined else math.nan,
                        "overlap_area": area,
                    }
                )
    return rows


CSV_COLUMNS = ("fov", "theta_deg", "measure", "q", "value", "overlap_area")


def rows_to_csv(rows, size=256, radius_fraction=0.4) -> str:
    buf = io.StringIO()
    buf.write(f"# grid={size} radius_fraction={radius_fraction} supersample={SUPERSAMPLE}\n")
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    return buf.getvalue()
