"""Six-parameter rigid transforms and the 48-number corner table."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

GIMBAL_TOL = 1e-9


def _rx(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def _ry(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def _rz(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def euler_to_matrix(rx, ry, rz) -> np.ndarray:
    """Rotation matrix ``Rz @ Ry @ Rx`` for angles in degrees."""
    return _rz(math.radians(rz)) @ _ry(math.radians(ry)) @ _rx(math.radians(rx))


def matrix_to_euler(R) -> tuple[tuple[float, float, float], bool]:
    """Invert :func:`euler_to_matrix`.

    Returns ``((rx, ry, rz), degenerate)``. When ``ry`` is at +-90 degrees
    the split between ``rx`` and ``rz`` is not unique; ``rz`` is then set to
    zero and ``degenerate`` is True.
    """
    R = np.asarray(R, dtype=float)
    cy = math.hypot(R[0, 0], R[1, 0])
    ry = math.atan2(-R[2, 0], cy)
    if cy < GIMBAL_TOL:
        rx = math.atan2(-R[1, 2], R[1, 1])
        return (math.degrees(rx), math.degrees(ry), 0.0), True
    rx = math.atan2(R[2, 1], R[2, 2])
    rz = math.atan2(R[1, 0], R[0, 0])
    return (math.degrees(rx), math.degrees(ry), math.degrees(rz)), False


@dataclass(frozen=True)
class RigidTransform:
    """Rigid map ``p -> R (p - center) + center + translation``.

    Rotation angles are degrees, composed as ``Rz @ Ry @ Rx``; translation
    and center are in mm. ``degenerate`` flags parameters recovered at the
    gimbal singularity and takes no part in equality.
    """

    rotation: tuple[float, float, float] = (0.0, 0.0, 0.0)
    translation: tuple[float, float, float] = (0.0, 0.0, 0.0)
    center: tuple[float, float, float] = (0.0, 0.0, 0.0)
    degenerate: bool = field(default=False, compare=False)

    def __post_init__(self):
        for name in ("rotation", "translation", "center"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))

    @classmethod
    def identity(cls, center=(0.0, 0.0, 0.0)):
        return cls(center=center)

    @classmethod
    def from_params(cls, params, center=(0.0, 0.0, 0.0)):
        """Build from ``(rx, ry, rz, tx, ty, tz)``."""
        params = [float(v) for v in params]
        if len(params) != 6:
            raise ValueError(f"need 6 parameters, got {len(params)}")
        return cls(tuple(params[:3]), tuple(params[3:]), center)

    @classmethod
    def from_matrix(cls, R, offset, center=(0.0, 0.0, 0.0)):
        """Transform whose action is ``p -> R p + offset``, parametrized about ``center``."""
        angles, degenerate = matrix_to_euler(R)
        c = np.asarray(center, dtype=float)
        # offset = -R c + c + t
        Rn = euler_to_matrix(*angles)
        t = np.asarray(offset, dtype=float) + Rn @ c - c
        return cls(angles, tuple(t), tuple(c), degenerate)

    @property
    def params(self) -> np.ndarray:
        return np.array(self.rotation + self.translation)

    @property
    def matrix(self) -> np.ndarray:
        return euler_to_matrix(*self.rotation)

    @property
    def offset(self) -> np.ndarray:
        c = np.asarray(self.center)
        return c + np.asarray(self.translation) - self.matrix @ c

    def homogeneous(self) -> np.ndarray:
        M = np.eye(4)
        M[:3, :3] = self.matrix
        M[:3, 3] = self.offset
        return M

    def with_params(self, params):
        return RigidTransform.from_params(params, self.center)


def apply(transform: RigidTransform, points) -> np.ndarray:
    """Map one point ``(3,)`` or many ``(n, 3)`` through ``transform``."""
    p = np.asarray(points, dtype=float)
    c = np.asarray(transform.center)
    return (p - c) @ transform.matrix.T + c + np.asarray(transform.translation)


def compose(a: RigidTransform, b: RigidTransform) -> RigidTransform:
    """The transform ``p -> a(b(p))``, parametrized about ``a.center``."""
    R = a.matrix @ b.matrix
    offset = a.matrix @ b.offset + a.offset
    return RigidTransform.from_matrix(R, offset, a.center)


def inverse(t: RigidTransform) -> RigidTransform:
    Rt = t.matrix.T
    return RigidTransform.from_matrix(Rt, -Rt @ t.offset, t.center)


def _unit_vector(rng):
    while True:
        v = rng.standard_normal(3)
        n = np.linalg.norm(v)
        if n > 1e-12:
            return v / n


def axis_angle_matrix(axis, angle_deg) -> np.ndarray:
    """Rodrigues rotation about a unit ``axis``."""
    k = np.asarray(axis, dtype=float)
    k = k / np.linalg.norm(k)
    a = math.radians(angle_deg)
    K = np.array([[0.0, -k[2], k[1]], [k[2], 0.0, -k[0]], [-k[1], k[0], 0.0]])
    return np.eye(3) + math.sin(a) * K + (1.0 - math.cos(a)) * (K @ K)


def rotation_angle(R) -> float:
    """Angle in degrees of the rotation ``R``, from its trace."""
    c = (np.trace(R) - 1.0) / 2.0
    return math.degrees(math.acos(min(1.0, max(-1.0, c))))


def random_perturbation(size_mm, size_deg, seed, center=(0.0, 0.0, 0.0)) -> RigidTransform:
    """Translation of exactly ``size_mm`` and rotation of exactly ``size_deg``,
    each in a uniformly random direction. ``seed`` may be an int, a
    :class:`numpy.random.SeedSequence` or a Generator."""
    if size_mm < 0 or size_deg < 0:
        raise ValueError("perturbation sizes must be non-negative")
    rng = np.random.default_rng(seed)
    direction = _unit_vector(rng)
    axis = _unit_vector(rng)
    if size_deg == 0:
        angles = (0.0, 0.0, 0.0)
    else:
        angles, _ = matrix_to_euler(axis_angle_matrix(axis, size_deg))
    return RigidTransform(angles, tuple(size_mm * direction), center)


@dataclass(frozen=True)
class CornerSet:
    """Original and transformed positions (mm) of the 8 corner voxel centers."""

    original: np.ndarray
    transformed: np.ndarray

    def __post_init__(self):
        for name in ("original", "transformed"):
            a = np.asarray(getattr(self, name), dtype=float).reshape(8, 3)
            object.__setattr__(self, name, a)

    def numbers(self) -> np.ndarray:
        """The 48 numbers, row by row: ``x y z new_x new_y new_z``."""
        return np.hstack([self.original, self.transformed]).ravel()

    def __eq__(self, other):
        if not isinstance(other, CornerSet):
            return NotImplemented
        return np.array_equal(self.original, other.original) and np.array_equal(
            self.transformed, other.transformed
        )

    __hash__ = None


def to_corner_set(transform: RigidTransform, volume) -> CornerSet:
    original = volume.corners()
    return CornerSet(original, apply(transform, original))


def serialize_corners(corners: CornerSet) -> str:
    rows = np.hstack([corners.original, corners.transformed])
    return "".join(" ".join(f"{v:.4f}" for v in row) + "\n" for row in rows)


def parse_corners(text: str) -> CornerSet:
    rows = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = line.split()
        if len(fields) != 6:
            raise ValueError(f"line {lineno}: expected 6 numbers, got {len(fields)}")
        rows.append([float(f) for f in fields])
    if len(rows) != 8:
        raise ValueError(f"corner table needs 8 rows, got {len(rows)}")
    rows = np.array(rows)
    return CornerSet(rows[:, :3], rows[:, 3:])


def corner_rms(a: RigidTransform, b: RigidTransform, volume) -> float:
    """RMS distance between where ``a`` and ``b`` send the volume's corners."""
    corners = volume.corners()
    d = apply(a, corners) - apply(b, corners)
    return float(np.sqrt(np.mean(np.sum(d * d, axis=1))))


def corner_set_rms(a: CornerSet, b: CornerSet) -> float:
    d = a.transformed - b.transformed
    return float(np.sqrt(np.mean(np.sum(d * d, axis=1))))
