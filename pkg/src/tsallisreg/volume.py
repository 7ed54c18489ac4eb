"""Voxel-grid data model plus RIRE-style and JSON-sidecar raw volume I/O."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

DTYPES = {
    ("int16", "big"): np.dtype(">i2"),
    ("int16", "little"): np.dtype("<i2"),
    ("float32", "big"): np.dtype(">f4"),
    ("float32", "little"): np.dtype("<f4"),
}


class VolumeFormatError(ValueError):
    """Raised when a header, sidecar or payload cannot be turned into a volume."""


class HeaderParseError(VolumeFormatError):
    def __init__(self, message, key=None, line=None):
        super().__init__(message)
        self.key = key
        self.line = line


class SizeMismatchError(VolumeFormatError):
    def __init__(self, expected, actual):
        super().__init__(f"payload holds {actual} bytes, header implies {expected}")
        self.expected = expected
        self.actual = actual


def _check_geometry(dims, spacing):
    if len(dims) != 3 or any(int(n) < 1 for n in dims):
        raise VolumeFormatError(f"dims must be three positive integers, got {dims}")
    if len(spacing) != 3 or not all(np.isfinite(s) and s > 0 for s in spacing):
        raise VolumeFormatError(f"spacing must be three positive reals, got {spacing}")


@dataclass(frozen=True, eq=False)
class Volume:
    """A 3D scalar image on a regular grid.

    ``data`` is stored with shape ``(nz, ny, nx)`` so that ``data.ravel()``
    is x-fastest: voxel ``(i, j, k)`` sits at flat index ``i + nx*(j + ny*k)``.
    World position of voxel ``(i, j, k)`` is ``origin + (i, j, k) * spacing``.
    """

    data: np.ndarray
    spacing: tuple[float, float, float]
    origin: tuple[float, float, float] | None = None

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 3:
            raise VolumeFormatError(f"volume data must be 3D, got shape {data.shape}")
        spacing = tuple(float(s) for s in self.spacing)
        _check_geometry(data.shape, spacing)
        if not np.all(np.isfinite(data)):
            raise VolumeFormatError("volume intensities must be finite")
        data = data.copy()
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "spacing", spacing)
        if self.origin is None:
            origin = centered_origin(self.dims, spacing)
        else:
            origin = tuple(float(o) for o in self.origin)
        object.__setattr__(self, "origin", origin)

    @property
    def dims(self) -> tuple[int, int, int]:
        nz, ny, nx = self.data.shape
        return (nx, ny, nz)

    @property
    def center(self) -> np.ndarray:
        """World coordinate of the grid center."""
        return np.asarray(self.origin) + 0.5 * (np.asarray(self.dims) - 1) * self.spacing

    def world(self, i, j, k) -> np.ndarray:
        return np.asarray(self.origin) + np.asarray([i, j, k], dtype=float) * self.spacing

    def corners(self) -> np.ndarray:
        """World coordinates of the 8 corner voxel centers, ordered by (z, y, x)."""
        nx, ny, nz = self.dims
        out = [self.world(i, j, k) for k in (0, nz - 1) for j in (0, ny - 1) for i in (0, nx - 1)]
        return np.array(out)

    def __eq__(self, other):
        if not isinstance(other, Volume):
            return NotImplemented
        return (
            self.spacing == other.spacing
            and self.origin == other.origin
            and self.data.shape == other.data.shape
            and bool(np.array_equal(self.data, other.data))
        )

    __hash__ = None


def centered_origin(dims, spacing):
    return tuple(-0.5 * (n - 1) * s for n, s in zip(dims, spacing))


@dataclass
class VolumeHeader:
    dims: tuple[int, int, int]
    spacing: tuple[float, float, float]
    dtype: str = "int16"
    byte_order: str = "big"
    labels: dict = field(default_factory=dict)

    def __post_init__(self):
        _check_geometry(self.dims, self.spacing)
        if (self.dtype, self.byte_order) not in DTYPES:
            raise VolumeFormatError(
                f"unsupported dtype/byte order {self.dtype!r}/{self.byte_order!r}"
            )

    @property
    def numpy_dtype(self) -> np.dtype:
        return DTYPES[(self.dtype, self.byte_order)]

    @property
    def nbytes(self) -> int:
        nx, ny, nz = self.dims
        return nx * ny * nz * self.numpy_dtype.itemsize


_REQUIRED = ("rows", "columns", "slices", "pixel size", "slice thickness")


def _normalize_key(key):
    return re.sub(r"\s+", " ", key.strip().lower())


def parse_rire_header(text: str) -> VolumeHeader:
    """Parse a ``key := value`` ASCII header.

    Keys are matched case-insensitively with whitespace collapsed. ``columns``
    is the x extent, ``rows`` the y extent and ``slices`` the z extent.
    ``pixel size`` holds two values separated by ``:``. Unrecognised keys are
    kept in ``labels``. Every failure surfaces as :class:`HeaderParseError`.
    """
    values = {}
    lines = {}
    labels = {}
    try:
        for lineno, raw in enumerate(str(text).splitlines(), start=1):
            line = raw.strip()
            if not line:
                continue
            if ":=" not in line:
                raise HeaderParseError(f"line {lineno}: expected 'key := value'", line=lineno)
            key, _, value = line.partition(":=")
            key = _normalize_key(key)
            value = value.strip()
            if key in _REQUIRED:
                values[key] = value
                lines[key] = lineno
            else:
                labels[key] = value

        for key in _REQUIRED:
            if key not in values:
                raise HeaderParseError(f"missing required key {key!r}", key=key)

        def number(key, value, kind=float):
            try:
                x = kind(value)
            except ValueError:
                raise HeaderParseError(
                    f"line {lines[key]}: non-numeric value {value!r} for {key!r}",
                    key=key,
                    line=lines[key],
                ) from None
            if kind is float and not np.isfinite(x):
                raise HeaderParseError(
                    f"line {lines[key]}: non-finite value for {key!r}", key=key, line=lines[key]
                )
            return x

        nx = number("columns", values["columns"], int)
        ny = number("rows", values["rows"], int)
        nz = number("slices", values["slices"], int)
        parts = [p.strip() for p in values["pixel size"].split(":")]
        if len(parts) != 2:
            raise HeaderParseError(
                f"line {lines['pixel size']}: pixel size needs two ':'-separated values",
                key="pixel size",
                line=lines["pixel size"],
            )
        sx, sy = (number("pixel size", p) for p in parts)
        sz = number("slice thickness", values["slice thickness"])
        try:
            return VolumeHeader(dims=(nx, ny, nz), spacing=(sx, sy, sz), labels=labels)
        except VolumeFormatError as exc:
            raise HeaderParseError(str(exc)) from None
    except HeaderParseError:
        raise
    except Exception as exc:  # parser totality: nothing else escapes
        raise HeaderParseError(f"unparseable header: {exc}") from None


def load_volume(header: VolumeHeader, payload: bytes, origin=None) -> Volume:
    """Decode a raw buffer described by ``header``; centered at world (0,0,0) by default."""
    if len(payload) != header.nbytes:
        raise SizeMismatchError(header.nbytes, len(payload))
    nx, ny, nz = header.dims
    data = np.frombuffer(payload, dtype=header.numpy_dtype).astype(np.float64)
    return Volume(data.reshape(nz, ny, nx), header.spacing, origin)


def save_volume(volume: Volume, path) -> Path:
    """Write ``volume`` as a float32 little-endian ``.raw`` payload plus JSON sidecar.

    ``path`` names the sidecar; the payload goes beside it with suffix ``.raw``.
    Returns the sidecar path.
    """
    path = Path(path)
    if path.suffix != ".json":
        path = path.with_suffix(".json")
    raw = path.with_suffix(".raw")
    meta = {
        "dims": list(volume.dims),
        "spacing_mm": list(volume.spacing),
        "dtype": "float32",
        "byte_order": "little",
        "origin_mm": list(volume.origin),
        "payload": raw.name,
    }
    raw.write_bytes(volume.data.astype("<f4").tobytes())
    path.write_text(json.dumps(meta, indent=2) + "\n")
    return path


def load_sidecar(path) -> Volume:
    """Read a volume from its JSON sidecar (payload defaults to ``<stem>.raw``)."""
    path = Path(path)
    try:
        meta = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise VolumeFormatError(f"{path}: malformed sidecar JSON: {exc}") from None
    if not isinstance(meta, dict):
        raise VolumeFormatError(f"{path}: sidecar must be a JSON object")
    for key in ("dims", "spacing_mm"):
        if key not in meta:
            raise VolumeFormatError(f"{path}: sidecar lacks {key!r}")
    try:
        header = VolumeHeader(
            dims=tuple(int(n) for n in meta["dims"]),
            spacing=tuple(float(s) for s in meta["spacing_mm"]),
            dtype=meta.get("dtype", "float32"),
            byte_order=meta.get("byte_order", "little"),
        )
    except (TypeError, ValueError) as exc:
        raise VolumeFormatError(f"{path}: {exc}") from None
    payload = path.with_name(meta.get("payload", path.with_suffix(".raw").name))
    origin = meta.get("origin_mm")
    return load_volume(header, payload.read_bytes(), origin)


def read_volume(path) -> Volume:
    """Load from a JSON sidecar, or from a RIRE ASCII header with a ``.bin``/``.raw`` payload."""
    path = Path(path)
    if path.suffix == ".json":
        return load_sidecar(path)
    header = parse_rire_header(path.read_text(errors="replace"))
    for suffix in (".bin", ".raw", ".img"):
        payload = path.with_suffix(suffix)
        if payload.exists():
            return load_volume(header, payload.read_bytes())
    raise FileNotFoundError(f"no payload found beside header {path}")
