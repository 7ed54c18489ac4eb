"""Shannon and Tsallis information measures over joint histograms.

All entropies use the natural logarithm with Boltzmann constant ``k = 1``.
Tsallis entropy with ``|q - 1| < 1e-6`` is evaluated as Shannon entropy, so
MIT/NMIT at ``q ~ 1`` reproduce MI/NMI exactly.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .histogram import JointHistogram, normalize

Q_TOL = 1e-6


class Kind(str, enum.Enum):
    MI = "mi"
    NMI = "nmi"
    ECC = "ecc"
    CORRELATION = "corr"
    MIT = "mit"
    NMIT = "nmit"


class Regime(str, enum.Enum):
    SUB_ADDITIVE = "sub-additive"
    ADDITIVE = "additive"
    SUPER_ADDITIVE = "super-additive"


@dataclass(frozen=True)
class MeasureSpec:
    """Which measure to maximize.

    ``q`` only matters for MIT/NMIT. With ``pseudo_additive`` set, MIT
    subtracts the joint entropy from the pseudo-additive composition
    ``S(A) + S(B) + (1-q) S(A) S(B)`` rather than from ``S(A) + S(B)``.
    """

    kind: Kind
    q: float = 1.0
    pseudo_additive: bool = False

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if not self.q > 0:
            raise ValueError(f"entropic index q must be positive, got {self.q}")

    @property
    def tsallis(self) -> bool:
        return self.kind in (Kind.MIT, Kind.NMIT)

    @property
    def label(self) -> str:
        if self.tsallis:
            q = "~1.0" if abs(self.q - 1.0) < Q_TOL else f"{self.q:g}"
            return f"{self.kind.value.upper()} {q}"
        return {Kind.CORRELATION: "Correlation"}.get(self.kind, self.kind.value.upper())

    @classmethod
    def parse(cls, text: str) -> "MeasureSpec":
        """``"nmi"``, ``"nmit:0.9"``, ``"mit"`` (q = 1) and so on."""
        name, _, q = text.strip().lower().partition(":")
        aliases = {"correlation": "corr", "ncc": "corr"}
        return cls(Kind(aliases.get(name, name)), float(q) if q else 1.0)


@dataclass(frozen=True)
class MeasureValue:
    value: float
    h_a: float = math.nan
    h_b: float = math.nan
    h_ab: float = math.nan
    defined: bool = True


UNDEFINED = MeasureValue(math.nan, defined=False)


def shannon_entropy(p) -> float:
    p = np.asarray(p, dtype=float).ravel()
    p = p[p > 0]
    return float(-np.sum(p * np.log(p)))


def tsallis_entropy(p, q: float) -> float:
    if abs(q - 1.0) < Q_TOL:
        return shannon_entropy(p)
    p = np.asarray(p, dtype=float).ravel()
    p = p[p > 0]
    return float((1.0 - np.sum(p**q)) / (q - 1.0))


def classify_regime(q: float) -> Regime:
    if q < 1.0 - Q_TOL:
        return Regime.SUB_ADDITIVE
    if q > 1.0 + Q_TOL:
        return Regime.SUPER_ADDITIVE
    return Regime.ADDITIVE


def pseudo_additivity_residual(pa, pb, q: float) -> float:
    """Gap between the entropy of the independent composite ``pa x pb`` and
    the pseudo-additive rule built from the parts."""
    pa = np.asarray(pa, dtype=float).ravel()
    pb = np.asarray(pb, dtype=float).ravel()
    sa, sb = tsallis_entropy(pa, q), tsallis_entropy(pb, q)
    s_ab = tsallis_entropy(np.outer(pa, pb), q)
    return abs(s_ab - (sa + sb + (1.0 - q) * sa * sb))


def _pearson(moments) -> float:
    n, sa, sb, saa, sbb, sab = moments
    if n <= 0:
        return math.nan
    cov = sab / n - (sa / n) * (sb / n)
    va = saa / n - (sa / n) ** 2
    vb = sbb / n - (sb / n) ** 2
    if va <= 0 or vb <= 0:
        return math.nan
    return float(np.clip(cov / math.sqrt(va * vb), -1.0, 1.0))


def evaluate(spec: MeasureSpec, hist: JointHistogram) -> MeasureValue:
    """Score ``hist`` under ``spec``; larger is better.

    Returns :data:`UNDEFINED`-style values (``defined=False``) on an empty
    overlap, or when a ratio measure has a zero denominator.
    """
    if hist.empty:
        return UNDEFINED
    if spec.kind is Kind.CORRELATION:
        r = _pearson(hist.moments)
        return MeasureValue(r, defined=not math.isnan(r))

    p_ab, p_a, p_b = normalize(hist)
    if spec.tsallis:
        h = lambda p: tsallis_entropy(p, spec.q)  # noqa: E731
    else:
        h = shannon_entropy
    h_a, h_b, h_ab = h(p_a), h(p_b), h(p_ab)

    kind = spec.kind
    if kind is Kind.MI:
        value = h_a + h_b - h_ab
    elif kind is Kind.MIT:
        value = h_a + h_b - h_ab
        if spec.pseudo_additive:
            value += (1.0 - spec.q) * h_a * h_b
    elif kind in (Kind.NMI, Kind.NMIT):
        if h_ab <= 0:
            return MeasureValue(math.nan, h_a, h_b, h_ab, defined=False)
        value = (h_a + h_b) / h_ab
    elif kind is Kind.ECC:
        if h_a + h_b <= 0:
            return MeasureValue(math.nan, h_a, h_b, h_ab, defined=False)
        value = 2.0 * (h_a + h_b - h_ab) / (h_a + h_b)
    else:  # pragma: no cover
        raise ValueError(f"unknown measure {kind}")
    return MeasureValue(float(value), h_a, h_b, h_ab)
