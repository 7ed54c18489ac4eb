"""Multiresolution hill climbing over the six rigid parameters."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .histogram import OverlapSampler, make_bin_map
from .measures import MeasureSpec, evaluate
from .resample import build_pyramid
from .transform import RigidTransform, corner_rms
from .volume import Volume

PARAM_NAMES = ("rx", "ry", "rz", "tx", "ty", "tz")


class NoInitialOverlap(RuntimeError):
    """The starting estimate leaves the fixed and moving volumes disjoint."""


@dataclass(frozen=True)
class OptimizerConfig:
    """Search schedule.

    Level ``k`` of ``levels`` (mm, coarse to fine) starts with step
    ``initial_step * levels[k] / levels[0]``; rotations use the same numeral
    in degrees. The step halves whenever no neighbor improves. A level ends
    once the step drops below its terminal value: half its starting step on
    intermediate levels, ``terminal_step`` on the last one.
    """

    levels: tuple = (6.0, 3.0, 1.5)
    initial_step: float = 6.0
    terminal_step: float = 1.5 / 256
    halving: float = 2.0
    max_evals_per_level: int = 4000

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(float(v) for v in self.levels))
        if not self.levels:
            raise ValueError("at least one pyramid level is required")
        if any(b >= a for a, b in zip(self.levels, self.levels[1:])):
            raise ValueError("pyramid levels must be strictly decreasing")
        if not (self.initial_step > 0 and self.terminal_step > 0):
            raise ValueError("steps must be positive")
        if self.terminal_step > self.initial_step * self.levels[-1] / self.levels[0]:
            raise ValueError("terminal step exceeds the final level's starting step")
        if not self.halving > 1:
            raise ValueError("halving factor must exceed 1")
        if self.max_evals_per_level < 13:
            raise ValueError("max_evals_per_level too small")

    def schedule(self) -> list[tuple[float, float, float]]:
        """``(level_mm, start_step, terminal_step)`` for each level."""
        out = []
        for k, level in enumerate(self.levels):
            start = self.initial_step * level / self.levels[0]
            last = k == len(self.levels) - 1
            out.append((level, start, self.terminal_step if last else start / self.halving))
        return out


@dataclass
class Trace:
    """One row per iteration: the point held after that iteration."""

    rows: list = field(default_factory=list)

    def add(self, level, step, params, value, evals):
        self.rows.append((float(level), float(step), tuple(float(p) for p in params), float(value), int(evals)))

    @property
    def evaluations(self) -> int:
        return self.rows[-1][4] if self.rows else 0

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["level", "step", *PARAM_NAMES, "value", "evals"])
        for level, step, params, value, evals in self.rows:
            w.writerow([repr(level), repr(step), *map(repr, params), repr(value), evals])
        return buf.getvalue()


@dataclass
class PreparedLevels:
    """Per-level fixed/moving volumes with precomputed histogram samplers."""

    levels: tuple
    samplers: list

    @classmethod
    def build(cls, fixed: Volume, moving: Volume, levels) -> "PreparedLevels":
        fixed_pyr = build_pyramid(fixed, levels)
        moving_pyr = build_pyramid(moving, levels)
        samplers = [
            OverlapSampler(f, m, (make_bin_map(f), make_bin_map(m)))
            for f, m in zip(fixed_pyr, moving_pyr)
        ]
        return cls(tuple(float(v) for v in levels), samplers)


def _score(spec, sampler, transform) -> float:
    hist = sampler.histogram(transform)
    mv = evaluate(spec, hist)
    return mv.value if mv.defined else -math.inf


def hill_climb(
    fixed: Volume,
    moving: Volume,
    spec: MeasureSpec,
    config: OptimizerConfig = OptimizerConfig(),
    start: RigidTransform | None = None,
    prepared: PreparedLevels | None = None,
) -> tuple[RigidTransform, Trace]:
    """Maximize ``spec`` over rigid transforms mapping ``fixed`` into ``moving``.

    At every iteration the 12 neighbors ``+-step`` on each parameter are scored
    in the order rx+, rx-, ry+, ..., tz-; the best one is taken if it strictly
    beats the current point (ties go to the earliest), otherwise the step is
    halved. Empty overlaps score ``-inf``.
    """
    if start is None:
        start = RigidTransform.identity()
    if prepared is None:
        prepared = PreparedLevels.build(fixed, moving, config.levels)
    elif prepared.levels != config.levels:
        raise ValueError("prepared pyramid does not match config levels")

    center = start.center
    params = start.params
    trace = Trace()
    evals = 0

    first = prepared.samplers[0]
    if first.histogram(start).empty:
        raise NoInitialOverlap("no initial overlap between fixed and moving volumes")

    for (level, step, terminal), sampler in zip(config.schedule(), prepared.samplers):
        current = _score(spec, sampler, RigidTransform.from_params(params, center))
        evals += 1
        level_evals = 1
        trace.add(level, step, params, current, evals)
        while step >= terminal and level_evals + 12 <= config.max_evals_per_level:
            best_value, best_params = current, None
            for i in range(6):
                for sign in (1.0, -1.0):
                    cand = params.copy()
                    cand[i] += sign * step
                    value = _score(spec, sampler, RigidTransform.from_params(cand, center))
                    if value > best_value:
                        best_value, best_params = value, cand
            evals += 12
            level_evals += 12
            if best_params is None:
                step /= config.halving
            else:
                params, current = best_params, best_value
            trace.add(level, step, params, current, evals)

    return RigidTransform.from_params(params, center), trace


def success(recovered: RigidTransform, gold: RigidTransform, volume: Volume, threshold_mm: float = 5.0) -> bool:
    """True when the corner RMS displacement between the two transforms is below threshold."""
    return corner_rms(recovered, gold, volume) < threshold_mm
