"""Capture-range and clinical-style experiment drivers."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .histogram import dump_counts_csv
from .measures import MeasureSpec
from .optimizer import NoInitialOverlap, OptimizerConfig, PreparedLevels, hill_climb, success
from .resample import match_resolution
from .transform import (
    RigidTransform,
    compose,
    corner_rms,
    corner_set_rms,
    parse_corners,
    random_perturbation,
    serialize_corners,
    to_corner_set,
)
from .volume import Volume, read_volume

log = logging.getLogger(__name__)

DEFAULT_FOVS = (1.0, 0.75, 0.5)
DEFAULT_SETS = ((10.0, 10.0, 50), (20.0, 20.0, 50), (30.0, 30.0, 50))
STUDY_MEASURES = ("corr", "ecc", "mi", "mit:0.9", "mit:1.0", "mit:1.1", "nmi", "nmit:0.9", "nmit:1.0", "nmit:1.1")


def truncate_fov(volume: Volume, keep_fraction: float, min_dim: int = 8) -> Volume:
    """Crop x and y symmetrically to ``keep_fraction`` of their extent.

    World coordinates of the retained voxels are unchanged.
    """
    if not 0 < keep_fraction <= 1:
        raise ValueError(f"keep_fraction must lie in (0, 1], got {keep_fraction}")
    nx, ny, nz = volume.dims
    keep = [int(round(n * keep_fraction)) for n in (nx, ny)]
    if min(keep) < min_dim:
        raise ValueError(f"truncation leaves {keep[0]}x{keep[1]} voxels in-plane, below {min_dim}")
    x0 = (nx - keep[0]) // 2
    y0 = (ny - keep[1]) // 2
    data = volume.data[:, y0 : y0 + keep[1], x0 : x0 + keep[0]]
    origin = volume.world(x0, y0, 0)
    return Volume(data, volume.spacing, tuple(origin))


def register_pair(
    fixed: Volume,
    moving: Volume,
    spec: MeasureSpec,
    fwhm_fixed=0.0,
    fwhm_moving=0.0,
    config: OptimizerConfig = OptimizerConfig(),
    start: RigidTransform | None = None,
):
    """Resolution matching, pyramid construction and hill climbing in one call."""
    f, m = match_resolution(fixed, fwhm_fixed, moving, fwhm_moving)
    prepared = PreparedLevels.build(f, m, config.levels)
    result, trace = hill_climb(f, m, spec, config, start, prepared)
    return result, trace, prepared


def centers_aligned(fixed: Volume, moving: Volume) -> RigidTransform:
    """Start estimate with volume centers coincident and no rotation."""
    c = fixed.center
    return RigidTransform((0.0, 0.0, 0.0), tuple(moving.center - c), tuple(c))


def start_seed(seed: int, set_index: int, run_index: int) -> np.random.SeedSequence:
    """Seed of one random start; shared by every measure and field of view."""
    return np.random.SeedSequence(seed, spawn_key=(set_index, run_index))


def _set_label(mm, deg):
    return f"{mm:g}mm{deg:g}deg"


@dataclass
class RunRecord:
    run_id: str
    label: str
    measure: str
    q: float
    fov_index: int
    set_index: int
    run_index: int
    start: tuple
    final: tuple
    rms_mm: float
    success: bool
    evaluations: int
    error: str = ""
    trace_csv: str = ""
    corners: str = ""


@dataclass
class ExperimentReport:
    measures: list
    fovs: tuple
    sets: tuple
    runs: list = field(default_factory=list)

    def counts(self) -> dict:
        table = {}
        for spec in self.measures:
            for s in range(len(self.sets)):
                for f in range(len(self.fovs)):
                    table[(spec.label, s, f)] = 0
        for r in self.runs:
            if r.success:
                table[(r.label, r.set_index, r.fov_index)] += 1
        return table

    def table_csv(self) -> str:
        """Rows are measures; columns are perturbation set x field of view (TF1, TF2, ...)."""
        counts = self.counts()
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        header = ["measure"]
        for mm, deg, n in self.sets:
            header += [f"{_set_label(mm, deg)}_TF{f + 1}" for f in range(len(self.fovs))]
        w.writerow(header)
        w.writerow(["# fov_keep"] + [f"{k:g}" for _ in self.sets for k in self.fovs])
        w.writerow(["# starts"] + [str(n) for _, _, n in self.sets for _ in self.fovs])
        for spec in self.measures:
            row = [spec.label]
            for s in range(len(self.sets)):
                row += [counts[(spec.label, s, f)] for f in range(len(self.fovs))]
            w.writerow(row)
        return buf.getvalue()

    def runs_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(
            ["run_id", "measure", "q", "fov_index", "set_index", "run_index"]
            + [f"start_{p}" for p in ("rx", "ry", "rz", "tx", "ty", "tz")]
            + [f"final_{p}" for p in ("rx", "ry", "rz", "tx", "ty", "tz")]
            + ["rms_mm", "success", "evaluations", "error"]
        )
        for r in self.runs:
            w.writerow(
                [r.run_id, r.measure, repr(r.q), r.fov_index, r.set_index, r.run_index]
                + [repr(v) for v in r.start]
                + [repr(v) for v in r.final]
                + [repr(r.rms_mm), int(r.success), r.evaluations, r.error]
            )
        return buf.getvalue()

    def write(self, out_dir) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.csv").write_text(self.table_csv())
        (out / "runs.csv").write_text(self.runs_csv())
        for r in self.runs:
            run_dir = out / "runs" / r.run_id
            run_dir.mkdir(parents=True, exist_ok=True)
            (run_dir / "trace.csv").write_text(r.trace_csv)
            (run_dir / "corners.txt").write_text(r.corners)
        return out / "report.csv"


# Study state lives in module globals so worker processes build each
# field of view's pyramid once.
_STUDY = {}


def _init_study(state):
    _STUDY.clear()
    _STUDY.update(state)
    _STUDY["prepared"] = {}


def _prepared(fov_index):
    cache = _STUDY["prepared"]
    if fov_index not in cache:
        keep = _STUDY["fovs"][fov_index]
        f = truncate_fov(_STUDY["fixed"], keep)
        m = truncate_fov(_STUDY["moving"], keep)
        f, m = match_resolution(f, _STUDY["fwhm_fixed"], m, _STUDY["fwhm_moving"])
        cache[fov_index] = (f, m, PreparedLevels.build(f, m, _STUDY["config"].levels))
    return cache[fov_index]


def _run_one(task):
    measure_index, fov_index, set_index, run_index = task
    spec = _STUDY["measures"][measure_index]
    mm, deg, _ = _STUDY["sets"][set_index]
    gold = _STUDY["gold"]
    full = _STUDY["fixed"]
    pert = random_perturbation(mm, deg, start_seed(_STUDY["seed"], set_index, run_index), gold.center)
    start = compose(gold, pert)
    run_id = f"{spec.kind.value}{'' if not spec.tsallis else f'-q{spec.q:g}'}_TF{fov_index + 1}_S{set_index + 1}_R{run_index:03d}"
    f, m, prepared = _prepared(fov_index)
    try:
        result, trace = hill_climb(f, m, spec, _STUDY["config"], start, prepared)
    except NoInitialOverlap as exc:
        return RunRecord(
            run_id, spec.label, spec.kind.value, spec.q, fov_index, set_index, run_index,
            tuple(start.params), tuple(start.params), corner_rms(start, gold, full),
            False, 0, error=str(exc),
        )
    rms = corner_rms(result, gold, full)
    return RunRecord(
        run_id,
        spec.label,
        spec.kind.value,
        spec.q,
        fov_index,
        set_index,
        run_index,
        tuple(start.params),
        tuple(result.params),
        rms,
        success(result, gold, full, _STUDY["threshold_mm"]),
        trace.evaluations,
        trace_csv=trace.to_csv(),
        corners=serialize_corners(to_corner_set(result, full)),
    )


def capture_range_study(
    fixed: Volume,
    moving: Volume,
    gold: RigidTransform,
    measures,
    sets=DEFAULT_SETS,
    fovs=DEFAULT_FOVS,
    seed: int = 0,
    config: OptimizerConfig = OptimizerConfig(),
    fwhm_fixed=0.0,
    fwhm_moving=0.0,
    threshold_mm: float = 5.0,
    jobs: int = 1,
) -> ExperimentReport:
    """Success counts from randomized starts around ``gold``.

    Every start is ``gold`` composed with a random perturbation of exact size
    ``(mm, deg)``; start ``r`` of set ``s`` depends only on ``(seed, s, r)``,
    so all measures and fields of view see the same starts. Results are
    independent of ``jobs``.
    """
    measures = [m if isinstance(m, MeasureSpec) else MeasureSpec.parse(m) for m in measures]
    sets = tuple((float(mm), float(deg), int(n)) for mm, deg, n in sets)
    fovs = tuple(float(k) for k in fovs)
    for k in fovs:
        truncate_fov(fixed, k)
        truncate_fov(moving, k)
    state = dict(
        fixed=fixed, moving=moving, gold=gold, measures=measures, sets=sets, fovs=fovs,
        seed=int(seed), config=config, fwhm_fixed=fwhm_fixed, fwhm_moving=fwhm_moving,
        threshold_mm=threshold_mm,
    )
    tasks = [
        (mi, fi, si, ri)
        for fi in range(len(fovs))
        for mi in range(len(measures))
        for si, (_, _, n) in enumerate(sets)
        for ri in range(n)
    ]
    if jobs <= 1:
        _init_study(state)
        runs = [_run_one(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs, initializer=_init_study, initargs=(state,)) as pool:
            runs = list(pool.map(_run_one, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    order = {s.label: i for i, s in enumerate(measures)}
    runs.sort(key=lambda r: (order[r.label], r.fov_index, r.set_index, r.run_index))
    return ExperimentReport(measures, fovs, sets, runs)


@dataclass
class ClinicalResult:
    pair: int
    fixed: str
    moving: str
    measure: str
    q: float
    value: float = math.nan
    rms_vs_gold: float = math.nan
    corners: str = ""
    trace_csv: str = ""
    error: str = ""


@dataclass
class ClinicalReport:
    results: list

    @property
    def failures(self) -> int:
        return sum(1 for r in self.results if r.error)

    def summary_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["pair", "fixed", "moving", "measure", "q", "value", "rms_vs_gold_mm", "error"])
        for r in self.results:
            w.writerow([r.pair, r.fixed, r.moving, r.measure, repr(r.q), repr(r.value), repr(r.rms_vs_gold), r.error])
        return buf.getvalue()

    def write(self, out_dir) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for r in self.results:
            if r.error:
                continue
            tag = f"pair{r.pair:02d}_{r.measure}" + (f"-q{r.q:g}" if r.measure in ("mit", "nmit") else "")
            run_dir = out / "runs" / tag
            run_dir.mkdir(parents=True, exist_ok=True)
            (run_dir / "corners.txt").write_text(r.corners)
            (run_dir / "trace.csv").write_text(r.trace_csv)
        path = out / "summary.csv"
        path.write_text(self.summary_csv())
        return path


def load_manifest(path) -> list[dict]:
    """Manifest entries with paths resolved against the manifest's directory."""
    path = Path(path)
    entries = json.loads(path.read_text())
    if not isinstance(entries, list):
        raise ValueError("manifest must be a JSON list")
    out = []
    for e in entries:
        e = dict(e)
        for key in ("fixed", "moving", "gold"):
            if e.get(key):
                e[key] = str((path.parent / e[key]).resolve())
        out.append(e)
    return out


def clinical_run(entries, measures, config: OptimizerConfig = OptimizerConfig(), dump_hist_dir=None) -> ClinicalReport:
    """Register every manifest pair from centers-aligned starts under each measure.

    Failures (missing files, disjoint volumes, ...) are recorded per pair
    and the run continues.
    """
    measures = [m if isinstance(m, MeasureSpec) else MeasureSpec.parse(m) for m in measures]
    results = []
    for index, entry in enumerate(entries):
        fixed_path, moving_path = entry.get("fixed", ""), entry.get("moving", "")
        try:
            fixed = read_volume(fixed_path)
            moving = read_volume(moving_path)
            gold = parse_corners(Path(entry["gold"]).read_text()) if entry.get("gold") else None
        except (OSError, ValueError, KeyError) as exc:
            log.warning("pair %d: %s", index, exc)
            for spec in measures:
                results.append(ClinicalResult(index, fixed_path, moving_path, spec.kind.value, spec.q, error=str(exc)))
            continue
        start = centers_aligned(fixed, moving)
        fwhm_f = entry.get("fwhm_fixed_mm", 0.0)
        fwhm_m = entry.get("fwhm_moving_mm", 0.0)
        for spec in measures:
            res = ClinicalResult(index, fixed_path, moving_path, spec.kind.value, spec.q)
            try:
                result, trace, prepared = register_pair(fixed, moving, spec, fwhm_f, fwhm_m, config, start)
            except (NoInitialOverlap, ValueError) as exc:
                res.error = str(exc)
                results.append(res)
                continue
            corners = to_corner_set(result, fixed)
            res.value = trace.rows[-1][3]
            res.corners = serialize_corners(corners)
            res.trace_csv = trace.to_csv()
            if gold is not None:
                res.rms_vs_gold = corner_set_rms(corners, gold)
            if dump_hist_dir is not None:
                hist = prepared.samplers[-1].histogram(result)
                Path(dump_hist_dir).mkdir(parents=True, exist_ok=True)
                dump_counts_csv(hist, Path(dump_hist_dir) / f"pair{index:02d}_{spec.kind.value}.csv")
            results.append(res)
    return ClinicalReport(results)

