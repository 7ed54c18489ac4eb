"""Command-line entry point: register, simulate, capture-range, clinical, convert."""

from __future__ import annotations

import argparse
import json
import logging
import re
import sys
from pathlib import Path

from . import __version__
from .harness import (
    DEFAULT_FOVS,
    STUDY_MEASURES,
    capture_range_study,
    centers_aligned,
    clinical_run,
    load_manifest,
    register_pair,
)
from .histogram import dump_counts_csv
from .measures import Kind, MeasureSpec
from .optimizer import NoInitialOverlap, OptimizerConfig
from .phantom import make_phantom_pair
from .simulation import default_fovs, parse_theta_range, response_curve, rows_to_csv
from .transform import RigidTransform, serialize_corners, to_corner_set
from .volume import VolumeFormatError, load_volume, parse_rire_header, read_volume, save_volume

EXIT_OK, EXIT_INVALID, EXIT_PARTIAL = 0, 1, 2

log = logging.getLogger("tsallisreg")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}\n{self.format_usage()}")


def _floats(text, n=None):
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if n is not None and len(values) != n:
        raise argparse.ArgumentTypeError(f"expected {n} comma-separated numbers, got {text!r}")
    return values


def _params(text):
    return _floats(text, 6)


def _measures(text):
    try:
        return [MeasureSpec.parse(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _sets(text):
    out = []
    for item in text.split(","):
        parts = item.split(":")
        if len(parts) != 3:
            raise argparse.ArgumentTypeError(f"perturbation set must be mm:deg:count, got {item!r}")
        out.append((float(parts[0]), float(parts[1]), int(parts[2])))
    return out


def _add_optimizer_flags(p):
    p.add_argument("--pyramid", type=_floats, default=[6.0, 3.0, 1.5], help="pyramid levels in mm, coarse to fine")
    p.add_argument("--initial-step", type=float, default=6.0)
    p.add_argument("--terminal-step", type=float, default=1.5 / 256)


def _config(args) -> OptimizerConfig:
    return OptimizerConfig(tuple(args.pyramid), args.initial_step, args.terminal_step)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tsallisreg", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", type=Path, help="JSON file of flag defaults; explicit flags win")
    parser.add_argument("--log-level", default="WARNING")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("register", help="register one volume pair and write its corner table")
    p.add_argument("--fixed", required=True, type=Path)
    p.add_argument("--moving", required=True, type=Path)
    p.add_argument("--measure", default="nmi", choices=[k.value for k in Kind])
    p.add_argument("--q", type=float, default=1.0)
    p.add_argument("--pseudo-additive", action="store_true")
    p.add_argument("--init", type=_params, help="rx,ry,rz,tx,ty,tz start (deg, mm); default centers aligned")
    p.add_argument("--fwhm-a", type=float, default=0.0, help="intrinsic FWHM of the fixed volume (mm)")
    p.add_argument("--fwhm-b", type=float, default=0.0, help="intrinsic FWHM of the moving volume (mm)")
    p.add_argument("--out", type=Path, default=Path("corners.txt"))
    p.add_argument("--trace", type=Path)
    p.add_argument("--dump-hist", type=Path)
    p.add_argument("--seed", type=int)
    _add_optimizer_flags(p)

    p = sub.add_parser("simulate", help="half-circle overlap response curves as CSV")
    p.add_argument("--fov", type=_floats, help="half-widths in pixels; default 1/4, 3/8, 1/2 of the grid")
    p.add_argument("--theta", type=parse_theta_range, default=parse_theta_range("-90:90:1"))
    p.add_argument("--measures", type=_measures, default=_measures("mi,nmi,nmit:0.9,nmit:1.0,nmit:1.1"))
    p.add_argument("--size", type=int, default=256)
    p.add_argument("--radius", type=float, default=0.4, help="radius as a fraction of the grid size")
    p.add_argument("--out", type=Path)
    p.add_argument("--seed", type=int)

    p = sub.add_parser("capture-range", help="success counts from randomized starts")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--fixed", type=Path)
    src.add_argument("--phantom", action="store_true", help="use the synthetic 64^3 phantom pair")
    p.add_argument("--moving", type=Path)
    p.add_argument("--gold", type=_params, help="rx,ry,rz,tx,ty,tz mapping fixed to moving")
    p.add_argument("--measures", type=_measures, default=_measures(",".join(STUDY_MEASURES)))
    p.add_argument("--sets", type=_sets, default=_sets("10:10:50,20:20:50,30:30:50"))
    p.add_argument("--fovs", type=_floats, default=list(DEFAULT_FOVS))
    p.add_argument("--fwhm-a", type=float, default=0.0)
    p.add_argument("--fwhm-b", type=float, default=0.0)
    p.add_argument("--threshold", type=float, default=5.0, help="corner RMS success threshold (mm)")
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", type=Path, default=Path("capture_range"))
    _add_optimizer_flags(p)

    p = sub.add_parser("clinical", help="register every pair listed in a manifest")
    p.add_argument("--manifest", required=True, type=Path)
    p.add_argument("--measures", type=_measures, default=_measures("nmi"))
    p.add_argument("--out", type=Path, default=Path("clinical"))
    p.add_argument("--dump-hist", type=Path)
    _add_optimizer_flags(p)

    p = sub.add_parser("convert", help="RIRE header + raw payload to a JSON-sidecar volume")
    p.add_argument("--header", required=True, type=Path)
    p.add_argument("--raw", required=True, type=Path)
    p.add_argument("--dtype", choices=["int16", "float32"])
    p.add_argument("--byte-order", choices=["big", "little"])
    p.add_argument("--out", required=True, type=Path)
    return parser


def _cmd_register(args):
    fixed = read_volume(args.fixed)
    moving = read_volume(args.moving)
    spec = MeasureSpec(args.measure, args.q, args.pseudo_additive)
    center = tuple(fixed.center)
    start = RigidTransform.from_params(args.init, center) if args.init else centers_aligned(fixed, moving)
    result, trace, prepared = register_pair(fixed, moving, spec, args.fwhm_a, args.fwhm_b, _config(args), start)
    args.out.write_text(serialize_corners(to_corner_set(result, fixed)))
    if args.trace:
        args.trace.write_text(trace.to_csv())
    if args.dump_hist:
        dump_counts_csv(prepared.samplers[-1].histogram(result), args.dump_hist)
    log.info("final parameters %s value %r", result.params, trace.rows[-1][3])
    return EXIT_OK


def _cmd_simulate(args):
    fovs = args.fov if args.fov else default_fovs(args.size)
    rows = response_curve(args.measures, args.theta, fovs, args.size, args.radius)
    text = rows_to_csv(rows, args.size, args.radius)
    if args.out:
        args.out.write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _cmd_capture_range(args):
    if args.seed is None:
        raise UsageError("capture-range draws random starts: --seed is required")
    gold = RigidTransform.from_params(args.gold) if args.gold else RigidTransform()
    if args.phantom:
        if not args.gold:
            gold = RigidTransform((4.0, -3.0, 5.0), (3.0, -2.0, 4.0))
        pair = make_phantom_pair(gold, seed=args.seed)
        fixed, moving = pair.fixed, pair.moving
        fwhm_a, fwhm_b = pair.fwhm_fixed, pair.fwhm_moving
    else:
        if args.moving is None:
            raise UsageError("--moving is required with --fixed")
        fixed, moving = read_volume(args.fixed), read_volume(args.moving)
        fwhm_a, fwhm_b = args.fwhm_a, args.fwhm_b
    report = capture_range_study(
        fixed, moving, gold, args.measures, args.sets, args.fovs, args.seed, _config(args),
        fwhm_a, fwhm_b, args.threshold, args.jobs,
    )
    path = report.write(args.out)
    sys.stdout.write(path.read_text())
    return EXIT_PARTIAL if any(r.error for r in report.runs) else EXIT_OK


def _cmd_clinical(args):
    entries = load_manifest(args.manifest)
    report = clinical_run(entries, args.measures, _config(args), args.dump_hist)
    report.write(args.out)
    return EXIT_PARTIAL if report.failures else EXIT_OK


def _cmd_convert(args):
    header = parse_rire_header(args.header.read_text(errors="replace"))
    if args.dtype:
        header.dtype = args.dtype
    if args.byte_order:
        header.byte_order = args.byte_order
    header.__post_init__()
    volume = load_volume(header, args.raw.read_bytes())
    save_volume(volume, args.out)
    return EXIT_OK


COMMANDS = {
    "register": _cmd_register,
    "simulate": _cmd_simulate,
    "capture-range": _cmd_capture_range,
    "clinical": _cmd_clinical,
    "convert": _cmd_convert,
}


def _join_negative_values(argv):
    """``--theta -90:90:1`` -> ``--theta=-90:90:1`` so argparse keeps the value."""
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        nxt = argv[i + 1] if i + 1 < len(argv) else None
        if tok.startswith("--") and "=" not in tok and nxt is not None and re.match(r"^-[\d.]", nxt):
            out.append(f"{tok}={nxt}")
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def _parse(parser, argv):
    argv = _join_negative_values(list(sys.argv[1:] if argv is None else argv))
    args = parser.parse_args(argv)
    if args.config is None or args.command is None:
        return args
    try:
        overrides = json.loads(args.config.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {args.config}: {exc}") from None
    if not isinstance(overrides, dict):
        raise UsageError("config file must hold a JSON object")
    subparser = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest: a for a in subparser._actions}
    defaults = {}
    for key, value in overrides.items():
        dest = key.replace("-", "_")
        if dest not in known:
            raise UsageError(f"unknown config key {key!r} for {args.command}")
        action = known[dest]
        if isinstance(value, str) and action.type is not None:
            value = action.type(value)
        defaults[dest] = value
    subparser.set_defaults(**defaults)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _parse(parser, argv)
        logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.WARNING))
        if args.command is None:
            raise UsageError(parser.format_usage())
        return COMMANDS[args.command](args)
    except UsageError as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_INVALID
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except (VolumeFormatError, ValueError, OSError, NoInitialOverlap) as exc:
        sys.stderr.write(f"tsallisreg: error: {exc}\n")
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
