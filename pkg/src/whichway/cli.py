"""Command-line entry point: ``whichway {pattern,sweep,sample,eraser}``.

Every command writes a CSV plus ``<out-stem>.manifest.json``. Passing a
manifest back through ``--config`` re-runs the command with the same
configuration, seed and arguments (explicit flags still override).
"""

from __future__ import annotations

import argparse
import json
import math
import re
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .analytics import (
    distinguishability,
    duality_sweep,
    fringe_width,
    pattern_samples,
    visibility_bound,
)
from .config import ExperimentConfig
from .estimators import (
    DEFAULT_BINS,
    angular_distance,
    estimate_visibility,
    histogram,
    phase_shift,
)
from .exceptions import EstimatorError, PreconditionError, SamplerError, WhichWayError
from .model import beta, norm_constant, sigma_t_sq
from .sampler import Basis, DetectorOutcome, MeasurementPolicy, run_experiment

EXIT_USAGE = 2
EXIT_NUMERICAL = 3

NOTES = [
    "d_plus/d_minus eraser basis uses (d1 +/- d2)/sqrt(2) so that it is orthonormal",
    "densities divide by the exact squared norm N^2, slit-overlap term included",
    "visibility: envelope-normalised least squares with k fixed from the fringe-width formula, "
    "window |x| <= 2w, model a*(1 + V cos(kx+phi)/cosh(x d / 2 sigma_t^2)); estimator choices are not from a published procedure",
]

CONFIG_FLAGS = {
    "d": "d",
    "epsilon": "epsilon",
    "wavelength": "wavelength",
    "L": "L",
    "c": "c",
    "overlap_r": "overlap_r",
    "theta": "theta",
}


def fmt(v) -> str:
    """17 significant digits: parses back to the identical double."""
    return format(float(v), ".17g")


def _parse_number(token: str) -> float:
    token = token.strip()
    m = re.fullmatch(r"(-)?(\d*\.?\d*)\*?pi(?:/(\d*\.?\d+))?", token)
    if m:
        sign = -1.0 if m.group(1) else 1.0
        mult = float(m.group(2)) if m.group(2) else 1.0
        div = float(m.group(3)) if m.group(3) else 1.0
        return sign * mult * math.pi / div
    return float(token)


def parse_grid(text: str) -> list[float]:
    """``"0,0.5,1"``, ``"pi/4,-pi/4"`` or ``"start:stop:num"`` (inclusive linspace)."""
    if ":" in text:
        start, stop, num = text.split(":")
        return [float(v) for v in np.linspace(_parse_number(start), _parse_number(stop), int(num))]
    return [_parse_number(t) for t in text.split(",") if t.strip()]


# ------------------------------------------------------------------ config

def _load_json(path):
    with open(path) as fh:
        return json.load(fh)


def resolve(args, subcommand):
    """Merge defaults, an optional config/manifest file and explicit flags."""
    data, seed, saved_args = {}, 0, {}
    if args.config:
        raw = _load_json(args.config)
        if "config" in raw and "subcommand" in raw:
            if raw["subcommand"] != subcommand:
                raise PreconditionError("config", f"manifest is for '{raw['subcommand']}', not '{subcommand}'")
            data = dict(raw["config"])
            seed = raw.get("seed", 0)
            saved_args = raw.get("arguments", {})
        else:
            data = dict(raw)
            seed = data.pop("seed", 0)
    for flag, key in CONFIG_FLAGS.items():
        value = getattr(args, flag)
        if value is not None:
            data[key] = value
    if args.seed is not None:
        seed = args.seed
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise PreconditionError("seed", "must be an unsigned 64-bit integer")
    for key, value in saved_args.items():
        if getattr(args, key, None) is None:
            setattr(args, key, value)
    return ExperimentConfig.from_json_dict(data), seed


def derived_quantities(config):
    try:
        w = fringe_width(config)
    except PreconditionError:
        w = None
    return {
        "beta": beta(config),
        "sigma_t_sq": sigma_t_sq(config),
        "fringe_width": w,
        "D": distinguishability(config),
        "V_bound": visibility_bound(config),
        "N2": norm_constant(config),
    }


def write_manifest(out: Path, subcommand, config, seed, arguments, outputs):
    manifest = {
        "tool": "whichway",
        "version": __version__,
        "subcommand": subcommand,
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "seed": seed,
        "config": config.to_json_dict(),
        "arguments": arguments,
        "derived": derived_quantities(config),
        "outputs": [str(p) for p in outputs],
        "notes": NOTES,
    }
    path = out.with_suffix(".manifest.json")
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def write_csv(path: Path, header, rows):
    lines = [",".join(header)]
    lines.extend(",".join(row) for row in rows)
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


# --------------------------------------------------------------- commands

def cmd_pattern(args):
    config, seed = resolve(args, "pattern")
    points = 2001 if args.points is None else int(args.points)
    pattern = pattern_samples(config, args.lo, args.hi, points)
    out = Path(args.out or "pattern.csv")
    header = ["x", "intensity"]
    cols = [pattern.xs, pattern.intensities]
    if pattern.closed_form is not None:
        header.append("intensity_closed_form")
        cols.append(pattern.closed_form)
    write_csv(out, header, ([fmt(v) for v in row] for row in zip(*cols)))
    arguments = {"lo": float(pattern.xs[0]), "hi": float(pattern.xs[-1]), "points": points}
    write_manifest(out, "pattern", config, seed, arguments, [out])
    return 0


def cmd_sweep(args):
    config, seed = resolve(args, "sweep")
    c_values = args.c_values if isinstance(args.c_values, list) else parse_grid(args.c_values or "0:1:11")
    r_values = args.r_values if isinstance(args.r_values, list) else parse_grid(args.r_values or "0:1:11")
    thetas = args.theta_values if isinstance(args.theta_values, list) else parse_grid(args.theta_values or "0")
    if not (c_values and r_values and thetas):
        raise PreconditionError("grid", "sweep grids must be non-empty")
    points = 2001 if args.points is None else int(args.points)
    rows = duality_sweep(c_values, r_values, thetas, template=config, points=points)
    out = Path(args.out or "sweep.csv")
    header = ["c", "r", "theta", "D", "V_bound", "V_measured", "sum_bound", "sum_measured", "status"]
    write_csv(out, header, (
        [fmt(r.c), fmt(r.r), fmt(r.theta), fmt(r.D), fmt(r.V_bound), fmt(r.V_measured),
         fmt(r.sum_bound), fmt(r.sum_measured), r.status]
        for r in rows
    ))
    arguments = {"c_values": c_values, "r_values": r_values, "theta_values": thetas, "points": points}
    write_manifest(out, "sweep", config, seed, arguments, [out])
    return 0


def cmd_sample(args):
    config, seed = resolve(args, "sample")
    n = 1000 if args.n is None else int(args.n)
    policy = MeasurementPolicy.parse(args.policy or "None")
    events = run_experiment(config, n, policy, seed, n_tasks=args.tasks or 1)
    out = Path(args.out or "events.csv")
    events.to_csv(out)
    write_manifest(out, "sample", config, seed, {"n": n, "policy": str(policy)}, [out])
    return 0


def eraser_summary(events, config, bins=DEFAULT_BINS):
    """Histogram rows and visibility report for an eraser run."""
    w = fringe_width(config)
    lo, hi = -4.0 * w, 4.0 * w
    plus = events.x[events.detector == DetectorOutcome.PLUS]
    minus = events.x[events.detector == DetectorOutcome.MINUS]
    h_plus, h_minus = histogram(plus, lo, hi, bins), histogram(minus, lo, hi, bins)
    h_all = histogram(events.x[events.basis == Basis.ERASER], lo, hi, bins)
    s_plus = estimate_visibility(h_plus, config)
    s_minus = estimate_visibility(h_minus, config)
    s_pool = estimate_visibility(h_all, config, estimate_width=False)
    shift = phase_shift(s_plus, s_minus)
    report = {
        "V_plus": s_plus.visibility,
        "V_minus": s_minus.visibility,
        "phase_plus": s_plus.phase,
        "phase_minus": s_minus.phase,
        "phase_shift": shift,
        "phase_shift_distance_from_pi": angular_distance(shift, math.pi),
        "pooled_V": s_pool.visibility,
        "pooled_phase_defined": s_pool.phase_defined,
        "fringe_width_est_plus": s_plus.fringe_width_est,
        "fringe_width_est_minus": s_minus.fringe_width_est,
        "n_plus": int(len(plus)),
        "n_minus": int(len(minus)),
        "n_events": int(len(events)),
    }
    return h_plus, h_minus, h_all, report


def cmd_eraser(args):
    config, seed = resolve(args, "eraser")
    if args.c is not None and args.c != 1.0:
        raise PreconditionError("presence_c", f"the eraser run needs c = 1, got {args.c}")
    if args.overlap_r is not None and args.overlap_r != 0.0:
        raise PreconditionError("overlap_r", f"the eraser run needs r = 0, got {args.overlap_r}")
    config = config.with_(presence_c=1.0, overlap_r=0.0)
    n = 100_000 if args.n is None else int(args.n)
    bins = DEFAULT_BINS if args.bins is None else int(args.bins)
    events = run_experiment(config, n, "Eraser", seed)
    h_plus, h_minus, h_all, report = eraser_summary(events, config, bins)
    out = Path(args.out or "eraser.csv")
    write_csv(out, ["bin_center", "count_plus", "count_minus", "count_total"], (
        [fmt(cx), str(p), str(m), str(t)]
        for cx, p, m, t in zip(h_all.centers, h_plus.counts, h_minus.counts, h_all.counts)
    ))
    report_path = out.with_suffix(".report.json")
    report_path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    write_manifest(out, "eraser", config, seed, {"n": n, "bins": bins}, [out, report_path])
    return 0


# ------------------------------------------------------------------ parser

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config (keys d, epsilon, wavelength, L, c, overlap_r, theta, seed) or a manifest")
    common.add_argument("--out", help="output CSV path")
    common.add_argument("--seed", type=int, help="unsigned 64-bit master seed")
    common.add_argument("--d", type=float, help="slit separation")
    common.add_argument("--epsilon", type=float, help="slit mode width")
    common.add_argument("--wavelength", type=float, help="de Broglie wavelength")
    common.add_argument("--L", type=float, help="screen distance")
    common.add_argument("--c", type=float, help="detector presence probability")
    common.add_argument("--overlap-r", dest="overlap_r", type=float, help="|<d1|d2>|")
    common.add_argument("--theta", type=_parse_number, help="phase of <d2|d1> (accepts e.g. pi/4)")

    parser = argparse.ArgumentParser(prog="whichway", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pattern", parents=[common], help="evaluate the screen intensity on a grid")
    p.add_argument("--lo", type=float)
    p.add_argument("--hi", type=float)
    p.add_argument("--points", type=int)
    p.set_defaults(func=cmd_pattern)

    p = sub.add_parser("sweep", parents=[common], help="duality sweep over (c, r, theta)")
    p.add_argument("--c-values", dest="c_values", help="grid, e.g. 0:1:11 or 0,0.5,1")
    p.add_argument("--r-values", dest="r_values")
    p.add_argument("--theta-values", dest="theta_values", help="e.g. 0,pi/4,-pi/4")
    p.add_argument("--points", type=int)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("sample", parents=[common], help="generate detection events")
    p.add_argument("--n", type=int)
    p.add_argument("--policy", help="basis name or weighted list, e.g. WhichWay:0.5,Eraser:0.5")
    p.add_argument("--tasks", type=int, help="concurrent generation tasks (output unchanged)")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("eraser", parents=[common], help="quantum eraser run with c=1, r=0")
    p.add_argument("--n", type=int)
    p.add_argument("--bins", type=int)
    p.set_defaults(func=cmd_eraser)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (SamplerError, EstimatorError) as exc:
        print(f"whichway: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (WhichWayError, ValueError, OSError) as exc:
        print(f"whichway: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
