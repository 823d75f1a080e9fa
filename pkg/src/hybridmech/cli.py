"""Command-line front end.

Exit codes: 0 success, 1 a check or comparison failed, 2 usage or input
error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import bounds, mechanisms, ratio, verify
from .core import OPTIONS, Profile, expected_welfare, optimal_welfare, social_welfare
from .exceptions import HybridMechError
from .payments import outcome_with_payments

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
TABLE_TOL = 5e-3
BOUND_SLACK = 1e-9

# class, mechanism, rounded reference value
TABLE1_ROWS = (
    ("ordinal", "eom", 1.5),
    ("ordinal", "bom", 1.5),
    ("bid-independent", "bim", 1.377),
    ("expert-independent", "eim", 1.343),
    ("template", "r", 1.25),
    ("template", "d", 1.618),
    ("all mechanisms (lower bound)", None, 1.141),
)


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# input helpers


def _load_json_arg(value: str, what: str):
    """Parse ``value`` as a path to a JSON file, or else as inline JSON."""
    path = Path(value)
    try:
        text = path.read_text() if path.is_file() else value
    except OSError as err:
        raise UsageError(f"{what}: {err}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as err:
        raise UsageError(f"{what}: not a JSON file or inline JSON ({err.msg} at position {err.pos})") from None


def load_profiles(value: str) -> list[Profile]:
    obj = _load_json_arg(value, "--profile")
    items = obj if isinstance(obj, list) else [obj]
    profiles = []
    for k, item in enumerate(items):
        try:
            profiles.append(Profile.from_json(item))
        except HybridMechError as err:
            prefix = f"profile {k}: " if isinstance(obj, list) else ""
            raise UsageError(f"{prefix}{err}") from None
    return profiles


def resolve_mechanisms(names, curve: str | None = None, *, monotone: bool = True) -> list:
    if curve is not None:
        pts = mechanisms.PiecewiseLinearCurve.from_json(_load_json_arg(curve, "--curve"), monotone=monotone)
        return [mechanisms.make_template(pts, name="custom-template")]
    if not names or any(n.lower() == "all" for n in names):
        return mechanisms.registry()
    out = []
    for entry in names:
        out.extend(mechanisms.lookup(n) for n in entry.split(",") if n.strip())
    return out


def _emit(rows: list[dict], fmt: str, out, columns=None, unwrap: bool = False) -> None:
    if fmt == "json":
        json.dump(rows[0] if unwrap and len(rows) == 1 else rows, out, indent=2)
        out.write("\n")
        return
    if columns is None:
        columns = list(rows[0]) if rows else []
    writer = csv.DictWriter(out, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)


def _flat(d: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flat(v, key + "."))
        else:
            out[key] = v
    return out


# ---------------------------------------------------------------------------
# subcommands


def cmd_eval(args, out) -> int:
    if not args.mechanism and args.curve is None:
        raise UsageError("eval needs --mechanism or --curve")
    mechs = resolve_mechanisms(args.mechanism, args.curve)
    rows = []
    for p in load_profiles(args.profile):
        for m in mechs:
            outcome = outcome_with_payments(m, p, seed=args.seed)
            expected = expected_welfare(outcome.lottery, p)
            rows.append(
                {
                    "mechanism": m.name,
                    "profile": p.to_json(),
                    **outcome.to_json(),
                    "welfare": {o.label: social_welfare(o, p) for o in OPTIONS},
                    "expectedWelfare": expected,
                    "ratio": optimal_welfare(p)[1] / expected,
                }
            )
    if args.format == "csv":
        rows = [_flat(r) for r in rows]
    _emit(rows, args.format, out, unwrap=True)
    return EXIT_OK


def cmd_ratio(args, out) -> int:
    mechs = resolve_mechanisms(args.mechanism, args.curve)
    reports = [ratio.worst_case_ratio(m, args.grid, workers=args.workers) for m in mechs]
    if args.sweep:
        with open(args.sweep, "w", newline="") as fh:
            ratio.write_sweep_csv(fh, mechs, args.sweep_grid)
    rows = [r.to_json() for r in reports]
    if args.format == "csv":
        rows = [_flat(r) for r in rows]
    _emit(rows, args.format, out)
    return EXIT_OK


def cmd_verify(args, out) -> int:
    mechs = resolve_mechanisms(args.mechanism, args.curve, monotone=False)
    grid = verify.default_grid(args.grid)
    pgrid = verify.ProfileGrid.default(args.profile_grid)
    rows = []
    for m in mechs:
        reports = verify.class_checks(m, grid)
        reports.append(verify.black_box_ic_audit(m, pgrid, args.deviation_grid, tol=args.tol))
        rows.extend(r.to_json() for r in reports)
    if args.format == "csv":
        rows = [{k: v for k, v in r.items() if k != "witness"} for r in rows]
    _emit(rows, args.format, out)
    return EXIT_OK if all(r["passed"] for r in rows) else EXIT_FAIL


def table1_rows(grid=ratio.DEFAULT_GRID, workers=None, tol: float = TABLE_TOL) -> list[dict]:
    bounds_by_name = ratio.upper_bounds()
    rows = []
    for cls, name, expected in TABLE1_ROWS:
        if name is None:
            measured = bounds.general_lb_value()
            ok = abs(measured - expected) <= tol
        else:
            measured = ratio.worst_case_ratio(mechanisms.lookup(name), grid, workers=workers).ratio
            ok = abs(measured - expected) <= tol and measured <= bounds_by_name[name] + BOUND_SLACK
        rows.append(
            {
                "class": cls,
                "mechanism": name or "-",
                "measured": measured,
                "expected": expected,
                "difference": abs(measured - expected),
                "passed": ok,
            }
        )
    return rows


def cmd_table1(args, out) -> int:
    rows = table1_rows(args.grid, args.workers, args.tol)
    if args.format == "json":
        _emit(rows, "json", out)
    else:
        _emit(rows, "csv", out, columns=["class", "mechanism", "measured", "expected", "difference", "passed"])
    return EXIT_OK if all(r["passed"] for r in rows) else EXIT_FAIL


def curve_rows(kind: str, n: int) -> list[dict]:
    c = bounds.constants()
    if kind == "bim":
        xs = verify.default_grid(n)
        g, f, eta = mechanisms.bim_curves(xs)
        return [{"x": x, "g": a, "f": b, "eta": e} for x, a, b, e in zip(xs, g, f, eta)]
    ys = verify.default_grid(n)
    if kind == "eim":
        lo, hi = ratio.eim_band(ys, c.rho_eim)
        cy = mechanisms.eim_curve(ys)
        lo, hi = np.clip(lo, 0, 1), np.clip(hi, 0, 1)
        return [{"y": y, "lower": a, "upper": b, "c": v} for y, a, b, v in zip(ys, lo, hi, cy)]
    lo_r, hi_r = (np.clip(b, 0, 1) for b in ratio.template_band(ys, 1.25))
    lo_d, hi_d = (np.clip(b, 0, 1) for b in ratio.template_band(ys, c.phi))
    cr, cd = mechanisms.r_curve(ys), mechanisms.d_curve(ys)
    return [
        {"y": y, "lower_r": a, "upper_r": b, "c_r": u, "lower_d": p, "upper_d": q, "c_d": v}
        for y, a, b, u, p, q, v in zip(ys, lo_r, hi_r, cr, lo_d, hi_d, cd)
    ]


def cmd_curves(args, out) -> int:
    rows = [{k: float(v) for k, v in r.items()} for r in curve_rows(args.kind, args.grid)]
    _emit(rows, args.format, out)
    return EXIT_OK


def cmd_constants(args, out) -> int:
    data = bounds.constants().to_json()
    data["generalLowerBoundMultipliers"] = list(bounds.general_lb_multipliers())
    if args.format == "csv":
        _emit([{"name": k, "value": v} for k, v in data.items() if not isinstance(v, list)], "csv", out)
    else:
        _emit([data], "json", out, unwrap=True)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _grid_size(text: str) -> int:
    n = int(text)
    if n < 3:
        raise argparse.ArgumentTypeError("grid size must be at least 3")
    return n


def _positive(text: str) -> float:
    x = float(text)
    if not x > 0:
        raise argparse.ArgumentTypeError("tolerance must be positive")
    return x


def _workers(text: str) -> int:
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("workers must be at least 1")
    return n


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hybridmech", description="Hybrid expert/bidder mechanisms.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, grid_default, tol_default=None, fmt_default="json"):
        p.add_argument("--format", choices=("json", "csv"), default=fmt_default)
        p.add_argument("--grid", type=_grid_size, default=grid_default)
        p.add_argument("--tol", type=_positive, default=tol_default)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--workers", type=_workers, default=None, help=f"default: ${ratio.WORKERS_ENV} or CPU count")

    def mech_args(p):
        p.add_argument("--mechanism", action="append", help="name, comma list or 'all'; repeatable")
        p.add_argument("--curve", help="template curve as JSON [{'y':..,'c':..}], file or inline")

    p = sub.add_parser("eval", help="lottery, sampled option, payments and welfare for profiles")
    mech_args(p)
    p.add_argument("--profile", required=True, help="profile JSON (object or list), file or inline")
    common(p, 201)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("ratio", help="worst-case approximation ratio search")
    mech_args(p)
    p.add_argument("--sweep", help="write every grid ratio to this CSV file")
    p.add_argument("--sweep-grid", type=_grid_size, default=101)
    common(p, ratio.DEFAULT_GRID)
    p.set_defaults(func=cmd_ratio)

    p = sub.add_parser("verify", help="truthfulness checks and misreport audit")
    mech_args(p)
    p.add_argument("--profile-grid", type=_grid_size, default=11)
    p.add_argument("--deviation-grid", type=_grid_size, default=201)
    common(p, 201, verify.BLACK_BOX_TOL)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("table1", help="measured ratios next to the reference table")
    common(p, ratio.DEFAULT_GRID, TABLE_TOL)
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser("curves", help="plot data for the mechanism curves and bands")
    p.add_argument("kind", choices=("bim", "eim", "template"))
    common(p, 101, fmt_default="csv")
    p.set_defaults(func=cmd_curves)

    p = sub.add_parser("constants", help="constants with defining-equation residuals")
    common(p, 3)
    p.set_defaults(func=cmd_constants)
    return parser


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    if args.workers is None and os.environ.get(ratio.WORKERS_ENV):
        try:
            args.workers = _workers(os.environ[ratio.WORKERS_ENV])
        except (ValueError, argparse.ArgumentTypeError):
            print(f"error: {ratio.WORKERS_ENV} must be a positive integer", file=sys.stderr)
            return EXIT_USAGE
    try:
        return args.func(args, out)
    except (UsageError, HybridMechError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
