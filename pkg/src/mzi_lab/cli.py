"""Command-line interface: single points, figure sweeps, thresholds, validation.

Output is machine-readable CSV (12 significant digits) or JSON lines; both
carry identical values.  Identical invocations produce byte-identical
output: there is no randomness anywhere in the toolkit, and sweep rows are
emitted in grid order regardless of how they were computed.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

from .errors import MziLabError, UnsupportedConfiguration
from .optimize import (
    LossKind,
    Scheme,
    SweepSpec,
    SweepVariable,
    run_sweep,
    scheme_sensitivity,
    snl_threshold,
)
from .qfi import snl
from .states import ResourceKind

_SCHEMES = {s.value: s for s in Scheme}
_RESOURCES = {k.value: k for k in ResourceKind}
_LOSS_KINDS = {"symmetric": LossKind.SYMMETRIC, "one-arm": LossKind.ONE_ARM}

_POINT_FIELDS = (
    "scheme",
    "resource",
    "nbar",
    "loss_kind",
    "loss_rate",
    "phi_star",
    "mu",
    "delta2phi",
    "snl",
    "beats_snl",
)
_SWEEP_FIELDS = ("variable", "value") + _POINT_FIELDS + ("status",)
_THRESHOLD_FIELDS = (
    "scheme",
    "resource",
    "nbar",
    "loss_kind",
    "loss_rate",
    "bracket_lo",
    "bracket_hi",
    "iterations",
    "status",
)


def _fmt(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return f"{value:.11e}"
    return str(value)


def _json_value(value):
    if isinstance(value, float) and not math.isnan(value):
        return float(f"{value:.11e}")
    if isinstance(value, float):
        return None  # NaN is not valid JSON
    return value


def emit(rows, fields, fmt, out):
    """Serialize rows (dicts) with a fixed field order."""
    lines = []
    if fmt == "csv":
        lines.append(",".join(fields))
        for row in rows:
            lines.append(",".join(_fmt(row[f]) for f in fields))
    else:
        for row in rows:
            lines.append(json.dumps({f: _json_value(row[f]) for f in fields}))
    text = "\n".join(lines) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)


# -- figure presets -------------------------------------------------------------
#
# Parameter grids behind the --figure shortcuts.  Loss-rate panels run over
# 1 - eta in [0, 0.6] with 21 points; energy panels over nbar in [1, 50]
# with 15 points at loss rate 0.2 (see README for the mapping).

_ALL3 = (ResourceKind.CSV, ResourceKind.TMSV, ResourceKind.COHERENT)
_ALL4_SCHEMES = (Scheme.QFI, Scheme.PARITY, Scheme.SINGLE_HD, Scheme.DOUBLE_HD)
_LOSS_GRID = dict(lo=0.0, hi=0.6, points=21)
_NBAR_GRID = dict(lo=1.0, hi=50.0, points=15)


def _loss_sweep(scheme, kind, nbar=10.0, resources=_ALL3):
    return SweepSpec(
        variable=SweepVariable.LOSS_RATE,
        schemes=(scheme,) if isinstance(scheme, Scheme) else tuple(scheme),
        resources=resources,
        loss_kind=kind,
        nbar=nbar,
        **_LOSS_GRID,
    )


def _nbar_sweep(scheme, kind, resources=_ALL3):
    return SweepSpec(
        variable=SweepVariable.MEAN_PHOTON_NUMBER,
        schemes=(scheme,) if isinstance(scheme, Scheme) else tuple(scheme),
        resources=resources,
        loss_kind=kind,
        loss_rate=0.2,
        **_NBAR_GRID,
    )


def figure_presets():
    sym, one = LossKind.SYMMETRIC, LossKind.ONE_ARM
    presets = {
        "2a": [_loss_sweep(Scheme.QFI, sym)],
        "2b": [_nbar_sweep(Scheme.QFI, sym)],
        "2c": [_loss_sweep(Scheme.QFI, sym, nbar=n, resources=(ResourceKind.CSV,)) for n in (1.0, 10.0, 100.0)],
        "2d": [_loss_sweep(Scheme.QFI, one)],
        "2e": [_nbar_sweep(Scheme.QFI, one)],
        "2f": [_loss_sweep(Scheme.QFI, one, nbar=n, resources=(ResourceKind.CSV,)) for n in (1.0, 10.0, 100.0)],
        "6a": [_loss_sweep(_ALL4_SCHEMES, sym, resources=(ResourceKind.CSV,)),
               _loss_sweep(Scheme.QFI, sym, resources=(ResourceKind.COHERENT,))],
        "6b": [_loss_sweep(_ALL4_SCHEMES, one, resources=(ResourceKind.CSV,)),
               _loss_sweep(Scheme.QFI, one, resources=(ResourceKind.COHERENT,))],
        "6c": [_loss_sweep(_ALL4_SCHEMES, sym, resources=(ResourceKind.TMSV,)),
               _loss_sweep(Scheme.QFI, sym, resources=(ResourceKind.COHERENT,))],
        "6d": [_loss_sweep(_ALL4_SCHEMES, one, resources=(ResourceKind.TMSV,)),
               _loss_sweep(Scheme.QFI, one, resources=(ResourceKind.COHERENT,))],
        "a1": [_loss_sweep(_ALL4_SCHEMES, sym, nbar=7.0)],
        "a2": [_loss_sweep(_ALL4_SCHEMES, one, nbar=7.0)],
    }
    for label, scheme in (("3", Scheme.PARITY), ("4", Scheme.SINGLE_HD), ("5", Scheme.DOUBLE_HD)):
        presets[label + "a"] = [_loss_sweep(scheme, sym)]
        presets[label + "b"] = [_nbar_sweep(scheme, sym)]
        presets[label + "c"] = [_loss_sweep(scheme, one)]
        presets[label + "d"] = [_nbar_sweep(scheme, one)]
    return presets


# -- commands -------------------------------------------------------------------


def _cmd_point(args):
    scheme = _SCHEMES[args.scheme]
    kind = _RESOURCES[args.resource]
    loss_kind = _LOSS_KINDS[args.loss]
    mu = "optimize"
    if args.mu is not None:
        mu = args.mu
    elif args.fixed_mu and kind is ResourceKind.CSV and scheme is not Scheme.QFI:
        # pin the squeezing fraction at the scheme's lossless optimum
        mu = scheme_sensitivity(scheme, kind, args.nbar, loss_kind.model(0.0)).mu
    point = scheme_sensitivity(scheme, kind, args.nbar, loss_kind.model(args.rate), mu=mu)
    benchmark = snl(args.nbar)
    row = {
        "scheme": scheme.value,
        "resource": kind.value,
        "nbar": float(args.nbar),
        "loss_kind": args.loss,
        "loss_rate": float(args.rate),
        "phi_star": point.phi_star,
        "mu": point.mu,
        "delta2phi": point.delta2phi,
        "snl": benchmark,
        "beats_snl": bool(point.delta2phi < benchmark),
    }
    emit([row], _POINT_FIELDS, args.format, args.out)
    return 0


def _sweep_rows(specs, threads):
    rows = []
    for spec in specs:
        for row in run_sweep(spec, threads=threads):
            rows.append(
                {
                    "variable": row.variable,
                    "value": row.value,
                    "scheme": row.scheme,
                    "resource": row.resource,
                    "nbar": row.nbar,
                    "loss_kind": row.loss_kind,
                    "loss_rate": row.loss_rate,
                    "phi_star": row.phi_star,
                    "mu": row.mu,
                    "delta2phi": row.delta2phi,
                    "snl": row.snl,
                    "beats_snl": row.beats_snl,
                    "status": row.status,
                }
            )
    return rows


def _cmd_sweep(args):
    threads = max(1, int(os.environ.get("MZI_LAB_THREADS", "1")))
    if args.figure is not None:
        specs = figure_presets()[args.figure]
    else:
        if args.variable is None:
            raise UnsupportedConfiguration("sweep needs either --figure or --variable")
        variable = (
            SweepVariable.LOSS_RATE if args.variable == "loss-rate" else SweepVariable.MEAN_PHOTON_NUMBER
        )
        specs = [
            SweepSpec(
                variable=variable,
                lo=args.lo,
                hi=args.hi,
                points=args.points,
                schemes=tuple(_SCHEMES[s] for s in args.scheme),
                resources=tuple(_RESOURCES[r] for r in args.resource),
                loss_kind=_LOSS_KINDS[args.loss],
                nbar=args.nbar,
                loss_rate=args.rate,
                optimize_mu=not args.fixed_mu,
            )
        ]
    emit(_sweep_rows(specs, threads), _SWEEP_FIELDS, args.format, args.out)
    return 0


def _cmd_threshold(args):
    scheme = _SCHEMES[args.scheme]
    kind = _RESOURCES[args.resource]
    result = snl_threshold(
        scheme,
        kind,
        args.nbar,
        _LOSS_KINDS[args.loss],
        optimize_mu=not args.fixed_mu,
        tol=args.tol,
    )
    row = {
        "scheme": scheme.value,
        "resource": kind.value,
        "nbar": float(args.nbar),
        "loss_kind": args.loss,
        "loss_rate": result.loss_rate,
        "bracket_lo": float(result.bracket[0]),
        "bracket_hi": float(result.bracket[1]),
        "iterations": result.iterations,
        "status": result.status,
    }
    emit([row], _THRESHOLD_FIELDS, args.format, args.out)
    return 0


def _cmd_validate(args):
    from . import validate

    failures = validate.run_cross_checks(cutoff=args.cutoff, stream=sys.stdout)
    return 1 if failures else 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mzi-lab",
        description="Phase-estimation sensitivities of a lossy Mach-Zehnder interferometer "
        "with Gaussian input resources.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_io(p):
        p.add_argument("--format", choices=("csv", "jsonl"), default="csv")
        p.add_argument("--out", default=None, help="write output to a file instead of stdout")

    def add_config(p):
        p.add_argument("--scheme", choices=sorted(_SCHEMES), required=True)
        p.add_argument("--resource", choices=sorted(_RESOURCES), required=True)
        p.add_argument("--nbar", type=float, default=10.0)
        p.add_argument("--loss", choices=sorted(_LOSS_KINDS), default="symmetric")
        p.add_argument(
            "--fixed-mu",
            action="store_true",
            help="pin the CSV squeezing fraction at its lossless optimum instead of re-optimizing per point",
        )

    p_point = sub.add_parser("point", help="one optimized sensitivity evaluation")
    add_config(p_point)
    p_point.add_argument("--rate", type=float, default=0.0, help="loss rate 1 - eta")
    p_point.add_argument("--mu", type=float, default=None, help="fix the CSV squeezing fraction")
    add_io(p_point)
    p_point.set_defaults(fn=_cmd_point)

    p_sweep = sub.add_parser("sweep", help="evaluate a parameter sweep or figure preset")
    p_sweep.add_argument("--figure", choices=sorted(figure_presets()), default=None)
    p_sweep.add_argument("--variable", choices=("loss-rate", "nbar"), default=None)
    p_sweep.add_argument("--lo", type=float, default=0.0)
    p_sweep.add_argument("--hi", type=float, default=0.6)
    p_sweep.add_argument("--points", type=int, default=21)
    p_sweep.add_argument("--scheme", nargs="+", choices=sorted(_SCHEMES), default=["qfi"])
    p_sweep.add_argument(
        "--resource", nargs="+", choices=sorted(_RESOURCES), default=sorted(_RESOURCES)
    )
    p_sweep.add_argument("--nbar", type=float, default=10.0, help="fixed energy for loss sweeps")
    p_sweep.add_argument("--rate", type=float, default=0.0, help="fixed loss rate for nbar sweeps")
    p_sweep.add_argument("--loss", choices=sorted(_LOSS_KINDS), default="symmetric")
    p_sweep.add_argument("--fixed-mu", action="store_true")
    add_io(p_sweep)
    p_sweep.set_defaults(fn=_cmd_sweep)

    p_thresh = sub.add_parser("threshold", help="loss rate at which a scheme meets the SNL")
    add_config(p_thresh)
    p_thresh.add_argument("--tol", type=float, default=1e-3)
    add_io(p_thresh)
    p_thresh.set_defaults(fn=_cmd_threshold)

    p_val = sub.add_parser("validate", help="run the Fock-oracle cross-check table")
    p_val.add_argument("--cutoff", type=int, default=40)
    p_val.set_defaults(fn=_cmd_validate)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except UnsupportedConfiguration as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except MziLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
