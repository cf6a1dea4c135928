"""``qcertify`` command-line tool.

Each subcommand writes one deterministic report (JSON, or CSV where the
records are tabular) to ``--out`` or stdout. Failures print a JSON error
object and exit nonzero: 2 for usage errors, 1 for everything else.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from pathlib import Path

from . import experiments as ex
from .config import COPIES_CONSTANT
from .hardness import DEFAULT_C


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="qcertify", description="State-certification experiments with single-copy measurements.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, formats=("json",)):
        sp.add_argument("--out", help="output path (default: stdout)")
        sp.add_argument("--format", choices=formats, default="json")
        sp.add_argument("--timing", action="store_true", help="add wall-clock seconds (breaks byte-identity)")

    sp = sub.add_parser("demo-fooling", help="canonical basis vs plus state")
    sp.add_argument("--d", type=int, required=True)
    common(sp)

    sp = sub.add_parser("spectrum", help="spectrum of a scheme's average Lüders channel")
    sp.add_argument("--scheme", required=True, help=f"scheme JSON path or one of {', '.join(ex.NAMED_SCHEMES)}")
    sp.add_argument("--d", type=int)
    sp.add_argument("--n", type=int)
    common(sp)

    sp = sub.add_parser("bounds", help="chi-square bound chain on one instance")
    sp.add_argument("--scheme", required=True)
    sp.add_argument("--d", type=int)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--eps", type=float, required=True)
    sp.add_argument("--ell", type=int)
    sp.add_argument("--ensemble", choices=("adversarial", "gell-mann"), default="adversarial")
    sp.add_argument("--mode", choices=("exact", "monte-carlo"), default="exact")
    sp.add_argument("--trials", type=int, default=10000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--c", type=float, default=DEFAULT_C)
    common(sp)

    sp = sub.add_parser("power-curve", help="error rates of the certification test over a C grid")
    sp.add_argument("--d", type=_ints, required=True, help="comma-separated prime dimensions")
    sp.add_argument("--eps", type=float, default=0.5)
    sp.add_argument("--C", type=_floats, default=[COPIES_CONSTANT], help="comma-separated copy constants")
    sp.add_argument("--n-divisor", type=int, default=1, help="divide the copy count by this factor")
    sp.add_argument("--trials", type=int, default=200)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--jobs", type=int, default=1)
    common(sp, ("json", "csv"))

    sp = sub.add_parser("hard-instance", help="validity of the random perturbation ensemble")
    sp.add_argument("--d", type=int, required=True)
    sp.add_argument("--ell", type=int, required=True)
    sp.add_argument("--eps", type=float, required=True)
    sp.add_argument("--trials", type=int, default=2000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--c", type=float, default=DEFAULT_C)
    sp.add_argument("--scheme")
    common(sp, ("json", "csv"))

    sp = sub.add_parser("calibrate", help="fit the copy constant C")
    sp.add_argument("--d", type=int, default=2)
    sp.add_argument("--eps", type=float, default=0.5)
    sp.add_argument("--C", type=_floats, default=list(ex.DEFAULT_GRID))
    sp.add_argument("--trials", type=int, default=1000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--target", type=float, default=0.2)
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--emit-defaults", action="store_true", help="write a defaults.json document instead of the report")
    common(sp, ("json", "csv"))

    sp = sub.add_parser("certify", help="run one certification job")
    sp.add_argument("--job", help="job JSON path; otherwise built from the flags below")
    sp.add_argument("--d", type=int)
    sp.add_argument("--eps", type=float, default=0.5)
    sp.add_argument("--n", type=int)
    sp.add_argument("--rho", default="mm", help="state name (mm, zero, plus, haar:<seed>)")
    sp.add_argument("--rho0", default="mm")
    sp.add_argument("--rho0-unknown", action="store_true", help="measure copies of rho0 instead of sampling classically")
    sp.add_argument("--seed", type=int, default=0)
    common(sp)
    return p


def run(args) -> dict:
    cmd = args.command
    if cmd == "demo-fooling":
        return ex.demo_fooling(args.d)
    if cmd == "spectrum":
        return ex.spectrum(args.scheme, args.d, args.n)
    if cmd == "bounds":
        return ex.bounds(args.scheme, args.d, args.n, args.eps, args.ell, args.ensemble, args.mode,
                         args.trials, args.seed, args.c)
    if cmd == "power-curve":
        return ex.power_curve(args.d, args.eps, args.C, args.trials, args.seed, args.n_divisor, args.jobs)
    if cmd == "hard-instance":
        return ex.hard_instance(args.d, args.ell, args.eps, args.trials, args.seed, args.scheme, args.c)
    if cmd == "calibrate":
        rep = ex.calibrate(args.d, args.eps, args.C, args.trials, args.seed, args.target, args.jobs)
        return ex.defaults_from_calibration(rep) if args.emit_defaults else rep
    if cmd == "certify":
        if args.job:
            text = Path(args.job).read_text(encoding="utf-8")
        else:
            if args.d is None:
                raise UsageError("certify needs --job or --d")
            text = json.dumps(ex.certify_job_dict(args.d, args.eps, args.rho, args.rho0, args.n, args.seed,
                                                  not args.rho0_unknown))
        return ex.certify(text)
    raise UsageError(f"unknown command {cmd!r}")


def _records_csv(rep: dict) -> str:
    records = rep.get("records") or []
    if not records:
        raise ValueError("report has no records to write as CSV")
    fields = [k for k, v in records[0].items() if not isinstance(v, (dict, list))]
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=fields, extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    w.writerows(records)
    return buf.getvalue()


def render(rep: dict, fmt: str, command: str) -> str:
    if fmt == "csv":
        return ex.power_curve_csv(rep) if command == "power-curve" else _records_csv(rep)
    return json.dumps(rep, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _error(kind: str, message: str, code: int) -> int:
    sys.stdout.write(json.dumps({"error": {"type": kind, "message": message}}, sort_keys=True) + "\n")
    return code


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        return _error("UsageError", str(exc), 2)
    try:
        start = time.perf_counter()
        rep = run(args)
        if args.timing:
            rep["wall_clock_seconds"] = time.perf_counter() - start
        text = render(rep, args.format, args.command)
    except UsageError as exc:
        return _error("UsageError", str(exc), 2)
    except (ValueError, OSError, KeyError, TypeError) as exc:
        return _error(type(exc).__name__, str(exc), 1)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
