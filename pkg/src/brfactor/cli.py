"""Command line front end: single factors, the built-in table, sweeps, validation.

Four subcommands share one evaluation core.  `factor` prints a single JSON
record, `table1` re-computes the sixteen built-in reference rows and checks
them against their printed four-digit values, `sweep` walks a parameter grid
into CSV, and `validate` runs the seeded cross-method comparison suites.
Exit codes: 0 success, 1 reference/validation mismatch, 2 usage error,
3 non-convergence.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import dataclasses
import decimal
import itertools
import json
import math
import os
import sys
import warnings
from typing import Optional, Sequence

import numpy as np

from .closed_form import (
    CancellationWarning,
    UnsupportedSignatureError,
    factor_closed,
    ji4,
)
from .fourier_bessel import factor_series, factor_series_general
from .model import (
    FactorKind,
    FactorResult,
    Ji4Args,
    Method,
    RegionPair,
    SeriesConfig,
    ValidationError,
    reverse,
)
from .oracle import QuadConfig, factor_fourier_numeric, ji4_numeric
from .time_averages import (
    AvgKind,
    QuadratureError,
    Schedule,
    finite_avg,
    heaviside,
    infinite_avg,
    numeric_time_average,
)

__all__ = [
    "RunReport",
    "Table1Row",
    "build_parser",
    "main",
    "parse_angle",
    "round4",
    "table1_rows",
]

_CTX4 = decimal.Context(prec=4, rounding=decimal.ROUND_HALF_EVEN)


def round4(x: float) -> str:
    """Render x to four significant digits (half-even) as `d.ddde±k`."""
    d = _CTX4.create_decimal(repr(float(x)))
    if not d.is_finite():
        return str(d)
    if d == 0:
        return "0.000e+0"
    sign, digits, exp = d.as_tuple()
    e = exp + len(digits) - 1
    digits = (digits + (0, 0, 0))[:4]
    mant = f"{digits[0]}.{digits[1]}{digits[2]}{digits[3]}"
    return f"{'-' if sign else ''}{mant}e{e:+d}"


def parse_angle(text: str) -> float:
    """Angle in radians, or a rational multiple of pi: `1/6pi`, `pi/6`, `0.5pi`."""
    t = text.strip().lower().replace(" ", "")
    if "pi" not in t:
        try:
            return float(t)
        except ValueError:
            raise argparse.ArgumentTypeError(f"cannot parse angle {text!r}") from None
    sign = 1.0
    if t and t[0] in "+-":
        sign = -1.0 if t[0] == "-" else 1.0
        t = t[1:]
    try:
        if t == "pi":
            return sign * math.pi
        if t.startswith("pi/"):
            return sign * math.pi / float(t[3:])
        if t.endswith("pi"):
            num, slash, den = t[:-2].partition("/")
            factor = float(num) / float(den) if slash else float(num)
            return sign * factor * math.pi
    except (ValueError, ZeroDivisionError):
        pass
    raise argparse.ArgumentTypeError(f"cannot parse angle {text!r}")


# ---------------------------------------------------------------------------
# built-in reference table


@dataclasses.dataclass(frozen=True)
class Table1Row:
    """One reference row: inputs, printed 4-digit value, reverse marker."""

    kind: FactorKind
    params: RegionPair
    expected: str
    is_reverse_of_previous: bool


_P5 = RegionPair(1.0, 1.0, 1.0, math.pi / 6.0, math.pi / 3.0, 1.0, 1.0, 0.5)
_P11 = RegionPair(1.0, 2.0, 1.0, math.pi / 6.0, math.pi / 3.0, 1.0, 2.0, 0.5)

# forward rows; a non-None second value adds the reverse row after it
_BASE_ROWS = (
    (FactorKind.AXX, RegionPair(1.0, 1.0), "-1.625e+0", None),
    (FactorKind.AXX, RegionPair(10.0, 10.0), "-2.850e-3", None),
    (FactorKind.AXX, RegionPair(1.0, 1.0, dt2=2.0, t_offset=0.5), "1.953e-1", "-5.664e-1"),
    (FactorKind.AXX, _P5, "-6.407e-2", "-4.530e-1"),
    (FactorKind.AXY, _P5, "6.636e-2", "5.901e-3"),
    (FactorKind.BXY, _P5, "-2.730e-1", "1.675e-1"),
    (FactorKind.AXX, _P11, "7.454e-2", "-8.914e-2"),
    (FactorKind.AXY, _P11, "3.493e-3", "-3.884e-4"),
    (FactorKind.BXY, _P11, "-2.560e-2", "4.126e-3"),
)


def table1_rows() -> tuple:
    """The sixteen built-in reference rows, reverse rows generated in place."""
    rows = []
    for kind, params, expected, expected_rev in _BASE_ROWS:
        rows.append(Table1Row(kind, params, expected, False))
        if expected_rev is not None:
            rows.append(Table1Row(kind, reverse(params), expected_rev, True))
    return tuple(rows)


@dataclasses.dataclass(frozen=True)
class RowOutcome:
    """Computed value and pass/fail for one reference row."""

    index: int
    row: Table1Row
    result: FactorResult

    @property
    def rounded(self) -> str:
        return round4(self.result.value)

    @property
    def passed(self) -> bool:
        return self.rounded == round4(float(self.row.expected))

    @property
    def abs_dev(self) -> float:
        return abs(self.result.value - float(self.row.expected))

    @property
    def rel_dev(self) -> float:
        return self.abs_dev / abs(float(self.row.expected))


@dataclasses.dataclass(frozen=True)
class RunReport:
    """Outcomes for a full table run."""

    method: Method
    outcomes: tuple

    @property
    def all_passed(self) -> bool:
        return all(o.passed for o in self.outcomes)


# ---------------------------------------------------------------------------
# shared evaluation core


def _series_config(args: argparse.Namespace) -> SeriesConfig:
    return SeriesConfig(
        rex_slack=args.rex_slack, n_max=args.n_max, tail_tol=args.tail_tol
    )


def _quad_config(args: argparse.Namespace) -> QuadConfig:
    return QuadConfig(
        abs_tol=args.abs_tol, rel_tol=args.rel_tol, tail_periods=args.tail_periods
    )


def _evaluate(
    kind: FactorKind,
    p: RegionPair,
    method: Method,
    series_cfg: SeriesConfig,
    quad_cfg: QuadConfig,
) -> FactorResult:
    """Dispatch to one computation route, normalizing to FactorResult."""
    if method is Method.CLOSED_FORM:
        return factor_closed(kind, p)
    if method is Method.SERIES_SIMPLE:
        return factor_series(kind, p, series_cfg)
    if method is Method.SERIES_GENERAL:
        return factor_series_general(kind, p, series_cfg)
    quad = factor_fourier_numeric(kind, p, quad_cfg)
    return FactorResult(
        value=quad.value,
        terms_used=0,
        tail_estimate=quad.error,
        method=Method.FOURIER_NUMERIC,
        converged=True,
    )


def _record(kind: FactorKind, p: RegionPair, result: FactorResult) -> dict:
    return {
        "inputs": p.to_dict(),
        "kind": kind.value,
        "method": result.method.value,
        "value": result.value,
        "terms_used": result.terms_used,
        "tail_estimate": result.tail_estimate,
        "converged": result.converged,
    }


# ---------------------------------------------------------------------------
# subcommands


def _region_from_args(args: argparse.Namespace) -> RegionPair:
    return RegionPair(
        r1=args.r1,
        r2=args.r2,
        r=args.r,
        theta=args.theta,
        phi=args.phi,
        dt1=args.dt1,
        dt2=args.dt2,
        t_offset=args.t,
    )


def cmd_factor(args: argparse.Namespace) -> int:
    """Evaluate one factor and print a JSON record."""
    kind = FactorKind(args.kind)
    p = _region_from_args(args)
    method = Method(args.method)
    try:
        result = _evaluate(kind, p, method, _series_config(args), _quad_config(args))
    except QuadratureError as exc:
        best = FactorResult(
            value=exc.estimate,
            terms_used=0,
            tail_estimate=float("inf"),
            method=method,
            converged=False,
        )
        record = _record(kind, p, best)
        record["tail_estimate"] = None  # JSON has no inf; error exceeded budget
        print(json.dumps(record))
        print(f"error: {exc}", file=sys.stderr)
        return 3
    print(json.dumps(_record(kind, p, result)))
    return 0 if result.converged else 3


_TABLE_HEADER = (
    f"{'row':>3}  {'kind':<4}  {'method':<14}  {'computed':>23}  "
    f"{'4-digit':>10}  {'expected':>10}  {'terms':>6}  result"
)


def _format_outcome_line(o: RowOutcome) -> str:
    return (
        f"{o.index:>3}  {o.row.kind.value:<4}  {o.result.method.value:<14}  "
        f"{o.result.value:>23.16e}  {o.rounded:>10}  {o.row.expected:>10}  "
        f"{o.result.terms_used:>6}  {'pass' if o.passed else 'FAIL'}"
    )


_CSV_COLUMNS = (
    "kind",
    "r1",
    "r2",
    "r",
    "theta",
    "phi",
    "dt1",
    "dt2",
    "t_offset",
    "method",
    "value",
    "terms_used",
    "converged",
)


def _csv_row(kind: FactorKind, p: RegionPair, result: FactorResult) -> list:
    fields = [kind.value]
    fields += [f"{getattr(p, name):.17g}" for name in _CSV_COLUMNS[1:9]]
    fields += [
        result.method.value,
        f"{result.value:.16e}",
        str(result.terms_used),
        "true" if result.converged else "false",
    ]
    return fields


def cmd_table1(args: argparse.Namespace) -> int:
    """Recompute the sixteen reference rows and report pass/fail per row."""
    method = Method(args.method)
    series_cfg = _series_config(args)
    quad_cfg = _quad_config(args)
    outcomes = []
    for index, row in enumerate(table1_rows(), start=1):
        result = _evaluate(row.kind, row.params, method, series_cfg, quad_cfg)
        outcomes.append(RowOutcome(index, row, result))
    report = RunReport(method, tuple(outcomes))

    print(_TABLE_HEADER)
    for o in report.outcomes:
        print(_format_outcome_line(o))
    passed = sum(o.passed for o in report.outcomes)
    print(f"{passed}/{len(report.outcomes)} rows pass at 4 significant digits")

    if args.csv is not None:
        with open(args.csv, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(_CSV_COLUMNS + ("expected", "passed"))
            for o in report.outcomes:
                writer.writerow(
                    _csv_row(o.row.kind, o.row.params, o.result)
                    + [o.row.expected, "true" if o.passed else "false"]
                )
    return 0 if report.all_passed else 1


def _parse_range(text: str):
    """A single value or `start:stop:count` for a linspace grid axis."""
    parts = text.split(":")
    try:
        if len(parts) == 1:
            return (float(parts[0]),)
        if len(parts) == 3:
            start, stop = float(parts[0]), float(parts[1])
            count = int(parts[2])
            if count < 1:
                raise ValueError
            return tuple(np.linspace(start, stop, count).tolist())
    except ValueError:
        pass
    raise argparse.ArgumentTypeError(f"expected VALUE or START:STOP:COUNT, got {text!r}")


def _parse_angle_range(text: str):
    parts = text.split(":")
    if len(parts) == 1:
        return (parse_angle(parts[0]),)
    if len(parts) == 3:
        start, stop = parse_angle(parts[0]), parse_angle(parts[1])
        try:
            count = int(parts[2])
        except ValueError:
            count = 0
        if count >= 1:
            return tuple(np.linspace(start, stop, count).tolist())
    raise argparse.ArgumentTypeError(f"expected ANGLE or START:STOP:COUNT, got {text!r}")


def _parse_kinds(text: str):
    kinds = []
    for name in text.split(","):
        try:
            kinds.append(FactorKind(name.strip().lower()))
        except ValueError:
            raise argparse.ArgumentTypeError(f"unknown kind {name!r}") from None
    return tuple(kinds)


def _thread_count() -> int:
    raw = os.environ.get("BRF_THREADS", "")
    try:
        cap = int(raw)
    except ValueError:
        cap = 0
    if cap < 1:
        cap = min(8, os.cpu_count() or 1)
    return cap


def cmd_sweep(args: argparse.Namespace) -> int:
    """Evaluate a parameter grid and write one CSV row per point."""
    method = Method(args.method)
    series_cfg = _series_config(args)
    quad_cfg = _quad_config(args)
    axes = (args.kind, args.r1, args.r2, args.r, args.theta, args.phi,
            args.dt1, args.dt2, args.t)
    total = math.prod(len(a) for a in axes)
    if total > args.max_points:
        print(
            f"error: grid has {total} points, exceeding --max-points={args.max_points}",
            file=sys.stderr,
        )
        return 2

    points = list(itertools.product(*axes))
    for _, r1, r2, r, theta, phi, dt1, dt2, t in points:
        RegionPair(r1, r2, r, theta, phi, dt1, dt2, t).validate()

    def evaluate(point) -> list:
        kind, r1, r2, r, theta, phi, dt1, dt2, t = point
        p = RegionPair(r1, r2, r, theta, phi, dt1, dt2, t)
        try:
            result = _evaluate(kind, p, method, series_cfg, quad_cfg)
        except QuadratureError as exc:
            result = FactorResult(exc.estimate, 0, float("inf"), method, False)
        return _csv_row(kind, p, result)

    # grid order is fixed by index; threads only reorder the work, not the rows
    with concurrent.futures.ThreadPoolExecutor(max_workers=_thread_count()) as pool:
        rows = list(pool.map(evaluate, points))

    out = open(args.out, "w", newline="") if args.out is not None else sys.stdout
    try:
        writer = csv.writer(out)
        writer.writerow(_CSV_COLUMNS)
        writer.writerows(rows)
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


# validation suite bounds: series routes vs closed form, the quadrature
# oracle vs closed form (relative, floored at 1e-6), analytic time averages
# vs 2-D quadrature (absolute), and closed ji4 brackets vs 1-D quadrature
_BOUND_SERIES = 5e-5
_BOUND_NUMERIC = 1e-3
_BOUND_AVG = 1e-8
_BOUND_JI4 = 1e-7


def _draw_pair(rng: np.random.Generator, index: int) -> tuple:
    """One random factor configuration with a non-negligible closed value."""
    kind = (FactorKind.AXX, FactorKind.AXY, FactorKind.BXY)[index % 3]
    while True:
        r1, r2 = rng.uniform(0.3, 3.0, size=2)
        r = 0.0 if rng.random() < 0.1 else rng.uniform(0.0, 3.0)
        theta = rng.uniform(0.0, math.pi)
        phi = rng.uniform(0.0, 2.0 * math.pi)
        dt1, dt2 = rng.uniform(0.2, 3.0, size=2)
        t = rng.uniform(-4.0, 4.0)
        p = RegionPair(r1, r2, r, theta, phi, dt1, dt2, t)
        closed = factor_closed(kind, p).value
        # keep draws away from structural zeros, where relative deviations
        # compare rounding noise against rounding noise
        if abs(closed) >= 1e-4:
            return kind, p, closed


_JI4_SIGS = ((0, 1, 1, 0, 0), (0, 1, 1, 0, 2), (0, 1, 1, -1, 1), (1, 1, 1, 0, 1))


def _draw_ji4(rng: np.random.Generator, index: int) -> Ji4Args:
    """One supported ji4 signature with compact support and a stable value."""
    n, l1, l2, l3, l4 = _JI4_SIGS[index % 4]
    while True:
        a, b = rng.uniform(0.3, 3.0, size=2)
        g = 0.0 if (n, l1, l2, l3, l4) == (1, 1, 1, 0, 1) else rng.uniform(0.2, 3.0)
        d = rng.uniform(0.2, 3.0)
        if (n, l1, l2, l3, l4) == (0, 1, 1, 0, 0):
            if rng.random() < 0.2:
                g = 0.0
            if rng.random() < 0.2:
                d = 0.0
        vals = [v for v in (a, b, g, d) if v > 0.0]
        if max(vals) > sum(vals) - max(vals) - 0.1:
            continue  # too close to the support edge
        args = Ji4Args(n, l1, l2, l3, l4, a, b, g, d)
        if abs(ji4(args)) >= 1e-3:
            return args


def cmd_validate(args: argparse.Namespace) -> int:
    """Cross-check every route against every other on seeded random inputs."""
    n = args.samples
    rng = np.random.default_rng(args.seed)
    series_cfg = SeriesConfig()
    # value comparison is the check here; keep the oracle's internal stall
    # guard out of the way (its error estimates are deliberately conservative)
    oracle_cfg = QuadConfig(abs_tol=1.0, rel_tol=1.0)
    dev_simple = dev_general = dev_numeric = 0.0
    with warnings.catch_warnings():
        # rejected structural-zero probes cancel by construction
        warnings.simplefilter("ignore", CancellationWarning)
        for i in range(n):
            kind, p, closed = _draw_pair(rng, i)
            floor = max(abs(closed), 1e-6)
            simple = factor_series(kind, p, series_cfg).value
            general = factor_series_general(kind, p, series_cfg).value
            numeric = factor_fourier_numeric(kind, p, oracle_cfg).value
            dev_simple = max(dev_simple, abs(simple - closed) / abs(closed))
            dev_general = max(dev_general, abs(general - closed) / abs(closed))
            dev_numeric = max(dev_numeric, abs(numeric - closed) / floor)

    dev_avg = 0.0
    for _ in range(n):
        q = rng.uniform(0.1, 15.0)
        r_ex = rng.uniform(0.2, 6.0)
        s = Schedule(rng.uniform(0.2, 3.0), rng.uniform(0.2, 3.0), rng.uniform(-4.0, 4.0))
        sc = s.scale(r_ex)
        for avg_kind, trig in ((AvgKind.SIN_FINITE, math.sin), (AvgKind.COS_FINITE, math.cos)):
            gated = lambda t: trig(q * t) * heaviside(t, sc) * heaviside(r_ex - t, sc)
            numeric = numeric_time_average(gated, s, breakpoints=(0.0, r_ex))
            dev_avg = max(dev_avg, abs(finite_avg(avg_kind, q, r_ex, s) - numeric))
        for avg_kind, trig in ((AvgKind.SIN_INF, math.sin), (AvgKind.COS_INF, math.cos)):
            open_ended = lambda t: trig(q * t) * heaviside(t, sc)
            numeric = numeric_time_average(open_ended, s, breakpoints=(0.0,))
            dev_avg = max(dev_avg, abs(infinite_avg(avg_kind, q, s) - numeric))

    ji4_cfg = QuadConfig(abs_tol=1.0, rel_tol=1.0, tail_periods=800)
    dev_ji4 = 0.0
    for i in range(n):
        ji4_args = _draw_ji4(rng, i)
        closed = ji4(ji4_args)
        numeric = ji4_numeric(ji4_args, ji4_cfg).value
        dev_ji4 = max(dev_ji4, abs(numeric - closed) / abs(closed))

    checks = (
        ("closed vs series", dev_simple, _BOUND_SERIES),
        ("closed vs series-general", dev_general, _BOUND_SERIES),
        ("closed vs numeric", dev_numeric, _BOUND_NUMERIC),
        ("time averages vs quadrature", dev_avg, _BOUND_AVG),
        ("ji4 closed vs quadrature", dev_ji4, _BOUND_JI4),
    )
    print(f"validation report  seed={args.seed}  samples={n}")
    ok = True
    for label, dev, bound in checks:
        passed = dev <= bound
        ok = ok and passed
        print(f"{label:<28} max dev {dev:.3e}  bound {bound:.1e}  "
              f"{'pass' if passed else 'FAIL'}")
    print(f"overall: {'pass' if ok else 'FAIL'}")
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# parser


def _add_series_flags(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--n-max", type=int, default=2000,
                    help="series truncation depth (default 2000)")
    sp.add_argument("--tail-tol", type=float, default=1e-6,
                    help="relative tail tolerance for series convergence")
    sp.add_argument("--rex-slack", type=float, default=0.0,
                    help="extra expansion radius beyond the causal minimum")
    sp.add_argument("--abs-tol", type=float, default=1e-7,
                    help="absolute error budget for the numeric method")
    sp.add_argument("--rel-tol", type=float, default=1e-4,
                    help="relative error budget for the numeric method")
    sp.add_argument("--tail-periods", type=int, default=400,
                    help="oscillatory tail chunks for the numeric method")


def _add_geometry_flags(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--r1", type=float, required=True, help="radius of region 1")
    sp.add_argument("--r2", type=float, required=True, help="radius of region 2")
    sp.add_argument("--r", type=float, default=0.0, help="centre separation")
    sp.add_argument("--theta", type=parse_angle, default=0.0,
                    help="polar angle of the displacement (radians or e.g. 1/6pi)")
    sp.add_argument("--phi", type=parse_angle, default=0.0,
                    help="azimuthal angle of the displacement")
    sp.add_argument("--dt1", type=float, default=1.0, help="length of interval 1")
    sp.add_argument("--dt2", type=float, default=1.0, help="length of interval 2")
    sp.add_argument("--t", type=float, default=0.0,
                    help="start of interval 2 minus start of interval 1")


_METHODS = tuple(m.value for m in Method)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="brfactor",
        description="Geometric factors for averaged field commutators over "
        "pairs of spherical space-time regions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("factor", help="evaluate one factor, print JSON")
    sp.add_argument("--kind", required=True, choices=[k.value for k in FactorKind])
    _add_geometry_flags(sp)
    sp.add_argument("--method", default="closed", choices=_METHODS)
    _add_series_flags(sp)
    sp.set_defaults(handler=cmd_factor)

    sp = sub.add_parser("table1", help="recompute the built-in reference table")
    sp.add_argument("--method", default="closed", choices=_METHODS)
    sp.add_argument("--csv", default=None, help="also write the rows to this CSV file")
    _add_series_flags(sp)
    sp.set_defaults(handler=cmd_table1)

    sp = sub.add_parser("sweep", help="evaluate a parameter grid, write CSV")
    sp.add_argument("--kind", type=_parse_kinds, default=(FactorKind.AXX,),
                    help="comma-separated list: axx,axy,bxy")
    for name, help_text in (("--r1", "radius of region 1"),
                            ("--r2", "radius of region 2"),
                            ("--r", "centre separation")):
        sp.add_argument(name, type=_parse_range, required=name != "--r",
                        default=None if name != "--r" else (0.0,), help=help_text)
    sp.add_argument("--theta", type=_parse_angle_range, default=(0.0,))
    sp.add_argument("--phi", type=_parse_angle_range, default=(0.0,))
    sp.add_argument("--dt1", type=_parse_range, default=(1.0,))
    sp.add_argument("--dt2", type=_parse_range, default=(1.0,))
    sp.add_argument("--t", type=_parse_range, default=(0.0,))
    sp.add_argument("--method", default="closed", choices=_METHODS)
    sp.add_argument("--out", default=None, help="CSV output path (default stdout)")
    sp.add_argument("--max-points", type=int, default=20000,
                    help="refuse grids larger than this")
    _add_series_flags(sp)
    sp.set_defaults(handler=cmd_sweep)

    sp = sub.add_parser("validate", help="seeded cross-method comparison report")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--samples", type=int, default=25,
                    help="draws per suite (0 gives a vacuous pass)")
    sp.set_defaults(handler=cmd_validate)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except (ValidationError, UnsupportedSignatureError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except QuadratureError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
