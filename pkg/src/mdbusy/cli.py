"""Command-line interface.

Subcommands: ``busy-period``, ``busy-cycle``, ``moments``, ``simulate`` and
``reproduce-table``.  Exit status is 0 on success, 2 for a parameter outside
its domain and 3 for a numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from decimal import Decimal, InvalidOperation
from pathlib import Path

from . import __version__
from .errors import NumericalError, ParameterDomainError, PrecisionDomainError
from .mdinf import (
    Kind,
    QueueParams,
    busy_cycle_moment_from_busy_period,
    busy_cycle_moments,
    busy_period_moment_recursion,
    busy_period_moments,
    distribution_table,
)
from .oracle import SimConfig, run_simulation
from .reference import TABLE_IDS
from .reproduce import reproduce_table

EXIT_OK = 0
EXIT_DOMAIN = 2
EXIT_NUMERICAL = 3
MAX_SIMULATED_RHO = 25.0

FLAG_NAMES = {
    "lambda": "--lambda",
    "service": "--service",
    "delta_t": "--dt",
    "delta_p": "--dp",
    "l": "--l-exponent",
    "t": "--t",
    "samples": "--samples",
    "seed": "--seed",
    "order": "--order",
    "with_bounds": "--with-bounds",
    "output": "--output",
    "workers": "--workers",
}


def fmt(x) -> str:
    """Shortest decimal string that round-trips to the same double."""
    if isinstance(x, str):
        return x
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, int):
        return str(x)
    return repr(float(x))


# ---------------------------------------------------------------------------
# argument parsing


def _t_list(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")


def _t_range(text: str) -> list[float]:
    """``start:stop:step`` with ``stop`` included; decimal arithmetic, so
    ``0.5:3.5:0.5`` gives exactly the doubles of ``0.5,1,...,3.5``."""
    try:
        start, stop, step = (Decimal(p) for p in text.split(":"))
    except (ValueError, InvalidOperation):
        raise argparse.ArgumentTypeError(f"expected start:stop:step, got {text!r}")
    if step <= 0 or stop < start:
        raise argparse.ArgumentTypeError(f"need step > 0 and stop >= start, got {text!r}")
    count = (stop - start) / step
    if count != count.to_integral_value():
        raise argparse.ArgumentTypeError(f"step does not divide stop - start in {text!r}")
    return [float(start + k * step) for k in range(int(count) + 1)]


def _add_queue_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lambda", dest="lam", type=float, required=True, help="arrival rate (> 0)")
    p.add_argument("--service", type=float, required=True, help="deterministic service time (>= 0)")


def _add_output_flags(p: argparse.ArgumentParser, default_format: str = "csv") -> None:
    p.add_argument("--format", choices=("csv", "json"), default=default_format)
    p.add_argument("--output", type=Path, help="output file (default: standard output)")
    p.add_argument("--manifest", type=Path, help="also write the run manifest as JSON here")


def _add_distribution_parser(sub, name: str, help_text: str) -> None:
    p = sub.add_parser(name, help=help_text)
    _add_queue_flags(p)
    p.add_argument("--dt", type=float, required=True, help="accuracy (> 0)")
    p.add_argument("--dp", type=float, required=True, help="precision in (0, 0.5)")
    p.add_argument("--l-exponent", dest="l", type=int, default=3, help="truncation exponent l (default 3)")
    grid = p.add_mutually_exclusive_group(required=True)
    grid.add_argument("--t", dest="t", type=_t_list, help="comma-separated times")
    grid.add_argument("--t-range", dest="t", type=_t_range, help="start:stop:step, stop included")
    p.add_argument("--with-bounds", action="store_true", help="add Chebyshev and atom bound columns")
    p.add_argument("--plot", type=Path, help="write whitespace-delimited 't cdf' pairs here")
    p.add_argument("--workers", type=int, default=1, help="threads for the time grid")
    _add_output_flags(p)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mdbusy",
        description="M/D/inf busy period and busy cycle distributions by transform inversion.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    _add_distribution_parser(sub, "busy-period", "busy-period CDF table")
    _add_distribution_parser(sub, "busy-cycle", "busy-cycle CDF table")

    p = sub.add_parser("moments", help="exact busy-period and busy-cycle moments")
    _add_queue_flags(p)
    p.add_argument("--order", type=int, default=2, help="highest raw moment for --recursion (<= 10)")
    p.add_argument("--recursion", action="store_true", help="also run the moment recursion")
    p.add_argument("--output", type=Path)

    p = sub.add_parser("simulate", help="Monte Carlo busy periods or busy cycles")
    _add_queue_flags(p)
    p.add_argument("--kind", choices=[k.value for k in Kind], required=True)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--t", type=_t_list, help="times at which to evaluate the empirical CDF")
    p.add_argument("--dump", type=Path, help="write the sorted samples here, one per line")
    p.add_argument("--workers", type=int, default=1)
    _add_output_flags(p, default_format="json")

    p = sub.add_parser("reproduce-table", help="recompute a published table and compare")
    p.add_argument("table_id", choices=TABLE_IDS)
    p.add_argument("--output", type=Path, help="directory for table_<id>.csv and table_<id>.json")
    p.add_argument("--workers", type=int, default=1)
    return parser


# ---------------------------------------------------------------------------
# helpers


def _check_queue(args) -> QueueParams:
    return QueueParams(args.lam, args.service)


def _check_inversion_flags(args) -> None:
    if not (math.isfinite(args.dt) and args.dt > 0):
        raise ParameterDomainError("delta_t", f"accuracy must be > 0, got {args.dt!r}")
    if not (0.0 < args.dp < 0.5):
        raise PrecisionDomainError(args.dp)
    if args.l < 1:
        raise ParameterDomainError("l", f"must be a positive integer, got {args.l!r}")
    if not args.t:
        raise ParameterDomainError("t", "no time points given")
    if any(not math.isfinite(t) or t < 0 for t in args.t):
        raise ParameterDomainError("t", "times must be finite and >= 0")
    if args.workers < 1:
        raise ParameterDomainError("workers", "must be >= 1")


def _write_text(path: Path | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def _csv_text(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _manifest(command: str, parameters: dict, derived: dict | None = None) -> dict:
    out = {"subcommand": command, "parameters": parameters}
    if derived is not None:
        out["derived"] = derived
    out["version"] = __version__
    # kept fixed so that repeated runs are byte-identical
    out["timestamp"] = None
    return out


# ---------------------------------------------------------------------------
# subcommands


def cmd_distribution(args, kind: Kind) -> int:
    params = _check_queue(args)
    _check_inversion_flags(args)
    if args.with_bounds and kind is Kind.BUSY_CYCLE:
        raise ParameterDomainError("with_bounds", "bound columns are defined for the busy period only")
    table = distribution_table(
        params, args.t, args.dt, args.dp, kind, l=args.l, with_bounds=args.with_bounds,
        workers=args.workers,
    )
    columns = ["t", "cdf", "tau"]
    if args.with_bounds:
        columns += ["bound_chebyshev", "bound_atom"]
    if kind is Kind.BUSY_CYCLE and params.a == 0:
        columns.append("exact_exponential")
    rows = [[getattr(r, c) for c in columns] for r in table.rows]
    d = table.derived
    derived = {
        "K": d.K, "D": d.D, "omega": d.omega, "N": d.N,
        "L": table.spec.support_lower, "U": table.spec.support_upper,
    }
    manifest = _manifest(
        kind.value,
        {
            "lambda": args.lam, "service": args.service, "dt": args.dt, "dp": args.dp,
            "l_exponent": args.l, "t": list(args.t), "with_bounds": args.with_bounds,
        },
        derived,
    )
    if args.format == "csv":
        text = _csv_text(columns, rows)
    else:
        text = _json_text(
            {"manifest": manifest, "rows": [dict(zip(columns, r)) for r in rows], "derived": derived}
        )
    _write_text(args.output, text)
    if args.manifest is not None:
        _write_text(args.manifest, _json_text(manifest))
    if args.plot is not None:
        _write_text(args.plot, "".join(f"{fmt(r.t)} {fmt(r.cdf)}\n" for r in table.rows))
    return EXIT_OK


def cmd_moments(args) -> int:
    params = _check_queue(args)
    if not (1 <= args.order <= 10):
        raise ParameterDomainError("order", f"must be in 1..10, got {args.order!r}")
    bp = busy_period_moments(params)
    bc = busy_cycle_moments(params)
    report = {
        "manifest": _manifest(
            "moments",
            {"lambda": args.lam, "service": args.service, "order": args.order, "recursion": args.recursion},
        ),
        "rho": params.rho,
        "busy_period": {"mean": bp.mean, "variance": bp.variance},
        "busy_cycle": {"mean": bc.mean, "variance": bc.variance},
    }
    if args.recursion:
        order = max(args.order, 2)
        rec = busy_period_moment_recursion(params, order)
        cycle_raw = [busy_cycle_moment_from_busy_period(params, rec, n) for n in range(1, order + 1)]
        pairs = list(zip(rec.raw_moments[:2], bp.raw_moments)) + list(zip(cycle_raw[:2], bc.raw_moments))
        gap = max(abs(x / y - 1.0) for x, y in pairs)
        report["recursion"] = {
            "busy_period_raw_moments": list(rec.raw_moments[: args.order]),
            "busy_cycle_raw_moments": cycle_raw[: args.order],
            "max_relative_deviation": gap,
        }
    _write_text(args.output, _json_text(report))
    return EXIT_OK


def cmd_simulate(args) -> int:
    params = _check_queue(args)
    if args.samples < 1:
        raise ParameterDomainError("samples", f"must be >= 1, got {args.samples!r}")
    if params.rho > MAX_SIMULATED_RHO:
        # a busy period holds about e^rho arrivals on average
        raise ParameterDomainError(
            "service", f"lambda * service = {params.rho!r} exceeds {MAX_SIMULATED_RHO} for simulation"
        )
    if args.workers < 1:
        raise ParameterDomainError("workers", "must be >= 1")
    config = SimConfig(params, args.samples, args.seed)
    kind = Kind(args.kind)
    ecdf = run_simulation(config, kind, workers=args.workers)
    summary = {"n": ecdf.n, "seed": ecdf.seed, "mean": ecdf.mean(), "variance": ecdf.variance()}
    if kind is Kind.BUSY_PERIOD:
        summary["atom_fraction"] = ecdf.atom_fraction(params.a)
    ts = list(args.t or [])
    rows = [[t, ecdf.evaluate(t)] for t in ts]
    manifest = _manifest(
        "simulate",
        {
            "lambda": args.lam, "service": args.service, "kind": kind.value,
            "n_samples": args.samples, "seed": args.seed, "t": ts,
        },
    )
    if args.format == "csv":
        text = _csv_text(["t", "cdf"], rows)
    else:
        text = _json_text(
            {"manifest": manifest, "summary": summary, "rows": [{"t": t, "cdf": c} for t, c in rows]}
        )
    _write_text(args.output, text)
    if args.manifest is not None:
        _write_text(args.manifest, _json_text({"manifest": manifest, "summary": summary}))
    if args.dump is not None:
        _write_text(args.dump, "".join(fmt(x) + "\n" for x in ecdf.samples))
    return EXIT_OK


def reproduction_report(rep) -> tuple[str, dict]:
    """CSV text and JSON report for one reproduced table."""
    ref = rep.reference
    cols = [c for c in ("cdf", "bound_chebyshev", "bound_atom", "exact_exponential") if c in rep.rows[0].computed]
    header = ["t"]
    for c in cols:
        header += [c, f"printed_{c}", f"abs_dev_{c}"]
    header += ["atom_adjacent", "gated", "known_misprint"]
    rows = []
    for r in rep.rows:
        line = [r.t]
        for c in cols:
            line += [r.computed[c], r.printed[c], r.deviation[c]]
        line += [r.atom_adjacent, r.gated, ";".join(sorted(r.known_misprints))]
        rows.append(line)
    report = {
        "table": ref.table_id,
        "kind": ref.kind,
        "parameters": {"lambda": ref.lam, "service": ref.a, "dt": ref.delta_t, "dp": ref.delta_p},
        "derived": {
            "K": rep.table.derived.K, "D": rep.table.derived.D, "omega": rep.table.derived.omega,
            "N": rep.table.derived.N, "L": rep.table.spec.support_lower, "U": rep.table.spec.support_upper,
        },
        "max_abs_dev_cdf": rep.max_cdf_deviation,
        "max_abs_dev_cdf_gated": rep.max_gated_cdf_deviation,
        "known_misprints": [
            {"t": r.t, "column": col, "reason": why}
            for r in rep.rows
            for col, why in sorted(r.known_misprints.items())
        ]
        + [{"t": None, "column": col, "reason": why} for col, why in sorted(ref.summary_misprints.items())],
        "exact_moments": {"mean": rep.exact.mean, "variance": rep.exact.variance},
        "printed_exact_moments": dict(ref.exact),
    }
    if rep.recovered is not None:
        report["recovered_moments"] = {"mean": rep.recovered.mean, "variance": rep.recovered.variance}
        report["recovered_relative_error"] = rep.relative_errors()
        report["printed_recovered_moments"] = dict(ref.recovered)
        report["recovery_grid"] = list(rep.recovery_grid)
    for c in cols[1:]:
        devs = [r.deviation[c] for r in rep.rows if c not in r.known_misprints]
        report[f"max_abs_dev_{c}"] = max(devs, default=0.0)
    return _csv_text(header, rows), report


def cmd_reproduce_table(args) -> int:
    if args.workers < 1:
        raise ParameterDomainError("workers", "must be >= 1")
    rep = reproduce_table(args.table_id, workers=args.workers)
    csv_text, report = reproduction_report(rep)
    if args.output is not None:
        args.output.mkdir(parents=True, exist_ok=True)
        stem = "table_" + args.table_id.replace(".", "_")
        _write_text(args.output / f"{stem}.csv", csv_text)
        _write_text(args.output / f"{stem}.json", _json_text(report))
    lines = [
        f"table {args.table_id}: {len(rep.rows)} rows",
        f"  max |computed - printed| cdf: {fmt(report['max_abs_dev_cdf'])}"
        f" (gated rows: {fmt(report['max_abs_dev_cdf_gated'])})",
    ]
    for c in ("bound_chebyshev", "bound_atom", "exact_exponential"):
        if f"max_abs_dev_{c}" in report:
            lines.append(f"  max |computed - printed| {c}: {fmt(report[f'max_abs_dev_{c}'])}")
    for m in report["known_misprints"]:
        lines.append(f"  known misprint t={m['t']} {m['column']}: {m['reason']}")
    if rep.recovered is not None:
        err = report["recovered_relative_error"]
        lines.append(
            f"  recovered mean {fmt(rep.recovered.mean)} (exact {fmt(rep.exact.mean)}, error {err['mean']:.2%})"
        )
        lines.append(
            f"  recovered variance {fmt(rep.recovered.variance)}"
            f" (exact {fmt(rep.exact.variance)}, error {err['variance']:.2%})"
        )
    sys.stdout.write("\n".join(lines) + "\n")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "busy-period":
            return cmd_distribution(args, Kind.BUSY_PERIOD)
        if args.command == "busy-cycle":
            return cmd_distribution(args, Kind.BUSY_CYCLE)
        if args.command == "moments":
            return cmd_moments(args)
        if args.command == "simulate":
            return cmd_simulate(args)
        return cmd_reproduce_table(args)
    except ParameterDomainError as exc:
        flag = FLAG_NAMES.get(exc.param, exc.param)
        message = str(exc).split(": ", 1)[-1]
        print(f"mdbusy {args.command}: error: {flag}: {message}", file=sys.stderr)
        return EXIT_DOMAIN
    except NumericalError as exc:
        print(f"mdbusy {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ArithmeticError, MemoryError) as exc:
        # overflow of e^rho and the like for extreme parameters
        print(f"mdbusy {args.command}: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"mdbusy {args.command}: error: {FLAG_NAMES['output']}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
