"""Acceptance criteria, one test per criterion at its stated tolerance.

Each test prints a single PASS/FAIL line; the lines are collected again in
the terminal summary.  The only reference cells excluded from gating are
the three documented misprints: the Chebyshev bound at t=0.15 in Table
3.1, the whole Chebyshev column of Table 3.2 and the busy-cycle variance
of Table 4.2.
"""

from __future__ import annotations

import io
import math
import time
from contextlib import redirect_stderr, redirect_stdout
from pathlib import Path

import numpy as np
import pytest

from conftest import CRITERION_LINES
from mdbusy import cli
from mdbusy.inversion import InversionSpec, invert_grid
from mdbusy.mdinf import (
    Kind,
    QueueParams,
    atom_bound,
    busy_cycle_moments,
    busy_period_moment_recursion,
    busy_period_moments,
    chebyshev_bound,
    distribution_table,
    series_cdf_grid,
)
from mdbusy.reference import TABLES

DOCUMENTED_MISPRINTS = {("3.1", 0.15, "bound_chebyshev"), ("3.2", None, "bound_chebyshev"), ("4.2", None, "variance")}


def report(number: int, title: str, ok: bool, detail: str, started: float) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} | {detail} | {time.perf_counter() - started:.1f}s"
    CRITERION_LINES.append(line)
    print(line)
    assert ok, line


def documented(table_id: str, t: float, column: str) -> bool:
    return (table_id, t, column) in DOCUMENTED_MISPRINTS or (table_id, None, column) in DOCUMENTED_MISPRINTS


def quasi_monotone(ts, cdf, delta_t, delta_p) -> bool:
    ts, cdf = np.asarray(ts), np.asarray(cdf)
    for i in range(ts.size):
        later = ts >= ts[i] + 2 * delta_t
        if np.any(cdf[later] < cdf[i] - 2 * delta_p):
            return False
    return True


def test_criterion_1_poisson_limit():
    started = time.perf_counter()
    ref = TABLES["4.1"]
    ts = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5]
    table = distribution_table(QueueParams(1.0, 0.0), ts, 0.01, 0.001, Kind.BUSY_CYCLE)
    cdf = table.cdf
    exact_dev = float(np.max(np.abs(cdf + np.expm1(-np.array(ts)))))
    printed = {r.t: r.cdf for r in ref.rows}
    printed_dev = max(abs(c - printed[t]) for t, c in zip(ts, cdf))
    ok = exact_dev <= 2e-3 and printed_dev <= 5e-3
    report(
        1, "Poisson limit",
        ok, f"max|cdf - (1-e^-t)| = {exact_dev:.2e} (tol 2e-3), max|cdf - printed| = {printed_dev:.2e} (tol 5e-3), N = {table.derived.N}",
        started,
    )


def test_criterion_2_busy_period_tables(reproduce):
    started = time.perf_counter()
    problems = []
    worst_printed = 0.0
    worst_bracket = -math.inf
    for tid in ("3.1", "3.2", "3.3"):
        rep = reproduce(tid)
        ref = rep.reference
        p = QueueParams(ref.lam, ref.a)
        dt, dp = ref.delta_t, ref.delta_p
        gated = [r for r in rep.rows if r.t > ref.a + dt]
        ts = np.array([r.t for r in gated])
        lower = series_cdf_grid(p, ts - dt, tail_epsilon=1e-6).cdf - dp
        upper = series_cdf_grid(p, ts + dt, tail_epsilon=1e-6).cdf + dp
        for r, lo, hi in zip(gated, lower, upper):
            c = r.computed["cdf"]
            dev = r.deviation["cdf"]
            if not documented(tid, r.t, "cdf"):
                worst_printed = max(worst_printed, dev)
                if dev > 1e-2:
                    problems.append(f"{tid} t={r.t}: |cdf - printed| = {dev:.4f}")
            excess = max(lo - c, c - hi)
            worst_bracket = max(worst_bracket, excess)
            if excess > 0:
                problems.append(f"{tid} t={r.t}: outside bracket by {excess:.2e}")
    detail = f"max|cdf - printed| = {worst_printed:.4f} (tol 1e-2), max bracket excess = {worst_bracket:.2e} (must be <= 0)"
    if problems:
        detail += "; " + "; ".join(problems)
    report(2, "busy-period tables 3.1-3.3", not problems, detail, started)


def test_criterion_3_busy_cycle_tables(reproduce, simulate):
    started = time.perf_counter()
    problems = []
    worst_printed = 0.0
    worst_bracket = -math.inf
    for tid in ("4.2", "4.3", "4.4"):
        rep = reproduce(tid)
        ref = rep.reference
        dt, dp = ref.delta_t, ref.delta_p
        ecdf = simulate(ref.lam, ref.a, "busy-cycle")
        band = ecdf.dkw_halfwidth(0.99)
        for r in rep.rows:
            if r.t <= ref.a + dt:
                continue
            c = r.computed["cdf"]
            dev = r.deviation["cdf"]
            if not documented(tid, r.t, "cdf"):
                worst_printed = max(worst_printed, dev)
                if dev > 1e-2:
                    problems.append(f"{tid} t={r.t}: |cdf - printed| = {dev:.4f}")
            lo = ecdf(r.t - dt) - dp - band
            hi = ecdf(r.t + dt) + dp + band
            excess = max(lo - c, c - hi)
            worst_bracket = max(worst_bracket, excess)
            if excess > 0:
                problems.append(f"{tid} t={r.t}: outside Monte Carlo bracket by {excess:.2e}")
    detail = f"max|cdf - printed| = {worst_printed:.4f} (tol 1e-2), max bracket excess = {worst_bracket:.2e} (must be <= 0)"
    if problems:
        detail += "; " + "; ".join(problems)
    report(3, "busy-cycle tables 4.2-4.4", not problems, detail, started)


def test_criterion_4_moment_identities():
    started = time.perf_counter()
    cases = [
        ("3.1", busy_period_moments(QueueParams(1.0, 0.1)), 0.105170918, 0.0003685744),
        ("3.2", busy_period_moments(QueueParams(1.0, 1.0)), 1.718281828, 0.9524924414),
        ("3.3", busy_period_moments(QueueParams(1.0, 3.0)), 19.08553692, 281.9155718),
        ("4.3", busy_cycle_moments(QueueParams(2.0, 1.0)), 3.69452805, 6.260481408),
        ("4.4", busy_cycle_moments(QueueParams(1.0, 2.0)), 7.389056099, 25.04192563),
    ]
    problems = []
    worst = 0.0
    for tid, m, mean, var in cases:
        for name, got, printed in (("mean", m.mean, mean), ("variance", m.variance, var)):
            rel = abs(got / printed - 1.0)
            worst = max(worst, rel)
            if rel > 1e-8:
                problems.append(f"{tid} {name}: computed {got!r} vs printed {printed!r}, rel {rel:.2e}")
    worst_rec = 0.0
    for rho in (0.1, 0.5, 1.0, 2.0, 3.0):
        p = QueueParams(1.0, rho)
        rec = busy_period_moment_recursion(p, 2)
        closed = busy_period_moments(p)
        for got, want in zip(rec.raw_moments, closed.raw_moments):
            worst_rec = max(worst_rec, abs(got / want - 1.0))
    if worst_rec > 1e-9:
        problems.append(f"recursion rel gap {worst_rec:.2e}")
    detail = f"max rel vs printed = {worst:.2e} (tol 1e-8), recursion max rel gap = {worst_rec:.2e} (tol 1e-9)"
    if problems:
        detail += "; " + "; ".join(problems)
    report(4, "moment identities", not problems, detail, started)


def test_criterion_5_moment_recovery(reproduce):
    started = time.perf_counter()
    parts = []
    ok = True
    for tid in ("3.1", "3.2", "3.3"):
        err = reproduce(tid).relative_errors()
        ok &= err["mean"] <= 0.05 and err["variance"] <= 0.30
        parts.append(f"{tid}: mean {err['mean']:.2%}, variance {err['variance']:.2%}")
    report(5, "moment recovery from tables", ok, "; ".join(parts) + " (bands 5% / 30%)", started)


def test_criterion_6_bound_columns():
    started = time.perf_counter()
    problems = []
    worst_b1 = 0.0
    worst_b2 = 0.0
    flagged = []
    for tid in ("3.1", "3.2", "3.3"):
        ref = TABLES[tid]
        p = QueueParams(ref.lam, ref.a)
        for r in ref.rows:
            b2 = abs(r.bound_atom - atom_bound(p, r.t))
            worst_b2 = max(worst_b2, b2)
            if b2 > 1e-6:
                problems.append(f"{tid} t={r.t}: B2 off by {b2:.2e}")
            if documented(tid, r.t, "bound_chebyshev"):
                if "bound_chebyshev" in r.known_misprints:
                    flagged.append((tid, r.t))
                continue
            b1 = abs(r.bound_chebyshev - chebyshev_bound(p, r.t))
            worst_b1 = max(worst_b1, b1)
            if b1 > 1e-5:
                problems.append(f"{tid} t={r.t}: B1 printed {r.bound_chebyshev} vs formula {chebyshev_bound(p, r.t):.7f}")
    expected_flags = 1 + len(TABLES["3.2"].rows)
    if len(flagged) != expected_flags or "variance" not in TABLES["4.2"].summary_misprints:
        problems.append("documented misprint cells not all flagged")
    detail = f"max B1 deviation = {worst_b1:.2e} (tol 1e-5), max B2 deviation = {worst_b2:.2e} (tol 1e-6), {len(flagged) + 1} documented cells flagged and excluded"
    if problems:
        detail += "; " + "; ".join(problems)
    report(6, "bound columns", not problems, detail, started)


def test_criterion_7_oracle_statistics(simulate):
    started = time.perf_counter()
    p = QueueParams(1.0, 1.0)
    busy = simulate(1.0, 1.0, "busy-period")
    cycle = simulate(1.0, 1.0, "busy-cycle")
    n = busy.n
    bm = busy_period_moments(p).mean
    cm = busy_cycle_moments(p).mean
    z_busy = (busy.mean() - bm) / math.sqrt(busy.variance() / n)
    atom = math.exp(-p.rho)
    z_atom = (busy.atom_fraction(p.a) - atom) / math.sqrt(atom * (1 - atom) / n)
    z_cycle = (cycle.mean() - cm) / math.sqrt(cycle.variance() / n)
    ts = np.linspace(1.25, 8.0, 20)
    band = busy.dkw_halfwidth(0.99)
    dkw_dev = float(np.max(np.abs(busy(ts) - series_cdf_grid(p, ts).cdf)))
    ok = n == 100_000 and abs(z_busy) < 3 and abs(z_atom) < 3 and abs(z_cycle) < 3 and dkw_dev <= band
    detail = (
        f"n = {n}, busy mean z = {z_busy:+.2f}, atom z = {z_atom:+.2f}, cycle mean z = {z_cycle:+.2f} (|z| < 3), "
        f"max|ecdf - series| over 20 points = {dkw_dev:.4f} (DKW 99% band {band:.4f})"
    )
    report(7, "oracle statistical gates", ok, detail, started)


def test_criterion_8_guarantee_properties(reproduce):
    started = time.perf_counter()
    rng = np.random.default_rng(8)
    failures = []
    for k in range(50):
        lam = float(rng.uniform(0.2, 5.0))
        delta_t = float(10 ** rng.uniform(-2.5, -0.7))
        delta_p = float(10 ** rng.uniform(-4, -1))
        upper = math.log(1e3 / delta_p) / lam
        t = float(rng.uniform(0.0, upper))
        spec = InversionSpec(delta_t, delta_p, 0.0, upper)
        tau = invert_grid(lambda s, lam=lam: lam / (lam + np.asarray(s, dtype=complex)), [t], spec)[0].tau
        lo = math.exp(-lam * (t + delta_t)) - delta_p
        hi = math.exp(-lam * max(t - delta_t, 0.0)) + delta_p
        if not lo <= tau <= hi:
            failures.append(f"config {k}: tau {tau} outside [{lo}, {hi}]")
    tables = 0
    for tid in TABLES:
        rep = reproduce(tid)
        tbl = rep.table
        tables += 1
        if not quasi_monotone(tbl.ts, tbl.cdf, tbl.spec.delta_t, tbl.spec.delta_p):
            failures.append(f"table {tid} not quasi-monotone")
    c1 = distribution_table(QueueParams(1.0, 0.0), np.arange(0.0, 3.51, 0.05), 0.01, 0.001, Kind.BUSY_CYCLE)
    tables += 1
    if not quasi_monotone(c1.ts, c1.cdf, 0.01, 0.001):
        failures.append("Poisson-limit table not quasi-monotone")
    detail = f"50 random exponential configurations in bracket: {50 - sum(f.startswith('config') for f in failures)}/50, quasi-monotone tables: {tables - sum('quasi' in f for f in failures)}/{tables}"
    if failures:
        detail += "; " + "; ".join(failures)
    report(8, "algorithm guarantee properties", not failures, detail, started)


def _run_cli(argv: list[str]) -> tuple[int, str, str]:
    out, err = io.StringIO(), io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        code = cli.main(argv)
    return code, out.getvalue(), err.getvalue()


def test_criterion_9_determinism(tmp_path: Path):
    started = time.perf_counter()
    commands = {
        "busy-period": ["busy-period", "--lambda", "1", "--service", "1", "--dt", "0.1", "--dp", "0.001", "--t", "1,2,3,4,5", "--with-bounds", "--format", "json"],
        "busy-cycle": ["busy-cycle", "--lambda", "1", "--service", "0", "--dt", "0.01", "--dp", "0.001", "--t-range", "0.5:3.5:0.5"],
        "moments": ["moments", "--lambda", "1", "--service", "3", "--recursion", "--order", "4"],
        "simulate": ["simulate", "--lambda", "1", "--service", "1", "--kind", "busy-period", "--samples", "20000", "--seed", "42", "--t", "1,2,3"],
    }
    parallel = {"busy-period", "busy-cycle", "simulate"}
    failures = []
    for name, argv in commands.items():
        first = _run_cli(argv)
        runs = [_run_cli(argv)]
        if name in parallel:
            runs.append(_run_cli(argv + ["--workers", "3"]))
        if first[0] != 0 or any(r != first for r in runs):
            failures.append(name)
    outputs = []
    for i, workers in enumerate(("1", "1", "2")):
        d = tmp_path / f"run{i}"
        code, out, _ = _run_cli(["reproduce-table", "3.3", "--output", str(d), "--workers", workers])
        outputs.append((code, out, (d / "table_3_3.csv").read_bytes(), (d / "table_3_3.json").read_bytes()))
    if outputs[0][0] != 0 or any(o != outputs[0] for o in outputs[1:]):
        failures.append("reproduce-table")
    detail = f"{5 - len(failures)}/5 subcommands byte-identical across reruns and worker counts"
    if failures:
        detail += "; differing: " + ", ".join(failures)
    report(9, "determinism", not failures, detail, started)


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
