"""Recompute the published tables and compare them cell by cell."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .mdinf import (
    DistributionTable,
    Kind,
    MomentSet,
    QueueParams,
    busy_cycle_moments,
    busy_period_moments,
    distribution_table,
    make_inverter,
    moments_from_table,
)
from .inversion import TailInverter
from .reference import TABLES, ReferenceTable

# moments_from_table needs rows out to where the CDF exceeds this
RECOVERY_COVERAGE = 1.0 - 1e-3
_MAX_EXTENSION = 10_000


@dataclass(frozen=True)
class ComparedRow:
    t: float
    computed: dict[str, float]
    printed: dict[str, float]
    deviation: dict[str, float]
    atom_adjacent: bool
    gated: bool
    known_misprints: dict[str, str]


@dataclass(frozen=True)
class Reproduction:
    reference: ReferenceTable
    table: DistributionTable
    rows: tuple[ComparedRow, ...]
    exact: MomentSet
    recovered: MomentSet | None
    recovery_grid: tuple[float, ...]

    @property
    def max_gated_cdf_deviation(self) -> float:
        devs = [r.deviation["cdf"] for r in self.rows if r.gated and "cdf" not in r.known_misprints]
        return max(devs, default=0.0)

    @property
    def max_cdf_deviation(self) -> float:
        return max((r.deviation["cdf"] for r in self.rows), default=0.0)

    def relative_errors(self) -> dict[str, float]:
        if self.recovered is None:
            return {}
        return {
            "mean": abs(self.recovered.mean / self.exact.mean - 1.0),
            "variance": abs(self.recovered.variance / self.exact.variance - 1.0),
        }


def extend_until_covered(
    table: DistributionTable, inverter: TailInverter, workers: int | None = None
) -> DistributionTable:
    """Append rows at the last spacing until the CDF exceeds the coverage level."""
    rows = list(table.rows)
    step = rows[-1].t - rows[-2].t
    batch = 16
    added = 0
    while rows[-1].cdf <= RECOVERY_COVERAGE and added < _MAX_EXTENSION:
        base = rows[-1].t
        probe = [round(base + k * step, 10) for k in range(1, batch + 1)]
        more = distribution_table(
            table.params, probe, table.spec.delta_t, table.spec.delta_p, table.kind,
            workers=workers, inverter=inverter,
        ).rows
        for row in more:
            rows.append(row)
            added += 1
            if row.cdf > RECOVERY_COVERAGE:
                break
    return replace(table, rows=tuple(rows))


def reproduce_table(table_id: str, workers: int | None = None, recover_moments: bool = True) -> Reproduction:
    ref = TABLES[table_id]
    params = QueueParams(ref.lam, ref.a)
    kind = Kind(ref.kind)
    busy = kind is Kind.BUSY_PERIOD
    inverter = make_inverter(params, ref.delta_t, ref.delta_p, kind)
    table = distribution_table(
        params, ref.ts, ref.delta_t, ref.delta_p, kind, with_bounds=busy, workers=workers,
        inverter=inverter,
    )
    rows = []
    for printed_row, row in zip(ref.rows, table.rows):
        computed = {"cdf": row.cdf}
        printed = {"cdf": printed_row.cdf}
        for col in ("bound_chebyshev", "bound_atom", "exact_exponential"):
            if getattr(printed_row, col) is not None and getattr(row, col) is not None:
                computed[col] = getattr(row, col)
                printed[col] = getattr(printed_row, col)
        deviation = {k: abs(computed[k] - printed[k]) for k in computed}
        rows.append(
            ComparedRow(
                t=row.t,
                computed=computed,
                printed=printed,
                deviation=deviation,
                atom_adjacent=row.atom_adjacent,
                gated=row.t > ref.a + ref.delta_t,
                known_misprints=dict(printed_row.known_misprints),
            )
        )
    exact = busy_period_moments(params) if busy else busy_cycle_moments(params)
    recovered = None
    grid: list[float] = []
    if recover_moments and ref.table_id != "4.1":
        full = extend_until_covered(table, inverter, workers)
        grid = [r.t for r in full.rows]
        if busy:
            recovered = moments_from_table(full, atom_at=params.a, atom_mass=math.exp(-params.rho))
        else:
            recovered = moments_from_table(full)
    return Reproduction(
        reference=ref,
        table=table,
        rows=tuple(rows),
        exact=exact,
        recovered=recovered,
        recovery_grid=tuple(grid),
    )
