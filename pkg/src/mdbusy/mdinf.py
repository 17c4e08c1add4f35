"""M/D/inf busy period and busy cycle analytics.

Poisson arrivals at rate ``lam``, every customer served for exactly ``a``
time units by its own server.  The busy period ``B`` starts when a customer
finds the system empty; the busy cycle is ``Z = I + B`` where the idle
period ``I`` is exponential(lam) and independent of ``B``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import integrate, signal

from . import inversion
from .errors import (
    ParameterDomainError,
    PrecisionDomainError,
    QuadratureError,
    SingularEvaluationError,
)
from .inversion import DerivedParams, InversionSpec, TailEstimate


class Kind(str, enum.Enum):
    BUSY_PERIOD = "busy-period"
    BUSY_CYCLE = "busy-cycle"


@dataclass(frozen=True)
class QueueParams:
    lam: float
    a: float

    def __post_init__(self):
        if not (math.isfinite(self.lam) and self.lam > 0):
            raise ParameterDomainError("lambda", f"arrival rate must be > 0, got {self.lam!r}")
        if not (math.isfinite(self.a) and self.a >= 0):
            raise ParameterDomainError("service", f"service time must be >= 0, got {self.a!r}")

    @property
    def rho(self) -> float:
        return self.lam * self.a


@dataclass(frozen=True)
class MomentSet:
    mean: float
    variance: float | None
    raw_moments: tuple[float, ...]


# ---------------------------------------------------------------------------
# transforms


class BusyPeriodTransform:
    """``1 + (s - (s + lam) s / (lam exp(-(s + lam) a) + s)) / lam``."""

    def __init__(self, params: QueueParams):
        if params.a <= 0:
            raise ParameterDomainError(
                "service", "busy period is degenerate at a = 0; use the step CDF"
            )
        self.params = params

    def __call__(self, s):
        lam, a = self.params.lam, self.params.a
        s = np.asarray(s, dtype=complex)
        denom = lam * np.exp(-(s + lam) * a) + s
        if np.any(np.abs(denom) < 1e-300):
            raise SingularEvaluationError("busy-period transform denominator vanished")
        out = 1.0 + (s - (s + lam) * s / denom) / lam
        return out if out.ndim else complex(out)


class IdleTransform:
    """``lam / (lam + s)``: exponential idle period."""

    def __init__(self, params: QueueParams):
        self.params = params

    def __call__(self, s):
        lam = self.params.lam
        s = np.asarray(s, dtype=complex)
        if np.any(s == -lam):
            raise SingularEvaluationError(f"pole of the idle-period transform at s = -{lam}")
        out = lam / (lam + s)
        return out if out.ndim else complex(out)


class BusyCycleTransform:
    """Product of the idle and busy-period transforms."""

    def __init__(self, params: QueueParams):
        self.params = params
        self.idle = IdleTransform(params)
        self.busy = BusyPeriodTransform(params) if params.a > 0 else None

    def __call__(self, s):
        if self.busy is None:
            return self.idle(s)
        return self.idle(s) * self.busy(s)


def busy_period_transform(params: QueueParams) -> BusyPeriodTransform:
    return BusyPeriodTransform(params)


def idle_transform(params: QueueParams) -> IdleTransform:
    return IdleTransform(params)


def busy_cycle_transform(params: QueueParams) -> BusyCycleTransform:
    return BusyCycleTransform(params)


def transform_for(params: QueueParams, kind: Kind | str):
    kind = Kind(kind)
    if kind is Kind.BUSY_PERIOD:
        return busy_period_transform(params)
    return busy_cycle_transform(params)


# ---------------------------------------------------------------------------
# moments


def _busy_variance_numerator(rho: float) -> float:
    # e^{2 rho} - 2 rho e^rho - 1
    return math.expm1(2 * rho) - 2 * rho * math.exp(rho)


def busy_period_moments(params: QueueParams) -> MomentSet:
    lam, rho = params.lam, params.rho
    mean = math.expm1(rho) / lam
    var = _busy_variance_numerator(rho) / lam**2
    return MomentSet(mean=mean, variance=var, raw_moments=(mean, var + mean * mean))


def busy_cycle_moments(params: QueueParams) -> MomentSet:
    """Mean ``e^rho / lam`` and variance ``(e^{2 rho} - 2 rho e^rho) / lam^2``.

    The variance is VAR[I] + VAR[B]; its denominator is lam squared.
    """
    lam, rho = params.lam, params.rho
    mean = math.exp(rho) / lam
    var = (math.exp(2 * rho) - 2 * rho * math.exp(rho)) / lam**2
    return MomentSet(mean=mean, variance=var, raw_moments=(mean, var + mean * mean))


def _c_derivative(params: QueueParams, n: int, rtol: float) -> float:
    """n-th derivative at 0 of the auxiliary function C, deterministic service.

    ``C^(n)(0) = lam * int_0^a (-t)^n exp(-lam t) dt``
    """
    lam, a = params.lam, params.a
    value, abserr = integrate.quad(
        lambda t: (-t) ** n * math.exp(-lam * t), 0.0, a, epsabs=0.0, epsrel=rtol / 10, limit=200
    )
    achieved = abserr / abs(value) if value else abserr
    if achieved > rtol:
        raise QuadratureError(achieved, rtol)
    return lam * value


def busy_period_moment_recursion(params: QueueParams, max_order: int, rtol: float = 1e-12) -> MomentSet:
    """Raw moments E[B^n], n = 1..max_order, from the M/G/inf recursion.

    ``E[B^n] = (-1)^{n+1} { e^rho/lam * n C^(n-1)(0)
                - e^rho sum_{p=1}^{n-1} (-1)^{n-p} binom(n, p) E[B^{n-p}] C^(p)(0) }``

    The C derivatives come from adaptive quadrature, which keeps this path
    independent of the closed forms it is checked against.
    """
    if params.a <= 0:
        raise ParameterDomainError("service", "moment recursion needs a > 0")
    if not (1 <= max_order <= 10):
        raise ParameterDomainError("order", f"must be in 1..10, got {max_order!r}")
    lam, rho = params.lam, params.rho
    e_rho = math.exp(rho)
    c = [_c_derivative(params, k, rtol) for k in range(max_order)]
    raw = [1.0]
    for n in range(1, max_order + 1):
        inner = sum((-1) ** (n - p) * math.comb(n, p) * raw[n - p] * c[p] for p in range(1, n))
        raw.append((-1) ** (n + 1) * (e_rho / lam * n * c[n - 1] - e_rho * inner))
    raw = raw[1:]
    var = raw[1] - raw[0] ** 2 if max_order >= 2 else None
    return MomentSet(mean=raw[0], variance=var, raw_moments=tuple(raw))


def busy_cycle_moment_from_busy_period(params: QueueParams, busy_raw: MomentSet, n: int) -> float:
    """``E[Z^n] = sum_{p=0}^{n} binom(n, p) p!/lam^p E[B^{n-p}]``, with E[B^0] = 1."""
    if n < 1:
        raise ParameterDomainError("n", f"must be >= 1, got {n!r}")
    if len(busy_raw.raw_moments) < n:
        raise ParameterDomainError(
            "busy_raw", f"need busy-period moments up to order {n}, have {len(busy_raw.raw_moments)}"
        )
    b = (1.0,) + tuple(busy_raw.raw_moments)
    lam = params.lam
    return math.fsum(math.comb(n, p) * math.factorial(p) / lam**p * b[n - p] for p in range(n + 1))


# ---------------------------------------------------------------------------
# bounds


def chebyshev_bound(params: QueueParams, t: float) -> float:
    """Chebyshev lower bound ``1 - VAR[B] lam^2 / (1 + lam t - e^rho)^2`` on B(t).

    Returned as-is, so it can be negative (vacuous); ``-inf`` marks the pole
    at ``t = E[B]``.  See :func:`chebyshev_bound_valid` for where it is
    guaranteed.
    """
    rho = params.rho
    gap = 1.0 + params.lam * t - math.exp(rho)
    if gap == 0.0:
        return -math.inf
    return 1.0 - _busy_variance_numerator(rho) / gap**2


def chebyshev_validity_threshold(params: QueueParams) -> float:
    rho = params.rho
    m = math.expm1(rho)
    return (m + max(m, math.sqrt(max(_busy_variance_numerator(rho), 0.0)))) / params.lam


def chebyshev_bound_valid(params: QueueParams, t: float) -> bool:
    return t > chebyshev_validity_threshold(params)


def atom_bound(params: QueueParams, t: float) -> float:
    """Mass of the atom at ``a``: 0 before it, ``e^{-rho}`` from ``a`` on."""
    return 0.0 if t < params.a else math.exp(-params.rho)


def truncation_window(
    params: QueueParams, delta_p: float, l: int = 3, kind: Kind | str = Kind.BUSY_PERIOD
) -> tuple[float, float]:
    """Support window [L, U] holding all but ``10^-l * delta_p`` of the mass.

    ``L = a`` for both kinds.  ``U = mean + sqrt(variance * 10^l / delta_p)``,
    the one-sided Chebyshev cut-off for the relevant moments.
    """
    kind = Kind(kind)
    if not (0.0 < delta_p < 0.5):
        raise PrecisionDomainError(delta_p)
    if int(l) != l or l < 1:
        raise ParameterDomainError("l", f"must be a positive integer, got {l!r}")
    if kind is Kind.BUSY_PERIOD:
        if _busy_variance_numerator(params.rho) <= 0:
            raise ParameterDomainError("service", "busy-period variance vanishes (rho = 0)")
        moments = busy_period_moments(params)
    else:
        moments = busy_cycle_moments(params)
    upper = moments.mean + math.sqrt(moments.variance * 10**l / delta_p)
    return params.a, upper


# ---------------------------------------------------------------------------
# convolution series


@dataclass(frozen=True)
class SeriesCdf:
    """CDF values from the convolution series with its truncation data."""

    ts: np.ndarray
    cdf: np.ndarray
    n_max: int
    neglected_weight: float
    grid_step: float


@dataclass(frozen=True)
class SeriesValue:
    cdf: float
    n_max: int
    neglected_weight: float


def _component_lattice(lam: float, a: float, step: float, m: int) -> np.ndarray:
    """Exponential(lam) conditioned on [0, a], mean-preserving on a lattice.

    Each cell's mass is split between its two end nodes so that the cell's
    first moment is kept.
    """
    x = lam * step
    # mass in cell k relative to exp(-lam k step); fraction of it sent right
    cell = -math.expm1(-x)
    right = (cell - x * math.exp(-x)) / (x * cell)
    masses = np.exp(-x * np.arange(m)) * cell / -math.expm1(-lam * a)
    pmf = np.zeros(m + 1)
    pmf[:-1] += (1.0 - right) * masses
    pmf[1:] += right * masses
    return pmf


def series_cdf_grid(
    params: QueueParams,
    ts: Sequence[float],
    tail_epsilon: float = 1e-6,
    grid_step: float | None = None,
) -> SeriesCdf:
    """Busy-period CDF from the geometric convolution series.

    ``B = a + S`` where ``S`` is a geometric(e^{-rho}) sum of independent
    exponential(lam) variables conditioned to be below ``a``:

        B(t) = sum_n e^{-rho} (1 - e^{-rho})^n F_n(t - a)

    The atom (n = 0) is exact; the continuous part is convolved on a
    uniform lattice that has ``a`` as a node.  Terms are added until the
    remaining geometric weight drops below ``tail_epsilon``.
    """
    lam, a = params.lam, params.a
    if a <= 0:
        raise ParameterDomainError("service", "series CDF needs a > 0")
    if not (0.0 < tail_epsilon < 1.0):
        raise ParameterDomainError("tail_epsilon", f"must lie in (0, 1), got {tail_epsilon!r}")
    if grid_step is None:
        grid_step = a / 512
    cells = a / grid_step
    m = round(cells)
    if not (grid_step > 0 and m >= 1 and abs(cells - m) <= 1e-9 * cells):
        raise ParameterDomainError("grid_step", f"a / grid_step must be an integer, got {cells!r}")
    ts = np.asarray(ts, dtype=float)
    if np.any(ts < 0) or not np.all(np.isfinite(ts)):
        raise ParameterDomainError("t", "must be finite and >= 0")

    p = math.exp(-params.rho)
    q = -math.expm1(-params.rho)
    # smallest n_max with q^(n_max + 1) < tail_epsilon
    n_max = max(0, math.floor(math.log(tail_epsilon) / math.log(q))) if q > 0 else 0
    while q ** (n_max + 1) >= tail_epsilon:
        n_max += 1
    neglected = q ** (n_max + 1)

    s = ts - a
    top = int(math.ceil(max(float(s.max()) if s.size else 0.0, 0.0) / grid_step)) + 2
    pmf = _component_lattice(lam, a, grid_step, m)[: top + 1]
    acc = np.zeros(top + 1)
    cur = np.zeros(top + 1)
    cur[0] = 1.0
    weight = p
    for _ in range(n_max):
        cur = signal.fftconvolve(cur, pmf)[: top + 1]
        np.clip(cur, 0.0, None, out=cur)
        weight *= q
        acc += weight * cur

    # node k carries mass around k*step; spread it over a hat, except node 0
    # whose mass lies in [0, step)
    cum = np.cumsum(acc)
    node_cdf = np.empty_like(cum)
    node_cdf[0] = 0.0
    node_cdf[1:] = cum[:-1] + 0.5 * acc[1:]
    nodes = np.arange(top + 1) * grid_step
    cont = np.interp(np.maximum(s, 0.0), nodes, node_cdf)
    cdf = np.where(s < 0, 0.0, np.minimum(p + cont, 1.0))
    return SeriesCdf(ts=ts, cdf=cdf, n_max=n_max, neglected_weight=neglected, grid_step=grid_step)


def series_cdf(
    params: QueueParams, t: float, tail_epsilon: float = 1e-6, grid_step: float | None = None
) -> SeriesValue:
    res = series_cdf_grid(params, [t], tail_epsilon, grid_step)
    return SeriesValue(cdf=float(res.cdf[0]), n_max=res.n_max, neglected_weight=res.neglected_weight)


# ---------------------------------------------------------------------------
# tables


@dataclass(frozen=True)
class TableRow:
    t: float
    cdf: float
    tau: float | None = None
    bound_chebyshev: float | None = None
    bound_atom: float | None = None
    clamped: bool = False
    atom_adjacent: bool = False
    exact_exponential: float | None = None


@dataclass(frozen=True)
class DistributionTable:
    rows: tuple[TableRow, ...]
    kind: Kind | None = None
    params: QueueParams | None = None
    spec: InversionSpec | None = None
    derived: DerivedParams | None = None
    meta: dict = field(default_factory=dict)

    @classmethod
    def from_columns(cls, ts: Sequence[float], cdf: Sequence[float], **kw) -> DistributionTable:
        return cls(rows=tuple(TableRow(t=float(t), cdf=float(c)) for t, c in zip(ts, cdf)), **kw)

    @property
    def ts(self) -> np.ndarray:
        return np.array([r.t for r in self.rows])

    @property
    def cdf(self) -> np.ndarray:
        return np.array([r.cdf for r in self.rows])


def make_inverter(
    params: QueueParams,
    delta_t: float,
    delta_p: float,
    kind: Kind | str = Kind.BUSY_PERIOD,
    l: int = 3,
) -> inversion.TailInverter:
    """Inverter for the busy-period or busy-cycle law over its truncation window."""
    kind = Kind(kind)
    lower, upper = truncation_window(params, delta_p, l, kind)
    spec = InversionSpec(delta_t=delta_t, delta_p=delta_p, support_lower=lower, support_upper=upper)
    return inversion.TailInverter(transform_for(params, kind), spec)


def distribution_table(
    params: QueueParams,
    ts: Sequence[float],
    delta_t: float,
    delta_p: float,
    kind: Kind | str = Kind.BUSY_PERIOD,
    l: int = 3,
    with_bounds: bool = False,
    workers: int | None = None,
    inverter: inversion.TailInverter | None = None,
) -> DistributionTable:
    """Invert the busy-period or busy-cycle transform over a grid of times.

    Rows within ``delta_t`` of the busy-period atom are marked
    ``atom_adjacent``: the inverted value there straddles the jump.
    """
    kind = Kind(kind)
    if inverter is None:
        inverter = make_inverter(params, delta_t, delta_p, kind, l)
    estimates: list[TailEstimate] = inverter.grid(ts, workers)
    busy = kind is Kind.BUSY_PERIOD
    rows = []
    for est in estimates:
        t = est.t
        rows.append(
            TableRow(
                t=t,
                cdf=est.cdf,
                tau=est.tau,
                bound_chebyshev=chebyshev_bound(params, t) if with_bounds and busy else None,
                bound_atom=atom_bound(params, t) if with_bounds and busy else None,
                clamped=est.clamped,
                atom_adjacent=busy and abs(t - params.a) <= delta_t,
                exact_exponential=-math.expm1(-params.lam * t) if not busy and params.a == 0 else None,
            )
        )
    return DistributionTable(
        rows=tuple(rows),
        kind=kind,
        params=params,
        spec=inverter.spec,
        derived=inverter.derived,
    )


def moments_from_table(
    table: DistributionTable,
    atom_at: float | None = None,
    atom_mass: float | None = None,
    monotone_tolerance: float | None = None,
) -> MomentSet:
    """Mean and variance recovered from tabulated CDF values.

    The survival function is integrated with the trapezoid rule,
    ``E[X] = int S`` and ``E[X^2] = int 2 t S``, taking ``S = 1`` below the
    first row and ``S = 0`` past the last.  If ``atom_at`` is given the CDF
    there is replaced by ``atom_mass`` (the row is inserted if missing).
    """
    ts = table.ts
    cdf = table.cdf
    if atom_at is not None:
        if atom_mass is None:
            raise ParameterDomainError("atom_mass", "required with atom_at")
        hit = np.flatnonzero(ts == atom_at)
        if hit.size:
            cdf = cdf.copy()
            cdf[hit[0]] = atom_mass
        else:
            k = int(np.searchsorted(ts, atom_at))
            ts = np.insert(ts, k, atom_at)
            cdf = np.insert(cdf, k, atom_mass)
    if ts.size < 2:
        raise ParameterDomainError("table", "need at least two rows")
    if np.any(np.diff(ts) <= 0):
        raise ParameterDomainError("table", "t column must be strictly increasing")
    if monotone_tolerance is None:
        monotone_tolerance = 2.0 * table.spec.delta_p if table.spec is not None else 0.0
    drop = float(np.max(np.maximum.accumulate(cdf)[:-1] - cdf[1:], initial=0.0))
    if drop > monotone_tolerance:
        raise ParameterDomainError(
            "table", f"cdf decreases by {drop:.3g}, beyond tolerance {monotone_tolerance:.3g}"
        )
    surv = 1.0 - cdf
    t0 = ts[0]
    m1 = t0 + np.trapezoid(surv, ts)
    m2 = t0 * t0 + np.trapezoid(2.0 * ts * surv, ts)
    return MomentSet(mean=float(m1), variance=float(m2 - m1 * m1), raw_moments=(float(m1), float(m2)))
