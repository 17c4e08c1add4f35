"""Tail probabilities from Laplace-Stieltjes transforms.

Implements the Platzman-Ammons-Bartholdi inversion: for a distribution on
``[0, inf)`` with transform ``L(s) = E[exp(-s X)]`` it returns ``tau`` with

    P[X >= t + dt] - dp <= tau <= P[X > t - dt] + dp

provided the distribution puts mass much smaller than ``dp`` outside the
support window ``[L, U]``.  The estimate is

    tau = (U - t + dt) / (U - L + 2 dt)
          + sum_{n=1}^{N} a^(n^2) / (pi n) * Im{(b^n - g^n) L(j w n)}

with ``K = ln(2/dp)``, ``D = dt / sqrt(2K)``, ``w = 2 pi / (U - L + 2 dt)``,
``N = ceil(2K / (w dt))``, ``a = exp(-D^2 w^2 / 2)``, ``b = exp(j (U + dt) w)``
and ``g = exp(j t w)``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import (
    AccuracyDomainError,
    NumericalInstabilityError,
    ParameterDomainError,
    PrecisionDomainError,
    TermCountError,
    TransformEvaluationError,
    WindowDomainError,
)

TransformEvaluator = Callable[[np.ndarray], np.ndarray]

TWO_PI = 2.0 * math.pi
# exp(x) underflows to zero below this
_EXP_UNDERFLOW = -745.0
# about 1.6 GB of working arrays; beyond this the window or accuracy is unreasonable
MAX_TERMS = 50_000_000


@dataclass(frozen=True)
class InversionSpec:
    """Accuracy ``delta_t``, precision ``delta_p`` and support window [L, U]."""

    delta_t: float
    delta_p: float
    support_lower: float
    support_upper: float

    def __post_init__(self):
        if not (math.isfinite(self.delta_t) and self.delta_t > 0):
            raise AccuracyDomainError(self.delta_t)
        if not (0.0 < self.delta_p < 0.5):
            raise PrecisionDomainError(self.delta_p)
        lo, up = self.support_lower, self.support_upper
        if not (math.isfinite(lo) and math.isfinite(up) and 0.0 <= lo < up):
            raise WindowDomainError(lo, up)


@dataclass(frozen=True)
class DerivedParams:
    K: float
    D: float
    omega: float
    N: int


@dataclass(frozen=True)
class TailEstimate:
    """One inverted point.

    ``tau`` is the raw estimate of P[X > t]; ``cdf`` is ``1 - tau`` after
    clamping tau to [0, 1], and ``clamped`` records whether that clamp
    changed anything.
    """

    t: float
    tau: float
    cdf: float
    clamped: bool
    spec: InversionSpec
    derived: DerivedParams


def derive_params(spec: InversionSpec) -> DerivedParams:
    K = math.log(2.0 / spec.delta_p)
    D = spec.delta_t / math.sqrt(2.0 * K)
    omega = TWO_PI / (spec.support_upper - spec.support_lower + 2.0 * spec.delta_t)
    N = math.ceil(2.0 * K / (omega * spec.delta_t))
    return DerivedParams(K=K, D=D, omega=omega, N=max(N, 1))


def check_transform(transform: TransformEvaluator, probes: int = 16) -> None:
    """Reject evaluators that cannot be the transform of a probability law.

    Checks ``L(0) = 1`` to 1e-9 and ``|L(jy)| <= 1`` on a log-spaced sample
    of ``y``.
    """
    at_zero = complex(np.asarray(transform(np.array([0j])))[0])
    if not abs(at_zero - 1.0) <= 1e-9:
        raise ParameterDomainError("transform", f"L(0) = {at_zero}, expected 1")
    y = np.geomspace(1e-3, 1e3, probes)
    mags = np.abs(np.asarray(transform(1j * y), dtype=complex))
    if not np.all(mags <= 1.0 + 1e-9):
        worst = int(np.nanargmax(np.where(np.isfinite(mags), mags, np.inf)))
        raise ParameterDomainError(
            "transform", f"|L(j*{y[worst]:.3g})| = {mags[worst]:.6g} exceeds 1"
        )


def _evaluate(transform: TransformEvaluator, s: np.ndarray) -> np.ndarray:
    try:
        values = np.asarray(transform(s), dtype=complex)
    except Exception:
        # locate the first failing term for the error message
        for i, si in enumerate(s):
            try:
                v = complex(np.asarray(transform(np.array([si])), dtype=complex)[0])
            except Exception as exc:
                raise TransformEvaluationError(i + 1, str(exc)) from exc
            if not (math.isfinite(v.real) and math.isfinite(v.imag)):
                raise TransformEvaluationError(i + 1, f"non-finite value {v}")
        raise
    if values.shape != s.shape:
        raise TransformEvaluationError(1, f"evaluator returned shape {values.shape}")
    bad = ~np.isfinite(values)
    if bad.any():
        i = int(np.argmax(bad))
        raise TransformEvaluationError(i + 1, f"non-finite value {values[i]}")
    return values


class TailInverter:
    """Everything in the series that does not depend on t.

    Built once per (transform, spec) and shared by every t of a grid, so a
    grid evaluation is bit-identical to independent single-point calls.
    """

    def __init__(self, transform: TransformEvaluator, spec: InversionSpec, check: bool = True):
        if check:
            check_transform(transform)
        self.spec = spec
        self.derived = d = derive_params(spec)
        if d.N > MAX_TERMS:
            raise TermCountError(
                f"inversion needs N = {d.N} terms, limit is {MAX_TERMS}; widen delta_t or narrow the window"
            )
        n = np.arange(1, d.N + 1, dtype=float)
        exponent = -0.5 * (d.D * d.omega * n) ** 2
        keep = exponent >= _EXP_UNDERFLOW
        # weights decrease in n, so the surviving terms form a prefix
        n, exponent = n[keep], exponent[keep]
        self.n = n
        self.weights = np.exp(exponent) / (math.pi * n)
        values = _evaluate(transform, 1j * d.omega * n)
        self.re = values.real
        self.im = values.imag
        beta_phase = _phases(n, (spec.support_upper + spec.delta_t) * d.omega)
        with np.errstate(over="ignore"):
            self.beta_part = self.re * np.sin(beta_phase) + self.im * np.cos(beta_phase)
        self.width = spec.support_upper - spec.support_lower + 2.0 * spec.delta_t

    def estimate(self, t: float) -> TailEstimate:
        if not (math.isfinite(t) and t >= 0):
            raise ParameterDomainError("t", f"must be finite and >= 0, got {t!r}")
        spec = self.spec
        gamma_phase = _phases(self.n, t * self.derived.omega)
        # Im{(b^n - g^n) L} with L = re + j im
        with np.errstate(over="ignore", invalid="ignore"):
            gamma_part = self.re * np.sin(gamma_phase) + self.im * np.cos(gamma_phase)
            terms = self.weights * (self.beta_part - gamma_part)
        if not np.all(np.isfinite(terms)):
            raise NumericalInstabilityError(f"non-finite series term at t={t}")
        series = math.fsum(terms)
        tau = (spec.support_upper - t + spec.delta_t) / self.width + series
        if not math.isfinite(tau):
            raise NumericalInstabilityError(f"non-finite partial sum at t={t}")
        clipped = min(1.0, max(0.0, tau))
        return TailEstimate(
            t=float(t),
            tau=tau,
            cdf=1.0 - clipped,
            clamped=clipped != tau,
            spec=spec,
            derived=self.derived,
        )

    def grid(self, ts: Sequence[float], workers: int | None = None) -> list[TailEstimate]:
        ts = _validate_grid(ts)
        if workers and workers > 1 and len(ts) > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                return list(pool.map(self.estimate, ts))
        return [self.estimate(t) for t in ts]


def _validate_grid(ts: Sequence[float]) -> list[float]:
    ts = [float(t) for t in ts]
    if not all(math.isfinite(t) for t in ts):
        raise ParameterDomainError("t", "grid points must be finite")
    if any(b <= a for a, b in zip(ts, ts[1:])):
        raise ParameterDomainError("t", "grid must be strictly increasing")
    return ts


def _phases(n: np.ndarray, theta: float) -> np.ndarray:
    """Angles n*theta reduced to [0, 2 pi)."""
    return np.remainder(n * math.remainder(theta, TWO_PI), TWO_PI)


def invert_tail(
    transform: TransformEvaluator, t: float, spec: InversionSpec, check: bool = True
) -> TailEstimate:
    """Approximate P[X > t] for the law with transform ``transform``."""
    return TailInverter(transform, spec, check=check).estimate(t)


def invert_grid(
    transform: TransformEvaluator,
    ts: Sequence[float],
    spec: InversionSpec,
    workers: int | None = None,
    check: bool = True,
) -> list[TailEstimate]:
    """Invert at every point of a strictly increasing grid.

    The transform is evaluated once for the whole grid.  With ``workers``
    the points are evaluated on a thread pool; every point is computed
    independently, so the output does not depend on the schedule.
    """
    ts = _validate_grid(ts)
    if not ts:
        return []
    return TailInverter(transform, spec, check=check).grid(ts, workers)
