"""Seeded Monte Carlo simulation of M/D/inf busy periods and busy cycles.

Random streams are numpy ``Philox`` counter-based generators keyed by the
64-bit seed.  Sample ``i`` of a run owns counter block ``(i, lane)`` in the
two high counter words, so each sample's draws are fixed by ``(seed, i)``
alone and the run is independent of evaluation order.  Lane 0 feeds the
busy period, lane 1 the idle period of a busy cycle.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ParameterDomainError
from .mdinf import Kind, QueueParams

BUSY_LANE = 0
IDLE_LANE = 1
_UINT64 = 1 << 64
# exponentials drawn per refill while walking a busy period
_BLOCK = 32


@dataclass(frozen=True)
class SimConfig:
    params: QueueParams
    n_samples: int
    seed: int = 0

    def __post_init__(self):
        if int(self.n_samples) != self.n_samples or self.n_samples < 1:
            raise ParameterDomainError("samples", f"must be a positive integer, got {self.n_samples!r}")
        if int(self.seed) != self.seed or not 0 <= self.seed < _UINT64:
            raise ParameterDomainError("seed", f"must be an unsigned 64-bit integer, got {self.seed!r}")


class EmpiricalCdf:
    """Sorted sample of durations; ``evaluate(t)`` = #{x <= t} / n."""

    def __init__(self, samples, seed: int):
        arr = np.sort(np.asarray(samples, dtype=float))
        arr.setflags(write=False)
        self.samples = arr
        self.n = arr.size
        self.seed = seed

    def evaluate(self, t):
        t = np.asarray(t, dtype=float)
        out = np.searchsorted(self.samples, t, side="right") / self.n
        return out if out.ndim else float(out)

    __call__ = evaluate

    def mean(self) -> float:
        return float(np.mean(self.samples))

    def variance(self) -> float:
        """Unbiased sample variance (0 for a single sample)."""
        return float(np.var(self.samples, ddof=1)) if self.n > 1 else 0.0

    def atom_fraction(self, at: float) -> float:
        lo = np.searchsorted(self.samples, at, side="left")
        hi = np.searchsorted(self.samples, at, side="right")
        return (hi - lo) / self.n

    def dkw_halfwidth(self, confidence: float = 0.99) -> float:
        """Dvoretzky-Kiefer-Wolfowitz band half-width (Massart constant)."""
        return math.sqrt(math.log(2.0 / (1.0 - confidence)) / (2.0 * self.n))


class _Streams:
    """Positions one Philox generator at counter block (index, lane).

    Resetting the state is equivalent to constructing
    ``Philox(key=seed, counter=[0, 0, index, lane])`` but much cheaper.
    """

    def __init__(self, seed: int):
        self.bitgen = np.random.Philox(key=seed)
        self.gen = np.random.Generator(self.bitgen)
        self._state = self.bitgen.state

    def at(self, index: int, lane: int) -> np.random.Generator:
        state = self._state
        state["state"]["counter"] = np.array([0, 0, index, lane], dtype=np.uint64)
        state["buffer_pos"] = 4
        state["has_uint32"] = 0
        self.bitgen.state = state
        return self.gen


def _exponentials(rng: np.random.Generator, lam: float, size: int) -> np.ndarray:
    # inverse CDF on (0, 1]: 1 - U with U in [0, 1) never hits 0
    return -np.log1p(-rng.random(size)) / lam


def _busy_period(params: QueueParams, rng: np.random.Generator) -> float:
    """Walk arrivals until one falls after the latest scheduled departure.

    With deterministic service the latest departure is always that of the
    newest customer, so the period ends at the first inter-arrival gap
    longer than ``a``.
    """
    lam, a = params.lam, params.a
    if a == 0:
        return 0.0
    last_arrival = 0.0
    while True:
        gaps = _exponentials(rng, lam, _BLOCK)
        over = np.flatnonzero(gaps > a)
        if over.size:
            k = over[0]
            if k:
                last_arrival += float(np.sum(gaps[:k]))
            return last_arrival + a
        last_arrival += float(np.sum(gaps))


def _draw(params: QueueParams, streams: _Streams, index: int, kind: Kind) -> float:
    busy = _busy_period(params, streams.at(index, BUSY_LANE))
    if kind is Kind.BUSY_PERIOD:
        return busy
    idle = float(_exponentials(streams.at(index, IDLE_LANE), params.lam, 1)[0])
    return idle + busy


def simulate_busy_period(params: QueueParams, sample_seed: int) -> float:
    """One busy-period length from the stream keyed by ``sample_seed``."""
    return _draw(params, _Streams(sample_seed), 0, Kind.BUSY_PERIOD)


def simulate_busy_cycle(params: QueueParams, sample_seed: int) -> float:
    """One busy-cycle length: independent idle draw (own lane) plus busy period."""
    return _draw(params, _Streams(sample_seed), 0, Kind.BUSY_CYCLE)


def draw_samples(
    params: QueueParams, seed: int, indices: Sequence[int], kind: Kind | str
) -> np.ndarray:
    """Samples for the given indices of the run keyed by ``seed``, in order."""
    kind = Kind(kind)
    streams = _Streams(seed)
    return np.array([_draw(params, streams, int(i), kind) for i in indices], dtype=float)


def run_simulation(config: SimConfig, kind: Kind | str, workers: int | None = None) -> EmpiricalCdf:
    kind = Kind(kind)
    n = config.n_samples
    if workers and workers > 1:
        chunks = np.array_split(np.arange(n), workers)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda idx: draw_samples(config.params, config.seed, idx, kind), chunks))
        samples = np.concatenate(parts)
    else:
        samples = draw_samples(config.params, config.seed, range(n), kind)
    return EmpiricalCdf(samples, seed=config.seed)
