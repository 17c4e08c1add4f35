"""Shared fixtures: reproduced tables and Monte Carlo runs are expensive,
so each is computed once per session."""

from __future__ import annotations

import functools

import pytest

from mdbusy.mdinf import Kind, QueueParams
from mdbusy.oracle import SimConfig, run_simulation
from mdbusy.reproduce import reproduce_table

MC_SAMPLES = 100_000
MC_SEED = 20240601


@functools.lru_cache(maxsize=None)
def reproduction(table_id: str):
    return reproduce_table(table_id, recover_moments=table_id.startswith("3"))


@functools.lru_cache(maxsize=None)
def simulation(lam: float, a: float, kind: str, n: int = MC_SAMPLES, seed: int = MC_SEED):
    return run_simulation(SimConfig(QueueParams(lam, a), n, seed), Kind(kind))


@pytest.fixture(scope="session")
def reproduce():
    return reproduction


@pytest.fixture(scope="session")
def simulate():
    return simulation


CRITERION_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if CRITERION_LINES:
        terminalreporter.section("acceptance criteria")
        for line in CRITERION_LINES:
            terminalreporter.write_line(line)
