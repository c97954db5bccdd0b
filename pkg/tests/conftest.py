from __future__ import annotations

import numpy as np
import pytest

from dendroutlier import Event, EventSeries, SimilarityMatrix


def random_matrix(rng: np.random.Generator, n: int, decimals: int | None = None) -> SimilarityMatrix:
    """Symmetric unit-diagonal matrix; rounding to few decimals forces ties."""
    vals = rng.random((n, n))
    if decimals is not None:
        vals = np.round(vals, decimals)
    vals = np.triu(vals, 1)
    vals = vals + vals.T
    np.fill_diagonal(vals, 1.0)
    ids = tuple(f"x{i:02d}" for i in rng.permutation(n))
    return SimilarityMatrix(ids, vals)


def make_series(series_id: str, specs: list[tuple[float, float, tuple[float, ...]]]) -> EventSeries:
    events = tuple(
        Event(f"{series_id}-{i}", series_id, start, end, feats)
        for i, (start, end, feats) in enumerate(specs)
    )
    return EventSeries(series_id, events)


def random_series(rng: np.random.Generator, series_id: str, max_events: int = 6, dim: int = 3) -> EventSeries:
    k = int(rng.integers(0, max_events + 1))
    specs = []
    for _ in range(k):
        start = float(rng.integers(0, 900))
        specs.append((start, start + float(rng.integers(0, 60)), tuple(rng.normal(0, 1, dim).round(3))))
    return make_series(series_id, specs)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240601)


def pytest_terminal_summary(terminalreporter):
    from . import test_acceptance

    lines = test_acceptance.pytest_terminal_summary_lines()
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[0][1:])):
            terminalreporter.write_line(line)
