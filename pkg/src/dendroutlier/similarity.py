"""Event-based similarity between time series.

Each series is reduced to its annotated events. Two series are compared by
pooling their events, grouping the pool with the same min-linkage clustering
used for objects, and greedily pairing cross-series events inside each
group by smallest city-block distance. The similarity is the total duration
of the paired events over the total duration of all events.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .clustering import cluster_indices
from .errors import InvalidInputError
from .matrix import SimilarityMatrix

__all__ = [
    "Event",
    "EventSeries",
    "EventPair",
    "SimilarityMatrix",
    "cityblock_distance",
    "event_length",
    "pair_length",
    "extract_common_events",
    "series_similarity",
    "jaccard_similarity",
    "build_similarity_matrix",
]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Event:
    """A region of interest inside one series, described by a feature vector."""

    event_id: str
    series_id: str
    initial_timestamp: float
    final_timestamp: float
    features: tuple[float, ...]

    def __post_init__(self) -> None:
        feats = tuple(float(x) for x in self.features)
        if not feats:
            raise InvalidInputError(f"event {self.event_id!r} has no features")
        if not all(math.isfinite(x) for x in feats):
            raise InvalidInputError(f"event {self.event_id!r} has non-finite features")
        start, end = float(self.initial_timestamp), float(self.final_timestamp)
        if not (math.isfinite(start) and math.isfinite(end)):
            raise InvalidInputError(f"event {self.event_id!r} has non-finite timestamps")
        if end < start:
            raise InvalidInputError(
                f"event {self.event_id!r} ends ({end}) before it starts ({start})"
            )
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "initial_timestamp", start)
        object.__setattr__(self, "final_timestamp", end)

    @property
    def dim(self) -> int:
        return len(self.features)


@dataclass(frozen=True)
class EventSeries:
    """A series reduced to its events, kept sorted by start time."""

    series_id: str
    events: tuple[Event, ...] = ()
    timestamps: int | None = None

    def __post_init__(self) -> None:
        events = tuple(sorted(self.events, key=lambda e: e.initial_timestamp))
        for e in events:
            if e.series_id != self.series_id:
                raise InvalidInputError(
                    f"event {e.event_id!r} belongs to {e.series_id!r}, not {self.series_id!r}"
                )
        dims = {e.dim for e in events}
        if len(dims) > 1:
            raise InvalidInputError(
                f"series {self.series_id!r} mixes feature dimensions {sorted(dims)}"
            )
        object.__setattr__(self, "events", events)

    def relabeled(self, series_id: str) -> EventSeries:
        """Copy of this series under a new id (event ids are kept)."""
        events = tuple(
            Event(e.event_id, series_id, e.initial_timestamp, e.final_timestamp, e.features)
            for e in self.events
        )
        return EventSeries(series_id, events, self.timestamps)


@dataclass(frozen=True)
class EventPair:
    """Two events from different series judged to be the same occurrence."""

    left: Event
    right: Event
    distance: float = field(default=float("nan"))

    def __post_init__(self) -> None:
        if self.left.series_id == self.right.series_id:
            raise InvalidInputError("an event pair must span two different series")
        if math.isnan(self.distance):
            object.__setattr__(self, "distance", cityblock_distance(self.left.features, self.right.features))
        elif self.distance < 0:
            raise InvalidInputError("pair distance must be non-negative")


def cityblock_distance(a: Sequence[float], b: Sequence[float]) -> float:
    """Sum of absolute coordinate differences (L1 / Manhattan distance).

    >>> cityblock_distance((1, 2), (4, 6))
    7.0
    """
    x = np.asarray(a, dtype=np.float64)
    y = np.asarray(b, dtype=np.float64)
    if x.ndim != 1 or y.ndim != 1:
        raise InvalidInputError("feature vectors must be one-dimensional")
    if x.shape != y.shape:
        raise InvalidInputError(f"dimension mismatch: {x.shape[0]} vs {y.shape[0]}")
    if x.size == 0:
        raise InvalidInputError("feature vectors must have at least one coordinate")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise InvalidInputError("feature vectors must be finite")
    return float(np.abs(x - y).sum())


def _pairwise_cityblock(features: np.ndarray) -> np.ndarray:
    # same reduction as cityblock_distance, applied row by row
    out = np.empty((features.shape[0], features.shape[0]))
    for i in range(features.shape[0]):
        out[i] = np.abs(features - features[i]).sum(axis=1)
    return out


def event_length(e: Event) -> float:
    return abs(e.final_timestamp - e.initial_timestamp)


def pair_length(p: EventPair) -> float:
    return event_length(p.left) + event_length(p.right)


def _ordered(a: EventSeries, b: EventSeries) -> tuple[EventSeries, EventSeries]:
    if a.series_id == b.series_id:
        raise InvalidInputError(f"cannot compare series {a.series_id!r} with itself")
    return (a, b) if a.series_id < b.series_id else (b, a)


def _check_dims(a: EventSeries, b: EventSeries) -> None:
    dims = {e.dim for e in a.events} | {e.dim for e in b.events}
    if len(dims) > 1:
        raise InvalidInputError(
            f"feature dimensions differ between {a.series_id!r} and {b.series_id!r}: {sorted(dims)}"
        )


def extract_common_events(a: EventSeries, b: EventSeries) -> list[EventPair]:
    """Pair up the events the two series have in common.

    The pooled events are clustered on ``1 - d / d_max`` (``d`` the city-block
    distance). Inside each cluster the closest cross-series pair is taken and
    removed until one side runs out. Ties go to the smallest
    (left index, right index), with the lower series id on the left.
    """
    _check_dims(a, b)
    left, right = _ordered(a, b)
    na, nb = len(left.events), len(right.events)
    if na == 0 or nb == 0:
        return []

    pool = left.events + right.events
    feats = np.array([e.features for e in pool], dtype=np.float64)
    dist = _pairwise_cityblock(feats)
    d_max = float(dist.max())
    if d_max == 0.0:
        groups = [list(range(len(pool)))]
    else:
        groups = cluster_indices(1.0 - dist / d_max)

    found: list[tuple[int, int]] = []
    for group in groups:
        la = [i for i in group if i < na]
        lb = [i for i in group if i >= na]
        while la and lb:
            sub = dist[np.ix_(la, lb)]
            flat = int(np.argmin(sub))
            r, c = divmod(flat, len(lb))
            found.append((la.pop(r), lb.pop(c)))
    found.sort()
    return [EventPair(pool[i], pool[j], float(dist[i, j])) for i, j in found]


def series_similarity(a: EventSeries, b: EventSeries) -> float:
    """Duration of shared events over total event duration; 1 when there is no duration."""
    pairs = extract_common_events(a, b)
    total = math.fsum(event_length(e) for e in a.events + b.events)
    if total == 0.0:
        return 1.0
    shared = math.fsum(event_length(e) for p in pairs for e in (p.left, p.right))
    return shared / total


def jaccard_similarity(A: Iterable, B: Iterable) -> float:
    """``|A & B| / |A | B|``; two empty sets count as identical."""
    A, B = set(A), set(B)
    union = A | B
    if not union:
        return 1.0
    return len(A & B) / len(union)


def _similarity_cell(args: tuple[EventSeries, EventSeries]) -> float:
    return series_similarity(*args)


def build_similarity_matrix(
    dataset: Sequence[EventSeries], jobs: int | None = 1
) -> SimilarityMatrix:
    """All-pairs series similarity, one evaluation per unordered pair.

    ``jobs`` > 1 spreads pairs over worker processes; ``None`` uses every
    core. Each cell has a single writer, so the result does not depend on
    scheduling.
    """
    ids = [s.series_id for s in dataset]
    if not ids:
        raise InvalidInputError("dataset is empty")
    if len(set(ids)) != len(ids):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        raise InvalidInputError(f"duplicate series ids: {dupes}")
    dims = {e.dim for s in dataset for e in s.events}
    if len(dims) > 1:
        raise InvalidInputError(f"dataset mixes feature dimensions {sorted(dims)}")

    n = len(dataset)
    index_pairs = list(combinations(range(n), 2))
    work = [(dataset[i], dataset[j]) for i, j in index_pairs]
    workers = (os.cpu_count() or 1) if jobs is None else max(1, int(jobs))
    if workers > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            cells = list(pool.map(_similarity_cell, work, chunksize=max(1, len(work) // (4 * workers))))
    else:
        cells = [_similarity_cell(w) for w in work]

    values = np.eye(n)
    for (i, j), v in zip(index_pairs, cells):
        values[i, j] = values[j, i] = v
    logger.info("built %dx%d similarity matrix from %d pairs", n, n, len(work))
    return SimilarityMatrix(tuple(ids), values)
