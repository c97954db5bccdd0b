"""Outlier factor and dispersion-aware outlier threshold.

Each object's outlier factor is the mean of a size term (small clusters are
suspicious) and a location term (objects far from the majority cluster, or
far from every other cluster when there is no majority, are suspicious).
Objects whose factor exceeds ``mu + (1 + 2 d^2) sigma`` are reported, where
``d`` in [0, 1] is the expert-supplied inherent dispersion of the domain.
"""

from __future__ import annotations

import logging
import math
import statistics
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .clustering import Clustering
from .errors import DegenerateInputError, InvalidInputError
from .matrix import SimilarityMatrix

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DetectionConfig:
    dispersion: float

    def __post_init__(self) -> None:
        _check_dispersion(self.dispersion)
        object.__setattr__(self, "dispersion", float(self.dispersion))


@dataclass(frozen=True)
class OutlierScore:
    object_id: str
    of_neighbors: float
    of_location: float
    of: float


@dataclass(frozen=True)
class ClusterSummary:
    """One row of the per-cluster table: size, flagged count and OF moments."""

    cluster_id: str
    size: int
    outlier_count: int
    mean_of: float
    std_of: float
    members: tuple[str, ...]


@dataclass(frozen=True)
class DetectionReport:
    scores: tuple[OutlierScore, ...]
    mu_of: float
    sigma_of: float
    ot: float
    outliers: frozenset[str]
    config: DetectionConfig
    cluster_summary: tuple[ClusterSummary, ...]

    @property
    def n(self) -> int:
        return len(self.scores)

    def score_of(self, object_id: str) -> OutlierScore:
        for s in self.scores:
            if s.object_id == object_id:
                return s
        raise InvalidInputError(f"unknown object id {object_id!r}")


def _check_dispersion(d: float) -> None:
    if not (0.0 <= d <= 1.0):  # also rejects NaN
        raise InvalidInputError(f"dispersion must lie in [0, 1], got {d!r}")


def find_representative_cluster(clustering: Clustering) -> frozenset[str] | None:
    """The cluster holding strictly more than half of the objects, if any."""
    n = len(clustering.source_ids)
    for c in clustering.clusters:
        if 2 * len(c) > n:
            return c
    return None


def of_neighbors(cluster_size: int, n: int) -> float:
    """Size term: ``1 - |C| / n``."""
    if not (1 <= cluster_size <= n):
        raise InvalidInputError(f"cluster size {cluster_size} not in [1, {n}]")
    return 1.0 - cluster_size / n


def object_cluster_similarity(obj: str, C: Sequence[str] | frozenset[str], S: SimilarityMatrix) -> float:
    """Highest similarity between ``obj`` and any member of ``C``."""
    if not C:
        raise InvalidInputError("cluster must be non-empty")
    row = S.values[S.index(obj)]
    return float(row[S.indices(C)].max())


def _membership(obj: str, clustering: Clustering) -> int:
    for i, c in enumerate(clustering.clusters):
        if obj in c:
            return i
    raise InvalidInputError(f"object {obj!r} is not in the clustering")


def of_location(obj: str, clustering: Clustering, S: SimilarityMatrix) -> float:
    """Location term.

    With a majority cluster it is one minus the similarity to that cluster
    (zero for its own members). Otherwise it is one minus the mean similarity
    to the clusters the object does not belong to.
    """
    own = _membership(obj, clustering)
    rep = find_representative_cluster(clustering)
    if rep is not None:
        return 1.0 - object_cluster_similarity(obj, rep, S)
    others = [c for i, c in enumerate(clustering.clusters) if i != own]
    if not others:
        raise DegenerateInputError("a lone cluster is always representative")
    total = math.fsum(object_cluster_similarity(obj, c, S) for c in others)
    return 1.0 - total / len(others)


def outlier_factor(obj: str, clustering: Clustering, S: SimilarityMatrix) -> OutlierScore:
    own = clustering.clusters[_membership(obj, clustering)]
    neigh = of_neighbors(len(own), len(clustering.source_ids))
    loc = of_location(obj, clustering, S)
    return OutlierScore(obj, neigh, loc, (neigh + loc) / 2.0)


def outlier_threshold(mu_of: float, sigma_of: float, d: float) -> float:
    """``mu + (1 + 2 d^2) sigma``: one sigma at d=0, three sigma at d=1."""
    _check_dispersion(d)
    if sigma_of < 0:
        raise InvalidInputError(f"sigma must be non-negative, got {sigma_of}")
    return mu_of + (1 + 2 * d**2) * sigma_of


def _location_terms(objects: Sequence[str], clustering: Clustering, S: SimilarityMatrix) -> list[float]:
    # vectorised of_location over every object; matches the scalar path bit for bit
    rows = S.indices(objects)
    rep = find_representative_cluster(clustering)
    if rep is not None:
        best = S.values[np.ix_(rows, S.indices(rep))].max(axis=1)
        return [1.0 - float(v) for v in best]
    k = clustering.k
    to_cluster = np.empty((len(objects), k))
    for j, c in enumerate(clustering.clusters):
        to_cluster[:, j] = S.values[np.ix_(rows, S.indices(c))].max(axis=1)
    labels = clustering.labels()
    own = np.fromiter((labels[o] for o in objects), dtype=np.intp, count=len(objects))
    # a zero in place of the own-cluster term leaves the exact fsum unchanged
    to_cluster[np.arange(len(objects)), own] = 0.0
    return [1.0 - math.fsum(row) / (k - 1) for row in to_cluster.tolist()]


def detect_outliers(
    D: Sequence[str],
    clustering: Clustering,
    S: SimilarityMatrix,
    config: DetectionConfig,
) -> DetectionReport:
    """Score every object and flag those whose factor is strictly above the threshold.

    Args:
        D: Object ids to score, in the order the report should list them.
        clustering: Partition of ``D``.
        S: Similarity matrix covering every id in ``D``.
        config: Holds the inherent dispersion ``d``.

    Returns:
        The full report, including the per-cluster summary rows.

    Raises:
        DegenerateInputError: ``D`` is empty.
        InvalidInputError: ``clustering`` does not partition ``D`` or ``S``
            lacks an id.
    """
    objects = [str(o) for o in D]
    if not objects:
        raise DegenerateInputError("no objects to score")
    if len(set(objects)) != len(objects) or set(objects) != set(clustering.source_ids):
        raise InvalidInputError("clustering does not partition the scored objects")
    n = len(objects)
    if clustering.k == 0:
        raise DegenerateInputError("empty clustering")

    labels = clustering.labels()
    sizes = clustering.sizes
    locs = _location_terms(objects, clustering, S)
    scores = []
    for obj, loc in zip(objects, locs):
        neigh = of_neighbors(sizes[labels[obj]], n)
        scores.append(OutlierScore(obj, neigh, loc, (neigh + loc) / 2.0))

    ofs = [s.of for s in scores]
    # exact rational moments: independent of summation order, and zero spread stays exactly zero
    mu = float(statistics.mean(ofs))
    sigma = float(statistics.pstdev(ofs))
    ot = outlier_threshold(mu, sigma, config.dispersion)
    outliers = frozenset(s.object_id for s in scores if s.of > ot)

    by_id = {s.object_id: s for s in scores}
    summary = []
    for i, c in enumerate(clustering.clusters):
        members = tuple(sorted(c))
        vals = [by_id[o].of for o in members]
        summary.append(
            ClusterSummary(
                cluster_id=f"C{i + 1}",
                size=len(members),
                outlier_count=sum(1 for o in members if o in outliers),
                mean_of=float(statistics.mean(vals)),
                std_of=float(statistics.pstdev(vals)),
                members=members,
            )
        )
    logger.info(
        "mu_OF=%.6g sigma_OF=%.6g d=%.3g OT=%.6g: %d of %d flagged",
        mu, sigma, config.dispersion, ot, len(outliers), n,
    )
    return DetectionReport(tuple(scores), mu, sigma, ot, outliers, config, tuple(summary))
