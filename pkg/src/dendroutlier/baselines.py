"""Size-threshold baseline, brute-force oracles and a planted-cluster generator.

The oracles are deliberately naive and import nothing from the clustering or
detection modules: they work on nested lists and plain Python numbers so that
agreement with the main path is evidence rather than tautology.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidInputError, OracleScopeError
from .matrix import SimilarityMatrix

ORACLE_MAX_N = 15


def torgo_size_threshold(clusters: Iterable[Iterable[str]], t: int) -> set[str]:
    """Every member of a cluster with fewer than ``t`` objects.

    ``clusters`` may be a :class:`~dendroutlier.clustering.Clustering` or any
    iterable of id collections.
    """
    if t < 0:
        raise InvalidInputError(f"size threshold must be >= 0, got {t}")
    groups = getattr(clusters, "clusters", clusters)
    flagged: set[str] = set()
    for c in groups:
        members = set(c)
        if len(members) < t:
            flagged |= members
    return flagged


def brute_force_clustering(S: SimilarityMatrix, T: float) -> list[list[str]]:
    """Naive agglomeration that stops once the best merge falls below ``T``.

    Every step rescans all cluster pairs and recomputes their linkage from the
    raw matrix. Ties go to the pair whose sorted member-id lists compare
    smallest. O(n^4); only for tiny inputs.
    """
    ids = list(S.ids)
    n = len(ids)
    if n > ORACLE_MAX_N:
        raise OracleScopeError(f"brute-force clustering is limited to n <= {ORACLE_MAX_N}, got {n}")
    raw = [[float(v) for v in row] for row in S.values]
    pos = {o: i for i, o in enumerate(ids)}
    clusters = [[o] for o in sorted(ids)]

    while len(clusters) > 1:
        best = None
        for a in range(len(clusters)):
            for b in range(len(clusters)):
                if a == b:
                    continue
                A, B = clusters[a], clusters[b]
                if A > B:
                    continue
                link = min(raw[pos[x]][pos[y]] for x in A for y in B)
                key = (-link, A, B)
                if best is None or key < best[0]:
                    best = (key, a, b)
        (neg_link, _, _), a, b = best  # type: ignore[misc]
        if -neg_link < T:
            break
        merged = sorted(clusters[a] + clusters[b])
        clusters = [c for i, c in enumerate(clusters) if i not in (a, b)] + [merged]
    return sorted(clusters)


def brute_force_detection(
    D: Sequence[str],
    clusters: Iterable[Iterable[str]],
    S: SimilarityMatrix,
    d: float,
) -> set[str]:
    """Literal evaluation of the outlier factor, threshold and strict cut."""
    groups = [list(c) for c in getattr(clusters, "clusters", clusters)]
    ids = list(S.ids)
    raw = [[float(v) for v in row] for row in S.values]
    n = len(D)
    k = len(groups)

    def sim(x: str, y: str) -> float:
        return raw[ids.index(x)][ids.index(y)]

    representative = None
    for g in groups:
        if len(g) > n / 2:
            representative = g

    factors = []
    for obj in D:
        home = [g for g in groups if obj in g][0]
        size_term = 1 - len(home) / n
        if representative is not None:
            location = 1 - max(sim(obj, m) for m in representative)
        else:
            location = 1 - math.fsum(max(sim(obj, m) for m in g) for g in groups if g is not home) / (k - 1)
        factors.append((obj, (size_term + location) / 2))

    exact = [Fraction(f) for _, f in factors]
    mean = sum(exact, Fraction(0)) / n
    var = sum(((x - mean) ** 2 for x in exact), Fraction(0)) / n
    mu = float(mean)
    sigma = math.sqrt(float(var))
    ot = mu + (1 + 2 * d**2) * sigma
    return {obj for obj, f in factors if f > ot}


@dataclass(frozen=True)
class SyntheticSpec:
    """Block-structured similarity matrix recipe.

    Entries inside a block are ``intra_similarity`` and entries across blocks
    ``cross_similarity``, each perturbed by uniform noise in
    ``[-jitter, jitter]`` and clamped to [0, 1]. Randomness comes from
    numpy's PCG64 bit generator seeded with ``seed``.
    """

    block_sizes: tuple[int, ...]
    intra_similarity: float
    cross_similarity: float
    jitter: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        sizes = tuple(int(b) for b in self.block_sizes)
        object.__setattr__(self, "block_sizes", sizes)
        if not sizes or any(b < 1 for b in sizes):
            raise InvalidInputError("block sizes must be positive")
        for name in ("intra_similarity", "cross_similarity"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise InvalidInputError(f"{name} must lie in [0, 1], got {v}")
        if self.jitter < 0:
            raise InvalidInputError("jitter must be non-negative")
        if not self.intra_similarity > self.cross_similarity:
            raise InvalidInputError("intra_similarity must exceed cross_similarity")
        if not self.intra_similarity - self.jitter > self.cross_similarity + self.jitter:
            raise InvalidInputError("jitter too large: intra and cross bands overlap")

    @property
    def n(self) -> int:
        return sum(self.block_sizes)

    def ids(self) -> tuple[str, ...]:
        width = len(str(self.n - 1))
        return tuple(f"o{i:0{width}d}" for i in range(self.n))

    def labels(self) -> list[int]:
        return [b for b, size in enumerate(self.block_sizes) for _ in range(size)]


def generate_synthetic_matrix(spec: SyntheticSpec) -> SimilarityMatrix:
    """Deterministic planted-block matrix; ids sort in block order."""
    n = spec.n
    labels = np.asarray(spec.labels())
    same = labels[:, None] == labels[None, :]
    base = np.where(same, spec.intra_similarity, spec.cross_similarity)
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    iu = np.triu_indices(n, k=1)
    noise = rng.uniform(-spec.jitter, spec.jitter, size=iu[0].size) if spec.jitter else 0.0
    values = np.eye(n)
    values[iu] = np.clip(base[iu] + noise, 0.0, 1.0)
    values.T[iu] = values[iu]
    return SimilarityMatrix(spec.ids(), values)


def planted_outliers(spec: SyntheticSpec) -> set[str]:
    """Ids of the smallest block (first one on ties)."""
    smallest = min(range(len(spec.block_sizes)), key=lambda b: spec.block_sizes[b])
    ids = spec.ids()
    return {ids[i] for i, b in enumerate(spec.labels()) if b == smallest}

