"""Agglomerative clustering with minimum-similarity linkage and an automatic cut.

Two clusters are as similar as their least similar cross pair, so every
dendrogram node stores the smallest similarity between any two leaves below
it. The dendrogram is cut at ``T = mu - sigma / 2``, where ``mu`` and ``sigma``
are the mean and population standard deviation of the off-diagonal
similarities, i.e. the midpoint of ``[mu - sigma, mu]``.

Ties are broken on canonical ids: objects are sorted by id, every cluster is
keyed by its smallest member, and among equally similar pairs the pair with
the lexicographically smallest key pair is merged first.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .errors import DegenerateInputError, InvalidInputError
from .matrix import SimilarityMatrix

logger = logging.getLogger(__name__)


class DendrogramNode:
    """A node of the merge tree.

    Leaves carry an ``object_id`` and value 1. Internal nodes carry the two
    merged children and the similarity at which they merged.
    """

    __slots__ = ("node_id", "value", "left", "right", "object_id", "size")

    def __init__(
        self,
        node_id: int,
        value: float,
        left: DendrogramNode | None = None,
        right: DendrogramNode | None = None,
        object_id: str | None = None,
    ) -> None:
        if (left is None) != (right is None):
            raise InvalidInputError("internal nodes need exactly two children")
        if left is None and object_id is None:
            raise InvalidInputError("leaf nodes need an object id")
        self.node_id = node_id
        self.value = float(value)
        self.left = left
        self.right = right
        self.object_id = object_id
        self.size = 1 if left is None else left.size + right.size  # type: ignore[union-attr]

    @classmethod
    def leaf(cls, node_id: int, object_id: str) -> DendrogramNode:
        return cls(node_id, 1.0, object_id=object_id)

    @property
    def is_leaf(self) -> bool:
        return self.left is None

    @property
    def children(self) -> tuple[DendrogramNode, DendrogramNode] | tuple[()]:
        if self.left is None:
            return ()
        return (self.left, self.right)  # type: ignore[return-value]

    def leaves(self) -> list[str]:
        """Object ids below this node, left to right."""
        out: list[str] = []
        stack = [self]
        while stack:
            node = stack.pop()
            if node.left is None:
                out.append(node.object_id)  # type: ignore[arg-type]
            else:
                stack.append(node.right)  # type: ignore[arg-type]
                stack.append(node.left)
        return out

    def walk(self) -> Iterator[DendrogramNode]:
        """Pre-order traversal; iterative so deep chains do not hit the recursion limit."""
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            if node.left is not None:
                stack.append(node.right)  # type: ignore[arg-type]
                stack.append(node.left)

    def __repr__(self) -> str:
        if self.is_leaf:
            return f"DendrogramNode(leaf {self.object_id!r})"
        return f"DendrogramNode(id={self.node_id}, value={self.value:.6g}, size={self.size})"


@dataclass(frozen=True)
class CutThreshold:
    """Cut level derived from the off-diagonal similarity statistics."""

    T: float
    mu: float
    sigma: float

    @classmethod
    def from_moments(cls, mu: float, sigma: float) -> CutThreshold:
        return cls(T=(2.0 * mu - sigma) / 2.0, mu=mu, sigma=sigma)


@dataclass(frozen=True)
class Clustering:
    """A flat partition of ``source_ids`` obtained by cutting at ``threshold``.

    ``stats`` is set when the threshold came from the matrix statistics and is
    ``None`` when the caller supplied the cut level directly. Clusters are
    ordered by decreasing size, then by smallest member id.
    """

    clusters: tuple[frozenset[str], ...]
    threshold: float
    source_ids: tuple[str, ...]
    stats: CutThreshold | None = None

    def __post_init__(self) -> None:
        clusters = tuple(frozenset(c) for c in self.clusters)
        if any(not c for c in clusters):
            raise InvalidInputError("clusters must be non-empty")
        seen: set[str] = set()
        for c in clusters:
            if seen & c:
                raise InvalidInputError(f"clusters overlap on {sorted(seen & c)}")
            seen |= c
        source = tuple(self.source_ids)
        if seen != set(source) or len(source) != len(seen):
            missing = sorted(set(source) - seen)
            extra = sorted(seen - set(source))
            raise InvalidInputError(
                f"clusters do not partition the ids (missing={missing}, extra={extra})"
            )
        ordered = tuple(sorted(clusters, key=lambda c: (-len(c), min(c))))
        object.__setattr__(self, "clusters", ordered)
        object.__setattr__(self, "source_ids", source)

    @property
    def k(self) -> int:
        return len(self.clusters)

    @property
    def sizes(self) -> list[int]:
        return [len(c) for c in self.clusters]

    def labels(self) -> dict[str, int]:
        """Map each object id to the position of its cluster."""
        return {o: i for i, c in enumerate(self.clusters) for o in c}

    def partition(self) -> frozenset[frozenset[str]]:
        return frozenset(self.clusters)


def cluster_similarity(Ci: Sequence[str], Cj: Sequence[str], S: SimilarityMatrix) -> float:
    """Minimum similarity over all cross pairs of the two clusters."""
    if not Ci or not Cj:
        raise InvalidInputError("clusters must be non-empty")
    if set(Ci) & set(Cj):
        raise InvalidInputError("clusters must be disjoint")
    a = S.indices(Ci)
    b = S.indices(Cj)
    return float(S.values[np.ix_(a, b)].min())


def compute_threshold(S: SimilarityMatrix) -> CutThreshold:
    """Midpoint of ``[mu - sigma, mu]`` over the strict upper triangle of ``S``."""
    if S.n < 2:
        raise DegenerateInputError("a single object cannot be clustered (n < 2)")
    return _threshold_from_values(S.values)


def _threshold_from_values(values: np.ndarray) -> CutThreshold:
    upper = values[np.triu_indices(values.shape[0], k=1)]
    if np.all(upper == upper[0]):
        # rounding in the mean must not open a gap between T and the common value
        return CutThreshold.from_moments(float(upper[0]), 0.0)
    mu = float(upper.mean())
    sigma = float(np.sqrt(np.mean((upper - mu) ** 2)))
    return CutThreshold.from_moments(mu, sigma)


def _agglomerate(values: np.ndarray) -> list[tuple[int, int, float]]:
    """Greedy min-linkage merging on a canonically ordered matrix.

    Returns ``(keep, absorbed, similarity)`` triples with ``keep < absorbed``;
    a cluster is addressed by its smallest member index. Each row caches its
    best partner among higher-indexed active clusters. Merged similarities
    can only drop, so only rows whose cached partner took part in the merge
    need a rescan, which keeps the total work quadratic in practice.
    """
    n = values.shape[0]
    sim = np.array(values, dtype=np.float64, copy=True)
    np.fill_diagonal(sim, -np.inf)

    upper = np.where(np.triu(np.ones((n, n), dtype=bool), k=1), sim, -np.inf)
    best_col = upper.argmax(axis=1)
    best_val = upper[np.arange(n), best_col]
    del upper

    def rescan(i: int) -> None:
        row = sim[i, i + 1 :]
        if row.size:
            j = int(row.argmax())
            best_col[i] = i + 1 + j
            best_val[i] = row[j]
        else:
            best_val[i] = -np.inf

    merges: list[tuple[int, int, float]] = []
    for _ in range(n - 1):
        p = int(best_val.argmax())
        q = int(best_col[p])
        merges.append((p, q, float(best_val[p])))

        merged = np.minimum(sim[p], sim[q])
        sim[p] = merged
        sim[:, p] = merged
        sim[q] = -np.inf
        sim[:, q] = -np.inf
        best_val[q] = -np.inf
        best_col[q] = q

        for i in np.flatnonzero((best_col == p) | (best_col == q)).tolist():
            if i != q:
                rescan(i)
    return merges


def _canonical(S: SimilarityMatrix) -> tuple[list[str], np.ndarray]:
    order = sorted(range(S.n), key=lambda i: S.ids[i])
    ids = [S.ids[i] for i in order]
    if order == list(range(S.n)):
        return ids, S.values
    idx = np.asarray(order, dtype=np.intp)
    return ids, S.values[np.ix_(idx, idx)]


def _tree_from_merges(ids: Sequence[str], merges: list[tuple[int, int, float]]) -> DendrogramNode:
    n = len(ids)
    nodes: list[DendrogramNode] = [DendrogramNode.leaf(i, o) for i, o in enumerate(ids)]
    next_id = n
    for keep, absorbed, value in merges:
        nodes[keep] = DendrogramNode(next_id, value, nodes[keep], nodes[absorbed])
        next_id += 1
    return nodes[0]


def build_dendrogram(S: SimilarityMatrix) -> DendrogramNode:
    """Run the full agglomeration and return the root of the merge tree.

    Leaf node ids are positions in sorted-id order; internal nodes are
    numbered ``n, n+1, ...`` in merge order.
    """
    if S.n < 1:
        raise DegenerateInputError("cannot build a dendrogram over zero objects")
    ids, values = _canonical(S)
    merges = _agglomerate(values)
    logger.debug("built dendrogram over %d objects", S.n)
    return _tree_from_merges(ids, merges)


def cut_dendrogram(root: DendrogramNode, T: float) -> Clustering:
    """Flat clusters from the maximal nodes whose value is at least ``T``.

    Leaves always qualify, so every object lands in exactly one cluster.
    """
    clusters: list[frozenset[str]] = []
    stack = [root]
    while stack:
        node = stack.pop()
        if node.is_leaf or node.value >= T:
            clusters.append(frozenset(node.leaves()))
        else:
            stack.extend((node.right, node.left))  # type: ignore[arg-type]
    source = sorted(o for c in clusters for o in c)
    return Clustering(tuple(clusters), float(T), tuple(source))


def cluster(S: SimilarityMatrix, threshold_override: float | None = None) -> Clustering:
    """Build the dendrogram and cut it at the automatic (or overridden) level."""
    return cluster_with_dendrogram(S, threshold_override)[0]


def cluster_with_dendrogram(
    S: SimilarityMatrix, threshold_override: float | None = None
) -> tuple[Clustering, DendrogramNode]:
    """Like :func:`cluster`, also returning the dendrogram root."""
    if S.n < 2:
        raise DegenerateInputError("clustering needs at least two objects")
    stats = compute_threshold(S)
    root = build_dendrogram(S)
    if threshold_override is not None:
        if not (0.0 <= threshold_override <= 1.0):
            raise InvalidInputError(f"threshold override {threshold_override} not in [0, 1]")
        T = float(threshold_override)
        logger.info("cutting at override T=%.6g (automatic T would be %.6g)", T, stats.T)
    else:
        T = stats.T
    result = cut_dendrogram(root, T)
    logger.info(
        "cut at T=%.6g (mu=%.6g, sigma=%.6g): %d clusters, sizes %s",
        T, stats.mu, stats.sigma, result.k, result.sizes,
    )
    return Clustering(result.clusters, T, S.ids, stats), root


def cluster_indices(values: np.ndarray) -> list[list[int]]:
    """Cluster a bare square similarity array; clusters are lists of row indices.

    Rows are taken to be in canonical order already. Used for grouping pooled
    events, where there are no external ids to sort.
    """
    n = values.shape[0]
    if n == 0:
        return []
    if n == 1:
        return [[0]]
    T = _threshold_from_values(values).T
    merges = _agglomerate(values)
    # merge values never increase, so the cut keeps exactly the leading merges
    members: dict[int, list[int]] = {i: [i] for i in range(n)}
    for keep, absorbed, value in merges:
        if value < T:
            break
        members[keep].extend(members.pop(absorbed))
    return [sorted(m) for _, m in sorted(members.items())]


def dendrogram_to_dict(root: DendrogramNode) -> dict:
    """JSON-ready nested form: ``{node_id, value, children}`` or ``{node_id, value, object_id}``."""
    built: dict[int, dict] = {}
    order = list(root.walk())
    for node in reversed(order):
        if node.is_leaf:
            built[id(node)] = {"node_id": node.node_id, "value": node.value, "object_id": node.object_id}
        else:
            built[id(node)] = {
                "node_id": node.node_id,
                "value": node.value,
                "children": [built.pop(id(node.left)), built.pop(id(node.right))],
            }
    return built[id(root)]


def dendrogram_from_dict(data: dict) -> DendrogramNode:
    """Inverse of :func:`dendrogram_to_dict`."""
    # iterative post-order: (payload, visited)
    stack: list[tuple[dict, bool]] = [(data, False)]
    done: list[DendrogramNode] = []
    while stack:
        item, visited = stack.pop()
        try:
            if "object_id" in item:
                done.append(DendrogramNode(int(item["node_id"]), float(item.get("value", 1.0)),
                                           object_id=str(item["object_id"])))
            elif visited:
                right = done.pop()
                left = done.pop()
                done.append(DendrogramNode(int(item["node_id"]), float(item["value"]), left, right))
            else:
                children = item["children"]
                if len(children) != 2:
                    raise InvalidInputError("dendrogram nodes must have two children")
                stack.append((item, True))
                stack.append((children[1], False))
                stack.append((children[0], False))
        except (KeyError, TypeError) as exc:
            raise InvalidInputError(f"malformed dendrogram node: {exc}") from None
    return done[0]
