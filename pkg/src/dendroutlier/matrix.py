"""The pairwise similarity matrix shared by every stage of the pipeline."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidInputError, InvariantError


@dataclass(frozen=True, eq=False)
class SimilarityMatrix:
    """Symmetric n x n matrix of similarities in [0, 1] with a unit diagonal.

    The invariants are checked exactly on construction; tolerant repair of
    slightly-off files happens in the loader, not here. ``values`` is stored
    as a read-only float64 array.
    """

    ids: tuple[str, ...]
    values: np.ndarray
    _index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        ids = tuple(str(i) for i in self.ids)
        values = np.array(self.values, dtype=np.float64, copy=True)
        n = len(ids)
        if values.ndim != 2 or values.shape != (n, n):
            raise InvalidInputError(
                f"matrix shape {values.shape} does not match {n} ids"
            )
        if len(set(ids)) != n:
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise InvalidInputError(f"duplicate object ids: {dupes}")
        _check_invariants(ids, values)
        values.setflags(write=False)
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "_index", {k: i for i, k in enumerate(ids)})

    @property
    def n(self) -> int:
        return len(self.ids)

    def index(self, object_id: str) -> int:
        try:
            return self._index[object_id]
        except KeyError:
            raise InvalidInputError(f"unknown object id {object_id!r}") from None

    def indices(self, object_ids: Iterable[str]) -> np.ndarray:
        return np.fromiter((self.index(o) for o in object_ids), dtype=np.intp)

    def __getitem__(self, key: tuple[str, str]) -> float:
        a, b = key
        return float(self.values[self.index(a), self.index(b)])

    def upper_triangle(self) -> np.ndarray:
        """Strict upper-triangle entries in row-major order."""
        return self.values[np.triu_indices(self.n, k=1)]

    def reordered(self, ids: Sequence[str]) -> SimilarityMatrix:
        idx = self.indices(ids)
        if len(idx) != self.n or len(set(idx.tolist())) != self.n:
            raise InvalidInputError("reordering must be a permutation of the ids")
        return SimilarityMatrix(tuple(ids), self.values[np.ix_(idx, idx)])

    def __repr__(self) -> str:
        return f"SimilarityMatrix(n={self.n})"


def _check_invariants(ids: tuple[str, ...], values: np.ndarray) -> None:
    if not np.all(np.isfinite(values)):
        r, c = np.argwhere(~np.isfinite(values))[0]
        raise InvariantError(f"non-finite similarity at ({ids[r]}, {ids[c]})")
    bad = (values < 0.0) | (values > 1.0)
    if bad.any():
        r, c = np.argwhere(bad)[0]
        raise InvariantError(
            f"similarity {values[r, c]!r} at ({ids[r]}, {ids[c]}) outside [0, 1]"
        )
    diag = np.diagonal(values)
    if np.any(diag != 1.0):
        r = int(np.flatnonzero(diag != 1.0)[0])
        raise InvariantError(f"diagonal entry for {ids[r]} is {diag[r]!r}, expected 1")
    asym = values != values.T
    if asym.any():
        r, c = np.argwhere(asym)[0]
        raise InvariantError(
            f"asymmetric pair ({ids[r]}, {ids[c]}): {values[r, c]!r} vs {values[c, r]!r}"
        )
