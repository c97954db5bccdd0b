"""Readers and writers for matrices, events, raw series, clusterings and reports."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from collections import defaultdict
from pathlib import Path
from typing import Any, TextIO

import numpy as np

from .clustering import Clustering, CutThreshold
from .detection import DetectionReport
from .errors import FormatError, InvalidInputError, InvariantError
from .matrix import SimilarityMatrix
from .similarity import Event, EventSeries

logger = logging.getLogger(__name__)

MATRIX_TOLERANCE = 1e-9
REPORT_DECIMALS = 6


def _open_text(path: str | Path | TextIO, mode: str = "r"):
    if hasattr(path, "read") or hasattr(path, "write"):
        return _Borrowed(path)  # type: ignore[arg-type]
    return open(path, mode, newline="" if "r" in mode else None, encoding="utf-8")


class _Borrowed:
    """Context manager that leaves a caller-owned stream open."""

    def __init__(self, stream: TextIO) -> None:
        self.stream = stream

    def __enter__(self) -> TextIO:
        return self.stream

    def __exit__(self, *exc: object) -> None:
        return None


# -- similarity matrices -----------------------------------------------------

def load_similarity_matrix(path: str | Path | TextIO) -> SimilarityMatrix:
    """Read a labelled CSV matrix and repair sub-tolerance defects.

    The first row holds a corner cell followed by the column ids; every other
    row starts with its id. Asymmetry up to 1e-9 is averaged away, a diagonal
    within 1e-9 of one is set to one and entries within 1e-9 outside [0, 1]
    are clamped. Each repair is logged at warning level. Larger defects raise
    :class:`InvariantError` naming the cell.
    """
    name = str(getattr(path, "name", path))
    with _open_text(path) as fh:
        rows = [(i, r) for i, r in enumerate(csv.reader(fh), start=1) if r and any(c.strip() for c in r)]
    if not rows:
        raise FormatError("empty matrix file", path=name)
    header_line, header = rows[0]
    ids = [c.strip() for c in header[1:]]
    n = len(ids)
    if n == 0:
        raise FormatError("header has no object ids", path=name, line=header_line)
    if len(set(ids)) != n:
        raise FormatError("duplicate ids in header", path=name, line=header_line)
    body = rows[1:]
    if len(body) != n:
        raise FormatError(f"expected {n} data rows, found {len(body)}", path=name)

    values = np.empty((n, n))
    lines = []
    for r, (lineno, row) in enumerate(body):
        lines.append(lineno)
        if len(row) != n + 1:
            raise FormatError(f"expected {n + 1} cells, found {len(row)}", path=name, line=lineno)
        if row[0].strip() != ids[r]:
            raise FormatError(
                f"row id {row[0].strip()!r} does not match column id {ids[r]!r}", path=name, line=lineno
            )
        for c, cell in enumerate(row[1:]):
            try:
                values[r, c] = float(cell)
            except ValueError:
                raise FormatError(
                    f"cell ({ids[r]}, {ids[c]}) is not a number: {cell!r}", path=name, line=lineno
                ) from None

    def cell_error(msg: str, r: int, c: int) -> InvariantError:
        return InvariantError(f"{name}:{lines[r]}: cell ({ids[r]}, {ids[c]}) {msg}")

    bad = ~np.isfinite(values)
    if bad.any():
        r, c = np.argwhere(bad)[0]
        raise cell_error(f"is not finite: {values[r, c]!r}", r, c)
    far = (values < -MATRIX_TOLERANCE) | (values > 1.0 + MATRIX_TOLERANCE)
    if far.any():
        r, c = np.argwhere(far)[0]
        raise cell_error(f"value {values[r, c]!r} outside [0, 1]", r, c)
    clamp = (values < 0.0) | (values > 1.0)
    if clamp.any():
        logger.warning("%s: clamped %d entries into [0, 1]", name, int(clamp.sum()))
        np.clip(values, 0.0, 1.0, out=values)

    diag = np.diagonal(values)
    off = np.abs(diag - 1.0) > MATRIX_TOLERANCE
    if off.any():
        r = int(np.flatnonzero(off)[0])
        raise cell_error(f"diagonal value {diag[r]!r} is not 1", r, r)
    if np.any(diag != 1.0):
        logger.warning("%s: reset %d near-unit diagonal entries to 1", name, int((diag != 1.0).sum()))
        np.fill_diagonal(values, 1.0)

    gap = np.abs(values - values.T)
    if np.any(gap > MATRIX_TOLERANCE):
        r, c = np.argwhere(gap > MATRIX_TOLERANCE)[0]
        raise cell_error(f"differs from its mirror by {gap[r, c]:.3g}", r, c)
    if np.any(gap > 0):
        logger.warning("%s: symmetrised %d near-symmetric pairs", name, int((gap > 0).sum()) // 2)
        upper = np.triu_indices(n, k=1)
        avg = (values[upper] + values.T[upper]) / 2.0
        values[upper] = avg
        values.T[upper] = avg
    return SimilarityMatrix(tuple(ids), values)


def format_matrix_csv(S: SimilarityMatrix) -> str:
    """CSV text with 9 significant digits per cell."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["id", *S.ids])
    for oid, row in zip(S.ids, S.values):
        writer.writerow([oid, *(format(float(v), ".9g") for v in row)])
    return buf.getvalue()


def write_similarity_matrix(S: SimilarityMatrix, path: str | Path | TextIO) -> None:
    with _open_text(path, "w") as fh:
        fh.write(format_matrix_csv(S))


# -- events --------------------------------------------------------------------

def _reject_constant(token: str) -> float:
    raise ValueError(f"non-finite number {token}")


def load_events(path: str | Path | TextIO) -> list[EventSeries]:
    """Read JSON-lines events and group them into series.

    Each line is ``{"series_id", "event_id", "start", "end", "features"}``.
    A line carrying only ``series_id`` (and optionally ``timestamps``)
    declares a series with no events. Series keep first-appearance order;
    events within a series are sorted by start time.
    """
    name = str(getattr(path, "name", path))
    grouped: dict[str, list[Event]] = defaultdict(list)
    meta: dict[str, int | None] = {}
    order: list[str] = []
    dim: int | None = None
    seen_events: set[tuple[str, str]] = set()

    with _open_text(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line, parse_constant=_reject_constant)
            except ValueError as exc:
                raise FormatError(f"invalid JSON: {exc}", path=name, line=lineno) from None
            if not isinstance(rec, dict) or "series_id" not in rec:
                raise FormatError("each line must be an object with a series_id", path=name, line=lineno)
            sid = str(rec["series_id"])
            if sid not in meta:
                order.append(sid)
                meta[sid] = None
            if "timestamps" in rec:
                meta[sid] = int(rec["timestamps"])
            if set(rec) <= {"series_id", "timestamps"}:
                continue
            missing = {"event_id", "start", "end", "features"} - set(rec)
            if missing:
                raise FormatError(f"missing fields {sorted(missing)}", path=name, line=lineno)
            feats = rec["features"]
            if not isinstance(feats, list) or not all(
                isinstance(x, (int, float)) and not isinstance(x, bool) for x in feats
            ):
                raise FormatError("features must be a list of numbers", path=name, line=lineno)
            if dim is None:
                dim = len(feats)
            elif len(feats) != dim:
                raise FormatError(
                    f"feature dimension {len(feats)} differs from earlier events ({dim})",
                    path=name, line=lineno,
                )
            key = (sid, str(rec["event_id"]))
            if key in seen_events:
                raise FormatError(f"duplicate event id {key[1]!r} in series {sid!r}", path=name, line=lineno)
            seen_events.add(key)
            try:
                grouped[sid].append(Event(key[1], sid, rec["start"], rec["end"], tuple(feats)))
            except (InvalidInputError, TypeError, ValueError) as exc:
                raise FormatError(str(exc), path=name, line=lineno) from None

    return [EventSeries(sid, tuple(grouped[sid]), meta[sid]) for sid in order]


def dump_events(dataset: list[EventSeries], path: str | Path | TextIO) -> None:
    with _open_text(path, "w") as fh:
        for s in dataset:
            if not s.events:
                fh.write(json.dumps({"series_id": s.series_id}) + "\n")
            for e in s.events:
                rec = {
                    "series_id": s.series_id,
                    "event_id": e.event_id,
                    "start": e.initial_timestamp,
                    "end": e.final_timestamp,
                    "features": list(e.features),
                }
                fh.write(json.dumps(rec) + "\n")


def load_raw_series(path: str | Path | TextIO) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    """Long-format CSV ``series_id,t,value`` into per-series (t, value) arrays sorted by t."""
    name = str(getattr(path, "name", path))
    buckets: dict[str, list[tuple[float, float]]] = defaultdict(list)
    with _open_text(path) as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["series_id", "t", "value"]:
            raise FormatError("header must be 'series_id,t,value'", path=name, line=1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise FormatError(f"expected 3 cells, found {len(row)}", path=name, line=lineno)
            try:
                t, v = float(row[1]), float(row[2])
            except ValueError:
                raise FormatError("t and value must be numbers", path=name, line=lineno) from None
            if not (math.isfinite(t) and math.isfinite(v)):
                raise FormatError("t and value must be finite", path=name, line=lineno)
            buckets[row[0].strip()].append((t, v))
    out = {}
    for sid, pts in buckets.items():
        pts.sort()
        arr = np.asarray(pts)
        out[sid] = (arr[:, 0], arr[:, 1])
    return out


# -- clusterings and dendrograms ----------------------------------------------

def clustering_to_dict(clustering: Clustering) -> dict[str, Any]:
    out: dict[str, Any] = {
        "threshold": clustering.threshold,
        "source_ids": list(clustering.source_ids),
        "clusters": [
            {"id": f"C{i + 1}", "members": sorted(c)} for i, c in enumerate(clustering.clusters)
        ],
    }
    if clustering.stats is not None:
        out["mu"] = clustering.stats.mu
        out["sigma"] = clustering.stats.sigma
    return out


def clustering_from_dict(data: dict[str, Any]) -> Clustering:
    try:
        clusters = tuple(frozenset(str(m) for m in c["members"]) for c in data["clusters"])
        source = data.get("source_ids")
        if source is None:
            source = sorted(o for c in clusters for o in c)
        stats = None
        if "mu" in data and "sigma" in data:
            stats = CutThreshold.from_moments(float(data["mu"]), float(data["sigma"]))
        return Clustering(clusters, float(data.get("threshold", float("nan"))), tuple(map(str, source)), stats)
    except (KeyError, TypeError) as exc:
        raise FormatError(f"malformed clusters document: missing or bad {exc}") from None
    except InvalidInputError as exc:
        raise FormatError(f"invalid clusters document: {exc}") from None


def load_clustering(path: str | Path) -> Clustering:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except ValueError as exc:
        raise FormatError(f"invalid JSON: {exc}", path=str(path)) from None
    return clustering_from_dict(data)


# -- reports -------------------------------------------------------------------

def _num(x: float) -> float:
    v = round(float(x), REPORT_DECIMALS)
    return 0.0 if v == 0 else v


def report_to_dict(report: DetectionReport) -> dict[str, Any]:
    return {
        "config": {"dispersion": report.config.dispersion},
        "clusters": [
            {
                "id": c.cluster_id,
                "size": c.size,
                "mean_of": _num(c.mean_of),
                "std_of": _num(c.std_of),
                "outlier_count": c.outlier_count,
            }
            for c in report.cluster_summary
        ],
        "mu_of": _num(report.mu_of),
        "sigma_of": _num(report.sigma_of),
        "ot": _num(report.ot),
        "scores": [
            {
                "object_id": s.object_id,
                "of_neighbors": _num(s.of_neighbors),
                "of_location": _num(s.of_location),
                "of": _num(s.of),
                "is_outlier": s.object_id in report.outliers,
            }
            for s in report.scores
        ],
        "outliers": sorted(report.outliers),
    }


def dumps_canonical(data: Any) -> str:
    """Deterministic JSON: sorted keys, shortest round-trip floats, trailing newline."""
    return json.dumps(data, sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(data: Any, path: str | Path) -> None:
    Path(path).write_text(dumps_canonical(data), encoding="utf-8")
