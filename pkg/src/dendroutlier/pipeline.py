"""End-to-end orchestration: events or matrix in, detection report out."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import numpy as np

from .clustering import cluster_with_dendrogram, dendrogram_to_dict
from .detection import DetectionConfig, DetectionReport, detect_outliers
from .detector import detect_all
from .errors import DegenerateInputError, InvalidInputError
from .fileio import (
    clustering_to_dict,
    load_events,
    load_raw_series,
    load_similarity_matrix,
    report_to_dict,
    write_json,
    write_similarity_matrix,
)
from .matrix import SimilarityMatrix
from .similarity import build_similarity_matrix

logger = logging.getLogger(__name__)

InputKind = Literal["events-jsonl", "matrix-csv", "raw-series-csv"]


@dataclass(frozen=True)
class PipelineConfig:
    input_kind: InputKind
    input_path: Path
    dispersion: float
    threshold_override: float | None = None
    report_out: Path | None = None
    dendrogram_out: Path | None = None
    clusters_out: Path | None = None
    matrix_out: Path | None = None
    log_level: str = "WARNING"
    jobs: int | None = None
    detector_k: float = 2.0

    def __post_init__(self) -> None:
        if self.input_kind not in ("events-jsonl", "matrix-csv", "raw-series-csv"):
            raise InvalidInputError(f"unknown input kind {self.input_kind!r}")
        if not (0.0 <= self.dispersion <= 1.0):
            raise InvalidInputError(f"dispersion must lie in [0, 1], got {self.dispersion}")
        if self.threshold_override is not None and not (0.0 <= self.threshold_override <= 1.0):
            raise InvalidInputError(f"threshold override must lie in [0, 1], got {self.threshold_override}")


def load_matrix_input(config: PipelineConfig) -> SimilarityMatrix:
    if config.input_kind == "matrix-csv":
        return load_similarity_matrix(config.input_path)
    if config.input_kind == "events-jsonl":
        dataset = load_events(config.input_path)
    else:
        logger.warning("raw-series input uses the experimental threshold-crossing detector")
        dataset = detect_all(load_raw_series(config.input_path), k=config.detector_k)
    if len(dataset) < 2:
        raise DegenerateInputError(f"need at least two series, found {len(dataset)}")
    return build_similarity_matrix(dataset, jobs=config.jobs)


def check_analysable(S: SimilarityMatrix) -> None:
    """Reject inputs on which outlier detection cannot say anything."""
    if S.n < 2:
        raise DegenerateInputError(f"need at least two objects, found {S.n}")
    upper = S.upper_triangle()
    if np.all(upper == upper[0]):
        raise DegenerateInputError(
            f"all {S.n} objects are equally similar (s={upper[0]:.6g}); "
            "the matrix is homogeneous and has no outlier structure"
        )


def run_pipeline(config: PipelineConfig) -> DetectionReport:
    """Similarity (if needed), clustering and detection; writes the requested files."""
    S = load_matrix_input(config)
    if config.matrix_out is not None:
        write_similarity_matrix(S, config.matrix_out)
    check_analysable(S)

    clustering, root = cluster_with_dendrogram(S, threshold_override=config.threshold_override)
    if config.dendrogram_out is not None:
        write_json(dendrogram_to_dict(root), config.dendrogram_out)
    if config.clusters_out is not None:
        write_json(clustering_to_dict(clustering), config.clusters_out)

    report = detect_outliers(S.ids, clustering, S, DetectionConfig(config.dispersion))
    if config.report_out is not None:
        write_json(report_to_dict(report), config.report_out)
    return report


def format_summary(report: DetectionReport) -> str:
    """Plain-text table: one row per cluster, then the totals and threshold."""
    lines = [
        f"Inherent dispersion = {report.config.dispersion:g}",
        f"{'Cluster':<8} {'Objects':>8} {'Outliers':>9} {'mean OF':>9} {'std OF':>8}",
    ]
    for c in report.cluster_summary:
        lines.append(
            f"{c.cluster_id:<8} {c.size:>8d} {c.outlier_count:>9d} {c.mean_of:>9.3f} {c.std_of:>8.3f}"
        )
    lines.append(
        f"{'TOTAL':<8} {report.n:>8d} {len(report.outliers):>9d} {report.mu_of:>9.3f} {report.sigma_of:>8.3f}"
    )
    lines.append(f"OF threshold = {report.ot:.3f}")
    ids = sorted(report.outliers)
    lines.append("Outliers: " + (", ".join(ids) if ids else "(none)"))
    return "\n".join(lines)
