"""Command-line interface.

Exit codes: 0 success, 2 usage or format error, 3 data-invariant violation
(including degenerate inputs). ``DENDRO_LOG`` sets the log level when
``--log-level`` is not given.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path
from typing import Sequence

from .baselines import SyntheticSpec, generate_synthetic_matrix, torgo_size_threshold
from .clustering import cluster_with_dendrogram, dendrogram_to_dict
from .detection import DetectionConfig, detect_outliers
from .detector import detect_all
from .errors import DegenerateInputError, FormatError, InvalidInputError, InvariantError
from .fileio import (
    clustering_to_dict,
    format_matrix_csv,
    load_clustering,
    load_events,
    load_raw_series,
    load_similarity_matrix,
    report_to_dict,
    write_json,
    write_similarity_matrix,
)
from .pipeline import PipelineConfig, check_analysable, format_summary, run_pipeline
from .similarity import build_similarity_matrix

logger = logging.getLogger("dendroutlier")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3


def _unit_interval(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (0.0 <= v <= 1.0):
        raise argparse.ArgumentTypeError(f"{v} is not in [0, 1]")
    return v


def _blocks(text: str) -> tuple[int, ...]:
    try:
        sizes = tuple(int(b) for b in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not sizes or any(b < 1 for b in sizes):
        raise argparse.ArgumentTypeError("block sizes must be positive")
    return sizes


def _jobs(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("--jobs must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dendro",
        description="Cluster-analysis outlier detection over similarity matrices.",
    )
    parser.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"], default=None)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("similarity", help="events -> similarity matrix CSV")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--events", type=Path, help="JSON-lines event annotations")
    src.add_argument("--raw-series", type=Path, help="long CSV series_id,t,value (experimental detector)")
    p.add_argument("--detector-k", type=float, default=2.0, help="experimental detector: std multiplier")
    p.add_argument("--out", type=Path, help="matrix CSV (default: stdout)")
    p.add_argument("--jobs", type=_jobs, default=None, help="worker processes (default: all cores)")

    p = sub.add_parser("cluster", help="matrix -> dendrogram and flat clusters")
    p.add_argument("--matrix", type=Path, required=True)
    p.add_argument("--threshold-override", type=_unit_interval, default=None)
    p.add_argument("--dendrogram-out", type=Path)
    p.add_argument("--clusters-out", type=Path)

    p = sub.add_parser("detect", help="matrix (+ clusters) -> outlier report")
    p.add_argument("--matrix", type=Path, required=True)
    p.add_argument("--clusters", type=Path, help="clusters JSON; recomputed when absent")
    p.add_argument("--dispersion", type=_unit_interval, required=True)
    p.add_argument("--threshold-override", type=_unit_interval, default=None)
    p.add_argument("--report-out", type=Path)

    p = sub.add_parser("pipeline", help="events or matrix -> outlier report")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--events", type=Path)
    src.add_argument("--matrix", type=Path)
    src.add_argument("--raw-series", type=Path, help="experimental threshold-crossing detector")
    p.add_argument("--dispersion", type=_unit_interval, required=True)
    p.add_argument("--threshold-override", type=_unit_interval, default=None)
    p.add_argument("--report-out", type=Path)
    p.add_argument("--dendrogram-out", type=Path)
    p.add_argument("--clusters-out", type=Path)
    p.add_argument("--matrix-out", type=Path)
    p.add_argument("--detector-k", type=float, default=2.0)
    p.add_argument("--jobs", type=_jobs, default=None)

    p = sub.add_parser("baseline", help="size-threshold baseline over a clustering")
    p.add_argument("--clusters", type=Path, required=True)
    p.add_argument("--size-threshold", type=int, required=True)

    p = sub.add_parser("synth", help="planted-block similarity matrix")
    p.add_argument("--blocks", type=_blocks, required=True, help="e.g. 62,34,5")
    p.add_argument("--intra", type=_unit_interval, default=0.9)
    p.add_argument("--cross", type=_unit_interval, default=0.1)
    p.add_argument("--jitter", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, help="matrix CSV (default: stdout)")
    return parser


def _configure_logging(flag: str | None) -> None:
    level = (flag or os.environ.get("DENDRO_LOG") or "WARNING").upper()
    if not isinstance(logging.getLevelName(level), int):
        level = "WARNING"
    logging.basicConfig(format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    logging.getLogger().setLevel(level)


def _cmd_similarity(args: argparse.Namespace) -> int:
    if args.events is not None:
        dataset = load_events(args.events)
    else:
        logger.warning("using the experimental threshold-crossing detector")
        dataset = detect_all(load_raw_series(args.raw_series), k=args.detector_k)
    S = build_similarity_matrix(dataset, jobs=args.jobs)
    if args.out is None:
        sys.stdout.write(format_matrix_csv(S))
    else:
        write_similarity_matrix(S, args.out)
    return EXIT_OK


def _cmd_cluster(args: argparse.Namespace) -> int:
    S = load_similarity_matrix(args.matrix)
    clustering, root = cluster_with_dendrogram(S, args.threshold_override)
    if args.dendrogram_out:
        write_json(dendrogram_to_dict(root), args.dendrogram_out)
    if args.clusters_out:
        write_json(clustering_to_dict(clustering), args.clusters_out)
    print(f"T = {clustering.threshold:.6g}  k = {clustering.k}")
    for i, c in enumerate(clustering.clusters, start=1):
        print(f"C{i}\t{len(c)}\t{' '.join(sorted(c))}")
    return EXIT_OK


def _cmd_detect(args: argparse.Namespace) -> int:
    S = load_similarity_matrix(args.matrix)
    check_analysable(S)
    if args.clusters is not None:
        clustering = load_clustering(args.clusters)
        if set(clustering.source_ids) != set(S.ids):
            raise FormatError("clusters do not cover exactly the matrix ids", path=str(args.clusters))
    else:
        clustering, _ = cluster_with_dendrogram(S, args.threshold_override)
    report = detect_outliers(S.ids, clustering, S, DetectionConfig(args.dispersion))
    if args.report_out:
        write_json(report_to_dict(report), args.report_out)
    print(format_summary(report))
    return EXIT_OK


def _cmd_pipeline(args: argparse.Namespace) -> int:
    if args.events is not None:
        kind, path = "events-jsonl", args.events
    elif args.matrix is not None:
        kind, path = "matrix-csv", args.matrix
    else:
        kind, path = "raw-series-csv", args.raw_series
    config = PipelineConfig(
        input_kind=kind,
        input_path=path,
        dispersion=args.dispersion,
        threshold_override=args.threshold_override,
        report_out=args.report_out,
        dendrogram_out=args.dendrogram_out,
        clusters_out=args.clusters_out,
        matrix_out=args.matrix_out,
        jobs=args.jobs,
        detector_k=args.detector_k,
    )
    print(format_summary(run_pipeline(config)))
    return EXIT_OK


def _cmd_baseline(args: argparse.Namespace) -> int:
    clustering = load_clustering(args.clusters)
    if args.size_threshold < 0:
        raise InvalidInputError("--size-threshold must be >= 0")
    for oid in sorted(torgo_size_threshold(clustering, args.size_threshold)):
        print(oid)
    return EXIT_OK


def _cmd_synth(args: argparse.Namespace) -> int:
    spec = SyntheticSpec(args.blocks, args.intra, args.cross, args.jitter, args.seed)
    S = generate_synthetic_matrix(spec)
    if args.out is None:
        sys.stdout.write(format_matrix_csv(S))
    else:
        write_similarity_matrix(S, args.out)
    return EXIT_OK


COMMANDS = {
    "similarity": _cmd_similarity,
    "cluster": _cmd_cluster,
    "detect": _cmd_detect,
    "pipeline": _cmd_pipeline,
    "baseline": _cmd_baseline,
    "synth": _cmd_synth,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args.log_level)
    try:
        return COMMANDS[args.command](args)
    except (InvariantError, DegenerateInputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (InvalidInputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
