"""Outlier detection by agglomerative clustering of a similarity matrix.

Typical use::

    from dendroutlier import cluster, detect_outliers, DetectionConfig
    clustering = cluster(S)
    report = detect_outliers(S.ids, clustering, S, DetectionConfig(dispersion=0.4))
"""

from .baselines import (
    SyntheticSpec,
    brute_force_clustering,
    brute_force_detection,
    generate_synthetic_matrix,
    torgo_size_threshold,
)
from .clustering import (
    Clustering,
    CutThreshold,
    DendrogramNode,
    build_dendrogram,
    cluster,
    cluster_similarity,
    compute_threshold,
    cut_dendrogram,
)
from .detection import (
    DetectionConfig,
    DetectionReport,
    OutlierScore,
    detect_outliers,
    find_representative_cluster,
    object_cluster_similarity,
    of_location,
    of_neighbors,
    outlier_factor,
    outlier_threshold,
)
from .errors import (
    DegenerateInputError,
    FormatError,
    InvalidInputError,
    InvariantError,
    OracleScopeError,
)
from .matrix import SimilarityMatrix
from .similarity import (
    Event,
    EventPair,
    EventSeries,
    build_similarity_matrix,
    cityblock_distance,
    event_length,
    extract_common_events,
    jaccard_similarity,
    pair_length,
    series_similarity,
)

__version__ = "0.1.0"
