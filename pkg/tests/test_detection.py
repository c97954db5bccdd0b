from __future__ import annotations

import math
import statistics

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dendroutlier import (
    Clustering,
    DegenerateInputError,
    DetectionConfig,
    InvalidInputError,
    SimilarityMatrix,
    SyntheticSpec,
    brute_force_detection,
    cluster,
    detect_outliers,
    find_representative_cluster,
    generate_synthetic_matrix,
    object_cluster_similarity,
    of_location,
    of_neighbors,
    outlier_factor,
    outlier_threshold,
)

from .conftest import random_matrix


def matrix(ids: str, upper: dict[str, float]) -> SimilarityMatrix:
    vals = np.eye(len(ids))
    for pair, s in upper.items():
        i, j = ids.index(pair[0]), ids.index(pair[1])
        vals[i, j] = vals[j, i] = s
    return SimilarityMatrix(tuple(ids), vals)


def partition(ids: str, *groups: str) -> Clustering:
    return Clustering(tuple(frozenset(g) for g in groups), 0.5, tuple(ids))


@pytest.fixture
def majority_case():
    S = matrix("abcd", {"ab": 0.9, "ac": 0.8, "bc": 0.85, "ad": 0.1, "bd": 0.2, "cd": 0.15})
    return S, partition("abcd", "abc", "d")


@pytest.fixture
def no_majority_case():
    S = matrix("abcde", {
        "ab": 0.9, "ac": 0.3, "ad": 0.2, "ae": 0.05,
        "bc": 0.25, "bd": 0.35, "be": 0.1,
        "cd": 0.8, "ce": 0.4, "de": 0.15,
    })
    return S, partition("abcde", "ab", "cd", "e")


# -- threshold -----------------------------------------------------------------

@pytest.mark.parametrize(
    "mu, sigma, d, expected",
    [(0.5, 0.1, 0.0, 0.6), (0.5, 0.1, 1.0, 0.8), (0.5, 0.1, 0.5, 0.65), (0.3, 0.0, 0.7, 0.3)],
)
def test_outlier_threshold_values(mu, sigma, d, expected):
    assert outlier_threshold(mu, sigma, d) == pytest.approx(expected, abs=1e-15)


def test_outlier_threshold_reference_values():
    assert abs(outlier_threshold(0.372, 0.191, 0.4) - 0.624) <= 1e-3
    assert abs(outlier_threshold(0.363, 0.162, 0.4) - 0.577) <= 1e-3


def test_outlier_threshold_validation():
    for d in (-0.1, 1.1, math.nan):
        with pytest.raises(InvalidInputError):
            outlier_threshold(0.5, 0.1, d)
    with pytest.raises(InvalidInputError):
        outlier_threshold(0.5, -0.1, 0.5)
    with pytest.raises(InvalidInputError):
        DetectionConfig(1.5)


@given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
def test_outlier_threshold_monotone_in_d(mu, sigma, d1, d2):
    lo, hi = sorted((d1, d2))
    assert outlier_threshold(mu, sigma, lo) <= outlier_threshold(mu, sigma, hi)
    assert mu + sigma <= outlier_threshold(mu, sigma, lo) <= mu + 3 * sigma + 1e-15


# -- factor components -----------------------------------------------------------

def test_of_neighbors():
    assert of_neighbors(3, 4) == 0.25
    assert of_neighbors(4, 4) == 0.0
    assert of_neighbors(1, 100) == 0.99
    for bad in ((0, 4), (5, 4)):
        with pytest.raises(InvalidInputError):
            of_neighbors(*bad)


def test_representative_is_strict_majority():
    assert find_representative_cluster(partition("abcd", "abc", "d")) == frozenset("abc")
    assert find_representative_cluster(partition("abcd", "ab", "cd")) is None
    assert find_representative_cluster(partition("abcde", "abc", "de")) == frozenset("abc")


def test_object_cluster_similarity_is_max(majority_case):
    S, _ = majority_case
    assert object_cluster_similarity("d", ["a", "b", "c"], S) == 0.2
    assert object_cluster_similarity("a", ["a", "b"], S) == 1.0


def test_factor_with_majority(majority_case):
    S, c = majority_case
    assert of_location("a", c, S) == 0.0
    assert of_location("d", c, S) == pytest.approx(0.8, abs=1e-15)
    assert outlier_factor("a", c, S).of == 0.125
    assert outlier_factor("d", c, S).of == pytest.approx(0.775, abs=1e-15)


def test_factor_without_majority(no_majority_case):
    S, c = no_majority_case
    # a: best to {c,d} is 0.3, best to {e} is 0.05
    assert of_location("a", c, S) == pytest.approx(1 - (0.3 + 0.05) / 2, abs=1e-15)
    # e: best to {a,b} is 0.1, best to {c,d} is 0.4
    assert of_location("e", c, S) == pytest.approx(1 - (0.1 + 0.4) / 2, abs=1e-15)
    score = outlier_factor("e", c, S)
    assert score.of_neighbors == pytest.approx(0.8, abs=1e-15)
    assert score.of == pytest.approx((0.8 + 0.75) / 2, abs=1e-15)


# -- full detection -------------------------------------------------------------

def test_detect_majority_case(majority_case):
    S, c = majority_case
    ofs = [0.125, 0.125, 0.125, 0.775]
    mu, sigma = statistics.fmean(ofs), statistics.pstdev(ofs)
    r = detect_outliers("abcd", c, S, DetectionConfig(0.0))
    assert r.mu_of == pytest.approx(mu, abs=1e-15)
    assert r.sigma_of == pytest.approx(sigma, abs=1e-15)
    assert r.ot == pytest.approx(mu + sigma, abs=1e-15)
    assert r.outliers == {"d"}
    assert detect_outliers("abcd", c, S, DetectionConfig(1.0)).outliers == frozenset()
    assert [s.object_id for s in r.scores] == list("abcd")
    assert [(cs.cluster_id, cs.size, cs.outlier_count) for cs in r.cluster_summary] == [("C1", 3, 0), ("C2", 1, 1)]
    assert r.cluster_summary[1].mean_of == pytest.approx(0.775, abs=1e-15)
    assert r.cluster_summary[0].std_of == 0.0


def test_detect_single_cluster_flags_nothing():
    S = matrix("ab", {"ab": 0.4})
    r = detect_outliers("ab", partition("ab", "ab"), S, DetectionConfig(0.0))
    assert r.sigma_of == 0.0 and r.ot == 0.0
    assert r.outliers == frozenset()


def test_detect_equal_factors_flag_nothing():
    # two equal-size clusters and identical cross similarities: every factor equal
    S = matrix("abcd", {"ab": 0.9, "cd": 0.9, "ac": 0.2, "ad": 0.2, "bc": 0.2, "bd": 0.2})
    r = detect_outliers("abcd", partition("abcd", "ab", "cd"), S, DetectionConfig(0.0))
    assert len({s.of for s in r.scores}) == 1
    assert r.sigma_of == 0.0
    assert r.outliers == frozenset()


def test_detect_rejects_mismatch(majority_case):
    S, c = majority_case
    with pytest.raises(InvalidInputError):
        detect_outliers("abc", c, S, DetectionConfig(0.2))
    with pytest.raises(DegenerateInputError):
        detect_outliers("", c, S, DetectionConfig(0.2))


def test_report_order_follows_input_order(no_majority_case):
    S, c = no_majority_case
    r = detect_outliers("edcba", c, S, DetectionConfig(0.3))
    assert [s.object_id for s in r.scores] == list("edcba")
    assert r.score_of("a") == outlier_factor("a", c, S)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 40), st.integers(0, 2**32 - 1), st.floats(0, 1))
def test_vectorised_path_equals_scalar_path(n, seed, d):
    S = random_matrix(np.random.default_rng(seed), n, decimals=2)
    c = cluster(S)
    r = detect_outliers(S.ids, c, S, DetectionConfig(d))
    for s in r.scores:
        assert s == outlier_factor(s.object_id, c, S)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 40), st.integers(0, 2**32 - 1), st.floats(0, 1))
def test_matches_straight_line_oracle(n, seed, d):
    rng = np.random.default_rng(seed)
    S = random_matrix(rng, n, decimals=int(rng.integers(1, 4)))
    c = cluster(S)
    assert detect_outliers(S.ids, c, S, DetectionConfig(d)).outliers == brute_force_detection(S.ids, c, S, d)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 40), st.integers(0, 2**32 - 1))
def test_flagged_sets_shrink_as_dispersion_grows(n, seed):
    S = random_matrix(np.random.default_rng(seed), n, decimals=2)
    c = cluster(S)
    previous = None
    for d in (0.0, 0.25, 0.5, 0.75, 1.0):
        flagged = detect_outliers(S.ids, c, S, DetectionConfig(d)).outliers
        if previous is not None:
            assert flagged <= previous
        previous = flagged


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 40), st.integers(0, 2**32 - 1))
def test_factor_ranges(n, seed):
    S = random_matrix(np.random.default_rng(seed), n)
    r = detect_outliers(S.ids, cluster(S), S, DetectionConfig(0.5))
    for s in r.scores:
        assert 0.0 <= s.of_neighbors < 1.0
        assert 0.0 <= s.of_location <= 1.0
        assert 0.0 <= s.of <= 1.0
    assert sum(cs.size for cs in r.cluster_summary) == n
    assert sum(cs.outlier_count for cs in r.cluster_summary) == len(r.outliers)


def test_planted_blocks_order_mean_factor_by_cluster_size():
    S = generate_synthetic_matrix(SyntheticSpec((62, 34, 5), 0.9, 0.1, jitter=0.02, seed=7))
    r = detect_outliers(S.ids, cluster(S), S, DetectionConfig(0.4))
    means = [c.mean_of for c in r.cluster_summary]
    assert [c.size for c in r.cluster_summary] == [62, 34, 5]
    assert means[0] < means[1] < means[2]
    # majority members sit at location 0, so their factor is the size term alone
    assert r.cluster_summary[0].std_of == 0.0
    assert means[0] == pytest.approx((1 - 62 / 101) / 2, abs=1e-15)
