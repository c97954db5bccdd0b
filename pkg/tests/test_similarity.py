from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dendroutlier import (
    Event,
    EventPair,
    EventSeries,
    InvalidInputError,
    build_similarity_matrix,
    cityblock_distance,
    event_length,
    extract_common_events,
    jaccard_similarity,
    pair_length,
    series_similarity,
)

from .conftest import make_series, random_series


def all_matchings(left: list[int], right: list[int]):
    """Every partial cross matching, as lists of (left, right) index pairs."""
    for k in range(min(len(left), len(right)) + 1):
        for ls in itertools.combinations(left, k):
            for rs in itertools.permutations(right, k):
                yield list(zip(ls, rs))


# -- city-block distance ------------------------------------------------------

@pytest.mark.parametrize(
    "a, b, expected",
    [((0, 0), (0, 0), 0.0), ((1, 2), (4, 6), 7.0), ((2.5,), (-1.0,), 3.5)],
)
def test_cityblock_examples(a, b, expected):
    assert cityblock_distance(a, b) == expected


def test_cityblock_rejects_bad_input():
    with pytest.raises(InvalidInputError):
        cityblock_distance((1, 2), (1, 2, 3))
    with pytest.raises(InvalidInputError):
        cityblock_distance((1, float("nan")), (1, 2))
    with pytest.raises(InvalidInputError):
        cityblock_distance((), ())


@given(
    st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=8).flatmap(
        lambda xs: st.tuples(st.just(xs), st.lists(st.floats(-1e6, 1e6), min_size=len(xs), max_size=len(xs)))
    )
)
def test_cityblock_symmetric_and_zero_iff_equal(pair):
    a, b = pair
    assert cityblock_distance(a, b) == cityblock_distance(b, a)
    assert cityblock_distance(a, a) == 0.0
    assert (cityblock_distance(a, b) == 0.0) == (a == b)


# -- lengths -----------------------------------------------------------------

@pytest.mark.parametrize("start, end, expected", [(10, 25, 15), (7, 7, 0), (0, 4000, 4000)])
def test_event_length(start, end, expected):
    assert event_length(Event("e", "s", start, end, (0.0,))) == expected


def test_pair_length():
    a = Event("a", "A", 0, 15, (1.0,))
    b = Event("b", "B", 3, 13, (1.0,))
    assert pair_length(EventPair(a, b)) == 25
    z1, z2 = Event("z1", "A", 4, 4, (0.0,)), Event("z2", "B", 9, 9, (0.0,))
    assert pair_length(EventPair(z1, z2)) == 0
    assert pair_length(EventPair(a, Event("a'", "B", 0, 15, (1.0,)))) == 30


def test_event_invariants():
    with pytest.raises(InvalidInputError):
        Event("e", "s", 5, 4, (1.0,))
    with pytest.raises(InvalidInputError):
        Event("e", "s", 0, 1, ())
    with pytest.raises(InvalidInputError):
        Event("e", "s", 0, 1, (math.inf,))
    with pytest.raises(InvalidInputError):
        EventSeries("s", (Event("e", "other", 0, 1, (1.0,)),))
    with pytest.raises(InvalidInputError):
        EventPair(Event("a", "s", 0, 1, (1.0,)), Event("b", "s", 0, 1, (1.0,)))


def test_series_events_sorted_by_start():
    s = make_series("s", [(30, 40, (1.0,)), (0, 5, (2.0,)), (10, 12, (3.0,))])
    assert [e.initial_timestamp for e in s.events] == [0, 10, 30]


# -- common-event extraction ----------------------------------------------------

def test_extract_empty():
    assert extract_common_events(EventSeries("a"), EventSeries("b")) == []


def test_extract_single_identical_event():
    a = make_series("a", [(0, 10, (1.0, 2.0))])
    b = make_series("b", [(5, 12, (1.0, 2.0))])
    pairs = extract_common_events(a, b)
    assert len(pairs) == 1
    assert pairs[0].left.event_id == "a-0" and pairs[0].right.event_id == "b-0"
    assert pairs[0].distance == 0.0


def test_extract_three_event_fixture_against_enumeration():
    a = make_series("a", [(0, 10, (0.0, 0.0)), (20, 30, (50.0, 50.0))])
    b = make_series("b", [(2, 11, (0.1, 0.0))])
    pairs = extract_common_events(a, b)
    assert [(p.left.event_id, p.right.event_id) for p in pairs] == [("a-0", "b-0")]

    # oracle: the cheapest maximal matching over the pooled events
    pool = list(a.events) + list(b.events)
    best = None
    for m in all_matchings([0, 1], [2]):
        if len(m) != 1:
            continue
        cost = sum(cityblock_distance(pool[i].features, pool[j].features) for i, j in m)
        if best is None or cost < best[0]:
            best = (cost, m)
    assert best[1] == [(0, 2)]


def test_extract_is_order_normalised():
    a = make_series("a", [(0, 10, (0.0,)), (20, 30, (5.0,)), (40, 41, (5.2,))])
    b = make_series("b", [(0, 3, (5.1,)), (5, 9, (0.1,))])
    ab = extract_common_events(a, b)
    ba = extract_common_events(b, a)
    assert [(p.left, p.right) for p in ab] == [(p.left, p.right) for p in ba]
    assert all(p.left.series_id == "a" for p in ab)


def test_extract_rejects_same_series_and_mixed_dims():
    a = make_series("a", [(0, 1, (1.0,))])
    with pytest.raises(InvalidInputError):
        extract_common_events(a, a)
    with pytest.raises(InvalidInputError):
        extract_common_events(a, make_series("b", [(0, 1, (1.0, 2.0))]))


def test_pair_distance_matches_cityblock(rng):
    for k in range(30):
        a, b = random_series(rng, f"a{k}"), random_series(rng, f"b{k}")
        for p in extract_common_events(a, b):
            assert p.distance == cityblock_distance(p.left.features, p.right.features)


# -- series similarity ---------------------------------------------------------

def test_similarity_empty_series_is_one():
    assert series_similarity(EventSeries("a"), EventSeries("b")) == 1.0


def test_similarity_zero_duration_events_is_one():
    a = make_series("a", [(3, 3, (1.0,))])
    b = make_series("b", [(8, 8, (9.0,))])
    assert series_similarity(a, b) == 1.0


def test_similarity_no_common_events_is_zero():
    a = make_series("a", [(0, 10, (0.0, 0.0)), (20, 25, (0.01, 0.0))])
    b = make_series("b", [(0, 10, (100.0, 100.0)), (30, 50, (100.0, 100.02))])
    assert extract_common_events(a, b) == []
    assert series_similarity(a, b) == 0.0


def test_similarity_one_side_empty_is_zero():
    a = make_series("a", [(0, 10, (1.0,))])
    assert series_similarity(a, EventSeries("b")) == 0.0


def test_similarity_self_copy_is_one_by_enumeration():
    a = make_series("a", [(0, 10, (0.0, 1.0)), (20, 24, (3.0, 1.0)), (30, 37, (3.0, 1.0))])
    b = a.relabeled("b")
    # oracle: a zero-cost perfect matching exists, so every event can be paired
    pool = list(a.events) + list(b.events)
    perfect = [
        m for m in all_matchings([0, 1, 2], [3, 4, 5])
        if len(m) == 3 and all(pool[i].features == pool[j].features for i, j in m)
    ]
    assert perfect
    assert len(extract_common_events(a, b)) == 3
    assert series_similarity(a, b) == 1.0


def test_similarity_partial_overlap_value():
    # one shared event (lengths 10 and 8) out of total 10 + 4 + 8 + 6 = 28
    a = make_series("a", [(0, 10, (0.0,)), (50, 54, (40.0,))])
    b = make_series("b", [(1, 9, (0.0,)), (70, 76, (-40.0,))])
    pairs = extract_common_events(a, b)
    assert [(p.left.event_id, p.right.event_id) for p in pairs] == [("a-0", "b-0")]
    assert series_similarity(a, b) == pytest.approx(18 / 28, abs=1e-15)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_similarity_axioms(seed):
    rng = np.random.default_rng(seed)
    a, b = random_series(rng, "a"), random_series(rng, "b")
    s_ab = series_similarity(a, b)
    assert s_ab == series_similarity(b, a)
    assert 0.0 <= s_ab <= 1.0
    pairs = extract_common_events(a, b)
    used = [p.left.event_id for p in pairs] + [p.right.event_id for p in pairs]
    assert len(used) == len(set(used))
    paired = math.fsum(pair_length(p) for p in pairs)
    total = math.fsum(event_length(e) for e in a.events + b.events)
    assert paired <= total
    if len(pairs) * 2 == len(a.events) + len(b.events):
        assert s_ab == 1.0
    if a.events:
        assert series_similarity(a, a.relabeled("z")) == 1.0


# -- jaccard -------------------------------------------------------------------

@pytest.mark.parametrize(
    "A, B, expected",
    [({1, 2}, {1, 2}, 1.0), ({1}, {2}, 0.0), ({1, 2}, {1, 3, 4}, 0.25), (set(), set(), 1.0)],
)
def test_jaccard(A, B, expected):
    assert jaccard_similarity(A, B) == expected


# -- matrix assembly -------------------------------------------------------------

def test_matrix_single_series():
    S = build_similarity_matrix([make_series("a", [(0, 1, (1.0,))])])
    assert S.values.tolist() == [[1.0]]


def test_matrix_two_identical_series():
    a = make_series("a", [(0, 5, (1.0,)), (9, 12, (4.0,))])
    S = build_similarity_matrix([a, a.relabeled("b")])
    assert S.values.tolist() == [[1.0, 1.0], [1.0, 1.0]]


def test_matrix_three_series_fixture():
    s1 = make_series("s1", [(0, 10, (0.0, 0.0)), (20, 30, (0.02, 0.0))])
    s2 = s1.relabeled("s2")
    s3 = make_series("s3", [(0, 10, (90.0, 90.0)), (40, 45, (90.0, 90.03))])
    S = build_similarity_matrix([s1, s2, s3])
    assert S["s1", "s2"] == 1.0 == series_similarity(s1, s2)
    assert S["s1", "s3"] == 0.0 == series_similarity(s1, s3)
    assert S["s2", "s3"] == 0.0 == series_similarity(s2, s3)


def test_matrix_rejects_duplicates_and_mixed_dims():
    a = make_series("a", [(0, 1, (1.0,))])
    with pytest.raises(InvalidInputError):
        build_similarity_matrix([a, a])
    with pytest.raises(InvalidInputError):
        build_similarity_matrix([a, make_series("b", [(0, 1, (1.0, 2.0))])])


def test_matrix_parallel_matches_serial(rng):
    data = [random_series(rng, f"s{i}", max_events=4) for i in range(7)]
    serial = build_similarity_matrix(data, jobs=1)
    parallel = build_similarity_matrix(data, jobs=2)
    assert np.array_equal(serial.values, parallel.values)
    assert np.array_equal(serial.values, serial.values.T)
    assert np.all(np.diagonal(serial.values) == 1.0)
