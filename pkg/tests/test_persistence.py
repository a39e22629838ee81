import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from topsig.oracle import brute_force_bottleneck, level_sweep_diagram
from topsig.persistence import (
    PersistenceDiagram,
    TimeSeries,
    as_diagram,
    bottleneck_distance,
    diagram_union,
    diagrams_equal,
    sublevel_diagram,
)

small_ints = st.lists(st.integers(-4, 4), min_size=1, max_size=14)
floats = st.lists(st.floats(-100, 100, allow_nan=False), min_size=1, max_size=40)


def pts(series):
    return [tuple(p) for p in sublevel_diagram(series).to_list()]


def test_worked_example():
    assert pts([0, 2, 1, 3]) == [(0, 3), (1, 2)]


def test_monotone_gives_single_point():
    assert pts([1, 2, 5, 7]) == [(1, 7)]
    assert pts([7, 5, 2, 1]) == [(1, 7)]


def test_constant_and_single_sample_are_empty():
    assert len(sublevel_diagram([3.0] * 6)) == 0
    assert len(sublevel_diagram([3.0])) == 0


def test_plateaus_collapse():
    assert pts([0, 0, 2, 2, 1, 1, 3]) == pts([0, 2, 1, 3])


def test_equal_minima_one_survives():
    # the later minimum dies at the merge, the earlier one is essential
    assert pts([0, 2, 0]) == [(0, 2), (0, 2)]
    assert pts([1, 3, 0, 3, 1]) == [(0, 3), (1, 3), (1, 3)]


def test_empty_series_rejected():
    with pytest.raises(ValueError):
        sublevel_diagram([])
    with pytest.raises(ValueError):
        TimeSeries([1.0, np.nan])
    with pytest.raises(ValueError):
        TimeSeries([1.0], dt=0)


def test_diagram_requires_death_after_birth():
    with pytest.raises(ValueError):
        PersistenceDiagram([[2.0, 1.0]])


@given(small_ints)
@settings(max_examples=300, deadline=None)
def test_matches_level_sweep_oracle(values):
    assert pts(values) == level_sweep_diagram(values)


@given(floats)
@settings(max_examples=200, deadline=None)
def test_float_series_match_oracle(values):
    assert pts(values) == level_sweep_diagram(values)


@given(floats)
@settings(max_examples=200, deadline=None)
def test_point_count_and_extremes(values):
    d = sublevel_diagram(values)
    v = np.asarray(values)
    if v.max() == v.min():
        assert len(d) == 0
        return
    assert np.all(d.persistence > 0)
    assert d.births.min() == v.min()
    assert d.deaths.max() == v.max()
    # one point per strict local minimum of the plateau-collapsed sequence
    c = [x for k, x in enumerate(values) if k == 0 or x != values[k - 1]]
    minima = sum(
        1 for k, x in enumerate(c)
        if (k == 0 or c[k - 1] > x) and (k == len(c) - 1 or c[k + 1] > x)
    )
    assert len(d) == minima


@given(floats, st.floats(-50, 50, allow_nan=False))
@settings(max_examples=100, deadline=None)
def test_reversal_and_translation(values, c):
    d = sublevel_diagram(values)
    assert diagrams_equal(sublevel_diagram(values[::-1]), d)
    shifted = sublevel_diagram(np.asarray(values) + c)
    assert len(shifted) <= len(d)  # rounding may merge near-equal samples
    if len(shifted) == len(d):
        assert np.allclose(shifted.points, d.shifted(c).points, atol=1e-9)


def test_union_adds_multiplicities():
    a = PersistenceDiagram([[0, 1], [2, 3]])
    b = PersistenceDiagram([[0, 1]])
    u = diagram_union(a, b)
    assert u.to_list() == [[0, 1], [0, 1], [2, 3]]
    assert len(diagram_union(a, PersistenceDiagram())) == 2


def test_diagrams_equal_tolerance():
    a = PersistenceDiagram([[0, 1]])
    assert diagrams_equal(a, PersistenceDiagram([[0, 1 + 1e-13]]))
    assert not diagrams_equal(a, PersistenceDiagram([[0, 1 + 1e-11]]))
    assert not diagrams_equal(a, PersistenceDiagram([[0, 1], [0, 1]]))


def test_bottleneck_examples():
    empty = PersistenceDiagram()
    d = PersistenceDiagram([[0, 4], [1, 2]])
    assert bottleneck_distance(empty, empty) == 0.0
    assert bottleneck_distance(empty, d) == 2.0
    assert bottleneck_distance(d, d) == 0.0
    assert bottleneck_distance(PersistenceDiagram([[0, 4]]), PersistenceDiagram([[0.5, 4.25]])) == 0.5


diag_points = st.lists(
    st.tuples(st.floats(-5, 5), st.floats(0, 5)).map(lambda bp: (bp[0], bp[0] + bp[1])),
    max_size=3,
)


@given(diag_points, diag_points)
@settings(max_examples=200, deadline=None)
def test_bottleneck_matches_brute_force(p1, p2):
    got = bottleneck_distance(as_diagram(p1), as_diagram(p2))
    assert got == pytest.approx(brute_force_bottleneck(p1, p2), abs=1e-12)


@given(diag_points, diag_points, diag_points)
@settings(max_examples=100, deadline=None)
def test_bottleneck_metric_axioms(p1, p2, p3):
    a, b, c = as_diagram(p1), as_diagram(p2), as_diagram(p3)
    assert bottleneck_distance(a, b) == bottleneck_distance(b, a)
    assert bottleneck_distance(a, c) <= bottleneck_distance(a, b) + bottleneck_distance(b, c) + 1e-12


@given(floats, st.lists(st.floats(-1, 1), min_size=40, max_size=40))
@settings(max_examples=100, deadline=None)
def test_bottleneck_stability(values, noise):
    f = np.asarray(values)
    e = np.asarray(noise[: f.size])
    d = bottleneck_distance(sublevel_diagram(f), sublevel_diagram(f + e))
    assert d <= np.max(np.abs(e)) + 1e-9
