from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from nodal_atlas.arrangements import (ChordArrangement, central_triangle, circle_point, exhaustive_chord_diagrams,
                                      random_valid_arrangement, sector_and_component_count, sector_identity_sweep,
                                      validate)
from nodal_atlas.errors import ArrangementInputError

P = {a: circle_point(a) for a in (0.0, 0.5, 1.0, 1.6, 2.2, 2.9, 3.3, 4.0, 4.6, 5.3, 5.9)}
HALF = (Fraction(0), Fraction(0))


def arr(*curves):
    return ChordArrangement.from_points(curves)


def test_circle_points_are_exactly_on_the_circle():
    for p in P.values():
        assert p[0] ** 2 + p[1] ** 2 == 1


def test_single_chord():
    assert sector_and_component_count(arr((P[0.0], P[2.9]))) == (2, 1)


def test_parallel_chords():
    a = arr((P[0.5], P[5.9]), (P[1.0], P[5.3]), (P[1.6], P[4.6]))
    assert sector_and_component_count(a) == (4, 3)


def test_concurrent_diameters():
    pts = [circle_point(t) for t in (0.3, 1.2, 2.3)]
    chords = [(p, (-p[0], -p[1])) for p in pts]
    assert sector_and_component_count(arr(*chords)) == (6, 1)


def test_polyline_through_interior():
    a = arr((P[0.0], HALF, P[2.2]), (P[1.0], P[4.0]))
    S, C = sector_and_component_count(a)
    assert (S, C) == (4, 1) and S == 2 * 2 - C + 1


@pytest.mark.parametrize("bad", [
    central_triangle(),
    arr((P[0.0], P[2.2]), (P[0.0], P[4.0])),                       # shared endpoint
    arr(((Fraction(1, 2), Fraction(0)), P[2.2])),                   # endpoint off the circle
    arr((P[0.0], (Fraction(-1, 2), Fraction(1, 10)), (Fraction(1, 3), Fraction(1, 2)), (Fraction(-1, 2),
        Fraction(-1, 3)), P[4.0])),                                 # crosses itself
])
def test_invalid_arrangements_are_rejected(bad):
    assert not validate(bad)
    with pytest.raises(ArrangementInputError):
        sector_and_component_count(bad)


def test_two_meetings_are_invalid():
    # a polyline that meets a chord twice closes a bounded face without a circle arc
    chord = (P[0.0], P[2.9])
    bent = (P[1.0], (Fraction(0), Fraction(-1, 2)), P[2.2])
    assert not validate(arr(chord, bent))


def test_text_round_trip_and_errors():
    a = random_valid_arrangement(4, 11)
    assert ChordArrangement.loads(a.dumps()).curves == a.curves
    with pytest.raises(ArrangementInputError):
        ChordArrangement.loads("CURVE 1 0 0")
    with pytest.raises(ArrangementInputError):
        ChordArrangement.loads("LINE 1 0 0 1")
    with pytest.raises(ArrangementInputError):
        ChordArrangement.loads("CURVE 1/0 0 0 1")


def test_frozen_random_arrangement():
    a = random_valid_arrangement(4, 123)
    assert sector_and_component_count(a) == (6, 3)


@settings(max_examples=40, deadline=None)
@given(k=st.integers(1, 6), seed=st.integers(0, 2 ** 63 - 1))
def test_identity_and_induction_on_random_arrangements(k, seed):
    a, log = random_valid_arrangement(k, seed, return_log=True)
    S, C = sector_and_component_count(a)
    assert S == 2 * k - C + 1
    assert all(step.ok for step in log) and len(log) == k


@pytest.mark.parametrize("k,total,catalan", [(1, 1, 1), (2, 3, 2), (3, 15, 5), (4, 105, 14)])
def test_exhaustive_diagram_counts(k, total, catalan):
    rows = list(exhaustive_chord_diagrams(k))
    assert len(rows) == total
    assert sum(nc for _, _, nc in rows) == catalan
    for pairs, a, nc in rows:
        if nc:
            assert sector_and_component_count(a) == (k + 1, k)


def test_sweep_report():
    rep = sector_identity_sweep(4, 20, seed=3, exhaustive_k=4)
    d = rep.as_dict()
    assert rep.ok and d["counterexamples"] == [] and d["rejected_controls"] == 1
    assert sum(d["component_histogram"]["4"].values()) == 20
