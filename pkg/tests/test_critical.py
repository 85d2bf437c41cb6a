import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nodal_atlas.critical import (LoopSample, TrigPolynomial, detect_nodal_critical_points, index_at,
                                  pl_vertex_indices, random_trig_polynomial, sign_changes, taylor_order,
                                  winding_number, zero_count_on_loop)
from nodal_atlas.errors import (DegenerateFunctionError, InvalidLoopError, ParameterError,
                                UndersampledLoopError)

from conftest import polar, torus_xy


def _circle(field, n=64):
    th = np.linspace(0, 2 * np.pi, n, endpoint=False)
    pts = np.c_[np.cos(th), np.sin(th)]
    return LoopSample(pts, np.array([field(*p) for p in pts]))


@pytest.mark.parametrize("k", range(-3, 5))
def test_winding_of_planar_fields(k):
    # z^k and conj(z)^|k|
    def f(x, y):
        w = complex(x, y) ** abs(k)
        w = w if k >= 0 else w.conjugate()
        return (w.real, w.imag)
    assert winding_number(_circle(f)) == k


def test_winding_errors():
    with pytest.raises(UndersampledLoopError):
        # four turns on eight samples: every increment is exactly half a turn
        winding_number(_circle(lambda x, y: (math.cos(4 * math.atan2(y, x)), math.sin(4 * math.atan2(y, x))), 8))
    with pytest.raises(InvalidLoopError):
        winding_number(_circle(lambda x, y: (0.0, 0.0)))
    with pytest.raises(InvalidLoopError):
        LoopSample(np.zeros((2, 2)), np.ones((2, 2)))


@pytest.mark.parametrize("k", range(2, 7))
def test_index_of_harmonic_saddles(disc24, k):
    r, th = polar(disc24)
    assert index_at(disc24, r ** k * np.cos(k * th), 0, 0.3) == 1 - k


@pytest.mark.parametrize("sign", [1, -1])
def test_index_of_extrema_and_regular_points(disc24, sign):
    x, y = disc24.vertices[:, 0], disc24.vertices[:, 1]
    assert index_at(disc24, sign * (x ** 2 + y ** 2), 0, 0.3) == 1
    assert index_at(disc24, x + 0.3 * y, 0, 0.3) == 0
    with pytest.raises(ParameterError):
        index_at(disc24, x, 0, -1.0)


@pytest.mark.parametrize("radius", [0.3, 0.6, 1.0, 1.5])
def test_index_of_sphere_maximum_across_radii(sphere3, radius):
    z = sphere3.vertices[:, 2]
    top = int(np.argmax(z))
    assert index_at(sphere3, z, top, radius, check=False) == 1


def test_pl_indices_satisfy_poincare_hopf(sphere3, torus32):
    rng = np.random.default_rng(5)
    u = sphere3.vertices @ rng.normal(size=3) + 0.3 * sphere3.vertices[:, 0] * sphere3.vertices[:, 1]
    assert pl_vertex_indices(sphere3, u).sum() == 2
    x, y = torus_xy(torus32)
    v = np.cos(2 * np.pi * x + 0.2) + 0.5 * np.cos(2 * np.pi * (x + 2 * y) + 0.7)
    assert pl_vertex_indices(torus32, v).sum() == 0


def test_checkerboard_crossings(torus32):
    x, y = torus_xy(torus32)
    pts = detect_nodal_critical_points(torus32, np.sin(2 * np.pi * x) * np.sin(2 * np.pi * y))
    locs = sorted((round(p.location[0], 6), round(p.location[1], 6)) for p in pts)
    assert locs == [(0.0, 0.0), (0.0, 0.5), (0.5, 0.0), (0.5, 0.5)]
    assert all(p.index == -1 and p.vanishing_order == 2 and p.is_nodal for p in pts)


def test_no_nodal_critical_points_for_strip_and_sphere(torus32, sphere3):
    x, _ = torus_xy(torus32)
    assert detect_nodal_critical_points(torus32, np.sin(2 * np.pi * x)) == []
    assert detect_nodal_critical_points(sphere3, sphere3.vertices[:, 2]) == []


@pytest.mark.parametrize("k", [2, 3, 4])
def test_taylor_order(disc24, k):
    r, th = polar(disc24)
    order, expo = taylor_order(disc24, r ** k * np.cos(k * th), 0, 0.3)
    assert order == k
    assert expo == pytest.approx(k, abs=0.1)


def test_zero_count_examples():
    x = np.linspace(0, 2 * np.pi, 512, endpoint=False)
    for m in range(1, 5):
        n, integral = zero_count_on_loop(np.cos(m * x), -m * np.sin(m * x), -m * m * np.cos(m * x))
        assert n == 2 * m and abs(integral - n) < 1e-9
    n, _ = zero_count_on_loop(2 + np.cos(x), -np.sin(x), -np.cos(x))
    assert n == 0
    with pytest.raises(DegenerateFunctionError):
        zero_count_on_loop(1 + np.cos(x), -np.sin(x), -np.cos(x))


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2 ** 63 - 1))
def test_zero_count_matches_sign_changes(seed):
    p = random_trig_polynomial(np.random.default_rng(seed))
    x = np.linspace(0, 2 * np.pi, 4096, endpoint=False)
    psi, d1, d2 = p.derivatives(x)
    n, integral = zero_count_on_loop(psi, d1, d2)
    assert n == sign_changes(psi)
    assert abs(integral - n) < 0.1


def test_trig_polynomial_derivatives():
    p = TrigPolynomial(0.3, np.array([1.0, -0.5]), np.array([0.2, 0.7]))
    x = np.linspace(0, 6, 7)
    h = 1e-5
    psi, d1, d2 = p.derivatives(x)
    assert np.allclose(d1, (p.derivatives(x + h)[0] - p.derivatives(x - h)[0]) / (2 * h), atol=1e-8)
    assert np.allclose(d2, (p.derivatives(x + h)[1] - p.derivatives(x - h)[1]) / (2 * h), atol=1e-8)
