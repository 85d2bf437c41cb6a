import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nodal_atlas.errors import DegenerateFunctionError, ParameterError, ToleranceError
from nodal_atlas.mesh import build_preset
from nodal_atlas.nodal import (boundary_intersection_count, classify, count_nodal_domains, extract_nodal_set,
                               inner_radius, label_pieces, min_inradius_times_sqrt_lambda)

from conftest import polar, torus_xy

TWO_PI = 2 * np.pi


@pytest.mark.parametrize("a,nu", [(1, 2), (2, 4), (3, 6)])
def test_torus_strip_modes(torus32, a, nu):
    x, _ = torus_xy(torus32)
    assert count_nodal_domains(torus32, np.sin(TWO_PI * a * x + 0.1)) == nu


@pytest.mark.parametrize("phase,nu", [(0.0, 4), (0.1, 2)])
def test_crossings_survive_only_at_vertices(torus32, phase, nu):
    # a PL function has no saddle inside a triangle, so an off-vertex crossing opens up
    x, y = torus_xy(torus32)
    u = np.sin(TWO_PI * x + phase) * np.sin(TWO_PI * y + phase)
    assert count_nodal_domains(torus32, u) == nu


def test_checkerboard_has_four_domains_and_crossings(torus32):
    x, y = torus_xy(torus32)
    ns = extract_nodal_set(torus32, np.sin(TWO_PI * x) * np.sin(TWO_PI * y))
    assert ns.nu == 4
    assert ns.n_components == 1
    assert sorted(np.unique(ns.domain_signs).tolist()) == [-1, 1]


def test_domain_areas_partition_the_surface(torus32):
    x, y = torus_xy(torus32)
    ns = extract_nodal_set(torus32, np.cos(TWO_PI * x) + 0.3 * np.sin(TWO_PI * 2 * y))
    assert ns.domain_areas().sum() == pytest.approx(torus32.area, rel=1e-12)


def test_sphere_hemispheres(sphere3):
    ns = extract_nodal_set(sphere3, sphere3.vertices[:, 2])
    assert ns.nu == 2
    assert ns.domain_areas() == pytest.approx([ns.domain_areas().sum() / 2] * 2, rel=1e-9)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), scale=st.floats(1e-3, 1e3))
def test_count_invariant_under_scaling_and_sign(seed, scale):
    mesh = build_preset("flat_torus", 16)
    rng = np.random.default_rng(seed)
    x, y = torus_xy(mesh)
    u = sum(rng.normal() * np.cos(TWO_PI * (a * x + b * y) + rng.uniform(0, 6))
            for a in range(3) for b in range(3))
    nu = count_nodal_domains(mesh, u)
    assert count_nodal_domains(mesh, scale * u) == nu
    assert count_nodal_domains(mesh, -u) == nu
    assert 1 <= nu <= mesh.n_triangles * 2


def test_courant_flag():
    mesh = build_preset("flat_torus", 16)
    x, _ = torus_xy(mesh)
    assert count_nodal_domains(mesh, np.sin(TWO_PI * 3 * x), index_in_spectrum=5) == (6, False)
    assert count_nodal_domains(mesh, np.sin(TWO_PI * x), index_in_spectrum=2) == (2, True)


def test_classification_and_degenerate_input():
    cls = classify(np.array([1.0, -1.0, 1e-9, 0.0]))
    assert cls.tolist() == [1, -1, 0, 0]
    with pytest.raises(DegenerateFunctionError):
        classify(np.zeros(4))


def test_label_pieces_with_mask(torus32):
    x, _ = torus_xy(torus32)
    cls = classify(np.sin(TWO_PI * x + 0.05))
    _, n_all = label_pieces(torus32, cls)
    mask = torus32.vertices[torus32.triangles, 1].mean(axis=1) < 0.5
    _, n_half = label_pieces(torus32, cls, mask)
    assert n_all == 2 and n_half == 2


@pytest.mark.parametrize("n", [0, 1, 2, 3])
def test_boundary_intersections_of_disc_harmonics(disc24, n):
    r, th = polar(disc24)
    u = r ** n * np.cos(n * th + 0.05) if n else 1.0 + r ** 2
    assert boundary_intersection_count(disc24, u) == 2 * n


def test_boundary_count_errors(disc24, torus32):
    r, th = polar(disc24)
    with pytest.raises(ToleranceError):
        boundary_intersection_count(disc24, r ** 2 - 1.0)
    with pytest.raises(ParameterError):
        boundary_intersection_count(torus32, np.ones(torus32.n_vertices))


def test_inner_radius_oracles(torus32, sphere3):
    x, _ = torus_xy(torus32)
    u = np.sin(TWO_PI * x)
    ns = extract_nodal_set(torus32, u)
    # a strip of width 1/2 has inradius 1/4
    assert [inner_radius(torus32, ns, d, u) for d in range(ns.nu)] == pytest.approx([0.25, 0.25], abs=1e-9)
    z = sphere3.vertices[:, 2]
    ns = extract_nodal_set(sphere3, z)
    assert inner_radius(sphere3, ns, 0, z) == pytest.approx(math.pi / 2, rel=0.01)


def test_inradius_product_is_scale_invariant(torus32):
    x, _ = torus_xy(torus32)
    u = np.sin(TWO_PI * x)
    lam = 4 * math.pi ** 2
    base = min_inradius_times_sqrt_lambda(torus32, u, lam)[0]
    big = torus32.with_lengths(3.0 * torus32.lengths)
    assert min_inradius_times_sqrt_lambda(big, u, lam / 9.0)[0] == pytest.approx(base, rel=1e-12)
    assert base == pytest.approx(0.25 * 2 * math.pi, rel=1e-9)
