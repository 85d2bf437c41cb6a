import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nodal_atlas.errors import MeshIntegrityError, ParameterError
from nodal_atlas.mesh import (SurfaceMesh, build_preset, conformal_family, dumps, euler_data, flat_torus, loads,
                              round_sphere, unit_disc)


@pytest.mark.parametrize("preset,res,chi,area", [
    ("flat_torus", 8, 0, 1.0),
    ("round_sphere", 2, 2, None),
    ("unit_disc", 6, 1, None),
    ("rectangle", 6, 1, 1.0),
])
def test_presets_topology_and_area(preset, res, chi, area):
    m = build_preset(preset, res)
    assert m.euler_characteristic() == chi
    if area is not None:
        assert m.area == pytest.approx(area, rel=1e-12)


def test_sphere_area_converges_to_4pi():
    errs = [abs(round_sphere(s).area - 4 * math.pi) for s in (2, 3, 4)]
    # inscribed polyhedra converge at second order: the error quarters per subdivision
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)
    assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.05)


def test_disc_area_converges_to_pi():
    assert unit_disc(24).area == pytest.approx(math.pi, rel=2e-3)


def test_genus_surface_topology():
    for m in (1, 2, 3):
        g, b = euler_data(build_preset("genus_m_surface", 32, m=m))
        assert (g, b) == (m, 0)


def test_angle_defects_sum_to_gauss_bonnet(sphere3, torus32):
    assert sphere3.angle_defects().sum() == pytest.approx(4 * math.pi, rel=1e-10)
    assert np.abs(torus32.angle_defects()).max() < 1e-12


def test_union_jack_vertex_valences(torus32):
    val = np.bincount(torus32.edges.ravel(), minlength=torus32.n_vertices)
    i, j = np.arange(32 * 32) % 32, np.arange(32 * 32) // 32
    assert np.all(val[(i % 2 == 0) & (j % 2 == 0)] == 8)
    assert np.all(val[(i % 2 == 1) & (j % 2 == 1)] == 8)
    assert np.all(val[(i + j) % 2 == 1] == 4)


def test_bad_inputs_rejected():
    with pytest.raises(ParameterError):
        build_preset("klein_bottle", 8)
    with pytest.raises(ParameterError):
        build_preset("flat_torus", 1)
    with pytest.raises(MeshIntegrityError):
        SurfaceMesh.build(np.zeros((3, 3)), [[0, 1, 1]])
    verts = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0.0]])
    with pytest.raises(MeshIntegrityError):
        SurfaceMesh.build(verts, [[0, 1, 2]], lengths={(0, 1): 1.0, (1, 2): 5.0, (0, 2): 1.0})


def test_text_round_trip(disc24):
    back = loads(dumps(disc24))
    assert np.array_equal(back.triangles, disc24.triangles)
    assert np.allclose(back.lengths, disc24.lengths, rtol=1e-14)
    assert len(back.boundary_loops) == 1


@settings(max_examples=20, deadline=None)
@given(c=st.floats(-1.0, 1.0), t=st.floats(0.0, 0.2))
def test_constant_conformal_factor_is_a_scaling(c, t):
    m = flat_torus(8)
    mt = conformal_family(m, np.full(m.n_vertices, c)).evaluate(t)
    assert np.allclose(mt.lengths, m.lengths * math.exp(c * t), rtol=1e-12)
    assert mt.area == pytest.approx(math.exp(2 * c * t), rel=1e-12)


def test_geodesic_distance_on_torus(torus32):
    d = torus32.geodesic_distance(0)
    far = torus32.nearest_vertex((0.5, 0.5))
    # edge-path metric on the union jack grid: diagonal steps reach the far corner exactly
    assert d[far] == pytest.approx(math.sqrt(0.5), rel=1e-12)
