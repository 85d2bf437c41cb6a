import numpy as np
import pytest

from nodal_atlas.errors import ConstructionError, ParameterError
from nodal_atlas.mesh import build_preset, euler_data, unit_disc
from nodal_atlas.surgery import DISC_REGION, HOST_REGION, excise, genus_surface, glue_disc, glue_meshes


def test_excise_makes_one_hole(torus32):
    m, loop = excise(torus32, (0.5, 0.5), 0.15)
    assert euler_data(m) == (1, 1)
    assert len(m.boundary_loops[loop]) >= 8
    assert m.area < torus32.area


def test_excise_errors(torus32, disc24):
    with pytest.raises(ParameterError):
        excise(torus32, (0.5, 0.5), 0.0)
    protected = np.zeros(torus32.n_vertices, bool)
    protected[torus32.nearest_vertex((0.5, 0.5))] = True
    with pytest.raises(ConstructionError):
        excise(torus32, (0.5, 0.5), 0.15, protected=protected)
    with pytest.raises(ConstructionError):
        excise(disc24, 0, 0.99)


def test_glue_disc_closes_the_hole(torus32):
    disc = unit_disc(8)
    m = glue_disc(torus32, disc, 0.1, point=(0.5, 0.5), excision_radius=0.15)
    assert euler_data(m) == (1, 0)
    assert set(np.unique(m.regions)) <= {HOST_REGION, DISC_REGION, 2}
    with pytest.raises(ParameterError):
        glue_disc(torus32, disc, 0.0, point=(0.5, 0.5), excision_radius=0.15)
    with pytest.raises(ParameterError):
        glue_disc(torus32, disc, 0.1)


@pytest.mark.parametrize("collar", [0, 2])
def test_glue_two_discs_into_a_sphere(collar):
    a, b = unit_disc(6), unit_disc(6)
    m = glue_meshes(a, 0, b, 0, collar_rings=collar)
    assert euler_data(m) == (0, 0)
    assert m.euler_characteristic() == 2


def test_mismatched_perimeters_get_a_collar():
    m = glue_meshes(unit_disc(6), 0, unit_disc(9, radius=2.0), 0)
    assert euler_data(m) == (0, 0)
    assert (m.regions == 2).any()


def test_genus_surface_errors():
    assert euler_data(genus_surface(24, 2)) == (2, 0)
    with pytest.raises(ParameterError):
        genus_surface(8, 4)
    with pytest.raises(ParameterError):
        build_preset("genus_m_surface", 16, m=0)
