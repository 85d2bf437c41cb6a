import numpy as np
import pytest

from nodal_atlas.errors import UsageError
from nodal_atlas.graph import build_local_graph, local_sector_count, verify_local_laws

from conftest import polar, torus_xy


@pytest.fixture(scope="module")
def checker(torus64):
    x, y = torus_xy(torus64)
    return np.sin(2 * np.pi * x) * np.sin(2 * np.pi * y)


def test_crossing_graph(torus64, checker):
    g = build_local_graph(torus64, checker, 0, 0.1)
    s = g.summary()
    assert (s["vertices"], s["orders"], s["half_edges"], s["C"], s["F"], s["boundary_hits"]) == (1, [2], 4, 1, 4, 4)
    assert g.is_forest and g.vertex_indices() == [-1]


@pytest.mark.parametrize("delta,C,F,through", [(0.02, 2, 3, 2), (-0.02, 2, 3, 2)])
def test_resolved_crossing(torus64, checker, delta, C, F, through):
    x, y = torus_xy(torus64)
    u = checker + delta * np.cos(2 * np.pi * (x - y))
    g0 = build_local_graph(torus64, checker, 0, 0.1)
    gt = build_local_graph(torus64, u, 0, 0.1)
    assert (gt.components, gt.sectors, gt.through_arcs, len(gt.vertices)) == (C, F, through, 0)
    rep = verify_local_laws(g0, gt, 2)
    assert rep.ok
    assert rep.row("c")["lhs"] == rep.row("c")["rhs"] == 3


def test_empty_nodal_set(torus64):
    x, _ = torus_xy(torus64)
    g = build_local_graph(torus64, np.cos(2 * np.pi * x) + 2.0, 0, 0.1)
    assert (g.components, g.sectors, len(g.boundary_hits)) == (0, 1, 0)


def test_higher_order_crossing(disc24):
    r, th = polar(disc24)
    g = build_local_graph(disc24, r ** 3 * np.cos(3 * th + 0.1), 0, 0.3)
    assert [o for _, _, o in g.vertices] == [3]
    assert g.sectors == 6 and len(g.boundary_hits) == 6
    assert local_sector_count(disc24, r ** 3 * np.cos(3 * th + 0.1), 0, 0.3) == 6


def test_law_rows_detect_violations(torus64, checker):
    g0 = build_local_graph(torus64, checker, 0, 0.1)
    rep = verify_local_laws(g0, g0, 1)
    assert not rep.ok
    assert not rep.row("a")["pass"] and not rep.row("d")["pass"]
    assert "pass=False" in rep.text()


def test_law_check_needs_matching_balls(torus64, checker):
    g0 = build_local_graph(torus64, checker, 0, 0.1)
    g1 = build_local_graph(torus64, checker, 0, 0.12)
    with pytest.raises(UsageError):
        verify_local_laws(g0, g1, 2)
