import json
import math

import numpy as np
import pytest

from nodal_atlas import experiments as ex
from nodal_atlas.errors import ParameterError, UsageError

T_LIST = [0.0, 0.01, 0.03, 0.05]


@pytest.fixture(scope="module")
def checker32():
    return ex.checkerboard_setup(32, 2)


def test_symmetries_are_permutations(torus32, sphere3):
    for perm, order in ((ex.torus_quarter_turn(torus32), 4), (ex.sphere_half_turn(sphere3), 2)):
        assert sorted(perm.tolist()) == list(range(len(perm)))
        cur = np.arange(len(perm))
        for _ in range(order):
            cur = perm[cur]
        assert np.array_equal(cur, np.arange(len(perm)))
    with pytest.raises(ParameterError):
        ex.torus_quarter_turn(sphere3)


def test_random_factor_is_symmetric_and_normalised(torus32):
    perm = ex.torus_quarter_turn(torus32)
    f = ex.random_conformal_factor(torus32, 4, perm)
    assert np.abs(f).max() == pytest.approx(1.0)
    assert np.allclose(f[perm], f)
    assert np.array_equal(f, ex.random_conformal_factor(torus32, 4, perm))


def test_checkerboard_sweep(checker32):
    fam, ref, ov = checker32
    assert ov > 0.9999
    rep = ex.perturbation_sweep(fam, ref, T_LIST)
    assert rep.ok, rep.checks
    assert rep.nu[0] == 4 and all(n in (2, 3, 4) for n in rep.nu)
    assert rep.cardinality_bound == 4
    for laws in rep.local_laws[1:]:
        assert len(laws) == 4 and all(l["ok"] for l in laws)
        assert sorted((l["Ct"], l["Ft"]) for l in laws) == [(1, 4), (1, 4), (2, 3), (2, 3)]
    d = rep.as_dict()
    json.dumps(d)
    assert len(d["t_values"]) == len(d["nu"]) == len(d["branch_overlaps"]) == len(T_LIST)


def test_t_zero_reproduces_reference(checker32):
    from nodal_atlas.critical import detect_nodal_critical_points
    from nodal_atlas.nodal import count_nodal_domains
    fam, ref, _ = checker32
    rep = ex.perturbation_sweep(fam, ref, [0.0], local_graphs=False)
    assert rep.nu == [count_nodal_domains(fam.base, ref.values)]
    assert rep.critical_sets[0] == [c.row() for c in detect_nodal_critical_points(fam.base, ref.values)]


def test_sweep_requires_t_zero(checker32):
    fam, ref, _ = checker32
    with pytest.raises(ParameterError):
        ex.perturbation_sweep(fam, ref, [0.01])


def test_sphere_z_sweep():
    fam, ref, _ = ex.sphere_z_setup(3, 1)
    rep = ex.perturbation_sweep(fam, ref, T_LIST)
    assert rep.ok and rep.nu == [2] * 4 and rep.cardinality == [0] * 4
    target = math.pi / 2 * math.sqrt(2)
    assert all(abs(v / target - 1) < 0.1 for v in rep.inrad_sqrtlambda)


@pytest.mark.parametrize("preset,res", [("flat_torus", 16), ("round_sphere", 2)])
def test_scaling_is_invariant(preset, res):
    fam, ref, _ = ex.scaling_setup(preset, res, c=0.8)
    rep = ex.perturbation_sweep(fam, ref, T_LIST, allow_projection=True)
    assert rep.ok
    assert len(set(rep.nu)) == 1 and len(set(map(len, rep.critical_sets))) == 1
    assert np.ptp(rep.inrad_sqrtlambda) < 1e-9


def test_threads_do_not_change_results(checker32, monkeypatch):
    fam, ref, _ = checker32
    a = ex.perturbation_sweep(fam, ref, T_LIST, local_graphs=False).as_dict()
    monkeypatch.setenv("NODAL_ATLAS_THREADS", "3")
    b = ex.perturbation_sweep(fam, ref, T_LIST, local_graphs=False).as_dict()
    assert a == b
    monkeypatch.setenv("NODAL_ATLAS_THREADS", "many")
    with pytest.raises(UsageError):
        ex.worker_count()


def test_inner_radius_sweep(checker32):
    fam, ref, _ = checker32
    vals, ok = ex.inner_radius_sweep(fam, ref, T_LIST)
    assert ok and min(vals) > 0.5


def test_cigar_disc_is_a_disc():
    d = ex.cigar_disc(0.05, 1.0, 12)
    assert d.euler_characteristic() == 1 and len(d.boundary_loops) == 1
    perim = sum(np.linalg.norm(d.vertices[a] - d.vertices[b])
                for a, b in zip(d.boundary_loops[0], np.roll(d.boundary_loops[0], -1)))
    assert perim == pytest.approx(2 * math.pi * 0.05, rel=0.02)
    with pytest.raises(ParameterError):
        ex.cigar_disc(1.0, 1.0)


def test_courant_construction():
    mesh, rep = ex.courant_sharp_construction(1, 4, 0.05, 12)
    assert rep.ok and rep.nu == [1, 2, 3, 4] and rep.components == [0, 1, 2, 3]
    assert rep.genus == 1
    with pytest.raises(ParameterError):
        ex.courant_sharp_construction(1, 7, 0.05, 12)
    with pytest.raises(ParameterError):
        ex.courant_sharp_construction(1, 4, 0.5, 12)


def test_courant_construction_genus_two():
    mesh, rep = ex.courant_sharp_construction(2, 3, 0.05, 12)
    assert rep.genus == 2 and rep.nu == [1, 2, 3] and rep.ok


@pytest.mark.parametrize("n_list,counts", [((1,), [2]), ((0,), [0]), ((2,), [4])])
def test_boundary_prescription_single(n_list, counts):
    mesh, rep = ex.boundary_prescription(1, n_list, 0.05, 16)
    assert rep.counts == counts and rep.ok


def test_boundary_prescription_errors():
    with pytest.raises(ParameterError):
        ex.boundary_prescription(1, (6,))
    with pytest.raises(ParameterError):
        ex.boundary_prescription(1, ())


def test_config_round_trip_and_validation(tmp_path):
    cfg = ex.ExperimentConfig("flat_torus", 16, 3, [0.0, 0.02], "scaling", {}, str(tmp_path))
    assert ex.ExperimentConfig.loads(cfg.dumps()) == cfg
    with pytest.raises(UsageError):
        ex.ExperimentConfig.from_dict({"preset": "flat_torus", "colour": "red"})
    with pytest.raises(UsageError):
        ex.run_config(ex.ExperimentConfig("round_sphere", 2, 0, [0.0], "checkerboard"))
    a, b = ex.run_config(cfg).as_dict(), ex.run_config(cfg).as_dict()
    assert a == b and a["config"]["f_seed"] == 3
