"""Acceptance criteria 1-10, each printing one PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` (lines are repeated in the
terminal summary) or directly with ``python3 tests/test_acceptance.py``.
"""

import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from conftest import ACCEPTANCE_LINES  # noqa: E402

from nodal_atlas import experiments as ex  # noqa: E402
from nodal_atlas.arrangements import sector_identity_sweep  # noqa: E402
from nodal_atlas.bessel import jn_prime_zeros  # noqa: E402
from nodal_atlas.critical import index_at, random_trig_polynomial, sign_changes, zero_count_on_loop  # noqa: E402
from nodal_atlas.mesh import build_preset  # noqa: E402
from nodal_atlas.nodal import boundary_intersection_count, count_nodal_domains  # noqa: E402
from nodal_atlas.spectra import disc_bessel_mode, match_branch, solve_spectrum  # noqa: E402

SWEEP_SEEDS = range(5)
SWEEP_T = [0.0] + [0.005 * i for i in range(1, 11)]
SWEEP_RES = 64


def report(n, ok, detail, seconds, limit=None):
    timing = f"{seconds:.1f}s" + (f" (limit {limit}s)" if limit else "")
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} | {detail} | {timing}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


@pytest.fixture(scope="module")
def sweeps():
    t0 = time.perf_counter()
    reps = []
    for seed in SWEEP_SEEDS:
        fam, ref, _ = ex.checkerboard_setup(SWEEP_RES, seed)
        reps.append(ex.perturbation_sweep(fam, ref, SWEEP_T))
    return reps, time.perf_counter() - t0


def test_criterion_01_sector_identity():
    t0 = time.perf_counter()
    rep = sector_identity_sweep(6, 1000, seed=7, exhaustive_k=5)
    dt = time.perf_counter() - t0
    n_exh = sum(v["valid"] for v in rep.exhaustive.values())
    ok = rep.ok and not rep.counterexamples and dt < 120
    assert report(1, ok, f"{6 * 1000} random + {n_exh} exhaustive arrangements, "
                         f"{len(rep.counterexamples)} counterexamples", dt, 120)


def test_criterion_02_index_law():
    t0 = time.perf_counter()
    disc = build_preset("unit_disc", 24)
    x, y = disc.vertices[:, 0], disc.vertices[:, 1]
    r, th = np.hypot(x, y), np.arctan2(y, x)
    got = {k: index_at(disc, r ** k * np.cos(k * th), 0, 0.3) for k in range(2, 7)}
    peak = index_at(disc, -(x ** 2 + y ** 2), 0, 0.3)
    ok = all(got[k] == 1 - k for k in got) and peak == 1
    assert report(2, ok, f"indices {got}, max {peak}", time.perf_counter() - t0)


def test_criterion_03_zero_count_integral():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    x = np.linspace(0, 2 * np.pi, 4096, endpoint=False)
    worst, mismatches = 0.0, 0
    for _ in range(200):
        psi, d1, d2 = random_trig_polynomial(rng).derivatives(x)
        n, integral = zero_count_on_loop(psi, d1, d2)
        worst = max(worst, abs(integral - n))
        mismatches += n != sign_changes(psi)
    dt = time.perf_counter() - t0
    ok = mismatches == 0 and worst < 0.1 and dt < 30
    assert report(3, ok, f"200 polynomials, {mismatches} mismatches, max residual {worst:.2e}", dt, 30)


def test_criterion_04_disc_bessel_spectrum():
    t0 = time.perf_counter()
    disc = build_preset("unit_disc", 58)
    spec = solve_spectrum(disc, 12, "neumann")
    x, y = disc.vertices[:, 0], disc.vertices[:, 1]
    r, th = np.hypot(x, y), np.arctan2(y, x)
    rows, ok = [], disc.n_triangles >= 19000
    for n in (1, 2, 3):
        root = jn_prime_zeros(n, 1)[0]
        pair, _ = match_branch(disc_bessel_mode(n)(r, th), spec, allow_projection=True)
        err = abs(pair.lam / root ** 2 - 1)
        hits = boundary_intersection_count(disc, pair.values)
        rows.append(f"n={n}: rel err {err:.2e}, hits {hits}")
        ok &= hits == 2 * n and (n > 1 or err < 0.02)
    ok &= abs(jn_prime_zeros(1, 1)[0] ** 2 - 3.3900) < 1e-4
    dt = time.perf_counter() - t0
    ok &= dt < 180
    assert report(4, ok, f"{disc.n_triangles} triangles; " + "; ".join(rows), dt, 180)


def test_criterion_05_local_sector_law(sweeps):
    reps, dt = sweeps
    n_cross, bad = 0, []
    for seed, rep in zip(SWEEP_SEEDS, reps):
        if rep.skipped:
            bad.append(f"seed {seed} skipped {rep.skipped}")
        for t, laws in zip(rep.t_values[1:], rep.local_laws[1:]):
            for law in laws or []:
                if law.get("k") != 2:
                    continue
                n_cross += 1
                rows = {r["law_id"]: r["pass"] for r in law.get("rows", [])}
                if not (law.get("ok") and all(rows.values()) and law["Ft"] == law["F0"] - law["Ct"] + 1
                        and law["hitst"] == law["hits0"]):
                    bad.append(f"seed {seed} t {t} centre {law['center']}")
    ok = not bad and n_cross > 0 and dt < 600
    assert report(5, ok, f"{len(reps)} factors x {len(SWEEP_T) - 1} t-values, {n_cross} crossing checks, "
                         f"{len(bad)} failures", dt, 600)


def test_criterion_06_monotonicity_and_bounds(sweeps):
    reps, dt = sweeps
    ok = True
    for rep in reps:
        nu0 = rep.nu[0]
        ok &= nu0 == 4 and rep.cardinality_bound == 4
        for nu, dec, bound, card in zip(rep.nu, rep.decrement, rep.decrement_bound, rep.cardinality):
            ok &= nu is not None and nu <= nu0 and dec <= bound and card <= 4
    nus = sorted({n for rep in reps for n in rep.nu})
    assert report(6, ok, f"nu values {nus}, cardinality bound {reps[0].cardinality_bound}", dt)


def test_criterion_07_courant_bound():
    t0 = time.perf_counter()
    worst = []
    ok = True
    for preset, res, bc in (("flat_torus", 48, "closed"), ("round_sphere", 4, "closed"),
                            ("unit_disc", 32, "neumann")):
        mesh = build_preset(preset, res)
        for p in solve_spectrum(mesh, 20, bc).pairs:
            nu, flag = count_nodal_domains(mesh, p.values, index_in_spectrum=p.index_in_spectrum)
            ok &= flag
        worst.append(preset)
    dt = time.perf_counter() - t0
    ok &= dt < 300
    assert report(7, ok, f"nu(phi_k) <= k for k <= 20 on {', '.join(worst)}", dt, 300)


def test_criterion_08_courant_sharp_construction():
    t0 = time.perf_counter()
    rows, ok = [], True
    for res in (12, 16):
        _, rep = ex.courant_sharp_construction(1, 4, 0.05, res)
        ok &= rep.ok and rep.nu == [1, 2, 3, 4]
        rows.append(f"res {res}: nu {rep.nu}, closed {all(rep.closed_in_disc)}")
    dt = time.perf_counter() - t0
    ok &= dt < 900
    assert report(8, ok, "; ".join(rows), dt, 900)


def test_criterion_09_boundary_prescription():
    t0 = time.perf_counter()
    _, rep = ex.boundary_prescription(1, (1, 3), 0.05, 24)
    dt = time.perf_counter() - t0
    ok = rep.counts == [2, 6] and rep.ok and rep.consecutive and dt < 900
    assert report(9, ok, f"counts {rep.counts} (expected [2, 6]), branches {rep.branch_indices}", dt, 900)


def test_criterion_10_inner_radius_stability(sweeps):
    reps, dt = sweeps
    lo, spread = math.inf, 0.0
    for rep in reps:
        vals = [v for v in rep.inrad_sqrtlambda if v is not None]
        lo = min(lo, min(vals))
        spread = max(spread, (max(vals) - min(vals)) / max(vals))
    ok = lo > 0.5 and spread <= 0.5
    assert report(10, ok, f"min inrad*sqrt(lambda) {lo:.3f} (floor 0.5), max relative variation {spread:.3f}", dt)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
