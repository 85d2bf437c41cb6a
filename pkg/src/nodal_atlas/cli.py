"""Command-line entry point: one subcommand per experiment.

Every command prints a JSON report (sorted keys, fixed rounding) to stdout
and writes it to ``<output-dir>/<command>.json``. Exit status is 0 when all
enabled checks pass, 2 when a check fails and 1 on usage or numeric errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import arrangements, experiments
from .critical import GRAD_TOL, VAL_TOL, detect_nodal_critical_points
from .errors import NodalAtlasError, UsageError
from .mesh import PRESETS, build_preset
from .nodal import ZERO_TOL, count_nodal_domains, extract_nodal_set, min_inradius_times_sqrt_lambda
from .spectra import BCS, DEFAULT_TOL, solve_spectrum
from .svg import nodal_svg

EXIT_OK, EXIT_ERROR, EXIT_CHECK = 0, 1, 2
DEFAULT_RESOLUTION = {"flat_torus": 32, "round_sphere": 3, "unit_disc": 24, "rectangle": 24,
                      "genus_m_surface": 32}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _mesh_args(p, preset="flat_torus"):
    p.add_argument("--preset", choices=PRESETS, default=preset, help=f"surface (default {preset})")
    p.add_argument("--resolution", type=int, default=None,
                   help="grid size, subdivision level or ring count (preset-dependent default)")
    p.add_argument("--genus", type=int, default=1, help="genus for genus_m_surface (default 1)")
    p.add_argument("--bc", choices=BCS, default=None, help="boundary condition (closed surfaces: closed)")


def _tol_args(p):
    p.add_argument("--zero-tol", type=float, default=ZERO_TOL, help=f"relative zero class width (default {ZERO_TOL})")
    p.add_argument("--val-tol", type=float, default=VAL_TOL, help=f"critical value tolerance (default {VAL_TOL})")
    p.add_argument("--grad-tol", type=float, default=GRAD_TOL,
                   help=f"critical gradient tolerance (default {GRAD_TOL})")


def _sweep_args(p):
    p.add_argument("--preset", choices=("flat_torus", "round_sphere"), default="flat_torus")
    p.add_argument("--resolution", type=int, default=None, help="default 64 (torus) or 3 (sphere)")
    p.add_argument("--branch", choices=("checkerboard", "z", "scaling"), default="checkerboard")
    p.add_argument("--tmax", type=float, default=0.05, help="largest t (default 0.05)")
    p.add_argument("--steps", type=int, default=20, help="number of t steps after 0 (default 20)")
    p.add_argument("--config", default=None, help="JSON experiment config; overrides the flags above")
    _tol_args(p)


def build_parser():
    p = _Parser(prog="nodal-atlas", description=__doc__.splitlines()[0])
    p.add_argument("--output-dir", default=".", help="directory for reports and figures (default .)")
    p.add_argument("--seed", type=int, default=0, help="64-bit seed (default 0)")
    p.add_argument("--svg", action="store_true", help="also write SVG figures")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", help="lowest eigenpairs of a preset")
    _mesh_args(s)
    s.add_argument("--count", type=int, default=10, help="number of eigenpairs (default 10)")
    s.add_argument("--tol", type=float, default=DEFAULT_TOL, help=f"eigensolver tolerance (default {DEFAULT_TOL})")

    s = sub.add_parser("nodal", help="nodal domain counts and the Courant check")
    _mesh_args(s)
    s.add_argument("--count", type=int, default=20, help="check eigenfunctions 1..count (default 20)")
    s.add_argument("--zero-tol", type=float, default=ZERO_TOL)

    s = sub.add_parser("critical", help="nodal critical points with indices")
    _mesh_args(s)
    s.add_argument("--index", type=int, default=6,
                   help="1-based spectral position (default 6); in a degenerate cluster the basis is arbitrary")
    _tol_args(s)

    s = sub.add_parser("local-laws", help="local laws at the critical points of a perturbed branch")
    _sweep_args(s)
    s.add_argument("--t", type=float, default=0.01, help="perturbation parameter (default 0.01)")
    s.add_argument("--radius", type=float, default=None, help="ball radius (default 5 triangle diameters)")

    s = sub.add_parser("arrangements", help="sector identity on random and exhaustive arrangements")
    s.add_argument("--kmax", type=int, default=6)
    s.add_argument("--trials", type=int, default=1000)
    s.add_argument("--exhaustive-k", type=int, default=5)

    sub_sweep = sub.add_parser("sweep", help="perturbation sweep with global and local checks")
    _sweep_args(sub_sweep)

    s = sub.add_parser("inradius", help="inner radius stability along a sweep")
    _sweep_args(s)

    s = sub.add_parser("construct-courant", help="Courant sharp gluing construction")
    s.add_argument("--genus", type=int, default=1)
    s.add_argument("--k", type=int, default=4)
    s.add_argument("--eps", type=float, default=0.05)
    s.add_argument("--resolution", type=int, nargs="+", default=[12, 16],
                   help="vertices around the tube; one run per value (default 12 16)")

    s = sub.add_parser("prescribe-boundary", help="boundary intersection prescription")
    s.add_argument("--genus", type=int, default=1)
    s.add_argument("--n", type=int, nargs="+", default=[1, 3], help="angular orders n_i (default 1 3)")
    s.add_argument("--eps", type=float, default=0.05)
    s.add_argument("--resolution", type=int, default=24, help="ring count of the largest disc (default 24)")
    return p


def _mesh(a):
    res = a.resolution if a.resolution is not None else DEFAULT_RESOLUTION[a.preset]
    extra = {"m": a.genus} if a.preset == "genus_m_surface" else {}
    mesh = build_preset(a.preset, res, **extra)
    bc = a.bc or ("neumann" if mesh.boundary_loops else "closed")
    if bc == "closed" and mesh.boundary_loops:
        raise UsageError("surface has boundary; choose --bc neumann or dirichlet")
    if bc != "closed" and not mesh.boundary_loops:
        raise UsageError("closed surface takes --bc closed")
    return mesh, bc


def _write_svg(a, name, mesh, values, crit=()):
    if a.svg:
        ns = extract_nodal_set(mesh, values, getattr(a, "zero_tol", ZERO_TOL))
        with open(os.path.join(a.output_dir, name), "w") as fh:
            fh.write(nodal_svg(mesh, ns, crit, title=name))


def cmd_solve(a):
    mesh, bc = _mesh(a)
    spec = solve_spectrum(mesh, a.count, bc, tol=a.tol)
    return spec.report() | {"preset": a.preset, "n_vertices": mesh.n_vertices}, True


def cmd_nodal(a):
    mesh, bc = _mesh(a)
    spec = solve_spectrum(mesh, a.count, bc)
    rows = []
    for p in spec.pairs:
        nu, ok = count_nodal_domains(mesh, p.values, a.zero_tol, p.index_in_spectrum)
        rows.append({"k": p.index_in_spectrum, "lam": p.lam, "nu": nu, "courant_ok": ok})
        _write_svg(a, f"nodal_{p.index_in_spectrum:02d}.svg", mesh, p.values)
    return {"preset": a.preset, "bc": bc, "rows": rows}, all(r["courant_ok"] for r in rows)


def cmd_critical(a):
    mesh, bc = _mesh(a)
    # a few extra pairs so the cluster of the requested eigenvalue is complete
    spec = solve_spectrum(mesh, a.index + 8, bc)
    p = spec.pairs[a.index - 1]
    crit = detect_nodal_critical_points(mesh, p.values, a.val_tol, a.grad_tol, zero_tol=a.zero_tol)
    _write_svg(a, f"critical_{a.index:02d}.svg", mesh, p.values, crit)
    return {"preset": a.preset, "index": a.index, "lam": p.lam,
            "degenerate": len(spec.cluster_of(a.index - 1)) > 1,
            "critical_points": [c.row() | {"warnings": list(c.warnings)} for c in crit]}, True


def _config(a):
    if a.config:
        with open(a.config) as fh:
            return experiments.ExperimentConfig.loads(fh.read())
    branch = a.branch
    if branch == "checkerboard" and a.preset != "flat_torus" or branch == "z" and a.preset != "round_sphere":
        raise UsageError(f"branch {branch} is not available on {a.preset}")
    res = a.resolution or (64 if a.preset == "flat_torus" else 3)
    if a.steps < 1 or a.tmax <= 0:
        raise UsageError("need --steps >= 1 and --tmax > 0")
    t_list = [a.tmax * i / a.steps for i in range(a.steps + 1)]
    tol = {"zero_tol": a.zero_tol, "val_tol": a.val_tol, "grad_tol": a.grad_tol}
    return experiments.ExperimentConfig(a.preset, res, a.seed, t_list, branch, tol, a.output_dir)


def _setup(cfg):
    if cfg.branch == "checkerboard":
        return experiments.checkerboard_setup(cfg.resolution, cfg.f_seed)
    if cfg.branch == "z":
        return experiments.sphere_z_setup(cfg.resolution, cfg.f_seed)
    return experiments.scaling_setup(cfg.preset, cfg.resolution)


def cmd_sweep(a):
    cfg = _config(a)
    rep = experiments.run_config(cfg)
    if a.svg:
        fam, ref, _ = _setup(cfg)
        _write_svg(a, "sweep_t0.svg", fam.base, ref.values)
    return rep.as_dict(), rep.ok


def cmd_inradius(a):
    cfg = _config(a)
    fam, ref, _ = _setup(cfg)
    vals, ok = experiments.inner_radius_sweep(fam, ref, cfg.t_list)
    return {"t_values": cfg.t_list, "inrad_sqrtlambda": vals, "t0_direct":
            min_inradius_times_sqrt_lambda(fam.base, ref.values, ref.lam), "ok": ok}, ok


def cmd_local_laws(a):
    cfg = _config(a)
    fam, ref, _ = _setup(cfg)
    rep = experiments.perturbation_sweep(fam, ref, [0.0, a.t], r=a.radius, **cfg.tolerances,
                                         allow_projection=cfg.branch == "scaling")
    laws = rep.local_laws[-1] or []
    ok = rep.checks["branch_matched"] and rep.checks["local_laws"]
    return {"t": a.t, "radius": rep.config["r"], "critical_points_0": rep.critical_sets[0],
            "critical_points_t": rep.critical_sets[-1], "laws": laws, "ok": ok}, ok


def cmd_arrangements(a):
    rep = arrangements.sector_identity_sweep(a.kmax, a.trials, a.seed, a.exhaustive_k)
    return rep.as_dict(), rep.ok


def cmd_construct_courant(a):
    runs, ok = [], True
    for res in a.resolution:
        mesh, rep = experiments.courant_sharp_construction(a.genus, a.k, a.eps, res)
        runs.append(rep.as_dict() | {"n_vertices": mesh.n_vertices})
        ok &= rep.ok
    nus = {tuple(r["nu"]) for r in runs}
    return {"runs": runs, "resolution_consistent": len(nus) == 1, "ok": ok and len(nus) == 1}, ok and len(nus) == 1


def cmd_prescribe_boundary(a):
    mesh, rep = experiments.boundary_prescription(a.genus, a.n, a.eps, a.resolution)
    return rep.as_dict() | {"n_vertices": mesh.n_vertices}, rep.ok


COMMANDS = {"solve": cmd_solve, "nodal": cmd_nodal, "critical": cmd_critical, "local-laws": cmd_local_laws,
            "arrangements": cmd_arrangements, "sweep": cmd_sweep, "inradius": cmd_inradius,
            "construct-courant": cmd_construct_courant, "prescribe-boundary": cmd_prescribe_boundary}


def _round(x):
    if isinstance(x, dict):
        return {str(k): _round(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_round(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return round(float(x), 10) if np.isfinite(x) else None
    return x


def run(argv=None):
    """Parse ``argv`` and run one command; returns the exit status."""
    try:
        a = build_parser().parse_args(argv)
        if not 0 <= a.seed < 2 ** 64:
            raise UsageError("seed must be a 64-bit unsigned integer")
        os.makedirs(a.output_dir, exist_ok=True)
        report, ok = COMMANDS[a.command](a)
    except (NodalAtlasError, ValueError, OSError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return EXIT_ERROR
    text = json.dumps(_round({"command": a.command, "seed": a.seed, "ok": bool(ok), "report": report}),
                      sort_keys=True, indent=1)
    with open(os.path.join(a.output_dir, f"{a.command}.json"), "w") as fh:
        fh.write(text + "\n")
    print(text)
    return EXIT_OK if ok else EXIT_CHECK


def main():
    sys.exit(run())
