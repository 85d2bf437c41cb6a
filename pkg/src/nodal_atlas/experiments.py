"""Perturbation sweeps and gluing constructions, with every check recomputed.

Branches at a degenerate eigenvalue are fixed at ``t = 0`` by first-order
degenerate perturbation theory; the random conformal factors are averaged
over a symmetry of the base mesh that singles out the wanted branch (a
quarter turn of the torus for the checkerboard mode, a half turn about the
z-axis for the sphere's z mode) while leaving everything else generic.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import surgery
from .critical import GRAD_TOL, VAL_TOL, detect_nodal_critical_points
from .errors import (BranchAmbiguityError, ConstructionError, ParameterError, RadiusAdjustmentError,
                     SolverError, UsageError)
from .graph import build_local_graph, verify_local_laws
from .mesh import SurfaceMesh, build_preset, conformal_family, euler_data, revolution_disc, unit_disc
from .nodal import ZERO_TOL, boundary_intersection_count, extract_nodal_set, inner_radius, label_pieces
from .spectra import (disc_bessel_mode, inner, limit_branches, match_branch, solve_spectrum)

LOCAL_RADIUS_DIAMETERS = 5.0
NUDGE = 1e-2
TRACK_RTOL = 1e-6  # eigenvalue gaps below this are treated as unresolved


def worker_count():
    try:
        return max(1, int(os.environ.get("NODAL_ATLAS_THREADS", "1")))
    except ValueError:
        raise UsageError("NODAL_ATLAS_THREADS must be an integer") from None


def _map(fn, items):
    n = worker_count()
    if n == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))


# --------------------------------------------------------------- symmetries
def torus_quarter_turn(mesh):
    """Vertex permutation of ``(x, y) -> (-y, x)`` on a square flat torus."""
    n = int(mesh.tags.get("resolution", 0))
    if mesh.tags.get("preset") != "flat_torus" or mesh.n_vertices != n * n:
        raise ParameterError("quarter turn needs a flat_torus preset mesh")
    v = np.arange(n * n)
    i, j = v % n, v // n
    return (-j) % n + i * n


def point_symmetry(mesh, transform, tol=1e-9):
    """Vertex permutation induced by an isometry of the display coordinates."""
    img = transform(mesh.vertices)
    perm = np.array([mesh.nearest_vertex(p) for p in img])
    if np.abs(mesh.vertices[perm] - img).max() > tol:
        raise ParameterError("mesh is not invariant under the requested symmetry")
    return perm


def sphere_half_turn(mesh):
    return point_symmetry(mesh, lambda p: p * np.array([-1.0, -1.0, 1.0]))


def symmetrize(f, perm):
    """Average ``f`` over the cyclic group generated by ``perm``."""
    acc, cur, k = np.array(f, float), np.arange(len(f)), 1
    while True:
        cur = perm[cur]
        if np.array_equal(cur, np.arange(len(f))):
            break
        acc += f[cur]
        k += 1
        if k > 64:
            raise ParameterError("symmetry has no small finite order")
    return acc / k


def random_conformal_factor(mesh, seed, symmetry=None, modes=3):
    """Smooth random factor with ``max |f| = 1``, optionally symmetrised."""
    rng = np.random.default_rng(seed)
    p = mesh.vertices
    f = np.zeros(mesh.n_vertices)
    if mesh.tags.get("preset") == "flat_torus":
        w, h = mesh.tags.get("width", 1.0), mesh.tags.get("height", 1.0)
        for a in range(-modes, modes + 1):
            for b in range(-modes, modes + 1):
                if a == 0 and b == 0:
                    continue
                c = rng.normal() / (1 + a * a + b * b)
                f += c * np.cos(2 * np.pi * (a * p[:, 0] / w + b * p[:, 1] / h) + rng.uniform(0, 2 * np.pi))
    else:
        q = p / np.abs(p).max()
        for a in range(modes + 1):
            for b in range(modes + 1 - a):
                for c in range(modes + 1 - a - b):
                    if a + b + c:
                        f += rng.normal() * q[:, 0] ** a * q[:, 1] ** b * q[:, 2] ** c
    if symmetry is not None:
        f = symmetrize(f, symmetry)
    return f / np.abs(f).max()


# ----------------------------------------------------------------- branches
def reference_branch(family, target, count, bc="closed"):
    """Limit branch at ``t = 0`` closest to the sampled function ``target``.

    Returns ``(pair, overlap, cluster)``; a simple eigenvalue is matched
    directly, a cluster is resolved with :func:`limit_branches`.
    """
    spec = solve_spectrum(family.base, count, bc)
    tgt = np.asarray(target, float)
    tgt = tgt / math.sqrt(inner(tgt, tgt, spec.mass))
    best = max(spec.degenerate_clusters,
               key=lambda c: np.linalg.norm([inner(tgt, spec.pairs[i].values, spec.mass) for i in c]))
    if len(best) == 1:
        pair, ov = match_branch(tgt, spec)
        return pair, ov, best
    branches = limit_branches(family, spec, best, bc)
    slopes = np.array([s for s, _ in branches])
    ovs = [abs(inner(tgt, p.values, spec.mass)) for _, p in branches]
    k = int(np.argmax(ovs))
    gap = np.min(np.abs(np.delete(slopes, k) - slopes[k])) if len(slopes) > 1 else np.inf
    if gap < 1e-6 * max(1.0, np.abs(slopes).max()):
        raise BranchAmbiguityError("limit branch is not separated to first order", overlap=ovs[k])
    pair = branches[k][1]
    if inner(tgt, pair.values, spec.mass) < 0:
        pair = type(pair)(pair.lam, -pair.values, pair.bc, pair.index_in_spectrum, pair.residual)
    return pair, float(ovs[k]), best


def checkerboard_setup(resolution=64, seed=0):
    """Flat torus, quarter-turn symmetric random factor and the sin*sin branch."""
    mesh = build_preset("flat_torus", resolution)
    f = random_conformal_factor(mesh, seed, torus_quarter_turn(mesh))
    fam = conformal_family(mesh, f)
    x, y = mesh.vertices[:, 0], mesh.vertices[:, 1]
    ref, ov, _ = reference_branch(fam, np.sin(2 * np.pi * x) * np.sin(2 * np.pi * y), 10)
    return fam, ref, ov


def sphere_z_setup(resolution=3, seed=0):
    mesh = build_preset("round_sphere", resolution)
    f = random_conformal_factor(mesh, seed, sphere_half_turn(mesh))
    fam = conformal_family(mesh, f)
    ref, ov, _ = reference_branch(fam, mesh.vertices[:, 2], 6)
    return fam, ref, ov


def scaling_setup(preset="flat_torus", resolution=64, c=1.0):
    """Constant factor: a pure rescaling, with the checkerboard or z branch."""
    mesh = build_preset(preset, resolution)
    fam = conformal_family(mesh, np.full(mesh.n_vertices, float(c)))
    if preset == "flat_torus":
        x, y = mesh.vertices[:, 0], mesh.vertices[:, 1]
        target, count = np.sin(2 * np.pi * x) * np.sin(2 * np.pi * y), 10
    else:
        target, count = mesh.vertices[:, 2], 6
    pair, ov = match_branch(target, solve_spectrum(mesh, count), allow_projection=True)
    return fam, pair, ov


# ------------------------------------------------------------------ sweeps
@dataclass
class PerturbationReport:
    t_values: list
    nu: list
    critical_sets: list
    localization_ok: list
    decrement: list
    decrement_bound: list
    cardinality_bound: int
    cardinality: list
    inrad_sqrtlambda: list
    branch_overlaps: list
    lam: list
    outer_region_counts: list
    local_laws: list
    skipped: list
    checks: dict
    config: dict = field(default_factory=dict)

    @property
    def ok(self):
        return all(self.checks.values())

    def as_dict(self):
        return _jsonable(asdict(self) | {"ok": self.ok})


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        return None if not math.isfinite(x) else round(float(x), 10)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    return x


def _min_inrad(mesh, values, lam, ns):
    radii = [inner_radius(mesh, ns, d, values) for d in range(ns.nu)]
    return float(min(radii) * math.sqrt(max(lam, 0.0)))


def perturbation_sweep(family, branch_reference, t_list, r=None, count=None, bc="closed",
                       zero_tol=ZERO_TOL, val_tol=VAL_TOL, grad_tol=GRAD_TOL, local_graphs=True,
                       threshold=0.8, allow_projection=False):
    """Follow one eigenbranch along ``t_list`` and evaluate the nodal laws.

    At each ``t`` the branch is matched to the previous accepted one; a
    branch-ambiguity error marks the step skipped, unless ``allow_projection``
    is set, in which case a persistent cluster is followed by projecting the
    previous branch onto it (the right choice for a pure rescaling). Checks (all recomputed):

    * ``monotone``: nu(t) <= nu(0);
    * ``decrement``: nu(0) - nu(t) <= sum |ind_0| - sum |ind_t|;
    * ``cardinality``: |S_t| <= min(nu(0) + 2 (g - 1), sum |ind_0|);
    * ``localization``: S_t lies within ``r`` of S_0;
    * ``no_critical_invariance``: nu constant when S_0 is empty;
    * ``outer_region``: domain count outside the balls B(p, r), p in S_0, constant;
    * ``local_laws``: the five local laws at every point of S_0;
    * ``inradius``: min inrad * sqrt(lambda) > 0 with relative variation <= 50%.
    """
    t_list = [float(t) for t in t_list]
    if 0.0 not in t_list:
        raise ParameterError("t_list must include 0")
    base = family.base
    genus, _ = euler_data(base)
    r = LOCAL_RADIUS_DIAMETERS * base.triangle_diameter() if r is None else float(r)
    count = branch_reference.index_in_spectrum + 6 if count is None else count
    ref = branch_reference
    ns0 = extract_nodal_set(base, ref.values, zero_tol)
    S0 = detect_nodal_critical_points(base, ref.values, val_tol, grad_tol, zero_tol=zero_tol)
    ind0 = sum(abs(c.index) for c in S0)
    card_bound = min(ns0.nu + 2 * (genus - 1), ind0) if S0 else 0
    d0 = [base.geodesic_distance(c.vertex) for c in S0]
    dmin = np.min(d0, axis=0) if S0 else np.full(base.n_vertices, np.inf)
    outer_mask = dmin[base.triangles].mean(axis=1) >= r  # M minus the balls around S_0
    graphs0 = {}
    if local_graphs:
        for c in S0:
            graphs0[c.vertex] = build_local_graph(base, ref.values, c.vertex, r)

    def solve_t(t):
        mesh = family.evaluate(t)
        if t == 0.0:
            return t, mesh, None
        try:
            return t, mesh, solve_spectrum(mesh, count, bc)
        except SolverError as exc:
            return t, mesh, exc

    solved = _map(solve_t, sorted(set(t_list), key=abs))
    rows = {}
    prev = ref
    for t, mesh, spec in solved:
        if t == 0.0:
            rows[t] = (mesh, ref, 1.0)
            continue
        if isinstance(spec, Exception):
            rows[t] = None
            continue
        try:
            pair, ov = match_branch(prev, spec, threshold=threshold, allow_projection=allow_projection,
                                    cluster_rtol=TRACK_RTOL)
        except BranchAmbiguityError:
            rows[t] = None
            continue
        rows[t] = (mesh, pair, ov)
        prev = pair
    rep = dict(t_values=t_list, nu=[], critical_sets=[], localization_ok=[], decrement=[], decrement_bound=[],
               cardinality=[], inrad_sqrtlambda=[], branch_overlaps=[], lam=[], outer_region_counts=[],
               local_laws=[], skipped=[])
    for t in t_list:
        row = rows[t]
        if row is None:
            rep["skipped"].append(t)
            for key in ("nu", "critical_sets", "localization_ok", "decrement", "decrement_bound", "cardinality",
                        "inrad_sqrtlambda", "branch_overlaps", "lam", "outer_region_counts", "local_laws"):
                rep[key].append(None)
            continue
        mesh, pair, ov = row
        ns = extract_nodal_set(mesh, pair.values, zero_tol)
        St = S0 if t == 0.0 else detect_nodal_critical_points(mesh, pair.values, val_tol, grad_tol,
                                                              zero_tol=zero_tol)
        indt = sum(abs(c.index) for c in St)
        rep["nu"].append(ns.nu)
        rep["critical_sets"].append([c.row() for c in St])
        rep["localization_ok"].append(all(dmin[c.vertex] < r for c in St) if S0 else not St)
        rep["decrement"].append(ns0.nu - ns.nu)
        rep["decrement_bound"].append(ind0 - indt)
        rep["cardinality"].append(len(St))
        rep["inrad_sqrtlambda"].append(_min_inrad(mesh, pair.values, pair.lam, ns))
        rep["branch_overlaps"].append(ov)
        rep["lam"].append(pair.lam)
        if S0:
            _, n_out = label_pieces(mesh, ns.vertex_class, outer_mask)
        else:
            n_out = ns.nu
        rep["outer_region_counts"].append(n_out)
        laws = []
        for c in S0 if local_graphs else []:
            try:
                gt = build_local_graph(mesh, pair.values, c.vertex, r, zero_tol, ball_mesh=base)
            except RadiusAdjustmentError as exc:
                laws.append({"center": c.vertex, "error": str(exc)})
                continue
            g0 = graphs0[c.vertex]
            if not math.isclose(g0.radius, gt.radius):
                g0 = build_local_graph(base, ref.values, c.vertex, gt.radius, zero_tol, retries=0)
            lr = verify_local_laws(g0, gt, c.vanishing_order)
            laws.append({"center": c.vertex, "x": c.location[0], "y": c.location[1], "k": c.vanishing_order,
                         "F0": g0.sectors, "Ct": gt.components, "Ft": gt.sectors,
                         "hits0": len(g0.boundary_hits), "hitst": len(gt.boundary_hits),
                         "forest": gt.is_forest, "rows": lr.rows, "ok": lr.ok and gt.is_forest})
        rep["local_laws"].append(laws)
    done = [i for i, t in enumerate(t_list) if rows[t] is not None]
    nu = [rep["nu"][i] for i in done]
    inr = [rep["inrad_sqrtlambda"][i] for i in done]
    checks = {
        "branch_matched": len(done) == len(t_list),
        "monotone": all(n <= ns0.nu for n in nu),
        "decrement": all(rep["decrement"][i] <= rep["decrement_bound"][i] for i in done),
        "cardinality": all(rep["cardinality"][i] <= card_bound for i in done),
        "localization": all(rep["localization_ok"][i] for i in done),
        "no_critical_invariance": bool(S0) or all(n == ns0.nu for n in nu),
        "outer_region": len({rep["outer_region_counts"][i] for i in done}) <= 1,
        "local_laws": all(l.get("ok", False) for i in done for l in rep["local_laws"][i]),
        "inradius": bool(inr) and min(inr) > 0 and (max(inr) - min(inr)) <= 0.5 * max(inr),
    }
    return PerturbationReport(cardinality_bound=card_bound, checks=checks,
                              config={"r": r, "count": count, "bc": bc, "zero_tol": zero_tol,
                                      "val_tol": val_tol, "grad_tol": grad_tol, "nu0": ns0.nu,
                                      "sum_index0": ind0, "genus": genus}, **rep)


def inner_radius_sweep(family, branch_reference, t_list, count=None, bc="closed"):
    """Per-t minimum over domains of ``inrad * sqrt(lambda)``.

    Returns ``(values, ok)`` where ``ok`` requires a positive minimum and a
    relative variation of at most 50% across the sweep.
    """
    rep = perturbation_sweep(family, branch_reference, t_list, count=count, bc=bc, local_graphs=False)
    vals = rep.inrad_sqrtlambda
    return vals, rep.checks["inradius"]


# ------------------------------------------------------------- constructions
def cigar_disc(boundary_radius, length=1.0, n_circ=16):
    """Rotationally symmetric "cigar" disc: a hemispherical cap on a long tube.

    The profile is parametrised by meridian arc length ``s`` from the pole;
    the boundary circle (radius ``boundary_radius``) sits at ``s = length``.
    When ``length`` is large against the radius the lowest Neumann modes are
    functions of ``s`` alone, whose nodal sets are disjoint concentric
    circles, which is the property the construction needs.
    """
    b = float(boundary_radius)
    cap = 0.5 * math.pi * b
    if length <= cap:
        raise ParameterError("length must exceed the cap's meridian length")
    h = 2 * math.pi * b / n_circ
    params, counts = [0.0], [1]
    i = 1
    while True:
        s = i * h
        cnt = min(6 * i, n_circ) if s < cap else n_circ
        if s >= length - 0.5 * h:
            params.append(length)
            counts.append(n_circ)
            break
        params.append(s)
        counts.append(cnt)
        i += 1

    def embed(s, a):
        if s <= cap:
            rho, z = b * math.sin(s / b), b * (1 - math.cos(s / b))
        else:
            rho, z = b, b + (s - cap)
        return (rho * math.cos(a), rho * math.sin(a), z)

    verts, tris = revolution_disc(params, counts, embed)
    return SurfaceMesh.build(verts, tris, tags={"preset": "cigar_disc", "boundary_radius": b,
                                                "length": length, "n_circ": n_circ})


@dataclass
class CourantReport:
    k: int
    eps: float
    resolution: int
    eigenvalues: list
    nu: list
    courant_sharp: list
    closed_in_disc: list
    components: list
    cluster_warning: bool
    genus: int

    @property
    def ok(self):
        return all(self.courant_sharp) and all(self.closed_in_disc) and not self.cluster_warning

    def as_dict(self):
        return _jsonable(asdict(self) | {"ok": self.ok})


def courant_sharp_construction(m=1, k=4, eps=0.05, resolution=12, host_resolution=None, hole_radius=0.15,
                               length=1.0):
    """Genus-``m`` surface whose first ``k`` eigenfunctions are Courant sharp.

    A geodesic ball of the host (metric scaled by ``eps``) is replaced by a
    :func:`cigar_disc` whose boundary circle matches the hole. ``resolution``
    is the number of vertices around the tube; the host uses twice that.
    """
    if not 1 <= k <= 6:
        raise ParameterError("k must be in 1..6 at desk scale")
    if not 0 < eps <= 0.2:
        raise ParameterError("eps must lie in (0, 0.2]")
    host_res = 2 * resolution if host_resolution is None else host_resolution
    host = build_preset("genus_m_surface", host_res, m=m)
    exc, loop = surgery.excise(host, (0.5, 0.0), hole_radius)
    perim = eps * exc.lengths[_loop_edges(exc, exc.boundary_loops[loop])].sum()
    disc = cigar_disc(perim / (2 * math.pi), length, resolution)
    mesh = surgery.glue_meshes(exc, loop, disc, 0, scale_a=eps,
                               tags={"construction": "courant_sharp", "m": m, "eps": eps,
                                     "resolution": resolution})
    genus, b = euler_data(mesh)
    if (genus, b) != (m, 0):
        raise ConstructionError(f"construction produced genus {genus} with {b} boundary loops")
    spec = solve_spectrum(mesh, k)
    lams = spec.eigenvalues
    nus, closed, comps = [], [], []
    for l, pair in enumerate(spec.pairs, start=1):
        if l == 1:
            nus.append(1)
            closed.append(True)
            comps.append(0)
            continue
        ns = extract_nodal_set(mesh, pair.values)
        nus.append(ns.nu)
        deg = np.bincount(ns.segments.ravel(), minlength=len(ns.point_keys))
        in_disc = bool(np.all(mesh.regions[ns.segment_triangles] == surgery.DISC_REGION))
        closed.append(bool(len(ns.segments)) and bool(np.all(deg == 2)) and in_disc)
        comps.append(ns.n_components)
    warn = any(len(c) > 1 for c in spec.degenerate_clusters) or spec.tail_open
    return mesh, CourantReport(k, eps, resolution, [float(x) for x in lams], nus,
                               [n == l for l, n in enumerate(nus, start=1)], closed, comps, bool(warn), genus)


def _loop_edges(mesh, loop):
    key = {tuple(e): i for i, e in enumerate(mesh.edges.tolist())}
    out = []
    for a, b in zip(loop, np.roll(loop, -1)):
        out.append(key[(min(a, b), max(a, b))])
    return np.array(out)


@dataclass
class PrescriptionReport:
    n_list: list
    eps: float
    radii: list
    branch_indices: list
    eigenvalues: list
    overlaps: list
    counts: list
    expected: list
    consecutive: bool
    flags: list
    notes: list

    @property
    def ok(self):
        return all(self.flags)

    def as_dict(self):
        return _jsonable(asdict(self) | {"ok": self.ok})


def boundary_prescription(m=1, n_list=(1, 3), eps=0.05, resolution=24, host_resolution=32,
                          hole_radius=0.15, lam_bar=1.0, count=None):
    """Surface of genus ``m`` whose boundary loop ``i`` meets a nodal set ``2 n_i`` times.

    Disc ``i`` has radius ``R_i = j'_{n_i,1} / sqrt(lam_bar)`` so the target
    Bessel modes share one eigenvalue, then receives a conformal nudge
    ``c_i + d (r/R_i)^2 cos(2 n_i theta)`` of relative size 1e-2 that orders
    the discs and splits each cos/sin pair. A small ball away from the
    mode's nodal set is removed from each disc and its rim glued to one hole
    of the host, whose metric is scaled by ``eps``. ``resolution`` is the
    ring count of the largest disc.
    """
    n_list = [int(n) for n in n_list]
    b = len(n_list)
    if b < 1 or any(n < 0 or n > 5 for n in n_list):
        raise ParameterError("need at least one n_i, each in 0..5")
    if not 0 < eps <= 0.2:
        raise ParameterError("eps must lie in (0, 0.2]")
    radii = [disc_bessel_mode(n, 1, 1.0).root / math.sqrt(lam_bar) for n in n_list]
    rmax = max(radii)
    mesh = build_preset("genus_m_surface", host_resolution, m=m)
    for i in range(b):
        mesh, _ = surgery.excise(mesh, (0.5, (i + 0.5) / b), hole_radius)
    centers = []
    for i, (n, R) in enumerate(zip(n_list, radii)):
        d = unit_disc(max(8, int(round(resolution * R / rmax))), radius=R)
        r, th = _polar(d.vertices, (0.0, 0.0))
        u = disc_bessel_mode(n, 1, R)(r, th)
        f = NUDGE * (i + 1) + NUDGE * (r / R) ** 2 * np.cos(2 * n * th) * (n > 0)
        d = conformal_family(d, f).evaluate(1.0)
        band = (r > 0.25 * R) & (r < 0.75 * R)
        x = int(np.argmax(np.where(band, np.abs(u), -np.inf)))
        protected = np.abs(u) < 0.2 * np.abs(u).max()
        d, hole = surgery.excise(d, x, 0.1 * R, protected=protected)
        shift = mesh.vertices[:, 0].max() - d.vertices[:, 0].min() + 0.5
        centers.append((shift, 0.0))
        mesh = surgery.glue_meshes(mesh, _free_host_loop(mesh), d, hole, scale_a=eps if i == 0 else 1.0,
                                   region_a=None, region_b=10 + i,
                                   tags={"construction": "boundary_prescription", "m": m, "eps": eps,
                                         "n_list": list(n_list)})
    genus, nb = euler_data(mesh)
    if (genus, nb) != (m, b):
        raise ConstructionError(f"construction produced genus {genus} with {nb} boundary loops")
    count = count or 4 + sum(2 * n + 2 for n in n_list) + 4 * b
    spec = solve_spectrum(mesh, count, "neumann")
    idx, lams, ovs, counts, flags, notes = [], [], [], [], [], []
    for i, n in enumerate(n_list):
        verts = np.unique(mesh.triangles[mesh.regions == 10 + i])
        r, th = _polar(mesh.vertices[verts], centers[i])
        best = None
        for phase in ((0.0, math.pi / (2 * n)) if n else (0.0,)):
            tg = np.zeros(mesh.n_vertices)
            tg[verts] = disc_bessel_mode(n, 1, radii[i], theta0=phase)(r, th)
            try:
                pair, ov = match_branch(tg, spec, allow_projection=False)
            except BranchAmbiguityError as exc:
                notes.append(f"disc {i}: {exc}")
                continue
            if best is None or ov > best[1]:
                best = (pair, ov)
        if best is None:
            for lst in (idx, lams, ovs, counts):
                lst.append(None)
            flags.append(False)
            continue
        pair, ov = best
        c = boundary_intersection_count(mesh, pair.values, _region_loop(mesh, lambda g: g == 10 + i))
        idx.append(pair.index_in_spectrum)
        lams.append(pair.lam)
        ovs.append(ov)
        counts.append(c)
        flags.append(c == 2 * n)
    good = sorted(i for i in idx if i is not None)
    consecutive = len(good) == b and good == list(range(good[0], good[0] + b))
    if not consecutive:
        notes.append("matched branches are not consecutive in the spectrum")
    return mesh, PrescriptionReport(n_list, eps, radii, idx, lams, ovs, counts, [2 * n for n in n_list],
                                    consecutive, flags, notes)


def _polar(p, c):
    q = np.asarray(p)[:, :2] - np.asarray(c)
    return np.hypot(q[:, 0], q[:, 1]), np.arctan2(q[:, 1], q[:, 0])


def _region_loop(mesh, pred):
    """First boundary loop whose adjacent triangle region satisfies ``pred``."""
    key = {e: i for i, e in enumerate(map(tuple, mesh.edges.tolist()))}
    et = mesh.edge_triangles()
    for li, loop in enumerate(mesh.boundary_loops):
        a, c = int(loop[0]), int(loop[1])
        e = key[(min(a, c), max(a, c))]
        tris = [t for t in np.atleast_1d(et[e]) if t >= 0]
        if pred(int(mesh.regions[tris[0]])):
            return li
    raise ConstructionError("no boundary loop matches the requested region")


def _free_host_loop(mesh):
    return _region_loop(mesh, lambda g: g < 10)


# ------------------------------------------------------------------ configs
CONFIG_KEYS = {"preset", "resolution", "f_seed", "t_list", "branch", "tolerances", "output_dir"}


@dataclass
class ExperimentConfig:
    preset: str = "flat_torus"
    resolution: int = 64
    f_seed: int = 0
    t_list: list = field(default_factory=lambda: [0.05 * i / 20 for i in range(21)])
    branch: str = "checkerboard"
    tolerances: dict = field(default_factory=dict)
    output_dir: str = "."

    @classmethod
    def from_dict(cls, d):
        unknown = set(d) - CONFIG_KEYS
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def loads(cls, text):
        return cls.from_dict(json.loads(text))

    def dumps(self):
        return json.dumps(asdict(self), sort_keys=True, indent=1)


def run_config(cfg):
    """Replay a sweep from its config; deterministic in ``(config, f_seed)``."""
    tol = {"zero_tol": ZERO_TOL, "val_tol": VAL_TOL, "grad_tol": GRAD_TOL} | dict(cfg.tolerances)
    if cfg.branch == "checkerboard":
        if cfg.preset != "flat_torus":
            raise UsageError("checkerboard branch lives on flat_torus")
        fam, ref, _ = checkerboard_setup(cfg.resolution, cfg.f_seed)
    elif cfg.branch == "z":
        if cfg.preset != "round_sphere":
            raise UsageError("z branch lives on round_sphere")
        fam, ref, _ = sphere_z_setup(cfg.resolution, cfg.f_seed)
    elif cfg.branch == "scaling":
        fam, ref, _ = scaling_setup(cfg.preset, cfg.resolution)
    else:
        raise UsageError(f"unknown branch {cfg.branch!r}")
    rep = perturbation_sweep(fam, ref, cfg.t_list, allow_projection=cfg.branch == "scaling", **tol)
    rep.config.update(asdict(cfg))
    return rep
