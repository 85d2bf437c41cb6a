"""Critical points of piecewise-linear functions: indices, orders and zero counts.

The index of a gradient field at an isolated zero is the winding number of
the field along a small surrounding loop. On a mesh the loop is a level set
of the geodesic distance from the point; the strip of triangles it crosses is
developed into the plane one edge at a time, where the per-triangle constant
gradients can be compared directly. The rotation picked up by the developed
frame after a full turn is the holonomy of the enclosed curvature and is
removed before rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (DegenerateFunctionError, InvalidLoopError, NumericError, ParameterError,
                     RadiusAdjustmentError, ToleranceError, UndersampledLoopError)
from .nodal import ZERO_TOL, classify, extract_nodal_set

VAL_TOL = 1e-4
GRAD_TOL = 5e-3
SEPARATION_DIAMETERS = 3.0


# ------------------------------------------------------------------ winding
@dataclass(frozen=True, eq=False)
class LoopSample:
    """Closed loop of 2D vectors.

    ``frame_rotation`` is the angle by which the chart of the last sample is
    rotated against the chart of the first one (zero for a planar chart); the
    closing increment is measured against the first vector rotated by it.
    """

    points: np.ndarray
    vectors: np.ndarray
    frame_rotation: float = 0.0
    values: np.ndarray | None = None

    def __post_init__(self):
        v = np.asarray(self.vectors, float)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
            raise InvalidLoopError("loop needs at least three 2D vectors")

    def increments(self):
        v = np.asarray(self.vectors, float)
        norms = np.hypot(v[:, 0], v[:, 1])
        if norms.min() <= 1e-14 * max(norms.max(), 1e-300):
            raise InvalidLoopError("vector field vanishes on the loop")
        ang = np.arctan2(v[:, 1], v[:, 0])
        nxt = np.append(ang[1:], ang[0] + self.frame_rotation)
        return (nxt - ang + np.pi) % (2 * np.pi) - np.pi


def winding_number(loop):
    """Integer number of turns of the loop's vectors."""
    inc = loop.increments()
    if np.abs(inc).max() >= np.pi * (1 - 1e-9):
        raise UndersampledLoopError(f"angular increment {np.abs(inc).max():.3f} reaches pi")
    total = (inc.sum() - loop.frame_rotation) / (2 * np.pi)
    w = int(round(total))
    if abs(total - w) > 1e-6:
        raise NumericError(f"winding accumulation {total} is not an integer")
    return w


# -------------------------------------------------------------- developing
def _place(pa, pb, la, lb, away):
    """Point at distances (la, lb) from (pa, pb), on the side opposite ``away``."""
    d = pb - pa
    L = math.hypot(*d)
    x = (la * la - lb * lb + L * L) / (2 * L)
    y = math.sqrt(max(la * la - x * x, 0.0))
    ex = d / L
    ey = np.array([-ex[1], ex[0]])
    side = np.dot(away - pa, ey)
    return pa + x * ex - np.sign(side or 1.0) * y * ey


def _lengths_of(mesh):
    return {(int(a), int(b)): float(l) for (a, b), l in zip(mesh.edges, mesh.lengths)}


def _grad2(P, f):
    A = np.array([P[1] - P[0], P[2] - P[0]])
    return np.linalg.solve(A, np.array([f[1] - f[0], f[2] - f[0]]))


def triangle_frames(mesh):
    """Planar corner positions (F, 3, 2) of every triangle, positively oriented."""
    L = mesh.corner_lengths()
    a, b, c = L[:, 0], L[:, 1], L[:, 2]  # opposite corners 0, 1, 2
    x = (b * b + c * c - a * a) / (2 * c)
    y = np.sqrt(np.maximum(b * b - x * x, 0.0))
    P = np.zeros((mesh.n_triangles, 3, 2))
    P[:, 1, 0] = c
    P[:, 2, 0], P[:, 2, 1] = x, y
    return P


def triangle_gradients(mesh, values):
    """Per-triangle gradient in its own frame, (F, 2)."""
    P = triangle_frames(mesh)
    f = np.asarray(values, float)[mesh.triangles]
    e1, e2 = P[:, 1] - P[:, 0], P[:, 2] - P[:, 0]
    A = np.stack([e1, e2], axis=1)
    rhs = np.stack([f[:, 1] - f[:, 0], f[:, 2] - f[:, 0]], axis=1)
    return np.linalg.solve(A, rhs[..., None])[..., 0]


# --------------------------------------------------------------------- loops
def _source(mesh, point):
    if isinstance(point, (int, np.integer)):
        return int(point)
    return mesh.nearest_vertex(point)


def geodesic_loop(mesh, point, radius, dist=None):
    """Ordered triangle strip crossed by the distance level set at ``radius``.

    Returns ``(tris, shared_edges, points, inside)`` where ``tris[i]`` and
    ``tris[i+1]`` share ``shared_edges[i]`` (cyclically), the loop runs with
    the enclosed ball on its left, and ``inside`` masks the enclosed vertices.
    """
    src = _source(mesh, point)
    d = mesh.geodesic_distance(src) if dist is None else dist
    r = float(radius)
    for _ in range(20):
        if np.min(np.abs(d - r)) > 1e-7 * r:
            break
        r *= 1 + 1e-5
    inside = d < r
    if inside.all():
        raise RadiusAdjustmentError(f"radius {radius} exceeds the surface")
    if inside.sum() < 1:
        raise RadiusAdjustmentError("radius below mesh resolution")
    ns = extract_nodal_set(mesh, d - r, zero_tol=0.0)
    segs, comp = ns.segments, ns.segment_components
    if not len(segs):
        raise RadiusAdjustmentError("empty distance level set")
    # several loops appear only when the ball wraps around; keep the longest
    src_comp = int(np.argmax(np.bincount(comp)))
    sel = np.where(comp == src_comp)[0]
    point_segs = {}
    for s in sel.tolist():
        for p in segs[s]:
            point_segs.setdefault(int(p), []).append(s)
    if any(len(v) != 2 for v in point_segs.values()):
        raise RadiusAdjustmentError("distance level set is not a closed loop (boundary reached)")
    order, pts = [int(sel[0])], [int(segs[sel[0], 1])]
    while True:
        p = pts[-1]
        a, b = point_segs[p]
        nxt = b if a == order[-1] else a
        if nxt == order[0]:
            break
        order.append(nxt)
        q = segs[nxt]
        pts.append(int(q[1] if q[0] == p else q[0]))
        if len(order) > len(sel):
            raise InvalidLoopError("level set walk did not close")
    if len(order) != len(sel):
        raise RadiusAdjustmentError("distance level set has several loops in one component")
    tris = ns.segment_triangles[order]
    shared = [ns.point_keys[p][1] for p in pts]  # edge between tris[i] and tris[i+1]
    # orientation: the ball must lie on the left
    f0 = int(tris[0])
    P = triangle_frames(mesh)[f0]
    g = _grad2(P, (d - r)[mesh.triangles[f0]])
    loc = {int(v): P[k] for k, v in enumerate(mesh.triangles[f0])}

    def at(p):
        a, b = mesh.edges[ns.point_keys[p][1]]
        t = ns.point_param[p]
        return (1 - t) * loc[int(a)] + t * loc[int(b)]

    t = at(pts[0]) - at(pts[-1])
    if g[0] * t[1] - g[1] * t[0] < 0:
        tris = tris[::-1]
        pts = pts[::-1]
        pts = pts[1:] + pts[:1]
        shared = [ns.point_keys[p][1] for p in pts]
    return np.asarray(tris), list(shared), ns.points[np.asarray(pts)], inside


def develop_loop(mesh, tris, shared, values):
    """Gradients of ``values`` along the strip in one developed chart.

    Returns the gradients (n, 2), the frame rotation after a full turn, and
    the developed crossing points.
    """
    L = _lengths_of(mesh)
    ell = lambda a, b: L[(a, b) if a < b else (b, a)]  # noqa: E731
    values = np.asarray(values, float)
    T = mesh.triangles
    f0 = int(tris[0])
    P = triangle_frames(mesh)[f0]
    pos = {int(v): P[k].copy() for k, v in enumerate(T[f0])}
    start = {k: v.copy() for k, v in pos.items()}
    grads = []
    n = len(tris)
    for i in range(n):
        f = int(tris[i])
        verts = [int(v) for v in T[f]]
        grads.append(_grad2(np.array([pos[v] for v in verts]), values[verts]))
        e = mesh.edges[shared[i]]
        u, w = int(e[0]), int(e[1])
        g = int(tris[(i + 1) % n])
        third_old = [v for v in verts if v not in (u, w)][0]
        nv = [int(v) for v in T[g]]
        third = [v for v in nv if v not in (u, w)][0]
        newpos = {u: pos[u], w: pos[w],
                  third: _place(pos[u], pos[w], ell(u, third), ell(w, third), pos[third_old])}
        pos = newpos
    # pos now holds tris[0] developed again; compare an edge direction
    e = mesh.edges[shared[0]]
    a, b = int(e[0]), int(e[1])
    d0 = start[b] - start[a]
    d1 = pos[b] - pos[a]
    rot = math.atan2(d0[0] * d1[1] - d0[1] * d1[0], d0 @ d1)
    return np.array(grads), rot


def loop_sample(mesh, values, point, radius, dist=None):
    tris, shared, pts, inside = geodesic_loop(mesh, point, radius, dist)
    grads, rot = develop_loop(mesh, tris, shared, values)
    # the developed frame turns by minus the enclosed curvature, known only mod 2 pi;
    # unwrap it with the enclosed angle defect (discrete Gauss-Bonnet)
    omega = float(mesh.angle_defects()[inside].sum())
    rot = rot + 2 * np.pi * round((-omega - rot) / (2 * np.pi))
    vals = np.asarray(values, float)
    keyvals = []
    for e in shared:
        a, b = mesh.edges[e]
        keyvals.append(0.5 * (vals[a] + vals[b]))
    return LoopSample(pts, grads, rot, np.array(keyvals)), inside


def index_at(mesh, values, point, radius, check=True):
    """Index of the PL gradient of ``values`` at ``point``.

    With ``check`` the index is recomputed on a loop of 1.5 times the radius
    and a mismatch raises :class:`ToleranceError`.
    """
    if radius <= 0:
        raise ParameterError("radius must be positive")
    dist = mesh.geodesic_distance(_source(mesh, point))
    try:
        w = winding_number(loop_sample(mesh, values, point, radius, dist)[0])
    except InvalidLoopError as exc:
        raise RadiusAdjustmentError(f"gradient vanishes on loop of radius {radius}; retry with another radius") from exc
    if check:
        w2 = winding_number(loop_sample(mesh, values, point, 1.5 * radius, dist)[0])
        if w2 != w:
            raise ToleranceError(f"index differs between radius {radius} ({w}) and {1.5 * radius} ({w2})")
    return w


# --------------------------------------------------------- critical points
@dataclass(frozen=True)
class CriticalPoint:
    vertex: int
    location: tuple
    index: int
    vanishing_order: int
    is_nodal: bool
    detection_radius: float
    warnings: tuple = field(default_factory=tuple)

    def row(self):
        return {"x": round(float(self.location[0]), 12), "y": round(float(self.location[1]), 12),
                "index": self.index, "order": self.vanishing_order, "is_nodal": self.is_nodal,
                "radius": round(float(self.detection_radius), 12)}


def vertex_links(mesh):
    """Cyclically ordered neighbours of each interior vertex (None on the boundary)."""
    nxt = [dict() for _ in range(mesh.n_vertices)]
    for a, b, c in mesh.triangles.tolist():
        nxt[a][b] = c
        nxt[b][c] = a
        nxt[c][a] = b
    bnd = set(mesh.boundary_vertices().tolist())
    links = []
    for v in range(mesh.n_vertices):
        if v in bnd or not nxt[v]:
            links.append(None)
            continue
        s = next(iter(nxt[v]))
        ring = [s]
        while True:
            w = nxt[v][ring[-1]]
            if w == s:
                break
            ring.append(w)
        links.append(ring)
    return links


def _rank(values):
    # symbolic perturbation: ties broken by vertex id
    order = np.lexsort((np.arange(len(values)), values))
    r = np.empty(len(values), dtype=np.int64)
    r[order] = np.arange(len(values))
    return r


def pl_vertex_indices(mesh, values, links=None):
    """Banchoff index ``1 - (sign changes of f(w) - f(v) around the link) / 2``."""
    links = vertex_links(mesh) if links is None else links
    r = _rank(np.asarray(values, float))
    idx = np.zeros(mesh.n_vertices, dtype=np.int64)
    for v, ring in enumerate(links):
        if ring is None:
            continue
        s = r[ring] > r[v]
        idx[v] = 1 - int(np.sum(s != np.roll(s, 1))) // 2
    return idx


def nodal_degrees(mesh, nodal_set):
    """Degree of each nodal point in the segment graph."""
    return np.bincount(nodal_set.segments.ravel(), minlength=len(nodal_set.point_keys))


def vertex_gradient_norms(mesh, values, candidates):
    """Least-squares one-ring gradient magnitude in a flattened star chart."""
    links = vertex_links(mesh)
    L = _lengths_of(mesh)
    ell = lambda a, b: L[(a, b) if a < b else (b, a)]  # noqa: E731
    vals = np.asarray(values, float)
    out = np.zeros(len(candidates))
    for i, v in enumerate(candidates):
        ring = links[int(v)]
        if ring is None:
            out[i] = np.inf
            continue
        r = np.array([ell(v, w) for w in ring])
        ang = []
        for k, w in enumerate(ring):
            w2 = ring[(k + 1) % len(ring)]
            a, b, c = ell(v, w), ell(v, w2), ell(w, w2)
            ang.append(math.acos(max(-1.0, min(1.0, (a * a + b * b - c * c) / (2 * a * b)))))
        ang = np.array(ang)
        theta = np.concatenate([[0.0], np.cumsum(ang)[:-1]]) * (2 * np.pi / ang.sum())
        X = np.column_stack([r * np.cos(theta), r * np.sin(theta)])
        g, *_ = np.linalg.lstsq(X, vals[ring] - vals[v], rcond=None)
        out[i] = math.hypot(*g)
    return out


def _cluster(points, sep):
    """Greedy single-linkage clusters of point indices."""
    n = len(points)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if np.linalg.norm(points[i] - points[j]) < sep:
                parent[find(i)] = find(j)
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return sorted(groups.values())


def detect_nodal_critical_points(mesh, values, val_tol=VAL_TOL, grad_tol=GRAD_TOL, min_separation=None,
                                 radius=None, zero_tol=ZERO_TOL):
    """Nodal critical points of a vertex function.

    Candidates are zero-class vertices that either branch the piecewise-linear
    nodal set (degree >= 4) or pass the value and gradient tolerances. Values
    passing ``val_tol`` but not the zero class are rejected: at mesh scale a
    near-zero saddle is not a crossing of the nodal set. Candidates are
    clustered within ``min_separation`` (graph distance) and each cluster gets
    the winding index around the smallest loop that clears it.
    """
    values = np.asarray(values, float)
    ns = extract_nodal_set(mesh, values, zero_tol)
    diam = mesh.triangle_diameter()
    sep = SEPARATION_DIAMETERS * diam if min_separation is None else float(min_separation)
    scale = np.abs(values).max()
    zero_v = np.where((ns.vertex_class == 0) & (np.abs(values) < val_tol * scale))[0]
    if not len(zero_v):
        return []
    deg = nodal_degrees(mesh, ns)
    vdeg = _zero_vertex_degrees(ns, deg, zero_v)
    gmax = np.hypot(*triangle_gradients(mesh, values).T).max()
    gn = vertex_gradient_norms(mesh, values, zero_v)
    cand = zero_v[(vdeg >= 4) | (gn < grad_tol * gmax)]
    if not len(cand):
        return []
    # cluster in graph distance
    groups = []
    rest = list(cand.tolist())
    while rest:
        v = rest.pop(0)
        d = mesh.geodesic_distance(v)
        grp = [v] + [w for w in rest if d[w] < sep]
        rest = [w for w in rest if d[w] >= sep]
        groups.append(grp)
    out = []
    for grp in groups:
        # representative: largest nodal degree, then smallest gradient
        ranks = [(-int(vdeg[np.searchsorted(zero_v, w)]), gn[np.searchsorted(zero_v, w)], w) for w in grp]
        rep = min(ranks)[2]
        d = mesh.geodesic_distance(rep)
        spread = max(d[w] for w in grp)
        base = max(spread + 2 * diam, 3 * diam) if radius is None else float(radius)
        idx, used, warn = None, None, []
        for rr in (base, 1.25 * base, 1.6 * base, 2.0 * base):
            try:
                a = winding_number(loop_sample(mesh, values, rep, rr, d)[0])
                b = winding_number(loop_sample(mesh, values, rep, 1.5 * rr, d)[0])
            except (InvalidLoopError, RadiusAdjustmentError):
                continue
            if a == b:
                idx, used = a, rr
                break
        if idx is None:
            warn.append("index not stable under radius changes")
            continue
        if idx == 0:
            continue
        if idx > 0:
            warn.append("positive index on the nodal set: tolerances too loose")
        order = 1 - idx
        out.append(CriticalPoint(int(rep), tuple(float(c) for c in mesh.vertices[rep][:2]), idx, order,
                                 True, float(used), tuple(warn)))
    return out


def _zero_vertex_degrees(ns, deg, zero_v):
    lookup = {k[1]: i for i, k in enumerate(ns.point_keys) if k[0] == "v"}
    return np.array([deg[lookup[int(v)]] for v in zero_v])


def taylor_order(mesh, values, point, radius, samples=256):
    """Diagnostic fit of ``c_k r^k cos k(theta - theta_0)``.

    Returns the dominant angular frequency of ``values`` along the loop and
    the radial exponent estimated from loops at ``radius`` and ``2 radius``.
    """
    amps, ks = [], []
    dist = mesh.geodesic_distance(_source(mesh, point))
    for rr in (radius, 2 * radius):
        loop, _ = loop_sample(mesh, values, point, rr, dist)
        v = loop.values - np.asarray(values, float)[_source(mesh, point)]
        seg = np.linalg.norm(np.diff(np.vstack([loop.points, loop.points[:1]]), axis=0), axis=1)
        s = np.concatenate([[0.0], np.cumsum(seg)[:-1]]) / seg.sum()
        u = np.interp(np.linspace(0, 1, samples, endpoint=False), s, v, period=1.0)
        spec = np.abs(np.fft.rfft(u))[1:]
        k = int(np.argmax(spec)) + 1
        ks.append(k)
        amps.append(spec[k - 1])
    expo = math.log(amps[1] / amps[0]) / math.log(2.0)
    return ks[0], expo


# ---------------------------------------------------------- zero counting
def zero_count_on_loop(psi, dpsi, d2psi, period=2 * np.pi):
    """Zeros of a periodic function from ``(1/pi) int (psi'^2 - psi psi'') / (psi^2 + psi'^2)``.

    Samples are on a uniform periodic grid; the trapezoid rule is used.
    Returns ``(count, integral)``.
    """
    psi, dpsi, d2psi = (np.asarray(a, float) for a in (psi, dpsi, d2psi))
    den = psi ** 2 + dpsi ** 2
    if den.min() <= 1e-12 * den.max():
        raise DegenerateFunctionError("psi and psi' vanish together: zero is not simple")
    integrand = (dpsi ** 2 - psi * d2psi) / den
    integral = float(integrand.mean() * period / np.pi)
    n = int(round(integral))
    if abs(integral - n) > 0.25:
        raise UndersampledLoopError(f"zero-count integral {integral:.4f} is not close to an integer")
    return n, integral


def sign_changes(psi, zero_tol=ZERO_TOL):
    """Tolerance-resolved sign changes of a periodic sample."""
    cls = classify(psi, zero_tol)
    s = cls[cls != 0]
    return int(np.sum(s != np.roll(s, 1)))


@dataclass(frozen=True)
class TrigPolynomial:
    a0: float
    a: np.ndarray
    b: np.ndarray

    def derivatives(self, x):
        k = np.arange(1, len(self.a) + 1)[:, None]
        c, s = np.cos(k * x), np.sin(k * x)
        a, b = self.a[:, None], self.b[:, None]
        psi = self.a0 + (a * c + b * s).sum(0)
        d1 = (k * (-a * s + b * c)).sum(0)
        d2 = (-(k ** 2) * (a * c + b * s)).sum(0)
        return psi, d1, d2


def random_trig_polynomial(rng, degree=5, min_clearance=1e-3, samples=4096, budget=1000):
    """Random trig polynomial whose zeros are all simple.

    Simplicity is enforced by requiring ``psi^2 + psi'^2`` to stay above
    ``min_clearance`` times its maximum on the sample grid.
    """
    x = np.linspace(0, 2 * np.pi, samples, endpoint=False)
    for _ in range(budget):
        deg = int(rng.integers(1, degree + 1))
        p = TrigPolynomial(float(rng.normal()), rng.normal(size=deg), rng.normal(size=deg))
        psi, d1, _ = p.derivatives(x)
        den = psi ** 2 + d1 ** 2
        if den.min() > min_clearance * den.max():
            return p
    raise NumericError("no trig polynomial with simple zeros found")
