"""Local nodal graphs in a geodesic ball and the local sector laws.

The ball ``B(p, r)`` is the set of triangles whose mean vertex distance from
``p`` (edge-path metric) is below ``r``. The nodal set is clipped to the
segments carried by those triangles; a boundary hit is a nodal point shared
by a clipped segment and an outside segment. Sectors are counted on the same
triangle set, so ``F``, ``C`` and the hits all refer to one region.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .critical import triangle_frames
from .errors import RadiusAdjustmentError, UsageError
from .nodal import ZERO_TOL, extract_nodal_set, label_pieces

MIN_CROSSING_DEG = 5.0
RADIUS_RETRIES = 5


@dataclass(frozen=True, eq=False)
class NodalGraph:
    center: int
    radius: float
    vertices: list          # [(point id, (x, y), order)]
    edges: int              # arcs joining two graph vertices
    half_edges: list        # [(vertex point id, hit point id)]
    through_arcs: int       # arcs from hit to hit without an interior vertex
    components: int         # C
    boundary_hits: list     # [(point id, anchor angle)]
    sectors: int            # F
    cycles: int = 0
    notes: tuple = field(default_factory=tuple)

    @property
    def is_forest(self):
        return self.cycles == 0

    def vertex_indices(self):
        return [1 - o for _, _, o in self.vertices]

    def summary(self):
        return {"center": self.center, "radius": round(self.radius, 12), "vertices": len(self.vertices),
                "orders": [o for _, _, o in self.vertices], "edges": self.edges,
                "half_edges": len(self.half_edges), "through_arcs": self.through_arcs,
                "C": self.components, "F": self.sectors, "boundary_hits": len(self.boundary_hits),
                "forest": self.is_forest}


def _center(mesh, center):
    if isinstance(center, (int, np.integer)):
        return int(center)
    return mesh.nearest_vertex(center)


def ball_triangles(mesh, dist, radius):
    return dist[mesh.triangles].mean(axis=1) < radius


def _build(mesh, values, c, radius, dist, zero_tol):
    ns = extract_nodal_set(mesh, values, zero_tol)
    inside_t = ball_triangles(mesh, dist, radius)
    labels, F = label_pieces(mesh, ns.vertex_class, inside_t)
    if not len(ns.segments):
        return NodalGraph(c, radius, [], 0, [], 0, 0, [], F)
    seg_in = inside_t[ns.segment_triangles]
    segs_in, segs_out = ns.segments[seg_in], ns.segments[~seg_in]
    hits = sorted(set(segs_in.ravel().tolist()) & set(segs_out.ravel().tolist()))
    # transversality of each hit with the distance level set
    P = triangle_frames(mesh)
    for s in np.where(seg_in)[0]:
        a, b = ns.segments[s]
        if a not in hits and b not in hits:
            continue
        f = int(ns.segment_triangles[s])
        loc = {int(v): P[f][k] for k, v in enumerate(mesh.triangles[f])}

        def at(p):
            kind, key = ns.point_keys[p]
            if kind == "v":
                return loc[key]
            e0, e1 = mesh.edges[key]
            t = ns.point_param[p]
            return (1 - t) * loc[int(e0)] + t * loc[int(e1)]

        dvec = at(b) - at(a)
        tri = mesh.triangles[f]
        A = np.array([P[f][1] - P[f][0], P[f][2] - P[f][0]])
        gd = np.linalg.solve(A, np.array([dist[tri[1]] - dist[tri[0]], dist[tri[2]] - dist[tri[0]]]))
        n1, n2 = np.linalg.norm(dvec), np.linalg.norm(gd)
        if n1 == 0 or n2 == 0:
            continue
        sin_cross = abs(dvec @ gd) / (n1 * n2)
        if sin_cross < math.sin(math.radians(MIN_CROSSING_DEG)):
            raise RadiusAdjustmentError(f"nodal set tangent to the ball boundary at radius {radius}")
    pts = sorted(set(segs_in.ravel().tolist()))
    adj = {p: [] for p in pts}
    for a, b in segs_in.tolist():
        adj[a].append(b)
        adj[b].append(a)
    # components and cycle rank of the clipped PL graph
    comp, ncomp = {}, 0
    for p in pts:
        if p in comp:
            continue
        stack = [p]
        comp[p] = ncomp
        while stack:
            q = stack.pop()
            for w in adj[q]:
                if w not in comp:
                    comp[w] = ncomp
                    stack.append(w)
        ncomp += 1
    cycles = len(segs_in) - len(pts) + ncomp
    hitset = set(hits)
    gverts = [p for p in pts if len(adj[p]) >= 3 and p not in hitset]
    nodes = set(gverts) | hitset
    # contract degree-2 chains
    edges, half, through, seen = 0, [], 0, set()
    for start in sorted(nodes):
        for nb in adj[start]:
            key = (min(start, nb), max(start, nb))
            if key in seen:
                continue
            prev, cur = start, nb
            seen.add(key)
            while cur not in nodes:
                nxt = [w for w in adj[cur] if w != prev]
                if not nxt:
                    break
                prev, cur = cur, nxt[0]
                seen.add((min(prev, cur), max(prev, cur)))
            if cur not in nodes:
                continue  # dangling end (only at tolerance artefacts)
            ends = (start in hitset) + (cur in hitset)
            if ends == 0:
                edges += 1
            elif ends == 1:
                v, h = (cur, start) if start in hitset else (start, cur)
                half.append((v, h))
            else:
                through += 1
    cen = mesh.vertices[c][:2]
    anchors = [(h, float(math.atan2(*(ns.points[h][:2] - cen)[::-1]))) for h in hits]
    verts = [(p, tuple(float(x) for x in ns.points[p][:2]), len(adj[p]) // 2) for p in gverts]
    notes = tuple(f"odd nodal degree at point {p}" for p in gverts if len(adj[p]) % 2)
    return NodalGraph(c, float(radius), verts, edges, half, through, ncomp, anchors, F, cycles, notes)


def build_local_graph(mesh, values, center, radius, zero_tol=ZERO_TOL, retries=RADIUS_RETRIES, ball_mesh=None):
    """Nodal graph of ``values`` inside the geodesic ball of ``radius`` around ``center``.

    ``ball_mesh`` (same combinatorics) supplies the metric of the ball, so a
    perturbed function can be clipped to a ball of the unperturbed metric.
    A tangential hit triggers up to ``retries`` radius changes of +-10%.
    """
    c = _center(mesh, center)
    dist = (mesh if ball_mesh is None else ball_mesh).geodesic_distance(c)
    values = np.asarray(values, float)
    tried = [radius]
    for k in range(retries + 1):
        r = radius * (1 + 0.1 * ((k + 1) // 2) * (-1) ** k) if k else radius
        try:
            return _build(mesh, values, c, r, dist, zero_tol)
        except RadiusAdjustmentError:
            tried.append(r)
    raise RadiusAdjustmentError(f"no transversal radius among {tried}")


def local_sector_count(mesh, values, center, radius, zero_tol=ZERO_TOL, ball_mesh=None):
    return build_local_graph(mesh, values, center, radius, zero_tol, ball_mesh=ball_mesh).sectors


@dataclass(frozen=True)
class LocalLawReport:
    rows: list

    @property
    def ok(self):
        return all(r["pass"] for r in self.rows)

    def row(self, law):
        return next(r for r in self.rows if r["law_id"] == law)

    def text(self):
        return "\n".join(f"{r['law_id']} lhs={r['lhs']} rhs={r['rhs']} pass={r['pass']}" for r in self.rows)


def verify_local_laws(graph_0, graph_t, k):
    """Check the local laws at a crossing of order ``k``.

    a: critical points near p after perturbation <= k - 1
    b: their vanishing orders <= k
    c: F_t = F_0 - C_t + 1
    d: sum |index| <= k - C_t
    e: boundary hits unchanged
    """
    if graph_0.center != graph_t.center or not math.isclose(graph_0.radius, graph_t.radius, rel_tol=1e-12):
        raise UsageError("graphs must share center and radius")
    vt = graph_t.vertices
    max_order = max((o for _, _, o in vt), default=0)
    sum_idx = sum(abs(i) for i in graph_t.vertex_indices())
    C = graph_t.components
    rows = [
        {"law_id": "a", "lhs": len(vt), "rhs": k - 1, "pass": len(vt) <= k - 1},
        {"law_id": "b", "lhs": max_order, "rhs": k, "pass": max_order <= k},
        {"law_id": "c", "lhs": graph_t.sectors, "rhs": graph_0.sectors - C + 1,
         "pass": graph_t.sectors == graph_0.sectors - C + 1},
        {"law_id": "d", "lhs": sum_idx, "rhs": k - C, "pass": sum_idx <= k - C},
        {"law_id": "e", "lhs": len(graph_t.boundary_hits), "rhs": len(graph_0.boundary_hits),
         "pass": len(graph_t.boundary_hits) == len(graph_0.boundary_hits)},
    ]
    return LocalLawReport(rows)
