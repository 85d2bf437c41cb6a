"""Cutting and gluing surfaces: disc excision, loop gluing, handle attachment."""

from __future__ import annotations

import math

import numpy as np

from .errors import ConstructionError, MeshIntegrityError, ParameterError
from .mesh import SurfaceMesh, euler_data, flat_torus

HOST_REGION, DISC_REGION, COLLAR_REGION = 0, 1, 2


class _Builder:
    """Mutable triangle soup with an edge-length table, used during surgery."""

    def __init__(self):
        self.verts = []
        self.tris = []
        self.regions = []
        self.lengths = {}
        self.tri_of_edge = {}

    @staticmethod
    def key(a, b):
        return (a, b) if a < b else (b, a)

    def add_mesh(self, mesh, scale=1.0, region=None, shift=(0.0, 0.0, 0.0)):
        off = len(self.verts)
        self.verts += list(mesh.vertices + np.asarray(shift))
        for (a, b), ell in zip(mesh.edges.tolist(), mesh.lengths.tolist()):
            self.lengths[(a + off, b + off)] = ell * scale
        regs = mesh.regions if region is None else np.full(mesh.n_triangles, region)
        for tri, r in zip(mesh.triangles.tolist(), regs.tolist()):
            self.add_tri([v + off for v in tri], r)
        return off

    def add_vertex(self, pos):
        self.verts.append(np.asarray(pos, float))
        return len(self.verts) - 1

    def add_tri(self, tri, region):
        tid = len(self.tris)
        self.tris.append(list(tri))
        self.regions.append(int(region))
        for i in range(3):
            self.tri_of_edge.setdefault(self.key(tri[i], tri[(i + 1) % 3]), []).append(tid)
        return tid

    def set_tri(self, tid, tri):
        old = self.tris[tid]
        for i in range(3):
            self.tri_of_edge[self.key(old[i], old[(i + 1) % 3])].remove(tid)
        self.tris[tid] = list(tri)
        for i in range(3):
            self.tri_of_edge.setdefault(self.key(tri[i], tri[(i + 1) % 3]), []).append(tid)

    def split_boundary_edge(self, u, v, tau):
        """Insert a vertex on boundary edge ``u-v`` at fraction ``tau`` from ``u``."""
        owners = self.tri_of_edge.get(self.key(u, v), [])
        if len(owners) != 1:
            raise ConstructionError(f"edge {u}-{v} is not a boundary edge")
        tid = owners[0]
        tri = self.tris[tid]
        r = next(i for i in range(3) if {tri[i], tri[(i + 1) % 3]} == {u, v})
        p, q, w = tri[r], tri[(r + 1) % 3], tri[(r + 2) % 3]
        L = self.lengths[self.key(u, v)]
        luw, lvw = self.lengths[self.key(u, w)], self.lengths[self.key(v, w)]
        x = self.add_vertex((1 - tau) * self.verts[u] + tau * self.verts[v])
        # Stewart's theorem for the cevian from w
        d2 = (1 - tau) * luw ** 2 + tau * lvw ** 2 - tau * (1 - tau) * L ** 2
        self.lengths[self.key(u, x)] = tau * L
        self.lengths[self.key(x, v)] = (1 - tau) * L
        self.lengths[self.key(x, w)] = math.sqrt(max(d2, 0.0))
        del self.lengths[self.key(u, v)]
        self.set_tri(tid, [p, x, w])
        self.add_tri([x, q, w], self.regions[tid])
        return x

    def loop_lengths(self, loop):
        n = len(loop)
        return np.array([self.lengths[self.key(loop[i], loop[(i + 1) % n])] for i in range(n)])

    def finish(self, tags=None, validate=True):
        used = sorted({v for t in self.tris for v in t})
        remap = {v: i for i, v in enumerate(used)}
        tris = [[remap[v] for v in t] for t in self.tris]
        lengths = {}
        for (a, b), ell in self.lengths.items():
            if a in remap and b in remap:
                ra, rb = remap[a], remap[b]
                lengths[(min(ra, rb), max(ra, rb))] = ell
        verts = np.array([self.verts[v] for v in used])
        try:
            return SurfaceMesh.build(verts, tris, lengths=lengths, regions=self.regions,
                                     tags=tags, validate=validate)
        except (MeshIntegrityError, KeyError) as exc:
            raise ConstructionError(f"glued mesh is invalid: {exc}") from exc


def excise(mesh, center, radius, protected=None):
    """Remove the geodesic ball of ``radius`` around ``center``.

    ``center`` is a vertex id or a display-space point. ``protected`` is an
    optional boolean vertex mask that the ball must not touch. Returns the
    new mesh and the index of the boundary loop created by the hole.
    """
    if radius <= 0:
        raise ParameterError("excision radius must be positive")
    c = int(center) if np.ndim(center) == 0 else mesh.nearest_vertex(center)
    dist = mesh.geodesic_distance([c])
    inside = dist < radius
    gone = inside[mesh.triangles].any(axis=1)
    if not gone.any():
        raise ConstructionError("excision radius removes no triangles")
    if protected is not None and np.asarray(protected, bool)[np.unique(mesh.triangles[gone])].any():
        raise ConstructionError("excision ball intersects the protected region")
    if np.isin(mesh.boundary_vertices(), mesh.triangles[gone]).any():
        raise ConstructionError("excision ball reaches an existing boundary")
    b = _Builder()
    b.add_mesh(mesh)
    keep = np.where(~gone)[0]
    b.tris = [b.tris[i] for i in keep]
    b.regions = [b.regions[i] for i in keep]
    out = b.finish(tags=dict(mesh.tags))
    if len(out.boundary_loops) != len(mesh.boundary_loops) + 1:
        raise ConstructionError("excised region is not a topological disc")
    old_ids = np.array(sorted({v for t in b.tris for v in t}))
    holes = [i for i, lp in enumerate(out.boundary_loops)
             if not np.isin(old_ids[lp], mesh.boundary_vertices()).any()]
    return out, holes[0]


def _loop_params(lengths):
    cum = np.concatenate([[0.0], np.cumsum(lengths)[:-1]])
    return cum / lengths.sum()


def _align_loops(b, P, Q):
    """Insert vertices so loops P and Q have matching arc-length parameters."""
    pp = _loop_params(b.loop_lengths(P))
    qq = _loop_params(b.loop_lengths(Q))
    tol = 0.25 * min(np.diff(np.append(pp, 1.0)).min(), np.diff(np.append(qq, 1.0)).min())
    merged, i, j = [], 0, 0
    while i < len(P) or j < len(Q):
        if i < len(P) and j < len(Q) and abs(pp[i] - qq[j]) < tol:
            merged.append((pp[i], P[i], Q[j]))
            i, j = i + 1, j + 1
        elif j >= len(Q) or (i < len(P) and pp[i] < qq[j]):
            merged.append((pp[i], P[i], None))
            i += 1
        else:
            merged.append((qq[j], None, Q[j]))
            j += 1
    out = []
    for side in (1, 2):
        ids = [m[side] for m in merged]
        params = [m[0] for m in merged]
        res = list(ids)
        k = 0
        n = len(ids)
        while k < n:
            if ids[k] is not None:
                k += 1
                continue
            s = k - 1
            e = k
            while ids[e % n] is None:
                e += 1
            u, v = res[s], ids[e % n]
            pu, pv = params[s], params[e] if e < n else 1.0
            for m in range(k, e):
                tau = (params[m] - pu) / (pv - pu)
                res[m] = b.split_boundary_edge(u, v, tau)
                u, pu = res[m], params[m]
            k = e
        out.append(res)
    return out


def glue_loops(b, loop_a, loop_b, collar_rings=0, collar_region=COLLAR_REGION):
    """Glue two boundary loops of the builder (given in boundary order).

    With ``collar_rings == 0`` the aligned loops are identified and junction
    edge lengths averaged. Otherwise a frustum-shaped collar of that many
    triangle rings interpolates between the two circumferences.
    """
    P = [int(v) for v in loop_a[::-1]]
    P = P[-1:] + P[:-1]
    Q = [int(v) for v in loop_b]
    P, Q = _align_loops(b, P, Q)
    n = len(P)
    la, lb = b.loop_lengths(P), b.loop_lengths(Q)
    if collar_rings == 0:
        remap = dict(zip(Q, P))
        for i in range(n):
            kp = b.key(P[i], P[(i + 1) % n])
            b.lengths[kp] = 0.5 * (la[i] + lb[i])
            del b.lengths[b.key(Q[i], Q[(i + 1) % n])]
        for key in [k for k in b.lengths if k[0] in remap or k[1] in remap]:
            ell = b.lengths.pop(key)
            nk = b.key(remap.get(key[0], key[0]), remap.get(key[1], key[1]))
            if nk in b.lengths and abs(b.lengths[nk] - ell) > 1e-12:
                raise ConstructionError("identification creates a duplicate edge")
            b.lengths[nk] = ell
        for tid, tri in enumerate(b.tris):
            if any(v in remap for v in tri):
                b.set_tri(tid, [remap.get(v, v) for v in tri])
        return P
    ra, rb = la.sum() / (2 * np.pi), lb.sum() / (2 * np.pi)
    params = _loop_params(la)
    dz = 0.5 * max(la.mean(), lb.mean())
    rings = [P]
    pos = lambda s, i: np.array([  # noqa: E731
        (ra + (rb - ra) * s / collar_rings) * math.cos(2 * np.pi * params[i]),
        (ra + (rb - ra) * s / collar_rings) * math.sin(2 * np.pi * params[i]),
        dz * s])
    for s in range(1, collar_rings):
        w = s / collar_rings
        ring = [b.add_vertex((1 - w) * b.verts[P[i]] + w * b.verts[Q[i]]) for i in range(n)]
        for i in range(n):
            b.lengths[b.key(ring[i], ring[(i + 1) % n])] = float(np.linalg.norm(pos(s, i) - pos(s, (i + 1) % n)))
        rings.append(ring)
    rings.append(Q)
    for s in range(collar_rings):
        lo, hi = rings[s], rings[s + 1]
        for i in range(n):
            j = (i + 1) % n
            b.lengths[b.key(lo[i], hi[i])] = float(np.linalg.norm(pos(s, i) - pos(s + 1, i)))
            b.lengths[b.key(lo[j], hi[i])] = float(np.linalg.norm(pos(s, j) - pos(s + 1, i)))
            b.add_tri([lo[i], lo[j], hi[i]], collar_region)
            b.add_tri([lo[j], hi[j], hi[i]], collar_region)
    return P


def _auto_collar(b, loop_a, loop_b, collar_rings):
    if collar_rings is not None:
        return collar_rings
    pa, pb = b.loop_lengths(list(loop_a)).sum(), b.loop_lengths(list(loop_b)).sum()
    return 0 if abs(pa - pb) <= 0.05 * max(pa, pb) else 2


def glue_meshes(a, loop_a, b, loop_b, *, scale_a=1.0, scale_b=1.0, region_a=HOST_REGION,
                region_b=DISC_REGION, collar_rings=None, tags=None):
    """Disjoint union of two meshes glued along one boundary loop of each."""
    bld = _Builder()
    bld.add_mesh(a, scale=scale_a, region=region_a)
    shift = (a.vertices[:, 0].max() - b.vertices[:, 0].min() + 0.5, 0.0, 0.0)
    off = bld.add_mesh(b, scale=scale_b, region=region_b, shift=shift)
    la = a.boundary_loops[loop_a]
    lb = b.boundary_loops[loop_b] + off
    glue_loops(bld, la, lb, _auto_collar(bld, la, lb, collar_rings))
    return bld.finish(tags=tags)


def glue_disc(host, disc, eps, *, point=None, excision_radius=None, loop=None,
              protected=None, collar_rings=None):
    """Attach ``disc`` to ``host`` whose metric is scaled by ``eps``.

    Either ``point`` (with ``excision_radius``, both in host units) removes a
    ball from the host first, or ``loop`` names an existing host boundary
    loop. The disc keeps its metric; triangles are labelled by region
    (host 0, disc 1, collar 2).
    """
    if eps <= 0:
        raise ParameterError("eps must be positive")
    if len(disc.boundary_loops) != 1:
        raise ConstructionError("disc must have exactly one boundary loop")
    if (point is None) == (loop is None):
        raise ParameterError("give exactly one of point or loop")
    if point is not None:
        if excision_radius is None or excision_radius <= 0:
            raise ParameterError("excision_radius must be positive")
        host, loop = excise(host, point, excision_radius, protected=protected)
    tags = {"construction": "glue_disc", "eps": eps, "host": host.tags.get("preset"),
            "disc": disc.tags.get("preset")}
    return glue_meshes(host, loop, disc, 0, scale_a=eps, collar_rings=collar_rings, tags=tags)


def genus_surface(resolution, m=1, hole_radius=None):
    """Closed surface of genus ``m``: a flat torus with ``m - 1`` handles.

    Each handle removes two geodesic discs from the torus and identifies
    their boundary loops.
    """
    m = int(m)
    if m < 1:
        raise ParameterError("genus_m_surface requires m >= 1")
    mesh = flat_torus(resolution)
    if m > 1:
        rho = hole_radius or min(0.12, 0.3 / (m - 1))
        if rho < 2.5 / resolution:
            raise ParameterError("resolution too coarse for the requested number of handles")
        for h in range(m - 1):
            y = (h + 0.5) / (m - 1)
            mesh, la = excise(mesh, (0.25, y), rho)
            mesh, lb = excise(mesh, (0.75, y), rho)
            bld = _Builder()
            bld.add_mesh(mesh)
            glue_loops(bld, mesh.boundary_loops[la], mesh.boundary_loops[lb], collar_rings=0)
            mesh = bld.finish(tags=mesh.tags)
    mesh = SurfaceMesh(mesh.vertices, mesh.triangles, mesh.edges, mesh.lengths, mesh.tri_edges,
                       mesh.boundary_loops, mesh.regions,
                       {"preset": "genus_m_surface", "resolution": int(resolution), "m": m})
    if euler_data(mesh) != (m, 0):
        raise ConstructionError("handle attachment produced the wrong topology")
    return mesh
