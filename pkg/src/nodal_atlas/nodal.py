"""Zero level sets of piecewise-linear functions and their nodal domains.

Vertex values are classified as positive, negative or zero (``|phi| <=
zero_tol * max|phi|``). Within a triangle the positive (negative) part of a
linear function is convex, so nodal domains are the connected components of
(triangle, sign) pieces glued across mesh edges that carry a point of that
sign. Exact zeros at vertices therefore keep nodal crossings intact instead
of merging opposite sectors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from .errors import DegenerateFunctionError, ParameterError, ToleranceError

ZERO_TOL = 1e-7


@dataclass(frozen=True, eq=False)
class NodalSet:
    """Polyline zero set and nodal-domain labelling of a vertex function.

    Attributes
    ----------
    vertex_class : (V,) int array in {-1, 0, +1}
    points : (P, 3) display positions of nodal points
    point_keys : list of ``("v", vertex)`` or ``("e", edge)`` keys
    point_param : (P,) position along the edge (0 at ``edges[e, 0]``); 0 for vertex points
    segments : (S, 2) point indices, one per triangle crossing (edge-aligned
        segments are stored once)
    segment_triangles : (S,) a triangle carrying each segment
    components : (P,) component id of each nodal point in the segment graph
    piece_labels : (F, 2) domain of the positive / negative piece, -1 if absent
    piece_areas : (F, 2)
    triangle_signs : (F,) sign of the larger piece
    domain_labels : (F,) domain of the larger piece
    domain_signs : (nu,)
    nu : number of nodal domains
    """

    vertex_class: np.ndarray
    points: np.ndarray
    point_keys: list
    point_param: np.ndarray
    segments: np.ndarray
    segment_triangles: np.ndarray
    components: np.ndarray
    piece_labels: np.ndarray
    piece_areas: np.ndarray
    triangle_signs: np.ndarray
    domain_labels: np.ndarray
    domain_signs: np.ndarray
    nu: int
    zero_tol: float

    @property
    def n_components(self):
        return int(self.components.max() + 1) if len(self.components) else 0

    @property
    def segment_components(self):
        return self.components[self.segments[:, 0]] if len(self.segments) else np.zeros(0, int)

    def domain_areas(self):
        lab, area = self.piece_labels.ravel(), self.piece_areas.ravel()
        ok = lab >= 0
        return np.bincount(lab[ok], weights=area[ok], minlength=self.nu)

    def vertex_domains(self, mesh):
        """Domain id per vertex (-1 for zero vertices)."""
        out = np.full(mesh.n_vertices, -1, dtype=np.int64)
        cls = self.vertex_class[mesh.triangles]
        for col, s in ((0, 1), (1, -1)):
            lab = np.repeat(self.piece_labels[:, col], 3).reshape(-1, 3)
            hit = (cls == s) & (lab >= 0)
            out[mesh.triangles[hit]] = lab[hit]
        return out


def classify(values, zero_tol=ZERO_TOL):
    v = np.asarray(values, dtype=float)
    scale = np.abs(v).max() if len(v) else 0.0
    if not np.isfinite(scale) or scale == 0:
        raise DegenerateFunctionError("function vanishes identically")
    cls = np.sign(v).astype(np.int64)
    cls[np.abs(v) <= zero_tol * scale] = 0
    if not np.any(cls):
        raise DegenerateFunctionError("all vertex values within zero tolerance")
    return cls


def piece_areas(mesh, values, cls):
    """Areas of the positive and negative part of each linear triangle."""
    v = np.where(cls == 0, 0.0, np.asarray(values, float))[mesh.triangles]
    c = cls[mesh.triangles]
    area = mesh.triangle_areas()
    out = np.zeros((mesh.n_triangles, 2))
    for col, s in ((0, 1), (1, -1)):
        npos = (c == s).sum(axis=1)
        nneg = (c == -s).sum(axis=1)
        frac = np.where(npos > 0, 1.0, 0.0)
        # one vertex of sign s, others not: triangle cut off that corner
        one = (npos == 1) & (nneg > 0)
        if one.any():
            k = np.argmax(c[one] == s, axis=1)
            vv = v[one]
            p = vv[np.arange(len(k)), k]
            f = np.ones(len(k))
            for off in (1, 2):
                q = vv[np.arange(len(k)), (k + off) % 3]
                f *= np.where(q == 0, 1.0, p / (p - q))
            frac[one] = f
        # two vertices of sign s, one of the other sign: complement of a corner
        two = (npos == 2) & (nneg == 1)
        if two.any():
            k = np.argmax(c[two] == -s, axis=1)
            vv = v[two]
            p = vv[np.arange(len(k)), k]
            f = np.ones(len(k))
            for off in (1, 2):
                q = vv[np.arange(len(k)), (k + off) % 3]
                f *= p / (p - q)
            frac[two] = 1.0 - f
        out[:, col] = frac * area
    return out


def label_pieces(mesh, cls, tri_mask=None):
    """Connected components of (triangle, sign) pieces.

    Returns an (F, 2) label array (-1 for absent or masked pieces) and the
    number of components.
    """
    c = cls[mesh.triangles]
    present = np.stack([(c == 1).any(axis=1), (c == -1).any(axis=1)], axis=1)
    if tri_mask is not None:
        present &= np.asarray(tri_mask, bool)[:, None]
    et = mesh.edge_triangles()
    inner = np.where(et[:, 1] >= 0)[0]
    a, b = mesh.edges[inner, 0], mesh.edges[inner, 1]
    rows, cols = [], []
    for col, s in ((0, 1), (1, -1)):
        ok = (cls[a] == s) | (cls[b] == s)
        t1, t2 = et[inner[ok], 0], et[inner[ok], 1]
        keep = present[t1, col] & present[t2, col]
        rows.append(2 * t1[keep] + col)
        cols.append(2 * t2[keep] + col)
    rows, cols = np.concatenate(rows), np.concatenate(cols)
    n = 2 * mesh.n_triangles
    g = sparse.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    _, raw = csgraph.connected_components(g, directed=False)
    flat_present = present.ravel()
    labels = np.full(n, -1, dtype=np.int64)
    # renumber by first appearance for deterministic ids
    seen = {}
    for node in np.where(flat_present)[0]:
        r = raw[node]
        if r not in seen:
            seen[r] = len(seen)
        labels[node] = seen[r]
    return labels.reshape(-1, 2), len(seen)


def extract_nodal_set(mesh, values, zero_tol=ZERO_TOL):
    values = np.asarray(values, dtype=float)
    if values.shape != (mesh.n_vertices,):
        raise ParameterError("one value per vertex expected")
    cls = classify(values, zero_tol)
    vals = np.where(cls == 0, 0.0, values)
    edges = mesh.edges
    ca, cb = cls[edges[:, 0]], cls[edges[:, 1]]
    cross = np.where(ca * cb < 0)[0]
    zero_v = np.where(cls == 0)[0]

    keys, params, pos = [], [], []
    index = {}
    for v in zero_v:
        index[("v", int(v))] = len(keys)
        keys.append(("v", int(v)))
        params.append(0.0)
        pos.append(mesh.vertices[v])
    va, vb = vals[edges[cross, 0]], vals[edges[cross, 1]]
    tt = va / (va - vb)
    for e, t in zip(cross.tolist(), tt.tolist()):
        index[("e", e)] = len(keys)
        keys.append(("e", e))
        params.append(t)
        a, b = edges[e]
        pos.append((1 - t) * mesh.vertices[a] + t * mesh.vertices[b])

    segs, seg_tri, done_edges = [], [], set()
    tri, tri_e = mesh.triangles, mesh.tri_edges
    ctri = cls[tri]
    nz = (ctri == 0).sum(axis=1)
    active = np.where((nz > 0) | (ctri.min(axis=1) < 0) & (ctri.max(axis=1) > 0))[0]
    for f in active.tolist():
        cc = ctri[f]
        z = int(nz[f])
        if z == 3:
            continue
        if z == 2:
            corner = int(np.argmax(cc != 0))  # the nonzero corner; its opposite edge is zero
            e = int(tri_e[f, corner])
            if e not in done_edges:
                done_edges.add(e)
                zs = [int(tri[f, k]) for k in range(3) if k != corner]
                segs.append((index[("v", zs[0])], index[("v", zs[1])]))
                seg_tri.append(f)
            continue
        ends = [index[("v", int(tri[f, k]))] for k in range(3) if cc[k] == 0]
        for k in range(3):
            e = int(tri_e[f, k])
            if ("e", e) in index:
                ends.append(index[("e", e)])
        if len(ends) == 2:
            segs.append(tuple(ends))
            seg_tri.append(f)

    segs = np.array(segs, dtype=np.int64).reshape(-1, 2)
    npts = len(keys)
    if npts:
        g = sparse.csr_matrix((np.ones(len(segs)), (segs[:, 0], segs[:, 1])), shape=(npts, npts))
        _, comp = csgraph.connected_components(g, directed=False)
        comp = _first_appearance(comp)
    else:
        comp = np.zeros(0, dtype=np.int64)

    labels, nu = label_pieces(mesh, cls)
    areas = piece_areas(mesh, values, cls)
    larger = np.where(areas[:, 0] >= areas[:, 1], 0, 1)
    larger = np.where(labels[np.arange(len(larger)), larger] >= 0, larger, 1 - larger)
    tsign = np.where(larger == 0, 1, -1)
    dlab = labels[np.arange(len(larger)), larger]
    dsign = np.zeros(nu, dtype=np.int64)
    for col, s in ((0, 1), (1, -1)):
        ok = labels[:, col] >= 0
        dsign[labels[ok, col]] = s
    return NodalSet(cls, np.array(pos).reshape(-1, 3), keys, np.array(params), segs,
                    np.array(seg_tri, dtype=np.int64), comp, labels, areas, tsign, dlab, dsign, nu,
                    zero_tol)


def _first_appearance(raw):
    seen, out = {}, np.empty(len(raw), dtype=np.int64)
    for i, r in enumerate(raw):
        out[i] = seen.setdefault(r, len(seen))
    return out


def count_nodal_domains(mesh, values, zero_tol=ZERO_TOL, index_in_spectrum=None):
    """Number of nodal domains; with a spectral position also the Courant flag."""
    nu = extract_nodal_set(mesh, values, zero_tol).nu
    if index_in_spectrum is None:
        return nu
    return nu, nu <= index_in_spectrum


def boundary_intersection_count(mesh, values, loop_index=0, zero_tol=ZERO_TOL):
    """Sign changes of ``values`` around a boundary loop (always even)."""
    if not mesh.boundary_loops:
        raise ParameterError("mesh has no boundary")
    loop = mesh.boundary_loops[loop_index]
    values = np.asarray(values, float)
    scale = np.abs(values).max()
    cls = np.sign(values[loop]).astype(int)
    cls[np.abs(values[loop]) <= zero_tol * scale] = 0
    if not cls.any():
        raise ToleranceError("function vanishes along the whole boundary loop")
    run, longest = 0, 0
    for c in np.concatenate([cls, cls]):
        run = run + 1 if c == 0 else 0
        longest = max(longest, run)
    if longest >= 3:
        raise ToleranceError(f"{longest} consecutive near-zero boundary vertices")
    s = cls[cls != 0]
    return int(np.sum(s != np.roll(s, 1)))


def inner_radius(mesh, nodal_set, domain_id, values):
    """Largest edge-path distance from a domain vertex to the domain's nodal boundary.

    Seeds sit at the nodal points on edges leaving the domain (linear
    interpolation), so the estimate is exact along mesh-aligned directions
    and otherwise within about one triangle diameter of the true inradius.
    A domain without nodal boundary reports the eccentricity of its first vertex.
    """
    vdom = nodal_set.vertex_domains(mesh)
    inside = vdom == domain_id
    if not inside.any():
        raise ParameterError(f"domain {domain_id} has no vertices")
    values = np.asarray(values, float)
    cls = nodal_set.vertex_class
    a, b, ell = mesh.edges[:, 0], mesh.edges[:, 1], mesh.lengths
    both = inside[a] & inside[b]
    n = mesh.n_vertices
    g = sparse.csr_matrix((np.concatenate([ell[both], ell[both]]),
                           (np.concatenate([a[both], b[both]]), np.concatenate([b[both], a[both]]))),
                          shape=(n, n))
    seeds = {}
    for u, w, L in ((a, b, ell), (b, a, ell)):
        m = inside[u] & ~inside[w]
        uu, ww, LL = u[m], w[m], L[m]
        zero = cls[ww] == 0
        off = np.where(zero, LL, np.abs(values[uu]) / (np.abs(values[uu]) + np.abs(values[ww])) * LL)
        opposite = zero | (cls[ww] == -cls[uu])
        for x, o in zip(uu[opposite].tolist(), off[opposite].tolist()):
            seeds[x] = min(seeds.get(x, np.inf), o)
    if not seeds:
        start = int(np.argmax(inside))
        d = csgraph.dijkstra(g, directed=False, indices=start)
        return float(d[inside & np.isfinite(d)].max())
    src = np.array(sorted(seeds))
    offs = np.array([seeds[s] for s in src])
    root = n
    gc = g.tocoo()
    big = sparse.csr_matrix((np.concatenate([gc.data, np.maximum(offs, 1e-300)]),
                             (np.concatenate([gc.row, np.full(len(src), root)]),
                              np.concatenate([gc.col, src]))), shape=(n + 1, n + 1))
    d = csgraph.dijkstra(big, directed=True, indices=root)[:n]
    return float(d[inside & np.isfinite(d)].max())


def min_inradius_times_sqrt_lambda(mesh, values, lam, zero_tol=ZERO_TOL):
    ns = extract_nodal_set(mesh, values, zero_tol)
    radii = [inner_radius(mesh, ns, d, values) for d in range(ns.nu)]
    return float(min(radii) * np.sqrt(lam)), radii
