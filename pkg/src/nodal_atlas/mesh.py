"""Triangulated surfaces carrying intrinsic (edge-length) metric data.

The metric of a :class:`SurfaceMesh` is its per-edge length array. Vertex
coordinates are only used for display and for picking points; every
geometric quantity (areas, angles, gradients, distances) is computed from
edge lengths so that abstract, piecewise and conformally rescaled metrics are
all represented the same way.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from .errors import MeshIntegrityError, ParameterError

PRESETS = ("flat_torus", "round_sphere", "unit_disc", "rectangle", "genus_m_surface")


def edge_table(triangles):
    """Canonical sorted edge list and the edge id opposite each triangle corner.

    Returns
    -------
    edges : (E, 2) int array, rows sorted ``(i < j)``, lexicographically ordered
    tri_edges : (F, 3) int array, ``tri_edges[f, c]`` is the edge opposite corner ``c``
    """
    t = np.asarray(triangles, dtype=np.int64)
    opp = np.stack([t[:, [1, 2]], t[:, [2, 0]], t[:, [0, 1]]], axis=1).reshape(-1, 2)
    opp.sort(axis=1)
    edges, inverse = np.unique(opp, axis=0, return_inverse=True)
    return edges, inverse.reshape(-1, 3)


@dataclass(frozen=True, eq=False)
class SurfaceMesh:
    """Immutable triangle mesh with an intrinsic metric.

    Attributes
    ----------
    vertices : (V, 3) float array
        Display coordinates.
    triangles : (F, 3) int array
        Consistently oriented vertex triples.
    edges : (E, 2) int array
        Sorted unique edges (see :func:`edge_table`).
    lengths : (E,) float array
        Edge lengths; the authoritative metric.
    tri_edges : (F, 3) int array
        Edge opposite each triangle corner.
    boundary_loops : tuple of int arrays
        Ordered boundary cycles, traversed with the surface on the left.
    regions : (F,) int array
        Per-triangle region label (0 unless set by a construction).
    tags : dict
        Free-form metadata (preset name, resolution, ...).
    """

    vertices: np.ndarray
    triangles: np.ndarray
    edges: np.ndarray
    lengths: np.ndarray
    tri_edges: np.ndarray
    boundary_loops: tuple
    regions: np.ndarray
    tags: dict = field(default_factory=dict)

    # ------------------------------------------------------------------ build
    @classmethod
    def build(cls, vertices, triangles, *, lengths=None, corner_coords=None,
              regions=None, tags=None, validate=True):
        """Assemble a mesh and derive edges and boundary loops.

        Edge lengths come from, in order of precedence: ``lengths`` (a mapping
        ``(i, j) -> length`` with ``i < j``, or an array aligned with the
        canonical edge order), ``corner_coords`` (per-triangle unwrapped corner
        positions, shape ``(F, 3, d)``), or the display coordinates.
        """
        verts = np.asarray(vertices, dtype=float)
        if verts.ndim != 2:
            raise MeshIntegrityError("vertices must be a 2-D array")
        if verts.shape[1] == 2:
            verts = np.column_stack([verts, np.zeros(len(verts))])
        tris = np.asarray(triangles, dtype=np.int64).reshape(-1, 3)
        edges, tri_edges = edge_table(tris)

        if lengths is None:
            if corner_coords is None:
                corner_coords = verts[tris]
            cc = np.asarray(corner_coords, dtype=float)
            per_corner = np.stack([
                np.linalg.norm(cc[:, 2] - cc[:, 1], axis=1),
                np.linalg.norm(cc[:, 0] - cc[:, 2], axis=1),
                np.linalg.norm(cc[:, 1] - cc[:, 0], axis=1),
            ], axis=1)
            ell = np.zeros(len(edges))
            ell[tri_edges.ravel()] = per_corner.ravel()
        elif isinstance(lengths, dict):
            ell = np.array([lengths[(int(a), int(b))] for a, b in edges], dtype=float)
        else:
            ell = np.asarray(lengths, dtype=float)
            if ell.shape != (len(edges),):
                raise MeshIntegrityError("length array does not match edge count")

        loops = _boundary_loops(tris)
        reg = np.zeros(len(tris), dtype=np.int64) if regions is None else np.asarray(regions, dtype=np.int64)
        mesh = cls(verts, tris, edges, ell, tri_edges, loops, reg, dict(tags or {}))
        if validate:
            mesh.validate()
        return mesh

    def with_lengths(self, lengths, tags=None):
        """Same combinatorics, new metric."""
        ell = np.asarray(lengths, dtype=float)
        mesh = SurfaceMesh(self.vertices, self.triangles, self.edges, ell, self.tri_edges,
                           self.boundary_loops, self.regions, dict(tags or self.tags))
        mesh.check_triangle_inequality()
        return mesh

    # ------------------------------------------------------------- validation
    def validate(self):
        t = self.triangles
        if len(t) == 0:
            raise MeshIntegrityError("mesh has no triangles")
        if t.min() < 0 or t.max() >= len(self.vertices):
            raise MeshIntegrityError("triangle index out of range")
        if np.any((t[:, 0] == t[:, 1]) | (t[:, 1] == t[:, 2]) | (t[:, 0] == t[:, 2])):
            raise MeshIntegrityError("triangle with repeated vertex")
        counts = np.bincount(self.tri_edges.ravel(), minlength=len(self.edges))
        if counts.max() > 2:
            bad = self.edges[np.argmax(counts)]
            raise MeshIntegrityError(f"non-manifold edge {tuple(bad)} in {counts.max()} triangles")
        he = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        keys = he[:, 0] * len(self.vertices) + he[:, 1]
        if len(np.unique(keys)) != len(keys):
            raise MeshIntegrityError("inconsistent orientation: repeated directed edge")
        if np.any(~np.isfinite(self.lengths)) or np.any(self.lengths <= 0):
            raise MeshIntegrityError("edge lengths must be positive and finite")
        self.check_triangle_inequality()

    def check_triangle_inequality(self):
        L = self.corner_lengths()
        slack = L.sum(axis=1, keepdims=True) - 2 * L
        bad = np.where(slack.min(axis=1) <= 0)[0]
        if len(bad):
            raise MeshIntegrityError(f"triangle inequality violated in triangle {int(bad[0])}")

    # --------------------------------------------------------------- measures
    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_triangles(self):
        return len(self.triangles)

    def corner_lengths(self):
        """(F, 3) lengths of the edge opposite each corner."""
        return self.lengths[self.tri_edges]

    def triangle_areas(self):
        a, b, c = np.sort(self.corner_lengths(), axis=1)[:, ::-1].T
        # Kahan's stable Heron formula (a >= b >= c)
        prod = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c))
        return 0.25 * np.sqrt(np.maximum(prod, 0.0))

    @property
    def area(self):
        return float(self.triangle_areas().sum())

    def euler_characteristic(self):
        return self.n_vertices - len(self.edges) + self.n_triangles

    def mean_edge_length(self):
        return float(self.lengths.mean())

    def triangle_diameter(self):
        """Largest edge length; the resolution scale used for tolerances."""
        return float(self.lengths.max())

    def boundary_vertices(self):
        if not self.boundary_loops:
            return np.zeros(0, dtype=np.int64)
        return np.unique(np.concatenate(self.boundary_loops))

    def angle_defects(self):
        """2*pi (interior) or pi (boundary) minus the summed corner angles."""
        L = self.corner_lengths()
        a, b, c = L[:, 0], L[:, 1], L[:, 2]
        ang = np.stack([
            np.arccos(np.clip((b * b + c * c - a * a) / (2 * b * c), -1, 1)),
            np.arccos(np.clip((c * c + a * a - b * b) / (2 * c * a), -1, 1)),
            np.arccos(np.clip((a * a + b * b - c * c) / (2 * a * b), -1, 1)),
        ], axis=1)
        total = np.bincount(self.triangles.ravel(), weights=ang.ravel(), minlength=self.n_vertices)
        target = np.full(self.n_vertices, 2 * np.pi)
        target[self.boundary_vertices()] = np.pi
        return target - total

    def edge_graph(self):
        """Symmetric sparse adjacency weighted by edge length."""
        n = self.n_vertices
        i, j = self.edges[:, 0], self.edges[:, 1]
        w = self.lengths
        return sparse.csr_matrix((np.concatenate([w, w]), (np.concatenate([i, j]), np.concatenate([j, i]))),
                                 shape=(n, n))

    def geodesic_distance(self, sources, offsets=None):
        """Edge-path distance from a set of source vertices (multi-source Dijkstra)."""
        sources = np.atleast_1d(np.asarray(sources, dtype=np.int64))
        if offsets is None:
            d = csgraph.dijkstra(self.edge_graph(), directed=False, indices=sources, min_only=True)
            return np.asarray(d)
        # offset sources: attach a virtual root
        n = self.n_vertices
        g = self.edge_graph().tocoo()
        rows = np.concatenate([g.row, np.full(len(sources), n)])
        cols = np.concatenate([g.col, sources])
        vals = np.concatenate([g.data, np.maximum(np.asarray(offsets, float), 1e-300)])
        big = sparse.csr_matrix((vals, (rows, cols)), shape=(n + 1, n + 1))
        d = csgraph.dijkstra(big, directed=True, indices=n)
        return d[:n]

    def nearest_vertex(self, point):
        p = np.zeros(3)
        q = np.asarray(point, dtype=float).ravel()
        p[:len(q)] = q
        return int(np.argmin(np.linalg.norm(self.vertices - p, axis=1)))

    def vertex_triangles(self):
        """CSR incidence: rows vertices, columns triangles."""
        f = np.repeat(np.arange(self.n_triangles), 3)
        return sparse.csr_matrix((np.ones(len(f)), (self.triangles.ravel(), f)),
                                 shape=(self.n_vertices, self.n_triangles))

    def edge_triangles(self):
        """(E, 2) triangles on each edge; -1 where the edge is on the boundary."""
        et = np.full((len(self.edges), 2), -1, dtype=np.int64)
        flat = self.tri_edges.ravel()
        tri = np.repeat(np.arange(self.n_triangles), 3)
        order = np.argsort(flat, kind="stable")
        fs, ts = flat[order], tri[order]
        first = np.ones(len(fs), dtype=bool)
        first[1:] = fs[1:] != fs[:-1]
        et[fs[first], 0] = ts[first]
        et[fs[~first], 1] = ts[~first]
        return et


def _boundary_loops(tris):
    he = np.concatenate([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]])
    present = set(map(tuple, he.tolist()))
    bnd = [(a, b) for a, b in he.tolist() if (b, a) not in present]
    nxt = {}
    for a, b in bnd:
        if a in nxt:
            raise MeshIntegrityError(f"boundary pinched at vertex {a}")
        nxt[a] = b
    loops, seen = [], set()
    for start in sorted(nxt):
        if start in seen:
            continue
        loop, v = [], start
        while v not in seen:
            seen.add(v)
            loop.append(v)
            v = nxt[v]
        loops.append(np.array(loop, dtype=np.int64))
    return tuple(loops)


def euler_data(mesh):
    """Return ``(genus, boundary_count)`` from the Euler characteristic."""
    b = len(mesh.boundary_loops)
    twice_g = 2 - mesh.euler_characteristic() - b
    comps = csgraph.connected_components(mesh.edge_graph(), directed=False)[0]
    if comps != 1 or twice_g < 0 or twice_g % 2:
        raise MeshIntegrityError(
            f"mesh is not a connected orientable surface (chi={mesh.euler_characteristic()}, b={b}, components={comps})")
    return twice_g // 2, b


# ------------------------------------------------------------------ presets
def flat_torus(resolution, width=1.0, height=1.0):
    """Periodic grid on ``[0, width) x [0, height)``.

    Cells alternate their diagonal in a checkerboard ("union jack") pattern
    when the resolution is even, which makes the triangulation invariant
    under quarter turns and reflections about grid vertices.
    """
    n = int(resolution)
    if n < 2:
        raise ParameterError("flat_torus resolution must be >= 2")
    idx = lambda i, j: (i % n) + (j % n) * n  # noqa: E731
    tris, corners = [], []
    for j in range(n):
        for i in range(n):
            p = {(a, b): (a * width / n, b * height / n, 0.0) for a in (i, i + 1) for b in (j, j + 1)}
            if n % 2 == 0 and (i + j) % 2:
                cells = [((i, j), (i + 1, j), (i, j + 1)), ((i + 1, j), (i + 1, j + 1), (i, j + 1))]
            else:
                cells = [((i, j), (i + 1, j), (i + 1, j + 1)), ((i, j), (i + 1, j + 1), (i, j + 1))]
            for c in cells:
                tris.append([idx(*v) for v in c])
                corners.append([p[v] for v in c])
    gi, gj = np.meshgrid(np.arange(n), np.arange(n), indexing="xy")
    verts = np.column_stack([gi.ravel() * width / n, gj.ravel() * height / n, np.zeros(n * n)])
    return SurfaceMesh.build(verts, tris, corner_coords=np.array(corners),
                             tags={"preset": "flat_torus", "resolution": n, "width": width, "height": height})


def round_sphere(resolution, radius=1.0):
    """Icosahedron subdivided ``resolution`` times and projected to the sphere."""
    s = int(resolution)
    if s < 1:
        raise ParameterError("round_sphere subdivision level must be >= 1")
    phi = (1 + 5 ** 0.5) / 2
    v = [(-1, phi, 0), (1, phi, 0), (-1, -phi, 0), (1, -phi, 0), (0, -1, phi), (0, 1, phi),
         (0, -1, -phi), (0, 1, -phi), (phi, 0, -1), (phi, 0, 1), (-phi, 0, -1), (-phi, 0, 1)]
    f = [(0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11), (1, 5, 9), (5, 11, 4),
         (11, 10, 2), (10, 7, 6), (7, 1, 8), (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8),
         (3, 8, 9), (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1)]
    verts = [np.array(p, float) / np.linalg.norm(p) for p in v]
    for _ in range(s):
        cache, nf = {}, []

        def mid(a, b):
            key = (min(a, b), max(a, b))
            if key not in cache:
                m = verts[a] + verts[b]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        for a, b, c in f:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            nf += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        f = nf
    return SurfaceMesh.build(np.array(verts) * radius, f,
                             tags={"preset": "round_sphere", "resolution": s, "radius": radius})


def zip_rings(inner_ids, inner_angles, outer_ids, outer_angles):
    """Triangulate the band between two concentric vertex rings.

    Angles must be increasing (counter-clockwise) and start near the same
    direction. A single-vertex inner ring produces a fan.
    """
    ni, no = len(inner_ids), len(outer_ids)
    ia = np.append(np.asarray(inner_angles, float), inner_angles[0] + 2 * np.pi)
    oa = np.append(np.asarray(outer_angles, float), outer_angles[0] + 2 * np.pi)
    tris, p, q = [], 0, 0
    while p < ni or q < no:
        if ni == 1:
            adv_inner = False
        elif q >= no:
            adv_inner = True
        elif p >= ni:
            adv_inner = False
        else:
            adv_inner = ia[p + 1] < oa[q + 1]
        if adv_inner:
            tris.append((inner_ids[p % ni], outer_ids[q % no], inner_ids[(p + 1) % ni]))
            p += 1
        else:
            tris.append((inner_ids[p % ni], outer_ids[q % no], outer_ids[(q + 1) % no]))
            q += 1
        if ni == 1 and q >= no:
            break
    return tris


def revolution_disc(ring_params, ring_counts, embed):
    """Disc meshed by rings around a centre vertex.

    ``ring_params[i]`` is the radial parameter of ring ``i`` (ring 0 is the
    centre, count 1) and ``embed(param, angle)`` maps to 3-D display and
    metric coordinates. Edge lengths are chord lengths of the embedding.
    """
    verts, rings = [], []
    for s, cnt in zip(ring_params, ring_counts):
        ang = 2 * np.pi * np.arange(cnt) / cnt
        ids = list(range(len(verts), len(verts) + cnt))
        verts += [embed(s, a) for a in ang]
        rings.append((ids, ang))
    tris = []
    for (ai, aa), (bi, ba) in zip(rings[:-1], rings[1:]):
        tris += zip_rings(ai, aa, bi, ba)
    return np.array(verts, float), tris


def unit_disc(resolution, radius=1.0):
    n = int(resolution)
    if n < 2:
        raise ParameterError("unit_disc resolution must be >= 2")
    params = [radius * i / n for i in range(n + 1)]
    counts = [1] + [6 * i for i in range(1, n + 1)]
    verts, tris = revolution_disc(params, counts, lambda r, a: (r * math.cos(a), r * math.sin(a), 0.0))
    return SurfaceMesh.build(verts, tris, tags={"preset": "unit_disc", "resolution": n, "radius": radius})


def rectangle(resolution, width=1.0, height=1.0):
    n = int(resolution)
    if n < 2:
        raise ParameterError("rectangle resolution must be >= 2")
    nx, ny = n, max(2, int(round(n * height / width)))
    idx = lambda i, j: i + j * (nx + 1)  # noqa: E731
    tris = []
    for j in range(ny):
        for i in range(nx):
            if (i + j) % 2:
                tris += [(idx(i, j), idx(i + 1, j), idx(i, j + 1)), (idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1))]
            else:
                tris += [(idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)), (idx(i, j), idx(i + 1, j + 1), idx(i, j + 1))]
    gi, gj = np.meshgrid(np.arange(nx + 1), np.arange(ny + 1), indexing="xy")
    verts = np.column_stack([gi.ravel() * width / nx, gj.ravel() * height / ny, np.zeros(gi.size)])
    return SurfaceMesh.build(verts, tris, tags={"preset": "rectangle", "resolution": n,
                                                "width": width, "height": height})


def build_preset(preset, resolution, **extra):
    """Construct one of the named test surfaces (see :data:`PRESETS`)."""
    if preset not in PRESETS:
        raise ParameterError(f"unknown preset {preset!r}; expected one of {PRESETS}")
    if not isinstance(resolution, (int, np.integer)) or resolution < 2:
        raise ParameterError("resolution must be an integer >= 2")
    if preset == "flat_torus":
        return flat_torus(resolution, **extra)
    if preset == "round_sphere":
        return round_sphere(resolution, **extra)
    if preset == "unit_disc":
        return unit_disc(resolution, **extra)
    if preset == "rectangle":
        return rectangle(resolution, **extra)
    from .surgery import genus_surface
    return genus_surface(resolution, **extra)


# ---------------------------------------------------------- metric families
@dataclass(frozen=True, eq=False)
class MetricFamily:
    """Conformal family ``g_t = exp(2 t f) g``, discretised per edge.

    Edge ``(i, j)`` is scaled by ``exp(t (f_i + f_j) / 2)``; exact for
    constant ``f`` and second-order accurate otherwise.
    """

    base: SurfaceMesh
    conformal_factor: np.ndarray

    def edge_log_scale(self):
        f = self.conformal_factor
        return 0.5 * (f[self.base.edges[:, 0]] + f[self.base.edges[:, 1]])

    def evaluate(self, t):
        if t == 0:
            return self.base
        tags = dict(self.base.tags, t=float(t))
        return self.base.with_lengths(self.base.lengths * np.exp(t * self.edge_log_scale()), tags=tags)


def conformal_family(mesh, f):
    f = np.asarray(f, dtype=float)
    if f.shape != (mesh.n_vertices,):
        raise ParameterError("conformal factor must have one value per vertex")
    if not np.all(np.isfinite(f)):
        raise ParameterError("conformal factor must be finite")
    return MetricFamily(mesh, f)


# ----------------------------------------------------------- serialization
def dumps(mesh):
    """Plain-text form with VERTICES / TRIANGLES / EDGELENGTHS / BOUNDARY sections."""
    out = [f"VERTICES {mesh.n_vertices}"]
    out += ["%.15g %.15g %.15g" % tuple(v) for v in mesh.vertices]
    out.append(f"TRIANGLES {mesh.n_triangles}")
    out += ["%d %d %d %d" % (a, b, c, r) for (a, b, c), r in zip(mesh.triangles, mesh.regions)]
    out.append(f"EDGELENGTHS {len(mesh.edges)}")
    out += ["%d %d %.15g" % (a, b, ell) for (a, b), ell in zip(mesh.edges, mesh.lengths)]
    out.append(f"BOUNDARY {len(mesh.boundary_loops)}")
    out += [" ".join(str(int(v)) for v in loop) for loop in mesh.boundary_loops]
    return "\n".join(out) + "\n"


def loads(text):
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    pos, sections = 0, {}
    while pos < len(lines):
        name, count = lines[pos].split()
        count = int(count)
        sections[name] = lines[pos + 1:pos + 1 + count]
        pos += 1 + count
    missing = {"VERTICES", "TRIANGLES", "EDGELENGTHS", "BOUNDARY"} - set(sections)
    if missing:
        raise MeshIntegrityError(f"missing sections: {sorted(missing)}")
    verts = np.array([[float(x) for x in ln.split()] for ln in sections["VERTICES"]])
    rows = np.array([[int(x) for x in ln.split()] for ln in sections["TRIANGLES"]], dtype=np.int64)
    lengths = {}
    for ln in sections["EDGELENGTHS"]:
        a, b, ell = ln.split()
        lengths[(int(a), int(b))] = float(ell)
    mesh = SurfaceMesh.build(verts, rows[:, :3], lengths=lengths, regions=rows[:, 3])
    declared = [tuple(int(x) for x in ln.split()) for ln in sections["BOUNDARY"]]
    if sorted(declared) != sorted(tuple(lp.tolist()) for lp in mesh.boundary_loops):
        raise MeshIntegrityError("declared boundary loops disagree with the triangulation")
    return mesh
