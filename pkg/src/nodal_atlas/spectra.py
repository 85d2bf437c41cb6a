"""Discrete Laplace-Beltrami operators, eigensolves and eigenbranch matching."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy import sparse
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from . import bessel
from .errors import AssemblyError, BranchAmbiguityError, NumericError, ParameterError, SolverError

BCS = ("closed", "neumann", "dirichlet")
CLUSTER_RTOL = 1e-3
DEFAULT_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class EigenPair:
    lam: float
    values: np.ndarray
    bc: str
    index_in_spectrum: int
    residual: float = 0.0


@dataclass(frozen=True, eq=False)
class SpectrumSlice:
    pairs: list
    mass: sparse.spmatrix = field(repr=False, default=None)
    cluster_rtol: float = CLUSTER_RTOL
    tail_open: bool = False

    @property
    def eigenvalues(self):
        return np.array([p.lam for p in self.pairs])

    @property
    def gaps(self):
        return np.diff(self.eigenvalues)

    @property
    def degenerate_clusters(self):
        return cluster_indices(self.eigenvalues, self.cluster_rtol)

    def cluster_of(self, i):
        return next(c for c in self.degenerate_clusters if i in c)

    def report(self):
        """Structured record: ``{bc, eigenvalues, residuals, clusters}``."""
        return {
            "bc": self.pairs[0].bc if self.pairs else None,
            "eigenvalues": [float(p.lam) for p in self.pairs],
            "residuals": [float(p.residual) for p in self.pairs],
            "clusters": [[self.pairs[i].index_in_spectrum for i in c] for c in self.degenerate_clusters],
        }


def cluster_indices(lams, rtol=CLUSTER_RTOL):
    """Partition sorted eigenvalues into groups with relative gap below ``rtol``."""
    groups, cur = [], [0] if len(lams) else []
    for i in range(1, len(lams)):
        scale = max(abs(lams[i]), abs(lams[i - 1]))
        if scale > 0 and (lams[i] - lams[i - 1]) < rtol * scale or scale == 0:
            cur.append(i)
        else:
            groups.append(cur)
            cur = [i]
    if cur:
        groups.append(cur)
    return groups


def assemble_operators(mesh, bc="closed"):
    """Cotangent stiffness and consistent P1 mass matrices from edge lengths.

    For ``dirichlet`` the matrices are restricted to interior vertices; use
    :func:`free_vertices` to map back.
    """
    if bc not in BCS:
        raise ParameterError(f"bc must be one of {BCS}")
    if bc == "closed" and mesh.boundary_loops:
        raise ParameterError("closed boundary condition requires a mesh without boundary")
    if bc != "closed" and not mesh.boundary_loops:
        raise ParameterError(f"{bc} boundary condition requires a mesh with boundary")
    L = mesh.corner_lengths()
    area = mesh.triangle_areas()
    tiny = 1e-14 * mesh.mean_edge_length() ** 2
    bad = np.where(area <= tiny)[0]
    if len(bad):
        raise AssemblyError(f"degenerate triangle {int(bad[0])} (area {area[bad[0]]:.3e})")
    l2 = L ** 2
    # cot of the angle at corner c: (l_{c+1}^2 + l_{c+2}^2 - l_c^2) / (4 A)
    cot = (np.roll(l2, -1, axis=1) + np.roll(l2, -2, axis=1) - l2) / (4 * area[:, None])
    if not np.all(np.isfinite(cot)):
        raise AssemblyError(f"cotangent overflow in triangle {int(np.where(~np.isfinite(cot))[0][0])}")
    t = mesh.triangles
    n = mesh.n_vertices
    i = np.concatenate([t[:, 1], t[:, 2], t[:, 0]])
    j = np.concatenate([t[:, 2], t[:, 0], t[:, 1]])
    w = 0.5 * np.concatenate([cot[:, 0], cot[:, 1], cot[:, 2]])
    off = sparse.coo_matrix((-w, (i, j)), shape=(n, n))
    off = off + off.T
    diag = -np.asarray(off.sum(axis=1)).ravel()
    S = (off + sparse.diags(diag)).tocsr()
    mi = np.concatenate([t[:, 0], t[:, 1], t[:, 2], i])
    mj = np.concatenate([t[:, 0], t[:, 1], t[:, 2], j])
    mv = np.concatenate([area / 6, area / 6, area / 6, np.tile(area / 12, 3)])
    M = sparse.coo_matrix((mv, (mi, mj)), shape=(n, n))
    Mo = sparse.coo_matrix((np.tile(area / 12, 3), (j, i)), shape=(n, n))
    M = (M + Mo).tocsr()
    if bc == "dirichlet":
        free = free_vertices(mesh, bc)
        S = S[free][:, free]
        M = M[free][:, free]
    return S, M


def free_vertices(mesh, bc):
    if bc != "dirichlet":
        return np.arange(mesh.n_vertices)
    return np.setdiff1d(np.arange(mesh.n_vertices), mesh.boundary_vertices())


def mass_matrix(mesh):
    bc = "neumann" if mesh.boundary_loops else "closed"
    return assemble_operators(mesh, bc)[1]


def _normalize_sign(v):
    k = int(np.argmax(np.abs(v) - 1e-9 * np.arange(len(v)) * np.abs(v).max()))
    return v if v[k] >= 0 else -v


def solve_spectrum(mesh, count, bc="closed", tol=DEFAULT_TOL, cluster_rtol=CLUSTER_RTOL, operators=None):
    """Lowest ``count`` eigenpairs of ``S u = lam M u``.

    Shift-invert Lanczos (ARPACK) below the spectrum with a deterministic
    start vector, followed by a Rayleigh-Ritz cleanup so clustered vectors
    are mass-orthonormal to round-off.
    """
    S, M = operators if operators is not None else assemble_operators(mesh, bc)
    n = S.shape[0]
    if count < 1 or count >= n:
        raise ParameterError("count must satisfy 1 <= count < number of free vertices")
    extra = min(3, n - 1 - count)
    k = count + extra
    scale = float(S.diagonal().mean() / M.diagonal().mean())
    sigma = -1e-3 * scale
    v0 = np.ones(n) + 0.01 * np.cos(np.arange(n) * 0.7548776662)
    try:
        lam, vec = eigsh(S, k=k, M=M, sigma=sigma, which="LM", v0=v0, maxiter=500 * k, tol=0)
    except ArpackNoConvergence as exc:
        raise SolverError("eigensolver did not converge", residuals=None) from exc
    order = np.argsort(lam)
    vec = vec[:, order]
    Sr = vec.T @ (S @ vec)
    Mr = vec.T @ (M @ vec)
    lam, c = scipy.linalg.eigh(0.5 * (Sr + Sr.T), 0.5 * (Mr + Mr.T))
    vec = vec @ c
    pairs = []
    free = free_vertices(mesh, bc)
    residuals = []
    for idx in range(k):
        v = vec[:, idx]
        v = v / math.sqrt(float(v @ (M @ v)))
        v = _normalize_sign(v)
        Mv = M @ v
        res = float(np.linalg.norm(S @ v - lam[idx] * Mv) / np.linalg.norm(Mv))
        residuals.append(res)
        full = np.zeros(mesh.n_vertices)
        full[free] = v
        lam_i = float(lam[idx]) if abs(lam[idx]) > 1e-9 * max(1.0, abs(lam[-1])) else 0.0
        pairs.append(EigenPair(lam_i, full, bc, idx + 1, res))
    bad = [r for r in residuals[:count] if r > tol]
    if bad:
        raise SolverError(f"residual {max(bad):.2e} above tolerance {tol:.1e}", residuals=residuals)
    lams = np.array([p.lam for p in pairs])
    tail_open = bool(extra) and (lams[count] - lams[count - 1]) < cluster_rtol * max(abs(lams[count]), 1e-300)
    full_mass = mass_matrix(mesh) if bc == "dirichlet" else M
    return SpectrumSlice(pairs[:count], full_mass, cluster_rtol, tail_open)


def inner(u, v, mass):
    return float(u @ (mass @ v))


def match_branch(reference, candidates, mass=None, threshold=0.8, allow_projection=False, cluster_rtol=None):
    """Candidate with the largest mass-weighted overlap with ``reference``.

    The returned pair is sign-aligned so the overlap is positive. Raises
    :class:`BranchAmbiguityError` when the best overlap is below
    ``threshold`` or the match lies in a degenerate cluster. With
    ``allow_projection`` a clustered match is instead replaced by the
    projection of the reference onto the cluster eigenspace, provided the
    reference lies in that space up to ``threshold``. ``cluster_rtol``
    overrides the spectrum's own grouping; a continuation that only needs
    eigenvectors the solver can resolve passes a much smaller value.
    """
    mass = candidates.mass if mass is None else mass
    ref = np.asarray(getattr(reference, "values", reference), dtype=float)
    ref = ref / math.sqrt(inner(ref, ref, mass))
    ov = np.array([inner(ref, p.values, mass) for p in candidates.pairs])
    best = int(np.argmax(np.abs(ov)))
    if cluster_rtol is None:
        cluster = candidates.cluster_of(best)
    else:
        cluster = next(c for c in cluster_indices(candidates.eigenvalues, cluster_rtol) if best in c)
    if len(cluster) > 1:
        coeffs = ov[cluster]
        captured = float(np.linalg.norm(coeffs))
        if not allow_projection or captured < threshold:
            raise BranchAmbiguityError(
                f"match at index {candidates.pairs[best].index_in_spectrum} lies in degenerate cluster "
                f"{[candidates.pairs[i].index_in_spectrum for i in cluster]}", overlap=captured)
        vals = sum(c * candidates.pairs[i].values for c, i in zip(coeffs, cluster))
        vals = vals / math.sqrt(inner(vals, vals, mass))
        lam = float(np.dot(coeffs ** 2, [candidates.pairs[i].lam for i in cluster]) / captured ** 2)
        first = candidates.pairs[cluster[0]]
        return EigenPair(lam, vals, first.bc, first.index_in_spectrum, 0.0), captured
    if abs(ov[best]) < threshold:
        raise BranchAmbiguityError(f"best overlap {abs(ov[best]):.3f} below threshold {threshold}",
                                   overlap=abs(ov[best]))
    p = candidates.pairs[best]
    sign = 1.0 if ov[best] >= 0 else -1.0
    return EigenPair(p.lam, sign * p.values, p.bc, p.index_in_spectrum, p.residual), float(abs(ov[best]))


def limit_branches(family, spectrum, cluster, bc="closed", h=1e-6):
    """Branches of a degenerate cluster that continue smoothly in ``t``.

    First-order degenerate perturbation theory: diagonalise
    ``V^T (S' - lam M') V`` over the cluster basis ``V`` where primes are
    derivatives in ``t`` at ``t = 0`` (central differences). Returns a list
    of ``(slope, EigenPair)`` sorted by slope.
    """
    base = family.base
    Sp, Mp = assemble_operators(family.evaluate(h), bc)
    Sm, Mm = assemble_operators(family.evaluate(-h), bc)
    dS = (Sp - Sm) / (2 * h)
    dM = (Mp - Mm) / (2 * h)
    V = np.column_stack([spectrum.pairs[i].values[free_vertices(base, bc)] for i in cluster])
    lam0 = float(np.mean([spectrum.pairs[i].lam for i in cluster]))
    A = V.T @ ((dS - lam0 * dM) @ V)
    slopes, C = np.linalg.eigh(0.5 * (A + A.T))
    out = []
    for s, c in zip(slopes, C.T):
        full = np.zeros(base.n_vertices)
        full[free_vertices(base, bc)] = V @ c
        full = _normalize_sign(full)
        out.append((float(s), EigenPair(lam0, full, bc, spectrum.pairs[cluster[0]].index_in_spectrum)))
    return out


# ------------------------------------------------------------ disc modes
@dataclass(frozen=True)
class DiscMode:
    """Neumann eigenfunction J_n(sqrt(lam) r) cos(n (theta - theta0)) of a disc."""

    n: int
    m: int
    radius: float
    root: float
    theta0: float = 0.0

    @property
    def lam(self):
        return (self.root / self.radius) ** 2

    def __call__(self, r, theta):
        k = math.sqrt(self.lam)
        return bessel.jn(self.n, k * np.asarray(r, float)) * np.cos(self.n * (np.asarray(theta) - self.theta0))

    def radial_derivative(self, r, theta):
        k = math.sqrt(self.lam)
        return k * bessel.jn_prime(self.n, k * np.asarray(r, float)) * np.cos(self.n * (np.asarray(theta) - self.theta0))

    def laplacian_residual(self, r, theta):
        """|Delta phi + lam phi| with J'' from the three-term recurrence."""
        k = math.sqrt(self.lam)
        x = k * np.asarray(r, float)
        J = bessel.jn(self.n, x)
        Jp = bessel.jn_prime(self.n, x)
        Jpp = bessel.jn_second(self.n, x)
        radial = k * k * (Jpp + Jp / x - self.n ** 2 * J / x ** 2 + J)
        return np.abs(radial * np.cos(self.n * (np.asarray(theta) - self.theta0)))

    def sample(self, mesh, center=(0.0, 0.0)):
        p = mesh.vertices[:, :2] - np.asarray(center)[None, :]
        return self(np.hypot(p[:, 0], p[:, 1]), np.arctan2(p[:, 1], p[:, 0]))

    @property
    def boundary_intersections(self):
        return 2 * self.n


def disc_bessel_mode(n, m=1, radius=1.0, theta0=0.0):
    if n < 0 or m < 1 or radius <= 0:
        raise ParameterError("need n >= 0, m >= 1, radius > 0")
    try:
        root = bessel.jn_prime_zeros(n, m)[m - 1]
    except NumericError:
        raise
    return DiscMode(int(n), int(m), float(radius), root, float(theta0))
