"""Exact curve arrangements in the unit disc and the sector identity S = 2k - C + 1.

Curves are polylines with rational vertices; endpoints lie exactly on the
unit circle (rational points from the parametrisation
``((1 - t^2) / (1 + t^2), 2t / (1 + t^2))``). Intersections, the planar
subdivision and its faces are computed with :class:`fractions.Fraction`, so
every incidence is decided exactly.

A valid arrangement (the class of admissible local nodal pictures) has
simple curves joining distinct circle points, pairwise meeting at most once,
and every bounded face touching the circle along an arc of positive length.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

import numpy as np

from .errors import ArrangementInputError, GeneratorError

ONE = Fraction(1)


def circle_point(theta, max_den=10_000):
    """Exact rational point of the unit circle close to angle ``theta``."""
    theta = math.remainder(theta, 2 * math.pi)
    mirror = abs(theta) > math.pi / 2
    if mirror:
        theta = math.copysign(math.pi, theta) - theta
    t = Fraction(math.tan(theta / 2)).limit_denominator(max_den)
    d = 1 + t * t
    x, y = (1 - t * t) / d, 2 * t / d
    return (-x, y) if mirror else (x, y)


def _frac_point(p):
    return (Fraction(p[0]), Fraction(p[1]))


def _cross(ax, ay, bx, by):
    return ax * by - ay * bx


def _dir_key(d):
    dx, dy = d
    return 0 if (dy > 0 or (dy == 0 and dx > 0)) else 1


def _cmp_dir(a, b):
    ha, hb = _dir_key(a), _dir_key(b)
    if ha != hb:
        return ha - hb
    c = _cross(a[0], a[1], b[0], b[1])
    return -1 if c > 0 else (1 if c < 0 else 0)


@dataclass(frozen=True, eq=False)
class ChordArrangement:
    curves: tuple  # tuple of tuples of (Fraction, Fraction)

    @classmethod
    def from_points(cls, curves):
        return cls(tuple(tuple(_frac_point(p) for p in c) for c in curves))

    @property
    def k(self):
        return len(self.curves)

    def with_curve(self, curve):
        return ChordArrangement(self.curves + (tuple(_frac_point(p) for p in curve),))

    def dumps(self):
        return "".join("CURVE " + " ".join(f"{x} {y}" for x, y in c) + "\n" for c in self.curves)

    @classmethod
    def loads(cls, text):
        curves = []
        for n, line in enumerate(text.splitlines(), 1):
            tok = line.split()
            if not tok or tok[0].startswith("#"):
                continue
            if tok[0] != "CURVE" or len(tok) < 5 or len(tok) % 2 == 0:
                raise ArrangementInputError(f"line {n}: expected 'CURVE x1 y1 x2 y2 ...'")
            try:
                vals = [Fraction(t) for t in tok[1:]]
            except (ValueError, ZeroDivisionError) as exc:
                raise ArrangementInputError(f"line {n}: bad rational {exc}") from None
            curves.append(tuple(zip(vals[0::2], vals[1::2])))
        return cls(tuple(curves))


# ------------------------------------------------------------ intersections
def _seg_intersection(p, q, r, s):
    """Intersection of closed segments pq and rs: None, a point, or 'overlap'."""
    dx1, dy1 = q[0] - p[0], q[1] - p[1]
    dx2, dy2 = s[0] - r[0], s[1] - r[1]
    den = _cross(dx1, dy1, dx2, dy2)
    wx, wy = r[0] - p[0], r[1] - p[1]
    if den == 0:
        if _cross(wx, wy, dx1, dy1) != 0:
            return None
        # collinear: overlap of parameter ranges along pq
        L = dx1 * dx1 + dy1 * dy1
        t0 = (wx * dx1 + wy * dy1) / L
        t1 = ((s[0] - p[0]) * dx1 + (s[1] - p[1]) * dy1) / L
        lo, hi = max(min(t0, t1), 0), min(max(t0, t1), 1)
        if lo > hi:
            return None
        if lo == hi:
            return (p[0] + lo * dx1, p[1] + lo * dy1)
        return "overlap"
    t = _cross(wx, wy, dx2, dy2) / den
    u = _cross(wx, wy, dx1, dy1) / den
    if 0 <= t <= 1 and 0 <= u <= 1:
        return (p[0] + t * dx1, p[1] + t * dy1)
    return None


@dataclass
class Subdivision:
    n_vertices: int
    n_edges: int
    n_faces: int
    outer_faces: int
    faces_without_arc: int
    sectors: int
    components: int
    curve_points: dict = field(default_factory=dict)  # distinct meeting points per curve pair
    component_of: list = field(default_factory=list)


def _validate_curves(arr):
    """Geometric conditions on single curves; returns a reason string or None."""
    ends = []
    for i, c in enumerate(arr.curves):
        if len(c) < 2:
            return f"curve {i} has fewer than two points"
        for a, b in zip(c, c[1:]):
            if a == b:
                return f"curve {i} has a repeated vertex"
        for j, p in enumerate(c):
            rr = p[0] * p[0] + p[1] * p[1]
            on = rr == 1
            if j in (0, len(c) - 1):
                if not on:
                    return f"curve {i} endpoint {j} is not on the unit circle"
            elif rr >= 1:
                return f"curve {i} interior vertex {j} is not strictly inside the disc"
        segs = list(zip(c, c[1:]))
        for a in range(len(segs)):
            for b in range(a + 1, len(segs)):
                x = _seg_intersection(*segs[a], *segs[b])
                if x is None:
                    continue
                if b == a + 1 and x == segs[a][1]:
                    continue
                return f"curve {i} intersects itself"
        ends.extend([c[0], c[-1]])
    if len(set(ends)) != len(ends):
        return "curve endpoints are not distinct"
    return None


def build_subdivision(arr):
    """Planar subdivision of the disc by the curves and the circle arcs.

    Raises :class:`ArrangementInputError` for overlapping segments. The
    returned record includes the Euler-formula face count and a half-edge
    traversal count; they must agree.
    """
    curves = arr.curves
    k = len(curves)
    segs = []  # (curve id, p, q)
    for i, c in enumerate(curves):
        for a, b in zip(c, c[1:]):
            segs.append((i, a, b))
    on_seg = [[s[1], s[2]] for s in segs]
    meet = {}  # (ci, cj) -> set of points
    for a, b in combinations(range(len(segs)), 2):
        ia, ib = segs[a][0], segs[b][0]
        if ia == ib:
            continue
        x = _seg_intersection(segs[a][1], segs[a][2], segs[b][1], segs[b][2])
        if x is None:
            continue
        if x == "overlap":
            raise ArrangementInputError(f"curves {ia} and {ib} overlap along a segment")
        on_seg[a].append(x)
        on_seg[b].append(x)
        meet.setdefault((min(ia, ib), max(ia, ib)), set()).add(x)
    vid = {}

    def vertex(p):
        return vid.setdefault(p, len(vid))

    edges = []  # (u, v, kind, dir_u, dir_v)
    for (ci, p, q), pts in zip(segs, on_seg):
        dx, dy = q[0] - p[0], q[1] - p[1]
        L = dx * dx + dy * dy
        ordered = sorted(set(pts), key=lambda z: ((z[0] - p[0]) * dx + (z[1] - p[1]) * dy) / L)
        for a, b in zip(ordered, ordered[1:]):
            edges.append((vertex(a), vertex(b), "curve", (b[0] - a[0], b[1] - a[1]), (a[0] - b[0], a[1] - b[1])))
    ends = sorted({c[0] for c in curves} | {c[-1] for c in curves},
                  key=functools.cmp_to_key(lambda a, b: _cmp_dir(a, b)))
    for a, b in zip(ends, ends[1:] + ends[:1]):
        # counterclockwise arc from a to b
        edges.append((vertex(a), vertex(b), "arc", (-a[1], a[0]), (b[1], -b[0])))
    V, E = len(vid), len(edges)
    # half-edges: 2e runs u->v, 2e+1 runs v->u
    out = [[] for _ in range(V)]
    for e, (u, v, kind, du, dv) in enumerate(edges):
        out[u].append((du, 2 * e))
        out[v].append((dv, 2 * e + 1))
    pos = {}
    for v in range(V):
        out[v].sort(key=functools.cmp_to_key(lambda a, b: _cmp_dir(a[0], b[0])))
        for i, (_, h) in enumerate(out[v]):
            pos[h] = (v, i)

    def head(h):
        u, v = edges[h // 2][:2]
        return v if h % 2 == 0 else u

    def nxt(h):
        v = head(h)
        _, i = pos[h ^ 1]
        ring = out[v]
        return ring[(i - 1) % len(ring)][1]

    seen = [False] * (2 * E)
    faces, outer, no_arc = 0, 0, 0
    for h0 in range(2 * E):
        if seen[h0]:
            continue
        faces += 1
        h, kinds = h0, []
        while not seen[h]:
            seen[h] = True
            kinds.append((edges[h // 2][2], h % 2))
            h = nxt(h)
        if all(kd == "arc" and rev == 1 for kd, rev in kinds):
            outer += 1
        elif not any(kd == "arc" and rev == 0 for kd, rev in kinds):
            no_arc += 1
    # components of the union of curves
    parent = list(range(k))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for (i, j) in meet:
        parent[find(i)] = find(j)
    roots = [find(i) for i in range(k)]
    return Subdivision(V, E, faces, outer, no_arc, faces - 1, len(set(roots)), meet, roots)


@dataclass(frozen=True)
class Validity:
    valid: bool
    reason: str = ""

    def __bool__(self):
        return self.valid


def _check(arr):
    """Validity and, when the curves are well formed, the subdivision."""
    reason = _validate_curves(arr)
    if reason:
        return Validity(False, reason), None
    sub = build_subdivision(arr)
    for (i, j), pts in sub.curve_points.items():
        if len(pts) > 1:
            return Validity(False, f"curves {i} and {j} meet {len(pts)} times"), sub
    if sub.n_vertices - sub.n_edges + sub.n_faces != 2:
        return Validity(False, "subdivision is not connected"), sub
    if sub.outer_faces != 1 or sub.faces_without_arc:
        return Validity(False, f"{sub.faces_without_arc} bounded face(s) without a circle arc"), sub
    return Validity(True), sub


def validate(arr):
    return _check(arr)[0]


def sector_and_component_count(arr):
    """(S, C): bounded faces of the subdivision and components of the union of curves."""
    v, sub = _check(arr)
    if not v:
        raise ArrangementInputError(f"invalid arrangement: {v.reason}")
    return sub.sectors, sub.components


# --------------------------------------------------------------- generation
def _second_hit(p, q):
    """Other intersection of the line through circle point ``p`` and ``q`` with the circle."""
    dx, dy = q[0] - p[0], q[1] - p[1]
    s = -2 * (p[0] * dx + p[1] * dy) / (dx * dx + dy * dy)
    return (p[0] + s * dx, p[1] + s * dy)


@dataclass(frozen=True)
class Insertion:
    case: str      # "I" or "II"
    d: int         # components crossed
    dC: int
    dS: int

    @property
    def ok(self):
        if self.case == "I":
            return self.dC == 1 and self.dS == 1
        return self.dC == 1 - self.d and self.dS == self.d + 1


def random_valid_arrangement(k, seed, concurrency=0.2, budget=2000, return_log=False):
    """Random valid arrangement of ``k`` straight chords built one chord at a time.

    Each accepted chord either misses everything (Case I) or crosses ``d``
    existing components once each (Case II); the changes of C and S are
    checked against the induction at every step. With probability
    ``concurrency`` a candidate chord is aimed through an existing crossing.
    """
    if k < 1:
        raise ArrangementInputError("k must be >= 1")
    rng = np.random.default_rng(seed)
    arr, sub = ChordArrangement(()), None
    S, C = 1, 0
    log = []
    tries = 0
    while arr.k < k:
        tries += 1
        if tries > budget:
            raise GeneratorError(f"no valid arrangement with k={k} after {budget} candidates")
        p = circle_point(rng.uniform(-np.pi, np.pi))
        crossings = sorted(x for pts in sub.curve_points.values() for x in pts) if sub else []
        if crossings and rng.random() < concurrency:
            chord = (p, _second_hit(p, crossings[int(rng.integers(len(crossings)))]))
        else:
            chord = (p, circle_point(rng.uniform(-np.pi, np.pi)))
        cand = arr.with_curve(chord)
        ok, new_sub = _check(cand)
        if not ok:
            continue
        new = cand.k - 1
        hit = {i if j == new else j for (i, j) in new_sub.curve_points if new in (i, j)}
        d = len({sub.component_of[i] for i in hit}) if sub else 0
        ins = Insertion("I" if d == 0 else "II", d, new_sub.components - C, new_sub.sectors - S)
        if not ins.ok:
            raise GeneratorError(f"insertion deltas violate the induction: {ins}")
        log.append(ins)
        arr, sub, S, C = cand, new_sub, new_sub.sectors, new_sub.components
    return (arr, log) if return_log else arr


# ---------------------------------------------------------------- sweeps
def _pairings(items):
    if not items:
        yield []
        return
    a = items[0]
    for i in range(1, len(items)):
        rest = items[1:i] + items[i + 1:]
        for p in _pairings(rest):
            yield [(a, items[i])] + p


def _noncrossing(pairs):
    for (a, b), (c, d) in combinations(pairs, 2):
        a, b = sorted((a, b))
        if (a < c < b) != (a < d < b):
            return False
    return True


def exhaustive_chord_diagrams(k, jitter_seed=0):
    """All perfect matchings of 2k near-regular circle points as straight chords.

    Yields ``(pairs, arrangement, noncrossing)``.
    """
    rng = np.random.default_rng(jitter_seed)
    ang = 2 * np.pi * (np.arange(2 * k) + rng.uniform(-0.2, 0.2, 2 * k)) / (2 * k)
    pts = [circle_point(a) for a in ang]
    for pairs in _pairings(list(range(2 * k))):
        arr = ChordArrangement(tuple((pts[a], pts[b]) for a, b in pairs))
        yield pairs, arr, _noncrossing(pairs)


@dataclass
class SweepReport:
    k_max: int
    trials_per_k: int
    seed: int
    checked: dict
    counterexamples: list
    component_histogram: dict
    insertion_failures: int
    exhaustive: dict
    rejected_controls: int

    @property
    def ok(self):
        return not self.counterexamples and not self.insertion_failures and all(
            v["noncrossing_invalid"] == 0 for v in self.exhaustive.values())

    def as_dict(self):
        return {"k_max": self.k_max, "trials_per_k": self.trials_per_k, "seed": self.seed,
                "checked": {str(k): v for k, v in self.checked.items()},
                "counterexamples": self.counterexamples,
                "component_histogram": {str(k): {str(c): n for c, n in sorted(v.items())}
                                        for k, v in self.component_histogram.items()},
                "insertion_failures": self.insertion_failures,
                "exhaustive": {str(k): v for k, v in self.exhaustive.items()},
                "rejected_controls": self.rejected_controls, "ok": self.ok}


def central_triangle():
    """Three chords crossing pairwise at three distinct points (invalid)."""
    a = [circle_point(t) for t in (0.1, 2.2, 4.3, 1.15, 3.25, 5.35)]
    return ChordArrangement(((a[0], a[4]), (a[3], a[2]), (a[1], a[5])))


def sector_identity_sweep(k_max, trials_per_k, seed=0, exhaustive_k=5):
    """Check S = 2k - C + 1 on random valid arrangements and exhaustive chord diagrams."""
    checked, hist, bad, ins_fail = {}, {}, [], 0
    for k in range(1, k_max + 1):
        hist[k] = {}
        for trial in range(trials_per_k):
            s = int(np.random.SeedSequence([seed, k, trial]).generate_state(1)[0])
            try:
                arr, log = random_valid_arrangement(k, s, return_log=True)
            except GeneratorError:
                ins_fail += 1
                continue
            S, C = sector_and_component_count(arr)
            hist[k][C] = hist[k].get(C, 0) + 1
            if S != 2 * k - C + 1:
                bad.append({"k": k, "seed": s, "S": S, "C": C, "arrangement": arr.dumps()})
        checked[k] = trials_per_k
    exh = {}
    for k in range(1, min(exhaustive_k, k_max) + 1):
        n_all = n_valid = n_nc = nc_invalid = 0
        for pairs, arr, nc in exhaustive_chord_diagrams(k, jitter_seed=seed):
            n_all += 1
            n_nc += nc
            if not validate(arr):
                nc_invalid += nc
                continue
            n_valid += 1
            S, C = sector_and_component_count(arr)
            if S != 2 * k - C + 1:
                bad.append({"k": k, "pairs": pairs, "S": S, "C": C, "arrangement": arr.dumps()})
        exh[k] = {"diagrams": n_all, "valid": n_valid, "noncrossing": n_nc, "noncrossing_invalid": nc_invalid}
    rejected = int(not validate(central_triangle()))
    return SweepReport(k_max, trials_per_k, seed, checked, bad, hist, ins_fail, exh, rejected)
