"""Deterministic SVG figures of nodal sets.

Domains are filled per triangle piece by sign, nodal segments are drawn as
polylines and critical points as circles labelled by their index. The
output depends only on the inputs (fixed precision, sorted drawing order,
no timestamps).
"""

from __future__ import annotations

import numpy as np

POS_FILL, NEG_FILL, LINE, MARK = "#f4b6a6", "#a9c8ee", "#111111", "#c0122b"


def _fmt(x):
    return f"{x:.4f}".rstrip("0").rstrip(".")


def nodal_svg(mesh, nodal_set, critical_points=(), size=480, margin=12, title=None):
    """Return an SVG string showing ``nodal_set`` on ``mesh``.

    Uses the first two display coordinates; for a sphere this is the view
    from +z, drawing only the upper hemisphere.
    """
    V = mesh.vertices
    keep = np.ones(mesh.n_triangles, bool)
    if V.shape[1] > 2 and np.ptp(V[:, 2]) > 1e-12 and mesh.tags.get("preset") == "round_sphere":
        keep = V[mesh.triangles, 2].mean(axis=1) >= 0
    xy = V[:, :2]
    lo, hi = xy.min(axis=0), xy.max(axis=0)
    s = (size - 2 * margin) / max(float(np.max(hi - lo)), 1e-12)

    def tr(p):
        return margin + (p[0] - lo[0]) * s, size - margin - (p[1] - lo[1]) * s

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
           f'viewBox="0 0 {size} {size}">']
    if title:
        out.append(f"<title>{title}</title>")
    cls = nodal_set.vertex_class
    out.append('<g stroke="none">')
    for f in np.where(keep)[0]:
        tri = mesh.triangles[f]
        signs = cls[tri]
        sgn = int(np.sign(signs.sum())) if signs.any() else 0
        if sgn == 0:
            continue
        pts = " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in (tr(xy[v]) for v in tri))
        out.append(f'<polygon points="{pts}" fill="{POS_FILL if sgn > 0 else NEG_FILL}"/>')
    out.append("</g>")
    out.append(f'<g stroke="{LINE}" stroke-width="1.2" fill="none">')
    for (a, b), f in zip(nodal_set.segments.tolist(), nodal_set.segment_triangles.tolist()):
        if not keep[f]:
            continue
        (x1, y1), (x2, y2) = tr(nodal_set.points[a][:2]), tr(nodal_set.points[b][:2])
        out.append(f'<polyline points="{_fmt(x1)},{_fmt(y1)} {_fmt(x2)},{_fmt(y2)}"/>')
    out.append("</g>")
    for c in sorted(critical_points, key=lambda c: c.vertex):
        x, y = tr(np.asarray(c.location[:2]))
        out.append(f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="4" fill="{MARK}"/>')
        out.append(f'<text x="{_fmt(x + 5)}" y="{_fmt(y - 5)}" font-size="10">{c.index}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
