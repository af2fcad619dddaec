"""Marching-triangles extraction of level loops from a P1 field."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List

import numpy as np

from .errors import TopologyError


@dataclass
class LevelLoop:
    """Closed polyline; segment k runs from ``points[k]`` to ``points[k+1]``
    (cyclically) inside triangle ``seg_tri[k]``."""

    points: np.ndarray
    seg_tri: np.ndarray


def _crossings(mesh, values, t):
    """Crossing points on edges, crossed triangles, and the edge pair per triangle.

    A vertex counts as above the level when its value exceeds ``t``, so a
    vertex exactly at the level is treated as below; that keeps every
    crossing triangle at exactly two crossing edges.
    """
    values = np.asarray(values, dtype=float)
    edges, tri_edges = mesh.edges
    above = values > t
    cross_edge = above[edges[:, 0]] != above[edges[:, 1]]
    if not cross_edge.any():
        return None
    va, vb = values[edges[:, 0]], values[edges[:, 1]]
    with np.errstate(divide="ignore", invalid="ignore"):
        lam = np.where(cross_edge, (t - va) / (vb - va), 0.0)
    pa, pb = mesh.vertices[edges[:, 0]], mesh.vertices[edges[:, 1]]
    edge_pts = pa + lam[:, None] * (pb - pa)

    tc = cross_edge[tri_edges]  # (M, 3)
    tris = np.nonzero(tc.sum(axis=1) == 2)[0]
    seg = np.empty((len(tris), 2), dtype=np.int64)
    for n, m in enumerate(tris):
        seg[n] = tri_edges[m][tc[m]]
    return edge_pts, tris, seg


def level_segments(mesh, values, t: float) -> np.ndarray:
    """Unordered segments of ``{u = t}``, shape (k, 2, 2), one per crossed triangle."""
    c = _crossings(mesh, values, t)
    if c is None:
        return np.empty((0, 2, 2))
    edge_pts, _, seg = c
    return edge_pts[seg]


def level_loops(mesh, values: np.ndarray, t: float) -> List[LevelLoop]:
    """All closed loops of ``{u = t}``, each oriented counterclockwise."""
    c = _crossings(mesh, values, t)
    if c is None:
        return []
    edge_pts, tris, seg = c
    incident = {}
    for n, (e0, e1) in enumerate(seg):
        incident.setdefault(e0, []).append(n)
        incident.setdefault(e1, []).append(n)
    if any(len(v) != 2 for v in incident.values()):
        raise TopologyError(f"level {t}: level set touches the mesh boundary")

    used = np.zeros(len(seg), dtype=bool)
    loops = []
    for start in range(len(seg)):
        if used[start]:
            continue
        e_first, e_cur = seg[start]
        order_e, order_t = [e_first], [tris[start]]
        used[start] = True
        cur = start
        while e_cur != e_first:
            a, b = incident[e_cur]
            nxt = b if a == cur else a
            if used[nxt]:
                raise TopologyError(f"level {t}: open level curve")
            used[nxt] = True
            order_e.append(e_cur)
            order_t.append(tris[nxt])
            e0, e1 = seg[nxt]
            e_cur = e1 if e0 == e_cur else e0
            cur = nxt
        pts = edge_pts[order_e]
        seg_tri = np.asarray(order_t)
        x, y = pts[:, 0], pts[:, 1]
        if np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y) < 0:
            # reverse; segment k of the reversed loop is old segment n-2-k
            pts = pts[::-1]
            seg_tri = np.roll(seg_tri[::-1], -1)
        loops.append(LevelLoop(pts, seg_tri))
    return loops


def single_loop(mesh, values, t) -> LevelLoop:
    loops = level_loops(mesh, values, t)
    if len(loops) != 1:
        raise TopologyError(f"level {t}: expected one closed loop, found {len(loops)}")
    return loops[0]
