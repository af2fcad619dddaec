"""Convex bodies in the plane and their support-function geometry.

A :class:`ConvexBody` is a disk, an ellipse, or a strictly convex polygon.
All support quantities are measured from a reference point (the origin
unless stated otherwise), which must lie strictly inside the body::

    h(theta)  = max_{z in body} (z - ref) . (cos theta, sin theta)
    h'(theta) = -z1 sin theta + z2 cos theta      (z the touching point)
    1/kappa   = h'' + h                           (radius of curvature)

Area and perimeter follow by quadrature over the normal angle::

    A = 1/2 int h (h'' + h) dtheta,   L = int h dtheta
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.spatial import ConvexHull, QhullError
from scipy.special import ellipe

from .errors import DegenerateInputError, DomainError, ResolutionError

DISK, ELLIPSE, POLYGON = "disk", "ellipse", "polygon"


def _as_point(x) -> np.ndarray:
    pt = np.asarray(x, dtype=float).reshape(2)
    return pt


@dataclass(frozen=True)
class ConvexBody:
    """Immutable convex body. Build it with :meth:`disk`, :meth:`ellipse`,
    :meth:`polygon` or :meth:`from_json`."""

    kind: str
    center: tuple
    r: float = 0.0
    a: float = 0.0
    b: float = 0.0
    rot: float = 0.0
    vertices: tuple = field(default=(), repr=False)

    # -- constructors -----------------------------------------------------
    @classmethod
    def disk(cls, r: float, center=(0.0, 0.0)) -> "ConvexBody":
        if not r > 0:
            raise DomainError(f"disk radius must be positive, got {r}")
        return cls(DISK, tuple(map(float, _as_point(center))), r=float(r))

    @classmethod
    def ellipse(cls, a: float, b: float, rot: float = 0.0, center=(0.0, 0.0)) -> "ConvexBody":
        if not (a > 0 and b > 0):
            raise DomainError("ellipse semi-axes must be positive")
        if b > a:
            a, b, rot = b, a, rot + math.pi / 2
        return cls(ELLIPSE, tuple(map(float, _as_point(center))), a=float(a), b=float(b), rot=float(rot))

    @classmethod
    def polygon(cls, vertices) -> "ConvexBody":
        v = np.asarray(vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
            raise DegenerateInputError("polygon needs at least 3 vertices")
        e = np.roll(v, -1, axis=0) - v
        cross = e[:, 0] * np.roll(e, -1, axis=0)[:, 1] - e[:, 1] * np.roll(e, -1, axis=0)[:, 0]
        if not np.all(cross > 0):
            raise DomainError("polygon vertices must be strictly convex and counterclockwise")
        return cls(POLYGON, tuple(map(float, _polygon_centroid(v))),
                   vertices=tuple(tuple(map(float, p)) for p in v))

    @classmethod
    def square(cls, half_side: float = 1.0, center=(0.0, 0.0)) -> "ConvexBody":
        c = _as_point(center)
        s = float(half_side)
        return cls.polygon(c + np.array([[-s, -s], [s, -s], [s, s], [-s, s]]))

    @classmethod
    def from_json(cls, obj: dict) -> "ConvexBody":
        kind = obj.get("kind")
        allowed = {DISK: {"kind", "center", "r"},
                   ELLIPSE: {"kind", "center", "a", "b", "rot"},
                   POLYGON: {"kind", "vertices"}}
        if kind not in allowed:
            raise DomainError(f"unknown body kind {kind!r}")
        extra = set(obj) - allowed[kind]
        if extra:
            raise DomainError(f"unknown fields for {kind}: {sorted(extra)}")
        if kind == DISK:
            return cls.disk(obj["r"], obj.get("center", (0.0, 0.0)))
        if kind == ELLIPSE:
            return cls.ellipse(obj["a"], obj["b"], obj.get("rot", 0.0), obj.get("center", (0.0, 0.0)))
        return cls.polygon(obj["vertices"])

    def to_json(self) -> dict:
        if self.kind == DISK:
            return {"kind": DISK, "center": list(self.center), "r": self.r}
        if self.kind == ELLIPSE:
            return {"kind": ELLIPSE, "center": list(self.center), "a": self.a, "b": self.b, "rot": self.rot}
        return {"kind": POLYGON, "vertices": [list(p) for p in self.vertices]}

    # -- rigid motions and scaling ---------------------------------------
    def transformed(self, angle: float = 0.0, shift=(0.0, 0.0), scale: float = 1.0) -> "ConvexBody":
        """Image under z -> scale * Rot(angle) z + shift."""
        c, s = math.cos(angle), math.sin(angle)
        M = scale * np.array([[c, -s], [s, c]])
        sh = _as_point(shift)
        ctr = M @ _as_point(self.center) + sh
        if self.kind == DISK:
            return ConvexBody.disk(self.r * scale, ctr)
        if self.kind == ELLIPSE:
            return ConvexBody.ellipse(self.a * scale, self.b * scale, self.rot + angle, ctr)
        return ConvexBody.polygon(self.vertex_array @ M.T + sh)

    # -- basic geometry ----------------------------------------------------
    @property
    def center_array(self) -> np.ndarray:
        return np.array(self.center, dtype=float)

    @property
    def vertex_array(self) -> np.ndarray:
        return np.array(self.vertices, dtype=float)

    def area(self) -> float:
        if self.kind == DISK:
            return math.pi * self.r**2
        if self.kind == ELLIPSE:
            return math.pi * self.a * self.b
        v = self.vertex_array
        return 0.5 * float(np.sum(v[:, 0] * np.roll(v[:, 1], -1) - np.roll(v[:, 0], -1) * v[:, 1]))

    def perimeter(self) -> float:
        if self.kind == DISK:
            return 2 * math.pi * self.r
        if self.kind == ELLIPSE:
            return 4 * self.a * float(ellipe(1.0 - (self.b / self.a) ** 2))
        v = self.vertex_array
        return float(np.sum(np.hypot(*(np.roll(v, -1, axis=0) - v).T)))

    def diameter(self) -> float:
        if self.kind == DISK:
            return 2 * self.r
        if self.kind == ELLIPSE:
            return 2 * self.a
        v = self.vertex_array
        d = v[:, None, :] - v[None, :, :]
        return float(np.sqrt((d**2).sum(-1)).max())

    def circumradius(self, ref=None) -> float:
        """Largest distance from ``ref`` (default: center) to the body."""
        ref = self.center_array if ref is None else _as_point(ref)
        th = np.linspace(0, 2 * np.pi, 721)
        return float(np.max(np.hypot(*(self.boundary_points(th) - ref).T)))

    def inradius_about(self, ref) -> float:
        """Distance from an interior point to the boundary."""
        ref = _as_point(ref)
        if not self.contains(ref[None, :])[0]:
            raise DomainError("point is not interior")
        if self.kind == DISK:
            return self.r - float(np.hypot(*(ref - self.center_array)))
        if self.kind == POLYGON:
            return float(np.min(self._edge_distances(ref[None, :])))
        # minimise support-line distance h(theta) - ref.nu over a dense grid
        th = np.linspace(0, 2 * np.pi, 4096, endpoint=False)
        h, _, _ = support_eval(self, th, ref)
        return float(np.min(h))

    def boundary_points(self, theta) -> np.ndarray:
        """Boundary points parametrised by angle (disk/ellipse) or, for
        polygons, by the outward normal angle (returns touching vertices)."""
        th = np.asarray(theta, dtype=float)
        if self.kind == DISK:
            return self.center_array + self.r * np.stack([np.cos(th), np.sin(th)], -1)
        if self.kind == ELLIPSE:
            c, s = math.cos(self.rot), math.sin(self.rot)
            x, y = self.a * np.cos(th), self.b * np.sin(th)
            return self.center_array + np.stack([c * x - s * y, s * x + c * y], -1)
        v = self.vertex_array
        return v[np.argmax(np.stack([np.cos(th), np.sin(th)], -1) @ v.T, axis=-1)]

    def _edge_distances(self, pts: np.ndarray) -> np.ndarray:
        v = self.vertex_array
        e = np.roll(v, -1, axis=0) - v
        n = np.stack([e[:, 1], -e[:, 0]], -1) / np.hypot(e[:, 0], e[:, 1])[:, None]
        # positive inside for a counterclockwise polygon
        return -((pts[:, None, :] - v[None, :, :]) * n[None, :, :]).sum(-1)

    def contains(self, pts, strict: bool = True, tol: float = 0.0) -> np.ndarray:
        """Vectorised point-in-body test; ``strict`` excludes the boundary."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if self.kind == DISK:
            val = self.r - np.hypot(*(pts - self.center_array).T)
        elif self.kind == ELLIPSE:
            d = pts - self.center_array
            c, s = math.cos(self.rot), math.sin(self.rot)
            x = c * d[:, 0] + s * d[:, 1]
            y = -s * d[:, 0] + c * d[:, 1]
            val = 1.0 - np.sqrt((x / self.a) ** 2 + (y / self.b) ** 2)
        else:
            val = np.min(self._edge_distances(pts), axis=1)
        return val > tol if strict else val >= -tol


def _polygon_centroid(v: np.ndarray) -> np.ndarray:
    x, y = v[:, 0], v[:, 1]
    x1, y1 = np.roll(x, -1), np.roll(y, -1)
    cr = x * y1 - x1 * y
    a = cr.sum() / 2
    return np.array([((x + x1) * cr).sum(), ((y + y1) * cr).sum()]) / (6 * a)


def support_eval(body: ConvexBody, theta, ref=(0.0, 0.0)):
    """Support value, its angular derivative, and radius of curvature.

    Accepts scalar or array ``theta``. For polygons the radius of curvature
    is 0 inside a vertex normal cone and ``inf`` exactly on an edge normal.
    """
    ref = _as_point(ref)
    if not body.contains(ref[None, :])[0]:
        raise DomainError("reference point is not interior to the body")
    th = np.asarray(theta, dtype=float)
    cos, sin = np.cos(th), np.sin(th)
    if body.kind == DISK:
        z = body.center_array - ref
        h = z[0] * cos + z[1] * sin + body.r
        hp = -z[0] * sin + z[1] * cos
        rho = np.full_like(h, body.r, dtype=float)
    elif body.kind == ELLIPSE:
        z = body.center_array - ref
        ph = th - body.rot
        a2c = (body.a * np.cos(ph)) ** 2
        b2s = (body.b * np.sin(ph)) ** 2
        q = np.sqrt(a2c + b2s)
        h = z[0] * cos + z[1] * sin + q
        hp = -z[0] * sin + z[1] * cos + (body.b**2 - body.a**2) * np.sin(ph) * np.cos(ph) / q
        rho = (body.a * body.b) ** 2 / q**3
    else:
        v = body.vertex_array - ref
        dots = np.multiply.outer(cos, v[:, 0]) + np.multiply.outer(sin, v[:, 1])
        idx = np.argmax(dots, axis=-1)
        h = np.take_along_axis(dots, idx[..., None], -1)[..., 0]
        zt = v[idx]
        hp = -zt[..., 0] * sin + zt[..., 1] * cos
        srt = np.sort(dots, axis=-1)
        tie = (srt[..., -1] - srt[..., -2]) <= 1e-12 * max(1.0, float(np.abs(v).max()))
        rho = np.where(tie, np.inf, 0.0)
    if np.ndim(h) == 0:
        return float(h), float(hp), float(rho)
    return h, hp, rho


@dataclass
class SupportSamples:
    """Support function sampled at theta_i = 2 pi i / n_theta."""

    n_theta: int
    h: np.ndarray
    h_prime: Optional[np.ndarray] = None
    curv_radius: Optional[np.ndarray] = None

    @property
    def theta(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.n_theta) / self.n_theta


def support_samples(body: ConvexBody, n_theta: int = 256, ref=(0.0, 0.0)) -> SupportSamples:
    """Sample a body's support function on the uniform theta grid.

    Smooth bodies carry closed-form curvature radii. Polygons carry exact
    h' instead, since their curvature radius is a sum of point masses.
    """
    th = 2 * np.pi * np.arange(n_theta) / n_theta
    h, hp, rho = support_eval(body, th, ref)
    if body.kind == POLYGON:
        return SupportSamples(n_theta, h, hp, None)
    return SupportSamples(n_theta, h, hp, rho)


def support_from_points(pts, n_theta: int = 256, ref=(0.0, 0.0)) -> SupportSamples:
    """Support samples of the convex hull of a point cloud (max dot product)."""
    pts = np.asarray(pts, dtype=float) - _as_point(ref)
    th = 2 * np.pi * np.arange(n_theta) / n_theta
    dots = np.outer(np.cos(th), pts[:, 0]) + np.outer(np.sin(th), pts[:, 1])
    idx = np.argmax(dots, axis=1)
    z = pts[idx]
    h = dots[np.arange(n_theta), idx]
    hp = -z[:, 0] * np.sin(th) + z[:, 1] * np.cos(th)
    return SupportSamples(n_theta, h, hp, None)


def area_length_from_support(samples: SupportSamples):
    """Area and perimeter from sampled support data (periodic trapezoid rule).

    Uses the curvature radius when present; otherwise ``h'`` through
    ``A = 1/2 int (h^2 - h'^2)``; otherwise centered differences for h''.
    """
    n = samples.n_theta
    if n < 8:
        raise ResolutionError(f"n_theta={n} < 8")
    h = np.asarray(samples.h, dtype=float)
    dth = 2 * np.pi / n
    L = float(h.sum() * dth)
    if samples.curv_radius is not None and np.all(np.isfinite(samples.curv_radius)):
        A = 0.5 * float((h * samples.curv_radius).sum() * dth)
    elif samples.h_prime is not None:
        A = 0.5 * float((h**2 - np.asarray(samples.h_prime) ** 2).sum() * dth)
    else:
        d2h = (np.roll(h, -1) - 2 * h + np.roll(h, 1)) / dth**2
        A = 0.5 * float((h * (d2h + h)).sum() * dth)
    return A, L


def polygon_area_length(v) -> tuple:
    """Shoelace area (signed, positive for counterclockwise) and perimeter of a closed loop."""
    v = np.asarray(v, dtype=float)
    x, y = v[:, 0], v[:, 1]
    x1, y1 = np.roll(x, -1), np.roll(y, -1)
    A = 0.5 * float(np.sum(x * y1 - x1 * y))
    L = float(np.sum(np.hypot(x1 - x, y1 - y)))
    return A, L


def convex_hull(points, return_index: bool = False):
    """Counterclockwise hull vertices; raises on fewer than 3 or collinear points.

    With ``return_index`` the indices of the hull vertices in ``points`` are
    returned as well.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 3:
        raise DegenerateInputError("need at least 3 planar points")
    try:
        hull = ConvexHull(pts)
    except QhullError as exc:
        raise DegenerateInputError("points are collinear or coincident") from exc
    v = pts[hull.vertices]  # counterclockwise for 2-D input
    if abs(hull.volume) <= 1e-14 * max(1.0, np.ptp(pts, axis=0).max()) ** 2:
        raise DegenerateInputError("points are collinear")
    return (v, hull.vertices.copy()) if return_index else v


def polygon_geometry(points: Sequence) -> tuple:
    """Convex hull of a point set with its area and perimeter."""
    v = convex_hull(points)
    # drop hull vertices that are collinear to rounding so the body is strictly convex
    e_in = v - np.roll(v, 1, axis=0)
    e_out = np.roll(v, -1, axis=0) - v
    cross = e_in[:, 0] * e_out[:, 1] - e_in[:, 1] * e_out[:, 0]
    scale = np.hypot(*e_in.T) * np.hypot(*e_out.T)
    v = v[cross > 1e-12 * scale]
    # canonical start (lowest, then leftmost vertex) so the hull of a hull is itself
    v = np.roll(v, -int(np.lexsort((v[:, 0], v[:, 1]))[0]), axis=0)
    A, L = polygon_area_length(v)
    return ConvexBody.polygon(v), A, L


def isoperimetric_deficit(A: float, L: float) -> float:
    """L^2 - 4 pi A; nonnegative for every convex body, zero for disks."""
    if not (A > 0 and L > 0):
        raise DomainError("area and length must be positive")
    return L * L - 4 * math.pi * A
