"""Structured triangulations of a ring between two nested convex bodies.

Vertices sit on rays from a reference point inside the inner body. Along
each ray the radius is interpolated between the inner and outer boundary
radii; quads between neighbouring rays and layers are split into two
triangles.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple, Optional, Union

import numpy as np

from .convexgeom import DISK, ELLIPSE, ConvexBody
from .errors import DomainError, PreconditionError

INTERIOR, INNER, OUTER = 0, 1, 2
TAG_NAMES = {INTERIOR: "INTERIOR", INNER: "INNER", OUTER: "OUTER"}


@dataclass(frozen=True)
class RingDomain:
    """Condenser (K, Omega) with K = ``inner`` and Omega = ``outer``."""

    inner: ConvexBody
    outer: ConvexBody
    ref: Optional[tuple] = None

    def __post_init__(self):
        if self.ref is None:
            object.__setattr__(self, "ref", tuple(self.inner.center))
        ref = np.asarray(self.ref, dtype=float)
        if not self.inner.contains(ref[None, :])[0]:
            raise DomainError("reference point must be interior to the inner body")
        th = np.linspace(0, 2 * np.pi, 2048, endpoint=False)
        pts = self.inner.boundary_points(th)
        if self.inner.kind not in (DISK, ELLIPSE):
            pts = np.vstack([pts, self.inner.vertex_array])
        if not np.all(self.outer.contains(pts, strict=True, tol=1e-12 * self.outer.diameter())):
            raise DomainError("inner body is not strictly inside the outer body")

    @classmethod
    def from_json(cls, obj: dict) -> "RingDomain":
        extra = set(obj) - {"inner", "outer", "ref"}
        if extra:
            raise DomainError(f"unknown ring fields: {sorted(extra)}")
        return cls(ConvexBody.from_json(obj["inner"]), ConvexBody.from_json(obj["outer"]),
                   tuple(obj["ref"]) if "ref" in obj else None)

    def to_json(self) -> dict:
        return {"inner": self.inner.to_json(), "outer": self.outer.to_json(), "ref": list(self.ref)}

    def transformed(self, angle=0.0, shift=(0.0, 0.0), scale=1.0) -> "RingDomain":
        c, s = math.cos(angle), math.sin(angle)
        ref = scale * np.array([[c, -s], [s, c]]) @ np.asarray(self.ref) + np.asarray(shift)
        return RingDomain(self.inner.transformed(angle, shift, scale),
                          self.outer.transformed(angle, shift, scale), tuple(ref))

    @property
    def is_concentric_annulus(self) -> bool:
        i, o = self.inner, self.outer
        return (i.kind == DISK and o.kind == DISK
                and np.allclose(i.center, o.center, atol=1e-12 * o.r))


def radial_parametrization(body: ConvexBody, phi, ref=(0.0, 0.0)):
    """Distance from ``ref`` to the boundary along direction ``phi``."""
    ref = np.asarray(ref, dtype=float)
    if not body.contains(ref[None, :])[0]:
        raise DomainError("reference point is not interior to the body")
    ph = np.asarray(phi, dtype=float)
    u = np.stack([np.cos(ph), np.sin(ph)], -1)
    if body.kind in (DISK, ELLIPSE):
        d = ref - body.center_array
        if body.kind == DISK:
            ax, ay, c, s = body.r, body.r, 1.0, 0.0
        else:
            ax, ay, c, s = body.a, body.b, math.cos(body.rot), math.sin(body.rot)
        # rotate into the body frame and scale to the unit circle
        dx, dy = (c * d[0] + s * d[1]) / ax, (-s * d[0] + c * d[1]) / ay
        ux = (c * u[..., 0] + s * u[..., 1]) / ax
        uy = (-s * u[..., 0] + c * u[..., 1]) / ay
        qa = ux * ux + uy * uy
        qb = dx * ux + dy * uy
        qc = dx * dx + dy * dy - 1.0
        r = (-qb + np.sqrt(qb * qb - qa * qc)) / qa
    else:
        v = body.vertex_array
        e = np.roll(v, -1, axis=0) - v
        n = np.stack([e[:, 1], -e[:, 0]], -1)
        num = ((v - ref) * n).sum(-1)  # > 0 for an interior ref
        den = u @ n.T
        with np.errstate(divide="ignore", invalid="ignore"):
            cand = np.where(den > 0, num / den, np.inf)
        r = cand.min(axis=-1)
    return float(r) if np.ndim(r) == 0 else r


@dataclass(eq=False)
class TriMesh:
    """Triangle mesh with per-vertex boundary tags.

    ``n_phi``/``n_s`` are set for structured ring meshes (vertex
    ``j * n_phi + i`` sits on ray i, layer j) and left at 0 otherwise.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    tags: np.ndarray
    n_phi: int = 0
    n_s: int = 0
    ring: Optional[RingDomain] = field(default=None, repr=False)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @cached_property
    def signed_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        e1, e2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    @cached_property
    def basis_gradients(self) -> np.ndarray:
        """Gradients of the three P1 hat functions on each triangle, shape (M, 3, 2)."""
        p = self.vertices[self.triangles]
        two_a = 2.0 * self.signed_areas
        # grad lambda_k = perp(edge opposite k) / 2A
        g = np.empty((len(p), 3, 2))
        for k in range(3):
            a, b = p[:, (k + 1) % 3], p[:, (k + 2) % 3]
            g[:, k, 0] = (a[:, 1] - b[:, 1]) / two_a
            g[:, k, 1] = (b[:, 0] - a[:, 0]) / two_a
        return g

    def gradients(self, values: np.ndarray) -> np.ndarray:
        """Piecewise-constant gradient of a P1 field, shape (M, 2)."""
        return np.einsum("mkd,mk->md", self.basis_gradients, values[self.triangles])

    @cached_property
    def edges(self):
        """Unique undirected edges and the (M, 3) triangle-to-edge map; local
        edge k joins local vertices k and k + 1."""
        t = self.triangles
        raw = np.stack([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]], axis=1).reshape(-1, 2)
        raw.sort(axis=1)
        uniq, inv = np.unique(raw, axis=0, return_inverse=True)
        return uniq, inv.reshape(-1, 3)

    def write_csv(self, vertices_path, triangles_path) -> None:
        with open(vertices_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["id", "x", "y", "tag"])
            for i, ((x, y), tag) in enumerate(zip(self.vertices, self.tags)):
                w.writerow([i, repr(float(x)), repr(float(y)), TAG_NAMES[int(tag)]])
        with open(triangles_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["v0", "v1", "v2"])
            w.writerows(self.triangles.tolist())


def layer_fractions(n_s: int, grading: Union[float, str] = 1.0) -> np.ndarray:
    s = np.arange(n_s + 1) / n_s
    if grading == "geometric":
        return s
    return s ** float(grading)


def build_ring_mesh(ring: RingDomain, n_phi: int, n_s: int,
                    grading: Union[float, str] = 1.0) -> TriMesh:
    """Structured ring mesh with ``n_phi * (n_s + 1)`` vertices.

    ``grading`` is either an exponent g, placing layer j at fraction
    (j / n_s) ** g of the way from the inner to the outer radius, or
    ``"geometric"``, which interpolates the radii geometrically so layers
    thin out toward the inner boundary in proportion to the radius.
    """
    if n_phi < 8 or n_phi % 2:
        raise PreconditionError("n_phi must be even and at least 8")
    if n_s < 2:
        raise PreconditionError("n_s must be at least 2")
    if grading != "geometric" and not float(grading) > 0:
        raise PreconditionError("grading exponent must be positive")
    ref = np.asarray(ring.ref, dtype=float)
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    r_in = radial_parametrization(ring.inner, phi, ref)
    r_out = radial_parametrization(ring.outer, phi, ref)
    if np.any(r_out <= r_in * (1 + 1e-12)):
        raise DomainError("degenerate ring: outer boundary does not enclose the inner one")
    sig = layer_fractions(n_s, grading)
    if grading == "geometric":
        rad = r_in[None, :] * (r_out / r_in)[None, :] ** sig[:, None]
    else:
        rad = (1 - sig)[:, None] * r_in[None, :] + sig[:, None] * r_out[None, :]
    rad[0], rad[-1] = r_in, r_out
    u = np.stack([np.cos(phi), np.sin(phi)], -1)
    verts = (ref[None, None, :] + rad[:, :, None] * u[None, :, :]).reshape(-1, 2)

    tags = np.full(len(verts), INTERIOR, dtype=np.int8)
    tags[:n_phi] = INNER
    tags[-n_phi:] = OUTER

    i = np.arange(n_phi)
    ip = (i + 1) % n_phi
    tris = []
    for j in range(n_s):
        v00, v10 = j * n_phi + i, j * n_phi + ip
        v01, v11 = (j + 1) * n_phi + i, (j + 1) * n_phi + ip
        even = (i + j) % 2 == 0
        # alternate the diagonal so the pattern has no preferred handedness
        t1 = np.where(even[:, None], np.stack([v00, v11, v01], 1), np.stack([v00, v10, v01], 1))
        t2 = np.where(even[:, None], np.stack([v00, v10, v11], 1), np.stack([v10, v11, v01], 1))
        tris += [t1, t2]
    tri = np.concatenate(tris).astype(np.int64)
    p = verts[tri]
    e1, e2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
    neg = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0] < 0
    tri[neg] = tri[neg][:, [0, 2, 1]]
    mesh = TriMesh(verts, tri, tags, n_phi, n_s, ring)
    if np.any(mesh.signed_areas <= 0):
        raise DomainError("mesh construction produced inverted triangles")
    return mesh


class MeshQuality(NamedTuple):
    min_angle: float  # degrees
    max_aspect: float
    degenerate: bool


def mesh_quality(mesh: TriMesh) -> MeshQuality:
    """Smallest interior angle (degrees) and largest longest/shortest edge ratio."""
    p = mesh.vertices[mesh.triangles]
    e = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 1], p[:, 0] - p[:, 2]], 1)
    ln = np.hypot(e[..., 0], e[..., 1])
    angles = []
    for k in range(3):
        a, b = -e[:, (k + 2) % 3], e[:, k]
        num = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
        den = (a * b).sum(-1)
        angles.append(np.abs(np.arctan2(num, den)))
    ang = np.degrees(np.min(np.stack(angles, 1), axis=1))
    degenerate = bool(np.any(np.abs(mesh.signed_areas) <= 1e-14 * ln.max(axis=1) ** 2))
    min_angle = 0.0 if degenerate else float(ang.min())
    with np.errstate(divide="ignore"):
        aspect = ln.max(axis=1) / ln.min(axis=1)
    return MeshQuality(min_angle, float(aspect.max()), degenerate)
