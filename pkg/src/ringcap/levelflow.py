"""Level curves of a solved potential and the profiles A(t), L(t).

Each level loop is convexified by its hull before it is measured; the
exact level sets of a convex ring are convex, so the hull only removes
sub-mesh wiggles.

Besides A and L, every level carries co-area estimates of A'(t) and L'(t).
Along a level curve the support function moves with speed
dh/dt = -1/|grad u| at the touching point, so

    A'(t) = -integral of |grad u|^-1 over arc length,
    L'(t) = -integral of |grad u|^-1 over the normal angle,

both evaluated with the recovered (vertex-continuous) gradient. Higher
derivatives are taken from these first derivatives in a variable that is
affine in t for a concentric annulus, which keeps the differencing noise
from being amplified three times over.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import List, Optional

import numpy as np
from scipy.interpolate import make_smoothing_spline

from .contour import single_loop
from .plaplace import eval_in_triangles, recovered_gradients
from .convexgeom import SupportSamples, convex_hull, polygon_area_length, support_from_points
from .errors import DomainError, ResolutionError

PROFILE_COLUMNS = ("t", "A", "L", "dA", "d2A", "d3A", "dL", "d2L")


@dataclass
class LevelCurve:
    t: float
    polyline: np.ndarray  # hull vertices, counterclockwise
    convex_hulled: bool   # True when hulling moved the loop noticeably
    A: float
    L: float
    support: SupportSamples
    dA: float = float("nan")  # co-area A'(t)
    dL: float = float("nan")  # co-area L'(t)
    flux: float = float("nan")


@dataclass
class LevelProfile:
    t: np.ndarray
    A: np.ndarray
    L: np.ndarray
    dA: Optional[np.ndarray] = None
    d2A: Optional[np.ndarray] = None
    d3A: Optional[np.ndarray] = None
    dL: Optional[np.ndarray] = None
    d2L: Optional[np.ndarray] = None
    method: str = "none"
    p: float = float("nan")
    hull_flags: Optional[np.ndarray] = None
    dA_coarea: Optional[np.ndarray] = None
    dL_coarea: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.t)

    def interior(self) -> np.ndarray:
        """Boolean mask of levels strictly inside (t[0], t[-1])."""
        m = np.ones(self.n, dtype=bool)
        m[0] = m[-1] = False
        return m

    def rows(self):
        cols = [getattr(self, c) for c in PROFILE_COLUMNS]
        cols = [np.full(self.n, np.nan) if c is None else np.asarray(c) for c in cols]
        return np.column_stack(cols)

    def write_csv(self, path, extra: Optional[dict] = None) -> None:
        extra = extra or {}
        data = self.rows()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(list(PROFILE_COLUMNS) + list(extra))
            for i, row in enumerate(data):
                w.writerow([f"{x:.12g}" for x in row] + [f"{float(v[i]):.12g}" for v in extra.values()])


def _turning_angles(poly: np.ndarray) -> np.ndarray:
    """Exterior angle at each vertex of a counterclockwise convex polygon."""
    e_in = poly - np.roll(poly, 1, axis=0)
    e_out = np.roll(poly, -1, axis=0) - poly
    cross = e_in[:, 0] * e_out[:, 1] - e_in[:, 1] * e_out[:, 0]
    dot = (e_in * e_out).sum(-1)
    return np.arctan2(cross, dot)


def _coarea(points, grad_mid, grad_at_hull, hull):
    """(A', L', |grad u| samples) of a closed loop from gradient samples."""
    seg_len = np.hypot(*(np.roll(points, -1, axis=0) - points).T)
    gm = np.hypot(*grad_mid.T)
    gh = np.hypot(*grad_at_hull.T)
    dA = -float(np.sum(seg_len / gm))
    dL = -float(np.sum(_turning_angles(hull) / gh))
    return dA, dL, gm, seg_len


def extract_level(mesh, field, t: float, n_theta: int = 256, gv=None) -> LevelCurve:
    """Hull-convexified level loop ``{u = t}`` with its area, length and support."""
    if not (0.0 < t < 1.0):
        raise DomainError("level must lie strictly between 0 and 1; use the bodies for t = 0, 1")
    loop = single_loop(mesh, field.values, t)
    pts = loop.points
    hull, idx = convex_hull(pts, return_index=True)
    A, L = polygon_area_length(hull)
    # distance from each loop point to the hull boundary (zero for hull points)
    e = np.roll(hull, -1, axis=0) - hull
    nrm = np.stack([e[:, 1], -e[:, 0]], -1) / np.hypot(*e.T)[:, None]
    dist = (-((pts[:, None, :] - hull[None]) * nrm[None]).sum(-1)).min(axis=1)
    scale = math.sqrt(A)
    flagged = bool(dist.max() > 1e-9 * scale)
    ref = mesh.ring.ref if mesh.ring is not None else hull.mean(axis=0)

    gv = recovered_gradients(mesh, field.values) if gv is None else gv
    mid = 0.5 * (pts + np.roll(pts, -1, axis=0))
    g_mid = eval_in_triangles(mesh, gv, loop.seg_tri, mid)
    g_hull = eval_in_triangles(mesh, gv, loop.seg_tri[idx], hull)
    dA, dL, gm, seg_len = _coarea(pts, g_mid, g_hull, hull)
    flux = float(np.sum(np.sqrt(gm**2 + field.eps**2) ** (field.p - 1) * seg_len))
    return LevelCurve(t, hull, flagged, A, L, support_from_points(hull, n_theta, ref), dA, dL, flux)


def _boundary_coarea(mesh, gv, layer: int, body):
    """Co-area A', L' on a boundary layer of a structured ring mesh.

    Polygonal bodies return NaN: at convex corners of the outer boundary the
    gradient vanishes and the integrals diverge.
    """
    if body.kind == "polygon" or not mesh.n_phi:
        return float("nan"), float("nan")
    n = mesh.n_phi
    sl = slice(layer * n, (layer + 1) * n)
    pts = mesh.vertices[sl]
    g = gv[sl]
    g_mid = 0.5 * (g + np.roll(g, -1, axis=0))
    dA, dL, _, _ = _coarea(pts, g_mid, g, pts)
    return dA, dL


def sweep_levels(mesh, field, n_t: int, levels=None, keep_curves: bool = False) -> LevelProfile:
    """A(t), L(t) on t_k = k / (n_t + 1), with t = 0 and t = 1 taken from the bodies.

    The co-area first derivatives are attached as ``dA_coarea``/``dL_coarea``;
    the flux at each interior level is kept in ``meta["flux"]``.
    """
    if n_t < 9:
        raise ResolutionError("need at least 9 interior levels")
    ring = mesh.ring
    t_in = np.arange(1, n_t + 1) / (n_t + 1) if levels is None else np.asarray(levels, float)
    gv = recovered_gradients(mesh, field.values)
    curves = [extract_level(mesh, field, float(t), gv=gv) for t in t_in]
    t = np.concatenate([[0.0], t_in, [1.0]])
    A = np.array([ring.outer.area()] + [c.A for c in curves] + [ring.inner.area()])
    L = np.array([ring.outer.perimeter()] + [c.L for c in curves] + [ring.inner.perimeter()])
    flags = np.array([False] + [c.convex_hulled for c in curves] + [False])
    dA0, dL0 = _boundary_coarea(mesh, gv, mesh.n_s, ring.outer)
    dA1, dL1 = _boundary_coarea(mesh, gv, 0, ring.inner)
    # Boundary co-area values are second-order in h/r through the gradient
    # extrapolation and visibly worse at a small inner body, so they are kept
    # aside rather than fed into the derivative fits.
    nan = float("nan")
    prof = LevelProfile(t, A, L, p=field.p, hull_flags=flags,
                        dA_coarea=np.array([nan] + [c.dA for c in curves] + [nan]),
                        dL_coarea=np.array([nan] + [c.dL for c in curves] + [nan]))
    prof.meta["boundary_coarea"] = {"dA0": dA0, "dL0": dL0, "dA1": dA1, "dL1": dL1}
    prof.meta["flux"] = np.array([c.flux for c in curves])
    prof.meta["outer_kind"] = ring.outer.kind
    prof.meta["concentric"] = ring.is_concentric_annulus
    if keep_curves:
        prof.meta["curves"] = curves
    return prof


def rescale_levels(profile: LevelProfile, factor: float) -> LevelProfile:
    """Profile of ``factor * u``: levels scale by ``factor``, t-derivatives by ``1/factor``."""
    out = replace(profile, t=profile.t * factor, meta=dict(profile.meta))
    for name, k in (("dA", 1), ("d2A", 2), ("d3A", 3), ("dL", 1), ("d2L", 2),
                    ("dA_coarea", 1), ("dL_coarea", 1)):
        v = getattr(profile, name)
        if v is not None:
            setattr(out, name, np.asarray(v) / factor**k)
    return out


# -- derivative estimation ----------------------------------------------------

def _fd_first(y, h):
    return np.gradient(y, h, edge_order=2)


def _fd_second(y, h):
    d = np.empty_like(y)
    d[1:-1] = (y[2:] - 2 * y[1:-1] + y[:-2]) / h**2
    d[0] = (2 * y[0] - 5 * y[1] + 4 * y[2] - y[3]) / h**2
    d[-1] = (2 * y[-1] - 5 * y[-2] + 4 * y[-3] - y[-4]) / h**2
    return d


def _fd_third(y, h):
    d = np.empty_like(y)
    d[2:-2] = (-y[:-4] + 2 * y[1:-3] - 2 * y[3:-1] + y[4:]) / (2 * h**3)
    fwd = np.array([-5, 18, -24, 14, -3]) / (2 * h**3)
    d[0] = fwd @ y[:5]
    d[1] = fwd @ y[1:6]
    d[-1] = -(fwd @ y[::-1][:5])
    d[-2] = -(fwd @ y[::-1][1:6])
    return d


def _spline_derivs(t, y, orders=3, lam=None):
    spl = make_smoothing_spline(t, y, lam=lam)
    return [spl(t, nu=k) for k in range(orders + 1)]


def _derivs(t, y, orders, method):
    """[y, y', ..., y^(orders)] on a uniform grid."""
    if method == "finite_diff":
        h = t[1] - t[0]
        out = [y, _fd_first(y, h), _fd_second(y, h)]
        if orders >= 3:
            out.append(_fd_third(y, h))
        return out[: orders + 1]
    if method == "smoothing_spline":
        return _spline_derivs(t, y, orders)
    raise DomainError(f"unknown derivative method {method!r}")


def _power_chain(x, y1, y2, y3, q):
    """Derivatives of x = F(y) where y = x**q (q != 0) or y = log x (q == 0)."""
    if q == 0:
        d1 = x * y1
        d2 = x * (y2 + y1**2)
        d3 = x * (y3 + 3 * y1 * y2 + y1**3)
        return d1, d2, d3
    c = 1.0 / q
    y = x**q
    d1 = c * y ** (c - 1) * y1
    d2 = c * ((c - 1) * y ** (c - 2) * y1**2 + y ** (c - 1) * y2)
    d3 = c * ((c - 1) * (c - 2) * y ** (c - 3) * y1**3
              + 3 * (c - 1) * y ** (c - 2) * y1 * y2 + y ** (c - 1) * y3)
    return d1, d2, d3


def _transform(x, dx, q):
    if q == 0:
        return np.log(x), None if dx is None else dx / x
    return x**q, None if dx is None else q * x ** (q - 1) * dx


def _estimate(t, x, dx, q, method, orders):
    """Derivatives of x up to ``orders`` through the transform y = x**q.

    When first-derivative samples ``dx`` are available (finite on at least
    nine uniformly spaced points) they seed the estimate; otherwise x itself
    is differentiated.
    """
    n = len(t)
    nan = np.full(n, np.nan)
    use = None
    if dx is not None:
        ok = np.isfinite(dx)
        idx = np.nonzero(ok)[0]
        if len(idx) >= 9 and np.all(np.diff(idx) == 1):
            use = slice(idx[0], idx[-1] + 1)
    if use is not None:
        tt, xx = t[use], x[use]
        _, y1 = _transform(xx, dx[use], q)
        ds = _derivs(tt, y1, orders - 1, method)
        y1s = ds[0]
        y2 = ds[1]
        y3 = ds[2] if orders >= 3 else np.zeros_like(y1)
        d1, d2, d3 = _power_chain(xx, y1s, y2, y3, q)
        res = [nan.copy(), nan.copy(), nan.copy()]
        res[0][use], res[1][use], res[2][use] = d1, d2, d3
        # y1'' has no centred stencil at the ends of the sampled range
        res[2][[idx[0], idx[-1]]] = np.nan
        return res, "coarea"
    y, _ = _transform(x, None, q)
    ds = _derivs(t, y, 3, method)
    res = list(_power_chain(x, ds[1], ds[2], ds[3], q))
    res[2][[0, 1, -2, -1]] = np.nan
    return res, "direct"


def transform_exponents(p: float) -> tuple:
    """Exponents (q_A, q_L) making A**q_A and L**q_L affine in t on an annulus (0 means log)."""
    if p == 2.0:
        return 0.0, 0.0
    a = (p - 2.0) / (p - 1.0)
    return a / 2.0, a


def boundary_identities(L0: float, cap: float, p: float) -> dict:
    """A'(0), L'(0), A''(0) when |grad u| = c is constant on the outer boundary.

    Here c**(p-1) * L(0) = cap, dh/dt = -1/c along the outer boundary, and the
    second t-derivative of h there equals (p-1)^-1 (dh/dt)^2 times curvature.
    """
    c = (cap / L0) ** (1.0 / (p - 1.0))
    return {"c": c, "dA": -L0 / c, "dL": -2 * math.pi / c,
            "d2A": 2 * math.pi * p / ((p - 1.0) * c**2)}


def profile_derivatives(profile: LevelProfile, method: str = "smoothing_spline",
                        transform: bool = True, cap: Optional[float] = None) -> LevelProfile:
    """Fill dA, d2A, d3A, dL, d2L.

    ``method`` is ``"finite_diff"`` (second-order centred stencils, 5-point
    third derivative) or ``"smoothing_spline"`` (cubic smoothing spline with
    GCV smoothing). With ``transform`` the profiles are differentiated as
    A**(a/2), L**a (log A, log L when p = 2), a = (p-2)/(p-1), and mapped
    back by the chain rule. d3A is left NaN where its stencil would be one
    sided: next to a polygonal body the profile is not smooth at the end
    level and a one-sided third difference picks that up as a sign flip.
    When ``cap`` is given and the ring is a
    concentric annulus, the t = 0 values come from the boundary identities.
    """
    t = np.asarray(profile.t, float)
    if len(t) < 9:
        raise ResolutionError("need at least 9 levels for third derivatives")
    h = np.diff(t)
    if np.ptp(h) > 1e-9 * h.mean():
        raise DomainError("derivative estimation needs a uniform level grid")
    if method not in ("finite_diff", "smoothing_spline"):
        raise DomainError(f"unknown derivative method {method!r}")
    p = profile.p
    qA, qL = transform_exponents(p) if transform else (1.0, 1.0)
    A, L = np.asarray(profile.A, float), np.asarray(profile.L, float)
    (dA, d2A, d3A), srcA = _estimate(t, A, profile.dA_coarea, qA, method, 3)
    (dL, d2L, _), srcL = _estimate(t, L, profile.dL_coarea, qL, method, 2)
    out = replace(profile, dA=dA, d2A=d2A, d3A=d3A, dL=dL, d2L=d2L,
                  method=f"{method}/{srcA}", meta=dict(profile.meta))
    if cap is not None and profile.meta.get("concentric") and t[0] == 0.0:
        b = boundary_identities(L[0], cap, p)
        out.dA[0], out.dL[0], out.d2A[0] = b["dA"], b["dL"], b["d2A"]
        out.meta["boundary_identities"] = b
    return out

