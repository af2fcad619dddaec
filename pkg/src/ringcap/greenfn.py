"""p-Green function, p-Robin function and p-harmonic radius of a convex domain.

The Green function is approximated the way the comparison argument builds it:
solve the capacity problem of a small disk D(o, delta) inside the domain and
rescale the potential by its p-modulus, which gives the rescaled field unit
flux. On a disk centred at the pole this is exact for every delta.

The Robin constant comes from the capacities of the same shrinking disks.
Each capacity is converted into the radius rho(delta) of the centred disk that
would have the same condenser capacity, and tau(delta) = k_p(rho(delta)).
For p = 2 this is exactly the difference (2 pi)^-1 log(1/delta) - 1/cap; for
p < 2 it is the quotient form with its leading disk correction removed, so it
is constant in delta on disk oracles and far better conditioned at
moderate delta. The raw quotient is reported alongside.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .convexgeom import ConvexBody
from .errors import DomainError
from .levelflow import LevelProfile, profile_derivatives, rescale_levels, sweep_levels
from .oracle import check_p, is_conformal, radial_exponent
from .plaplace import ScalarField, SolveParams, capacity, interpolate, p_modulus, solve_potential
from .ringmesh import RingDomain, build_ring_mesh

log = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi


def k_p(r, p: float):
    """Fundamental radial profile: b (2 pi)^(1/(1-p)) r^a for p < 2, log(1/r)/(2 pi) for p = 2."""
    p = check_p(p)
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise DomainError("k_p needs r > 0")
    if is_conformal(p):
        out = np.log(1.0 / r) / TWO_PI
    else:
        b = (p - 1.0) / (2.0 - p)
        out = b * TWO_PI ** (1.0 / (1.0 - p)) * r ** radial_exponent(p)
    return float(out) if out.ndim == 0 else out


def k_p_inverse(v, p: float):
    """Unique r > 0 with k_p(r) = v."""
    p = check_p(p)
    v = np.asarray(v, dtype=float)
    if is_conformal(p):
        out = np.exp(-TWO_PI * v)
    else:
        if np.any(v <= 0):
            raise DomainError("k_p takes only positive values for p < 2")
        c = (2.0 - p) / (p - 1.0) * TWO_PI ** (1.0 / (p - 1.0))
        out = (v * c) ** ((p - 1.0) / (p - 2.0))
    return float(out) if out.ndim == 0 else out


def p_harmonic_radius(tau: float, p: float) -> float:
    return k_p_inverse(tau, p)


def pcap_disk_plane(r: float, p: float) -> float:
    """Capacity of the closed disk of radius r relative to the whole plane (log capacity r at p = 2)."""
    p = check_p(p)
    if not r > 0:
        raise DomainError("radius must be positive")
    if is_conformal(p):
        return float(r)
    return TWO_PI * ((p - 1.0) / (2.0 - p)) ** (1.0 - p) * r ** (2.0 - p)


def disk_matched_radius(cap: float, delta: float, p: float) -> float:
    """Radius R of the centred disk with cap(D(0, delta), D(0, R)) = cap."""
    if is_conformal(p):
        return delta * math.exp(TWO_PI / cap)
    a = radial_exponent(p)
    b = (p - 1.0) / (2.0 - p)
    inner = (cap / TWO_PI) ** (1.0 / (1.0 - p)) / b  # = delta^a - R^a
    val = delta**a - inner
    if val <= 0:
        raise DomainError("capacity too small for a disk condenser of this inner radius")
    return val ** (1.0 / a)


def robin_quotient(cap: float, delta: float, p: float) -> float:
    """The finite-delta quotient (p < 2) or difference (p = 2) whose limit is tau_p.

    The p = 2 difference is written as (2 pi)^-1 log(1/delta) - 1/cap, which is
    the orientation that makes a disk of radius R give -log(R)/(2 pi).
    """
    if is_conformal(p):
        return math.log(1.0 / delta) / TWO_PI - 1.0 / cap
    c0 = pcap_disk_plane(delta, p)
    return (cap - c0) / ((p - 1.0) * c0 ** (p / (p - 1.0)))


def green_profile_bounds(Ag0: float, Lg0: float, p: float, t):
    """Upper bounds for A_g(t), L_g(t) from their values at t = 0 (equalities on centred disks)."""
    p = check_p(p)
    if not (Ag0 > 0 and Lg0 > 0):
        raise DomainError("bounds need positive area and length")
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("levels must be nonnegative")
    if is_conformal(p):
        A = Ag0 * np.exp(-4 * math.pi * t)
        L = Lg0 * np.exp(-TWO_PI * t)
    else:
        e = (p - 2.0) / (2 * p - 2.0)
        A = (Ag0**e + (2.0 - p) / (2 * p - 2.0) * (4 * math.pi) ** (p / (2 * p - 2.0)) * t) ** (1.0 / e)
        f = (p - 2.0) / (p - 1.0)
        L = (Lg0**f + (2.0 - p) / (p - 1.0) * TWO_PI * t) ** (1.0 / f)
    if A.ndim == 0:
        return float(A), float(L)
    return A, L


def gamma_p(p: float) -> float:
    """Limit of A_g'(t) A_g(t)^(p/(2-2p)) as t grows."""
    return -((4 * math.pi) ** (p / (2 * p - 2.0)))


@dataclass
class GreenParams:
    pole: tuple
    p: float
    # radii of the shrinking disks; None resolves to inradius * geomspace(0.24, 0.1, 4)
    delta_seq: Optional[Sequence[float]] = None
    n_phi: int = 256
    n_s: int = 64
    n_t: int = 21
    grading: object = "geometric"
    # radius of the disk used for the level profile; None resolves to inradius / 100
    profile_delta: Optional[float] = None
    model: str = "disk_matched"  # or "quotient"
    derivative_method: str = "smoothing_spline"

    def __post_init__(self):
        check_p(self.p)
        self.pole = tuple(float(x) for x in self.pole)
        if self.model not in ("disk_matched", "quotient"):
            raise DomainError(f"unknown extrapolation model {self.model!r}")
        if self.delta_seq is not None:
            d = np.asarray(self.delta_seq, dtype=float)
            if d.ndim != 1 or len(d) < 2 or np.any(d <= 0) or np.any(np.diff(d) >= 0):
                raise DomainError("delta_seq must be a decreasing sequence of positive radii")

    def resolved_deltas(self, domain: ConvexBody) -> np.ndarray:
        d = _pole_clearance(domain, self.pole)
        if self.delta_seq is None:
            return d * np.geomspace(0.24, 0.1, 4)
        seq = np.asarray(self.delta_seq, dtype=float)
        if seq[0] >= d / 4:
            raise DomainError("largest delta must stay below a quarter of the pole's distance to the boundary")
        return seq

    def resolved_profile_delta(self, domain: ConvexBody) -> float:
        d = _pole_clearance(domain, self.pole)
        return d / 100.0 if self.profile_delta is None else float(self.profile_delta)

    def to_json(self) -> dict:
        return {"pole": list(self.pole), "p": self.p,
                "delta_seq": None if self.delta_seq is None else [float(x) for x in self.delta_seq],
                "n_phi": self.n_phi, "n_s": self.n_s, "n_t": self.n_t, "grading": self.grading,
                "profile_delta": self.profile_delta, "model": self.model,
                "derivative_method": self.derivative_method}


def _pole_clearance(domain: ConvexBody, pole) -> float:
    pole = np.asarray(pole, dtype=float)
    if not domain.contains(pole[None], strict=True)[0]:
        raise DomainError("pole must lie strictly inside the domain")
    return domain.inradius_about(pole)


@dataclass
class RobinEstimate:
    tau: float
    delta_seq: np.ndarray
    caps: np.ndarray
    tau_seq: np.ndarray        # disk-matched tau(delta)
    quotient_seq: np.ndarray   # raw quotient / difference
    tau_quotient: float        # raw quotient extrapolated in its leading correction
    model: str
    warnings: List[str] = field(default_factory=list)

    def __float__(self) -> float:
        return float(self.tau)

    def to_json(self) -> dict:
        return {"tau_p": self.tau, "model": self.model, "delta_seq": self.delta_seq.tolist(),
                "capacities": self.caps.tolist(), "tau_seq": self.tau_seq.tolist(),
                "quotient_seq": self.quotient_seq.tolist(), "tau_quotient": self.tau_quotient,
                "warnings": list(self.warnings)}


@dataclass
class GreenReport:
    p: float
    tau_p: float
    rho_p: float
    robin: RobinEstimate
    g_field: ScalarField
    profile: LevelProfile  # A_g and L_g over t >= 0
    gamma_check: dict
    params: GreenParams
    domain: ConvexBody

    @property
    def Ag(self) -> np.ndarray:
        return self.profile.A

    @property
    def Lg(self) -> np.ndarray:
        return self.profile.L

    def to_json(self) -> dict:
        return {"p": self.p, "tau_p": self.tau_p, "rho_p": self.rho_p,
                "robin": self.robin.to_json(), "gamma_check": self.gamma_check,
                "config": {"domain": self.domain.to_json(), "green": self.params.to_json()}}


def _ring(domain: ConvexBody, pole, delta: float) -> RingDomain:
    return RingDomain(ConvexBody.disk(delta, center=pole), domain, ref=tuple(pole))


def _solve_ring(domain, params: GreenParams, delta: float):
    mesh = build_ring_mesh(_ring(domain, params.pole, delta), params.n_phi, params.n_s, params.grading)
    u = solve_potential(mesh, SolveParams(params.p))
    rep = capacity(mesh, u, params.p)
    return mesh, u, rep


def green_approx(domain: ConvexBody, params: GreenParams, delta: float) -> ScalarField:
    """Approximate g(o, .) on the domain minus D(o, delta) as p-modulus times the capacity potential."""
    if delta >= _pole_clearance(domain, params.pole):
        raise DomainError("disk around the pole is not contained in the domain")
    _, u, rep = _solve_ring(domain, params, delta)
    return ScalarField(u.mesh, u.values * rep.p_modulus, u.p, u.eps, u.iterations,
                       u.residual, list(u.energy_history))


def _fit_intercept(x, y) -> float:
    A = np.column_stack([np.ones_like(x), x])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    return float(coef[0])


def robin_tau(domain: ConvexBody, params: GreenParams) -> RobinEstimate:
    """tau_p(o, domain) from capacities of shrinking disks around the pole."""
    p = params.p
    deltas = params.resolved_deltas(domain)
    d = _pole_clearance(domain, params.pole)
    caps = np.array([_solve_ring(domain, params, float(dl))[2].cap_energy for dl in deltas])
    tau_seq = np.array([k_p(disk_matched_radius(c, dl, p), p) for c, dl in zip(caps, deltas)])
    quot = np.array([robin_quotient(c, dl, p) for c, dl in zip(caps, deltas)])
    s = deltas / d
    # disk-matched values differ from the limit by terms of order delta^2
    tau_dm = _fit_intercept(s**2, tau_seq)
    if is_conformal(p):
        xq = 1.0 / np.log(1.0 / s)
    else:
        xq = s ** ((2.0 - p) / (p - 1.0))
    tau_q = _fit_intercept(xq, quot)

    warnings = []
    scale = abs(tau_dm) + abs(k_p(d, p)) if not is_conformal(p) else abs(tau_dm) + 1.0 / TWO_PI
    steps = np.diff(tau_seq)
    if np.any(steps > 1e-3 * scale) and np.any(steps < -1e-3 * scale):
        warnings.append("tau(delta) sequence is not monotone beyond 1e-3; extrapolation is ill-conditioned")
    tau = tau_dm if params.model == "disk_matched" else tau_q
    for w in warnings:
        log.warning(w)
    return RobinEstimate(tau, deltas, caps, tau_seq, quot, tau_q, params.model, warnings)


def _profile_from_field(mesh, u: ScalarField, pmod: float, delta: float, n_t: int,
                        method: str) -> LevelProfile:
    """A_g, L_g on a uniform t-grid from 0 to the level whose set has diameter about 10 delta."""
    pole = np.asarray(mesh.ring.ref)
    phi = np.linspace(0, 2 * np.pi, 128, endpoint=False)
    ring_pts = pole + 5 * delta * np.stack([np.cos(phi), np.sin(phi)], -1)
    u_cut = float(np.min(interpolate(mesh, u.values, ring_pts)))
    if not (0 < u_cut < 1):
        raise DomainError("profile cutoff circle leaves the computational ring")
    levels = u_cut * np.arange(1, n_t + 1) / n_t
    prof = sweep_levels(mesh, u, max(n_t, 9), levels=levels)
    # drop the inner-disk row so the level grid 0, h, ..., n_t h stays uniform
    keep = slice(0, len(prof.t) - 1)
    prof = LevelProfile(prof.t[keep], prof.A[keep], prof.L[keep], p=prof.p,
                        hull_flags=prof.hull_flags[keep], dA_coarea=prof.dA_coarea[keep],
                        dL_coarea=prof.dL_coarea[keep], meta=prof.meta)
    prof.meta["concentric"] = False
    g_prof = rescale_levels(prof, pmod)
    g_prof.meta["kind"] = "green"
    g_prof.meta["t_max"] = float(g_prof.t[-1])
    return profile_derivatives(g_prof, method)


def green_level_profile(domain: ConvexBody, params: GreenParams, _solved=None) -> LevelProfile:
    """A_g(t), L_g(t) with derivatives, t from 0 (the domain itself) up to the resolved cutoff."""
    delta = params.resolved_profile_delta(domain)
    mesh, u, rep = _solve_ring(domain, params, delta) if _solved is None else _solved
    return _profile_from_field(mesh, u, rep.p_modulus, delta, params.n_t, params.derivative_method)


def green_report(domain: ConvexBody, params: GreenParams) -> GreenReport:
    robin = robin_tau(domain, params)
    p = params.p
    delta = params.resolved_profile_delta(domain)
    solved = _solve_ring(domain, params, delta)
    mesh, u, rep = solved
    prof = green_level_profile(domain, params, _solved=solved)
    g = ScalarField(mesh, u.values * rep.p_modulus, p, u.eps, u.iterations, u.residual,
                    list(u.energy_history))
    slope = prof.dA * prof.A ** (p / (2 - 2 * p))
    k = np.nanargmax(np.where(np.isfinite(slope), prof.t, -np.inf))
    gam = gamma_p(p)
    gamma_check = {"t": float(prof.t[k]), "slope": float(slope[k]), "gamma_p": gam,
                   "rel_dev": float(abs(slope[k] / gam - 1))}
    rho = p_harmonic_radius(robin.tau, p) if (is_conformal(p) or robin.tau > 0) else float("nan")
    return GreenReport(p, robin.tau, rho, robin, g, prof, gamma_check, params, domain)
