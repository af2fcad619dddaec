"""Whole-plane p-capacity of a convex body and the isocapacitary deficit inequality.

pcap(K) is the limit of F_p(K, R) as the outer disk D(c, R) grows. F_p adds
back the part of the p-modulus that a disk of radius R contributes, so for a
centred disk it does not depend on R at all, and for other bodies it
decreases towards the limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .convexgeom import ConvexBody
from .errors import DomainError, MonotonicityError
from .greenfn import k_p, pcap_disk_plane
from .oracle import check_p, is_conformal, radial_exponent
from .plaplace import SolveParams, capacity, solve_potential
from .ringmesh import RingDomain, build_ring_mesh

TWO_PI = 2.0 * math.pi

__all__ = ["pcap_disk_plane", "f_p", "PlaneCapRequest", "PlaneCapReport", "pcap_plane",
           "condenser_capacity", "isocapacitary_check", "isocapacitary_scale",
           "capacity_radius", "chain_check"]


def f_p(cap_KR: float, R: float, p: float) -> float:
    """F_p(K, R) from the condenser capacity cap(K, D(c, R))."""
    p = check_p(p)
    if not (cap_KR > 0 and R > 0):
        raise DomainError("F_p needs positive capacity and radius")
    if is_conformal(p):
        return R * math.exp(-TWO_PI / cap_KR)
    return (cap_KR ** (1.0 / (1.0 - p)) + k_p(R, p)) ** (1.0 - p)


@dataclass
class PlaneCapRequest:
    K: ConvexBody
    p: float
    R_seq: Optional[Sequence[float]] = None  # None: 4 radii, geometric from 4x to 32x circumradius
    n_phi: int = 256
    n_s: int = 64
    grading: object = "geometric"
    monotone_tol: float = 0.01

    def __post_init__(self):
        check_p(self.p)
        if self.R_seq is not None:
            R = np.asarray(self.R_seq, dtype=float)
            if R.ndim != 1 or len(R) < 2 or np.any(np.diff(R) <= 0):
                raise DomainError("R_seq must be increasing with at least two radii")

    @property
    def center(self) -> np.ndarray:
        return self.K.center_array

    def resolved_R(self) -> np.ndarray:
        rc = self.K.circumradius(self.center)
        if self.R_seq is None:
            return rc * np.geomspace(4.0, 32.0, 4)
        R = np.asarray(self.R_seq, dtype=float)
        if R[0] <= rc:
            raise DomainError("every outer disk must contain K")
        return R

    def to_json(self) -> dict:
        return {"K": self.K.to_json(), "p": self.p,
                "R_seq": None if self.R_seq is None else [float(r) for r in self.R_seq],
                "n_phi": self.n_phi, "n_s": self.n_s, "grading": self.grading}


@dataclass
class PlaneCapReport:
    pcap_plane: float
    F_sequence: np.ndarray
    R_seq: np.ndarray
    caps: np.ndarray
    model: str
    request: Optional[PlaneCapRequest] = None
    notes: list = field(default_factory=list)

    def __float__(self) -> float:
        return float(self.pcap_plane)

    def to_json(self) -> dict:
        out = {"pcap_plane": self.pcap_plane, "F_sequence": self.F_sequence.tolist(),
               "R_seq": self.R_seq.tolist(), "caps": self.caps.tolist(), "model": self.model,
               "notes": list(self.notes)}
        if self.request is not None:
            out["config"] = self.request.to_json()
        return out


def condenser_capacity(K: ConvexBody, R: float, p: float, n_phi: int = 256, n_s: int = 64,
                       grading="geometric", center=None) -> float:
    c = K.center_array if center is None else np.asarray(center, dtype=float)
    ring = RingDomain(K, ConvexBody.disk(R, center=tuple(c)), ref=tuple(c))
    mesh = build_ring_mesh(ring, n_phi, n_s, grading)
    u = solve_potential(mesh, SolveParams(p))
    return capacity(mesh, u, p).cap_energy


def pcap_plane(req: PlaneCapRequest) -> PlaneCapReport:
    """Extrapolated lim F_p(K, R) over the request's outer radii.

    Raises MonotonicityError if F grows by more than ``monotone_tol`` from one
    radius to the next, which can only come from solver error.
    """
    p = req.p
    R = req.resolved_R()
    rc = req.K.circumradius(req.center)
    # keep the radial spacing (in log radius) of the base mesh at 4x circumradius
    n_s = [max(req.n_s, int(round(req.n_s * math.log(r / rc) / math.log(4.0)))) for r in R]
    caps = np.array([condenser_capacity(req.K, float(r), p, req.n_phi, n, req.grading,
                                        req.center) for r, n in zip(R, n_s)])
    F = np.array([f_p(c, float(r), p) for c, r in zip(caps, R)])
    rise = F[1:] / F[:-1] - 1.0
    if np.any(rise > req.monotone_tol):
        raise MonotonicityError(
            f"F_p sequence increases by {rise.max():.3%} (> {req.monotone_tol:.0%}): {F.tolist()}")
    if is_conformal(p):
        x, model = 1.0 / np.log(R), "linear in 1/log R"
    else:
        x, model = R ** radial_exponent(p), "linear in R^((p-2)/(p-1))"
    A = np.column_stack([np.ones_like(x), x])
    coef, *_ = np.linalg.lstsq(A, F, rcond=None)
    rep = PlaneCapReport(float(coef[0]), F, R, caps, model, req)
    rep.notes.append(f"radial layers per solve: {n_s}")
    return rep


def isocapacitary_check(cap_KOmega: float, cap_K: float, cap_Omega: float, p: float) -> float:
    """Right side minus left side of the isocapacitary deficit inequality (>= 0 when it holds).

    p < 2: (cap_K/2pi)^(1/(1-p)) - (cap_Omega/2pi)^(1/(1-p)) - (cap_KOmega/2pi)^(1/(1-p)).
    p = 2: log(cap_Omega/cap_K) - 2pi/cap_KOmega.
    Both vanish for concentric disks.
    """
    p = check_p(p)
    if not (cap_KOmega > 0 and cap_K > 0 and cap_Omega > 0):
        raise DomainError("capacities must be positive")
    if is_conformal(p):
        return math.log(cap_Omega / cap_K) - TWO_PI / cap_KOmega
    e = 1.0 / (1.0 - p)
    return (cap_K / TWO_PI) ** e - (cap_Omega / TWO_PI) ** e - (cap_KOmega / TWO_PI) ** e


def isocapacitary_scale(cap_KOmega: float, cap_K: float, cap_Omega: float, p: float) -> float:
    """Sum of absolute terms of the inequality, for relative margins."""
    if is_conformal(p):
        return abs(math.log(cap_Omega / cap_K)) + TWO_PI / cap_KOmega
    e = 1.0 / (1.0 - p)
    return sum((c / TWO_PI) ** e for c in (cap_K, cap_Omega, cap_KOmega))


def capacity_radius(pcap: float, p: float) -> float:
    """Radius of the disk with whole-plane capacity ``pcap``."""
    p = check_p(p)
    if is_conformal(p):
        return float(pcap)
    return (((p - 1.0) / (2.0 - p)) ** (p - 1.0) * pcap / TWO_PI) ** (1.0 / (2.0 - p))


def chain_check(body: ConvexBody, pcap: float, p: float) -> dict:
    """The chain sqrt(A/pi) <= capacity radius <= diam/2 <= L/4 with its three gaps."""
    vals = [math.sqrt(body.area() / math.pi), capacity_radius(pcap, p),
            body.diameter() / 2.0, body.perimeter() / 4.0]
    gaps = [b - a for a, b in zip(vals, vals[1:])]
    return {"values": vals, "gaps": gaps}
