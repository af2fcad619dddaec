"""Closed-form radial solutions of the p-Laplace capacity problem.

Everything here is exact and serves as ground truth for the discrete
pipeline: the capacity potential of a concentric annulus, its capacity,
the exact level profile A(t), L(t) with analytic t-derivatives, and the
p-Green function of a disk with its pole at the center.

Throughout, ``a = (p - 2) / (p - 1)`` is the radial exponent: for p < 2 the
radial p-harmonic functions are affine in ``s**a``, for p = 2 in ``log s``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError


def check_p(p: float) -> float:
    p = float(p)
    if not (1.0 < p <= 2.0):
        raise DomainError(f"p must lie in (1, 2], got {p}")
    return p


def is_conformal(p: float) -> bool:
    return abs(p - 2.0) < 1e-14


def radial_exponent(p: float) -> float:
    return (p - 2.0) / (p - 1.0)


@dataclass(frozen=True)
class RadialConfig:
    """Concentric annulus ``r < |z| < R`` with exponent p."""

    r: float
    R: float
    p: float

    def __post_init__(self):
        check_p(self.p)
        if not (0.0 < self.r < self.R):
            raise DomainError(f"need 0 < r < R, got r={self.r}, R={self.R}")


def _phi(s, p):
    # radial p-harmonic profile, up to affine change
    if is_conformal(p):
        return np.log(s)
    return np.power(s, radial_exponent(p))


def annulus_capacity(cfg: RadialConfig) -> float:
    r, R, p = cfg.r, cfg.R, cfg.p
    if is_conformal(p):
        return 2.0 * math.pi / math.log(R / r)
    a = radial_exponent(p)
    b = (p - 1.0) / (2.0 - p)
    return 2.0 * math.pi * (b * (r**a - R**a)) ** (1.0 - p)


def annulus_potential(s, cfg: RadialConfig):
    """Exact potential at radius ``s`` (scalar or array), 1 at r and 0 at R."""
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr < cfg.r * (1 - 1e-12)) or np.any(s_arr > cfg.R * (1 + 1e-12)):
        raise DomainError("radius outside [r, R]")
    s_arr = np.clip(s_arr, cfg.r, cfg.R)
    fR = _phi(cfg.R, cfg.p)
    val = (_phi(s_arr, cfg.p) - fR) / (_phi(cfg.r, cfg.p) - fR)
    return float(val) if np.ndim(val) == 0 else val


def annulus_level_radius(t, cfg: RadialConfig):
    """Radius of the level circle ``{u = t}``; inverse of :func:`annulus_potential`."""
    t = np.asarray(t, dtype=float)
    r, R, p = cfg.r, cfg.R, cfg.p
    if is_conformal(p):
        s = R * (r / R) ** t
    else:
        a = radial_exponent(p)
        s = (R**a + t * (r**a - R**a)) ** (1.0 / a)
    return float(s) if np.ndim(s) == 0 else s


@dataclass
class ExactProfile:
    t: np.ndarray
    radius: np.ndarray
    A: np.ndarray
    L: np.ndarray
    dA: np.ndarray
    d2A: np.ndarray
    d3A: np.ndarray
    dL: np.ndarray
    d2L: np.ndarray


def annulus_profile(cfg: RadialConfig, t_grid) -> ExactProfile:
    """Exact A(t), L(t) and their t-derivatives for the annulus.

    With y(t) = s(t)**a affine in t (log s affine for p = 2), the radius
    satisfies s' = k s**(1-a) with a constant k, which gives the
    derivatives of s by repeated differentiation.
    """
    t = np.asarray(t_grid, dtype=float)
    s = annulus_level_radius(t, cfg)
    s = np.atleast_1d(s)
    r, R, p = cfg.r, cfg.R, cfg.p
    if is_conformal(p):
        k = math.log(r / R)  # d(log s)/dt
        s1 = k * s
        s2 = k * k * s
        s3 = k**3 * s
    else:
        a = radial_exponent(p)
        k = (r**a - R**a) / a  # s' = k * s**(1 - a)
        m = 1.0 - a
        s1 = k * s**m
        s2 = k * m * s ** (m - 1) * s1
        s3 = k * m * ((m - 1) * s ** (m - 2) * s1 * s1 + s ** (m - 1) * s2)
    A = math.pi * s**2
    dA = 2 * math.pi * s * s1
    d2A = 2 * math.pi * (s1 * s1 + s * s2)
    d3A = 2 * math.pi * (3 * s1 * s2 + s * s3)
    L = 2 * math.pi * s
    return ExactProfile(t=t, radius=s, A=A, L=L, dA=dA, d2A=d2A, d3A=d3A,
                        dL=2 * math.pi * s1, d2L=2 * math.pi * s2)


def annulus_flux(s, cfg: RadialConfig) -> float:
    """Flux of the exact potential through the circle of radius s."""
    r, R, p = cfg.r, cfg.R, cfg.p
    if is_conformal(p):
        grad = 1.0 / (s * math.log(R / r))
    else:
        a = radial_exponent(p)
        grad = abs(a * s ** (a - 1.0) / (r**a - R**a))
    return 2.0 * math.pi * s * grad ** (p - 1.0)


def disk_green(s, R: float, p: float):
    """p-Green function of the disk D(0, R) with pole at 0, at radius s."""
    p = check_p(p)
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr <= 0) or np.any(s_arr > R * (1 + 1e-12)):
        raise DomainError("need 0 < s <= R")
    s_arr = np.minimum(s_arr, R)
    if is_conformal(p):
        g = np.log(R / s_arr) / (2.0 * math.pi)
    else:
        a = radial_exponent(p)
        b = (p - 1.0) / (2.0 - p)
        g = b * (2.0 * math.pi) ** (1.0 / (1.0 - p)) * (s_arr**a - R**a)
    return float(g) if np.ndim(g) == 0 else g


def disk_green_level_radius(t, R: float, p: float):
    """Radius of ``{g = t}`` for the centered disk Green function."""
    t = np.asarray(t, dtype=float)
    if is_conformal(p):
        s = R * np.exp(-2.0 * math.pi * t)
    else:
        a = radial_exponent(p)
        b = (p - 1.0) / (2.0 - p)
        s = (R**a + t / (b * (2.0 * math.pi) ** (1.0 / (1.0 - p)))) ** (1.0 / a)
    return float(s) if np.ndim(s) == 0 else s


def disk_green_profile(t_grid, R: float, p: float) -> ExactProfile:
    """Exact A_g, L_g for the disk: the Green function is an annulus profile
    in disguise, with level t mapped linearly."""
    t = np.asarray(t_grid, dtype=float)
    s = np.atleast_1d(disk_green_level_radius(t, R, p))
    if is_conformal(p):
        k = -2.0 * math.pi
        s1, s2, s3 = k * s, k * k * s, k**3 * s
    else:
        a = radial_exponent(p)
        b = (p - 1.0) / (2.0 - p)
        k = 1.0 / (a * b * (2.0 * math.pi) ** (1.0 / (1.0 - p)))
        m = 1.0 - a
        s1 = k * s**m
        s2 = k * m * s ** (m - 1) * s1
        s3 = k * m * ((m - 1) * s ** (m - 2) * s1 * s1 + s ** (m - 1) * s2)
    return ExactProfile(
        t=t, radius=s, A=math.pi * s**2, L=2 * math.pi * s,
        dA=2 * math.pi * s * s1, d2A=2 * math.pi * (s1 * s1 + s * s2),
        d3A=2 * math.pi * (3 * s1 * s2 + s * s3),
        dL=2 * math.pi * s1, d2L=2 * math.pi * s2,
    )
