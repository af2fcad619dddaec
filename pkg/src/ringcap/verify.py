"""Inequality checks over level profiles and capacities.

Every inequality is turned into a margin series, normalised by the sum of the
absolute values of its terms so that margins are dimensionless and lie in
[-1, 1]. A margin >= 0 means the inequality holds at that level.

Tolerances are measured rather than guessed. For each check the same pipeline
is run on a matched oracle (the concentric annulus, or the centred disk for
Green profiles, with the same areas), where every margin is exactly zero; the
largest observed |margin| there is the oracle error. The annulus is an easy
case for the pipeline, though: its transformed profiles are affine in t and
its level curves follow the mesh. So for checks built from derivative
estimates the profile under test also supplies its own noise estimate, the
largest disagreement with its companions (the other derivative method, and
the same pipeline on a half-resolution mesh). Per level the tolerance is 5
times the larger of the oracle error and that disagreement.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Dict, List, Optional, Sequence

import numpy as np

from .convexgeom import ConvexBody
from .errors import PreconditionError, ResolutionError
from .greenfn import GreenParams, green_level_profile, green_profile_bounds
from .levelflow import LevelProfile, profile_derivatives, sweep_levels
from .oracle import check_p, is_conformal
from .plaplace import CapacityReport, SolveParams, capacity, solve_potential
from .ringmesh import RingDomain, build_ring_mesh

SAFETY = 5.0
PASS, FAIL, EQUALITY = "pass", "fail", "equality-case"
OTHER_METHOD = {"smoothing_spline": "finite_diff", "finite_diff": "smoothing_spline"}


@dataclass
class CheckResult:
    name: str
    t_values: np.ndarray
    margins: np.ndarray
    tol: np.ndarray
    verdict: str
    notes: List[str] = field(default_factory=list)
    hypothesis_met: bool = True

    @property
    def min_margin(self) -> float:
        return float(np.min(self.margins)) if len(self.margins) else float("nan")

    @property
    def counts(self) -> bool:
        """Whether a fail verdict counts as a violation (hypotheses of the inequality hold)."""
        return self.hypothesis_met

    def to_json(self) -> dict:
        return {"name": self.name, "verdict": self.verdict, "hypothesis_met": self.hypothesis_met,
                "min_margin": self.min_margin,
                "max_abs_margin": float(np.max(np.abs(self.margins))) if len(self.margins) else None,
                "max_tol": float(np.max(self.tol)) if len(self.tol) else None,
                "n_levels": int(len(self.margins)), "notes": list(self.notes)}


def verdict_of(margins, tol) -> str:
    m = np.asarray(margins, float)
    tol = np.broadcast_to(np.asarray(tol, float), m.shape)
    if len(m) == 0:
        return FAIL
    if np.all(np.abs(m) <= tol):
        return EQUALITY
    if np.all(m >= -tol):
        return PASS
    return FAIL


def _rel(x, y):
    """(x - y) / (|x| + |y|), zero where both vanish."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    s = np.abs(x) + np.abs(y)
    with np.errstate(invalid="ignore", divide="ignore"):
        m = np.where(s > 0, (x - y) / np.where(s > 0, s, 1.0), 0.0)
    return np.where(np.isfinite(s), m, np.nan)


# -- margin series ------------------------------------------------------------
# Each returns (t, margins) with non-finite entries removed by the caller.

def _longinetti_area(d: LevelProfile, p):
    if d.d3A is None or not np.any(np.isfinite(d.d3A)):
        return None
    return d.t, _rel(d.dA * d.d3A, (2.0 / p) * d.d2A**2)


def _longinetti_length(d: LevelProfile, p):
    return d.t, _rel(d.L * d.d2L, d.dL**2 / (p - 1.0))


def _outer_length_slope(d: LevelProfile) -> float:
    if d.dL is not None and np.isfinite(d.dL[0]):
        return float(d.dL[0])
    b = d.meta.get("boundary_coarea", {})
    if np.isfinite(b.get("dL0", np.nan)):
        return float(b["dL0"])
    # a polygonal outer boundary has corners where the level speed is unbounded
    return -math.inf


def _longinetti_integrated(d: LevelProfile, p):
    dL0 = _outer_length_slope(d)
    X = (d.L / d.L[0]) ** (1.0 / (p - 1.0))
    Y = d.dL / dL0 if np.isfinite(dL0) else np.zeros_like(d.dL) * d.dL
    m = _rel(X, Y)
    m[0] = np.nan  # identity at t = 0
    return d.t, m


def _circle_inner(d: LevelProfile, p):
    return d.t, _rel(2 * (p - 1.0) * d.A * d.d2A, p * d.dA**2)


def _gradient_constant(d: LevelProfile, p):
    return d.t, _rel(p * d.dA**2, 2 * (p - 1.0) * d.A * d.d2A)


def _mp_series(d: LevelProfile, p):
    k = p / (2 * p - 2.0)
    w = d.A ** (1.0 / (p - 1.0))
    M = (d.A * d.d2A - k * d.dA**2) / w
    S = (np.abs(d.A * d.d2A) + k * d.dA**2) / w
    return M, S


def _mp_monotone(d: LevelProfile, p):
    M, S = _mp_series(d, p)
    if not np.isfinite(M[0]):
        return None
    m = (M[0] - M) / (S[0] + S)
    m[0] = np.nan
    return d.t, m


def _isoperimetric(d: LevelProfile, p):
    return d.t, _rel(d.L**2, 4 * math.pi * d.A)


def _deficit_monotone(d: LevelProfile, p):
    D = d.L**2 - 4 * math.pi * d.A
    scale = 0.5 * (d.L[1:] ** 2 + d.L[:-1] ** 2)
    return 0.5 * (d.t[1:] + d.t[:-1]), np.diff(D) / scale


def _deficit_endpoint(d: LevelProfile, p):
    A0, A1, L0, L1 = d.A[0], d.A[-1], d.L[0], d.L[-1]
    x = (A0 - A1) / math.pi
    y = (L0**2 - L1**2) / (4 * math.pi**2)
    s = (A0 + A1) / math.pi + (L0**2 + L1**2) / (4 * math.pi**2)
    return np.array([d.t[-1]]), np.array([(x - y) / s])


def capacity_isoperimetry_terms(d: LevelProfile, cap: float, p: float) -> dict:
    """Both sides of the length/area capacity isoperimetry around c_p^-1."""
    c_p = (cap / (2 * math.pi)) ** (1.0 / (p - 1.0))
    A0, A1, L0, L1 = d.A[0], d.A[-1], d.L[0], d.L[-1]
    if is_conformal(p):
        mid = 1.0 / c_p
        left = math.log(L0 / L1)
        right = 0.5 * math.log(A0 / A1)
    else:
        a = (p - 2.0) / (p - 1.0)
        mid = (2.0 - p) / (p - 1.0) / c_p
        left = (L1 / (2 * math.pi)) ** a - (L0 / (2 * math.pi)) ** a
        right = (A1 / math.pi) ** (a / 2) - (A0 / math.pi) ** (a / 2)
    return {"c_p": c_p, "left": left, "middle": mid, "right": right}


def _cap_iso_length(d, p, cap):
    v = capacity_isoperimetry_terms(d, cap, p)
    return np.array([d.t[-1]]), np.array([(v["middle"] - v["left"]) / abs(v["middle"])])


def _cap_iso_area(d, p, cap):
    v = capacity_isoperimetry_terms(d, cap, p)
    return np.array([d.t[-1]]), np.array([(v["right"] - v["middle"]) / abs(v["middle"])])


def _green_area_log_convex(d, p):
    return d.t, _rel(d.A * d.d2A, p / (2 * p - 2.0) * d.dA**2)


def _green_area_second(d, p):
    return d.t, _rel(d.d2A, 2 * math.pi * p / (p - 1.0) * np.abs(d.dA) ** (2.0 / p))


def _green_area_slope(d, p):
    return d.t, _rel(np.abs(d.dA) ** (2.0 - 2.0 / p), 4 * math.pi * d.A)


def _green_holder(d, p):
    return d.t, _rel(np.abs(d.dA) ** (1.0 - 1.0 / p), d.L)


def _green_area_bound(d, p):
    Ab, _ = green_profile_bounds(d.A[0], d.L[0], p, d.t)
    m = _rel(Ab, d.A)
    m[0] = np.nan
    return d.t, m


def _green_length_bound(d, p):
    _, Lb = green_profile_bounds(d.A[0], d.L[0], p, d.t)
    m = _rel(Lb, d.L)
    m[0] = np.nan
    return d.t, m


RING_SERIES = {
    "longinetti_area": _longinetti_area,
    "longinetti_length": _longinetti_length,
    "longinetti_length_integrated": _longinetti_integrated,
    "circle_inner_area": _circle_inner,
    "gradient_constant_area": _gradient_constant,
    "mp_monotone": _mp_monotone,
    "isoperimetric_levels": _isoperimetric,
    "deficit_monotone": _deficit_monotone,
    "deficit_endpoint": _deficit_endpoint,
}
CAP_SERIES = {
    "capacity_isoperimetry_length": _cap_iso_length,
    "capacity_isoperimetry_area": _cap_iso_area,
}
GREEN_SERIES = {
    "green_longinetti_area": _longinetti_area,
    "green_longinetti_length": _longinetti_length,
    "green_area_log_convex": _green_area_log_convex,
    "green_area_second": _green_area_second,
    "green_area_slope": _green_area_slope,
    "green_holder": _green_holder,
    "green_area_bound": _green_area_bound,
    "green_length_bound": _green_length_bound,
}
# series built from derivative estimates; their tolerance includes the method disagreement
DERIVATIVE_SERIES = {"longinetti_area", "longinetti_length", "longinetti_length_integrated",
                     "circle_inner_area", "gradient_constant_area", "mp_monotone",
                     "green_longinetti_area", "green_longinetti_length", "green_area_log_convex",
                     "green_area_second", "green_area_slope", "green_holder"}


def _finite(t, m):
    t = np.asarray(t, float)
    m = np.asarray(m, float)
    ok = np.isfinite(m)
    return t[ok], m[ok]


def _series(fn, d, p, cap=None):
    out = fn(d, p) if cap is None else fn(d, p, cap)
    return None if out is None else _finite(*out)


def _make(name, fn, d, p, calibration, alt, cap=None, hypothesis_met=True, notes=()):
    s = _series(fn, d, p, cap)
    notes = list(notes)
    if s is None:
        return None
    t, m = s
    err = (calibration or {}).get(name)
    floor = 1e-9
    if err is None:
        notes.append("no oracle calibration: tolerance from derivative noise only")
        err = 0.0
    noise = np.zeros_like(m)
    if alt is not None and name in DERIVATIVE_SERIES:
        for other in ([alt] if isinstance(alt, LevelProfile) else alt):
            sa = _series(fn, other, p, cap)
            if sa is not None and len(sa[1]):
                noise = np.maximum(noise, np.abs(m - np.interp(t, *sa)))
    tol = SAFETY * np.maximum(max(err, floor), noise)
    if not hypothesis_met:
        notes.append("hypothesis of the inequality not met for this configuration; reported only")
    return CheckResult(name, t, m, tol, verdict_of(m, tol), notes, hypothesis_met)


def check_longinetti(profile: LevelProfile, p: float, calibration: Optional[dict] = None,
                     alt=None) -> List[CheckResult]:
    """Area and length forms of the Longinetti convexity plus the integrated length form."""
    p = check_p(p)
    if profile.n < 9:
        raise ResolutionError("need at least 9 levels")
    out = []
    r = _make("longinetti_area", _longinetti_area, profile, p, calibration, alt)
    note = [] if r is not None else ["third derivative unavailable: area form skipped"]
    if r is not None:
        out.append(r)
    for name in ("longinetti_length", "longinetti_length_integrated"):
        out.append(_make(name, RING_SERIES[name], profile, p, calibration, alt, notes=note))
    return out


def check_theorem22(profile: LevelProfile, p: float, inner_is_circle: bool,
                    boundary_gradient_constant: bool, calibration: Optional[dict] = None,
                    alt=None) -> List[CheckResult]:
    """Area inequalities under a circular inner boundary and/or constant outer gradient."""
    p = check_p(p)
    if not (inner_is_circle or boundary_gradient_constant):
        raise PreconditionError("at least one hypothesis flag must be set")
    out = []
    if inner_is_circle:
        kind = profile.meta.get("inner_kind")
        met = kind in (None, "disk")
        notes = [] if met else [f"inner body is a {kind}, not a circle"]
        out.append(_make("circle_inner_area", _circle_inner, profile, p, calibration, alt,
                         hypothesis_met=met, notes=notes))
    if boundary_gradient_constant:
        certified = bool(profile.meta.get("concentric"))
        notes = [] if certified else ["constant outer gradient asserted by caller, not certified"]
        out.append(_make("gradient_constant_area", _gradient_constant, profile, p, calibration,
                         alt, notes=notes))
        # needs the boundary identities at t = 0, i.e. a profile differentiated with cap
        mp = _make("mp_monotone", _mp_monotone, profile, p, calibration, alt, notes=notes)
        if mp is not None:
            out.append(mp)
    return out


def check_isoperimetry(profile: LevelProfile, cap: float, p: float,
                       gradient_constant: Optional[bool] = None,
                       calibration: Optional[dict] = None) -> List[CheckResult]:
    """Capacity isoperimetry, deficit monotonicity, its endpoint form, and per-level isoperimetry.

    The length side, the deficit monotonicity and the endpoint form rest on a
    constant gradient along the outer boundary; they are emitted with
    ``hypothesis_met`` False on rings where that is not known to hold. The
    area side and the per-level isoperimetric inequality hold for every ring.
    """
    p = check_p(p)
    met = bool(profile.meta.get("concentric")) if gradient_constant is None else gradient_constant
    out = [
        _make("capacity_isoperimetry_length", _cap_iso_length, profile, p, calibration, None,
              cap=cap, hypothesis_met=met),
        _make("capacity_isoperimetry_area", _cap_iso_area, profile, p, calibration, None, cap=cap),
        _make("deficit_monotone", _deficit_monotone, profile, p, calibration, None,
              hypothesis_met=met),
        _make("deficit_endpoint", _deficit_endpoint, profile, p, calibration, None,
              hypothesis_met=met),
        _make("isoperimetric_levels", _isoperimetric, profile, p, calibration, None),
    ]
    c_p = capacity_isoperimetry_terms(profile, cap, p)["c_p"]
    out[0].notes.append(f"c_p = {c_p:.8g}")
    return out


def check_green(profile: LevelProfile, p: float, calibration: Optional[dict] = None,
                alt=None) -> List[CheckResult]:
    """Longinetti forms, area inequalities, Hoelder step and level bounds for a Green profile."""
    p = check_p(p)
    out = []
    for name, fn in GREEN_SERIES.items():
        r = _make(name, fn, profile, p, calibration, alt)
        if r is not None:
            out.append(r)
    return out


# -- pipelines ----------------------------------------------------------------

@dataclass(frozen=True)
class RingPipeline:
    n_phi: int = 256
    n_s: int = 64
    grading: object = "geometric"
    n_t: int = 21
    method: str = "smoothing_spline"
    companion: bool = True  # also solve on a half-resolution mesh to size the tolerance

    def to_json(self) -> dict:
        return {"n_phi": self.n_phi, "n_s": self.n_s, "grading": self.grading,
                "n_t": self.n_t, "method": self.method, "companion": self.companion}

    def coarse(self) -> "RingPipeline":
        return replace(self, n_phi=self.n_phi // 2, n_s=self.n_s // 2, companion=False)


@dataclass
class RingAnalysis:
    ring: RingDomain
    p: float
    pipeline: RingPipeline
    report: CapacityReport
    profile: LevelProfile
    companions: List[LevelProfile]
    checks: List[CheckResult] = field(default_factory=list)
    calibration: Dict[str, float] = field(default_factory=dict)

    @property
    def failures(self) -> List[CheckResult]:
        return [c for c in self.checks if c.verdict == FAIL and c.counts]


def solve_ring(ring: RingDomain, p: float, pipe: RingPipeline):
    """Mesh, potential, capacity report, profile and its companion estimates.

    Companions are the same profile differentiated by the other method and,
    if the pipeline asks for it, the profile from a half-resolution mesh.
    """
    mesh = build_ring_mesh(ring, pipe.n_phi, pipe.n_s, pipe.grading)
    u = solve_potential(mesh, SolveParams(p))
    rep = capacity(mesh, u, p)
    prof = sweep_levels(mesh, u, pipe.n_t)
    prof.meta["inner_kind"] = ring.inner.kind
    d = profile_derivatives(prof, pipe.method, cap=rep.cap_energy)
    companions = [profile_derivatives(prof, OTHER_METHOD[pipe.method], cap=rep.cap_energy)]
    if pipe.companion:
        companions.append(solve_ring(ring, p, pipe.coarse())[3])
    return mesh, u, rep, d, companions


def matched_annulus(ring: RingDomain) -> RingDomain:
    r = math.sqrt(ring.inner.area() / math.pi)
    R = math.sqrt(ring.outer.area() / math.pi)
    return RingDomain(ConvexBody.disk(r), ConvexBody.disk(R))


def _ring_checks(d, alt, rep, p, ring, calibration):
    inner_circle = ring.inner.kind == "disk"
    concentric = ring.is_concentric_annulus
    checks = check_longinetti(d, p, calibration, alt)
    if inner_circle or concentric:
        checks += check_theorem22(d, p, inner_circle, concentric, calibration, alt)
    checks += check_isoperimetry(d, rep.cap_energy, p, None, calibration)
    return checks


@lru_cache(maxsize=64)
def _calibrate_cached(r: float, R: float, p: float, pipe: RingPipeline) -> tuple:
    ring = RingDomain(ConvexBody.disk(r), ConvexBody.disk(R))
    _, _, rep, d, _ = solve_ring(ring, p, replace(pipe, companion=False))
    checks = check_longinetti(d, p, {}, None)
    checks += check_theorem22(d, p, True, True, {}, None)
    checks += check_isoperimetry(d, rep.cap_energy, p, True, {})
    return tuple((c.name, float(np.max(np.abs(c.margins))) if len(c.margins) else 0.0)
                 for c in checks)


def calibrate_ring(ring: RingDomain, p: float, pipe: RingPipeline) -> Dict[str, float]:
    """Largest |margin| of every ring check on the matched annulus (exact margins are 0)."""
    m = matched_annulus(ring)
    key = (round(m.inner.r, 6), round(m.outer.r, 6))
    return dict(_calibrate_cached(key[0], key[1], float(p), pipe))


def analyze_ring(ring: RingDomain, p: float, pipe: RingPipeline = RingPipeline(),
                 calibrate: bool = True) -> RingAnalysis:
    p = check_p(p)
    _, _, rep, d, alt = solve_ring(ring, p, pipe)
    cal = calibrate_ring(ring, p, pipe) if calibrate else {}
    checks = _ring_checks(d, alt, rep, p, ring, cal)
    return RingAnalysis(ring, p, pipe, rep, d, alt, checks, cal)


@dataclass
class GreenAnalysis:
    domain: ConvexBody
    p: float
    profile: LevelProfile
    companions: List[LevelProfile]
    checks: List[CheckResult]
    calibration: Dict[str, float]

    @property
    def failures(self) -> List[CheckResult]:
        return [c for c in self.checks if c.verdict == FAIL and c.counts]


def _green_profiles(domain, params: GreenParams, companion: bool = True):
    d = green_level_profile(domain, params)
    companions = [profile_derivatives(d, OTHER_METHOD[params.derivative_method])]
    if companion:
        coarse = replace(params, n_phi=params.n_phi // 2, n_s=params.n_s // 2)
        companions.append(green_level_profile(domain, coarse))
    return d, companions


def calibrate_green(domain: ConvexBody, params: GreenParams) -> Dict[str, float]:
    """Largest |margin| of every Green check on the centred disk of equal area."""
    R = math.sqrt(domain.area() / math.pi)
    clearance = domain.inradius_about(np.asarray(params.pole))
    delta = params.resolved_profile_delta(domain) * R / clearance
    disk = ConvexBody.disk(R)
    pp = GreenParams(**{**params.__dict__, "pole": (0.0, 0.0), "profile_delta": delta,
                        "delta_seq": None})
    d = green_level_profile(disk, pp)
    return {c.name: float(np.max(np.abs(c.margins))) if len(c.margins) else 0.0
            for c in check_green(d, params.p, {}, None)}


def analyze_green(domain: ConvexBody, params: GreenParams, calibrate: bool = True,
                  companion: bool = True) -> GreenAnalysis:
    d, comp = _green_profiles(domain, params, companion)
    cal = calibrate_green(domain, params) if calibrate else {}
    return GreenAnalysis(domain, params.p, d, comp, check_green(d, params.p, cal, comp), cal)


def write_checks_csv(path, checks: Sequence[CheckResult], label="") -> None:
    """Verification CSV: one row per (check, level). ``label`` is one string or one per check."""
    labels = [label] * len(checks) if isinstance(label, str) else list(label)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["config", "name", "t", "margin", "tol", "verdict", "hypothesis_met"])
        for label, c in zip(labels, checks):
            for t, m, tl in zip(c.t_values, c.margins, np.broadcast_to(c.tol, c.margins.shape)):
                w.writerow([label, c.name, f"{t:.12g}", f"{m:.12g}", f"{tl:.12g}", c.verdict,
                            int(c.hypothesis_met)])


def random_ring(rng: np.random.Generator, n_outer=(5, 10), n_inner=(4, 8)) -> RingDomain:
    """Random convex polygon pair: hulls of jittered circle points, inner shrunk to 0.4 of the room."""
    def blob(k):
        th = np.sort(rng.uniform(0, 2 * np.pi, k))
        rad = rng.uniform(0.7, 1.0, k)
        return np.stack([rad * np.cos(th), rad * np.sin(th)], -1)

    from .convexgeom import polygon_geometry

    while True:
        outer, _, _ = polygon_geometry(blob(int(rng.integers(n_outer[0], n_outer[1] + 1))))
        c = outer.center_array
        room = outer.inradius_about(c)
        if room > 0.3:
            break
    pts = blob(int(rng.integers(n_inner[0], n_inner[1] + 1)))
    inner0, _, _ = polygon_geometry(pts)
    ci = inner0.center_array
    scale = 0.4 * room / inner0.circumradius(ci)
    inner = ConvexBody.polygon((inner0.vertex_array - ci) * scale + c)
    return RingDomain(inner, outer, ref=tuple(c))


def random_rings(n: int, seed: int) -> List[RingDomain]:
    rng = np.random.default_rng(seed)
    return [random_ring(rng) for _ in range(n)]


def summary_json(analyses, extra: Optional[dict] = None) -> str:
    items = []
    for a in analyses:
        items.append({"p": a.p, "checks": [c.to_json() for c in a.checks]})
    out = {"n_configs": len(items), "n_fail": sum(len(a.failures) for a in analyses),
           "configs": items}
    if extra:
        out.update(extra)
    return json.dumps(out, indent=2, sort_keys=True)
