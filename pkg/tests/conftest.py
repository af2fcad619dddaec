import math
from functools import lru_cache

import numpy as np
import pytest

from ringcap.convexgeom import ConvexBody
from ringcap.levelflow import profile_derivatives, sweep_levels
from ringcap.plaplace import SolveParams, capacity, solve_potential
from ringcap.ringmesh import RingDomain, build_ring_mesh

# (r, R, p) annuli used across the suite
ANNULI = [(1.0, math.e, 2.0), (1.0, 4.0, 1.5), (1.0, 2.0, 1.8)]


def annulus(r, R):
    return RingDomain(ConvexBody.disk(r), ConvexBody.disk(R))


@lru_cache(maxsize=None)
def solved(r, R, p, n_phi=256, n_s=64, grading="geometric"):
    """(mesh, field, report) for a concentric annulus, cached across tests."""
    mesh = build_ring_mesh(annulus(r, R), n_phi, n_s, grading)
    u = solve_potential(mesh, SolveParams(p))
    return mesh, u, capacity(mesh, u, p)


@lru_cache(maxsize=None)
def solved_ring(name, p, n_phi=256, n_s=64):
    ring = named_ring(name)
    mesh = build_ring_mesh(ring, n_phi, n_s, "geometric")
    u = solve_potential(mesh, SolveParams(p))
    return mesh, u, capacity(mesh, u, p)


def named_ring(name):
    return {
        "disk_ellipse": RingDomain(ConvexBody.disk(0.5), ConvexBody.ellipse(2.0, 1.2)),
        "disk_square": RingDomain(ConvexBody.disk(0.5), ConvexBody.square(2.0)),
    }[name]


@lru_cache(maxsize=None)
def annulus_profile_num(r, R, p, n_t=21, method="smoothing_spline"):
    mesh, u, rep = solved(r, R, p)
    prof = sweep_levels(mesh, u, n_t)
    return profile_derivatives(prof, method, cap=rep.cap_energy)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance bookkeeping: criterion -> list of (part, ok, detail)
ACCEPTANCE = {}


def record(criterion, part, ok, detail=""):
    ACCEPTANCE.setdefault(criterion, []).append((part, bool(ok), detail))
    return bool(ok)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for crit in range(1, 12):
        parts = ACCEPTANCE.get(crit)
        if not parts:
            tr.write_line(f"criterion {crit:2d}: FAIL  (not run or aborted)")
            continue
        bad = [f"{p}: {d}" for p, ok, d in parts if not ok]
        status = "PASS" if not bad else "FAIL"
        tr.write_line(f"criterion {crit:2d}: {status}  ({len(parts) - len(bad)}/{len(parts)} parts)")
        for b in bad:
            tr.write_line(f"    failed part  {b}")
