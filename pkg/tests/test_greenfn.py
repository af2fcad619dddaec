import math
from functools import lru_cache

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ringcap.contour import single_loop
from ringcap.convexgeom import ConvexBody, polygon_area_length
from ringcap.errors import DomainError
from ringcap.greenfn import (GreenParams, gamma_p, green_approx, green_profile_bounds,
                             green_report, k_p, k_p_inverse, p_harmonic_radius, robin_tau)
from ringcap.oracle import disk_green, disk_green_profile
from ringcap.plaplace import interpolate

FOUR_PI2 = 4 * math.pi**2


def test_k_p_examples():
    assert k_p(1.0, 2.0) == 0.0
    assert k_p(1.0, 1.5) == pytest.approx(1 / FOUR_PI2, rel=1e-12)
    assert k_p(math.exp(-2 * math.pi), 2.0) == pytest.approx(1.0, rel=1e-12)
    assert k_p_inverse(0.0, 2.0) == 1.0
    assert k_p_inverse(1 / FOUR_PI2, 1.5) == pytest.approx(1.0, rel=1e-12)
    with pytest.raises(DomainError):
        k_p(0.0, 1.5)
    with pytest.raises(DomainError):
        k_p_inverse(-1.0, 1.5)


@settings(max_examples=60, deadline=None)
@given(st.floats(1e-3, 1e3), st.floats(1.05, 2.0))
def test_k_p_roundtrip(r, p):
    assert k_p_inverse(k_p(r, p), p) == pytest.approx(r, rel=1e-12)


def test_p_harmonic_radius_examples():
    assert p_harmonic_radius(0.0, 2.0) == 1.0
    assert p_harmonic_radius(1 / FOUR_PI2, 1.5) == pytest.approx(1.0)
    assert p_harmonic_radius(-math.log(2) / (2 * math.pi), 2.0) == pytest.approx(2.0)


def test_profile_bound_examples():
    assert green_profile_bounds(math.pi, 2 * math.pi, 2.0, 0.0)[0] == pytest.approx(math.pi)
    assert green_profile_bounds(math.pi, 2 * math.pi, 1.5, 1 / FOUR_PI2)[0] == pytest.approx(math.pi / 4)
    # 2 pi exp(-0.2 pi) = 3.35200
    assert green_profile_bounds(math.pi, 2 * math.pi, 2.0, 0.1)[1] == pytest.approx(3.35200, rel=1e-5)
    with pytest.raises(DomainError):
        green_profile_bounds(0.0, 1.0, 2.0, 0.1)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.2, 5.0), st.floats(1.05, 2.0), st.floats(0.0, 0.5))
def test_profile_bounds_tight_on_disks(R, p, t):
    ex = disk_green_profile(np.array([0.0, t]), R, p)
    A, L = green_profile_bounds(ex.A[0], ex.L[0], p, t)
    assert A == pytest.approx(ex.A[1], rel=1e-10)
    assert L == pytest.approx(ex.L[1], rel=1e-10)


@pytest.mark.parametrize("p,expected", [(2.0, math.log(2) / (2 * math.pi)), (1.5, 1 / FOUR_PI2)])
def test_green_approx_examples(p, expected):
    g = green_approx(ConvexBody.disk(1.0), GreenParams((0.0, 0.0), p), 1e-3)
    ang = np.linspace(0, 2 * np.pi, 5, endpoint=False)
    vals = interpolate(g.mesh, g.values, 0.5 * np.stack([np.cos(ang), np.sin(ang)], -1))
    assert np.allclose(vals, expected, rtol=2e-2)


def test_green_approx_sandwich():
    dom = ConvexBody.ellipse(1.5, 1.0)
    pts = np.array([[0.6, 0.0], [0.0, 0.5], [-0.9, 0.3], [1.0, -0.2]])
    vals = [interpolate(*(lambda g: (g.mesh, g.values))(
        green_approx(dom, GreenParams((0.0, 0.0), 1.5, n_phi=128, n_s=48), d)), pts)
        for d in (0.24, 0.12, 0.06, 0.03)]
    gaps = [np.max(np.abs(b - a)) for a, b in zip(vals, vals[1:])]
    assert gaps[-1] < gaps[0]
    assert max(gaps) < 2e-3 * np.max(vals[-1])


def test_pole_outside_and_large_delta():
    with pytest.raises(DomainError):
        green_approx(ConvexBody.disk(1.0), GreenParams((2.0, 0.0), 2.0), 0.01)
    with pytest.raises(DomainError):
        green_approx(ConvexBody.disk(1.0), GreenParams((0.0, 0.0), 2.0), 1.0)
    with pytest.raises(DomainError):
        GreenParams((0.0, 0.0), 2.0, delta_seq=[0.01, 0.1])
    with pytest.raises(DomainError):
        robin_tau(ConvexBody.disk(1.0), GreenParams((0.0, 0.0), 2.0, delta_seq=[0.3, 0.1]))


@lru_cache(maxsize=None)
def report(R, p):
    return green_report(ConvexBody.disk(R), GreenParams((0.0, 0.0), p))


@pytest.mark.parametrize("R,p,tol", [(1.0, 2.0, 1e-2), (2.0, 2.0, 1e-2), (1.0, 1.5, None)])
def test_robin_examples(R, p, tol):
    rep = report(R, p)
    exact = k_p(R, p)
    if tol is None:
        assert rep.tau_p == pytest.approx(exact, rel=5e-2)
    else:
        assert abs(rep.tau_p - exact) < tol
    assert rep.rho_p == pytest.approx(R, rel=2e-2)
    assert not rep.robin.warnings


@pytest.mark.parametrize("p", [2.0, 1.5])
def test_green_profile_against_closed_form(p):
    rep = report(1.0, p)
    prof = rep.profile
    assert prof.t[0] == 0.0
    assert prof.A[0] == pytest.approx(math.pi, rel=1e-3)
    assert prof.L[0] == pytest.approx(2 * math.pi, rel=1e-3)
    ex = disk_green_profile(prof.t, 1.0, p)
    assert np.allclose(prof.A, ex.A, rtol=2e-2)
    t_star = 0.1 if p == 2.0 else 1 / FOUR_PI2
    want = math.pi * math.exp(-0.4 * math.pi) if p == 2.0 else math.pi / 4
    A_star, _ = polygon_area_length(single_loop(rep.g_field.mesh, rep.g_field.values, t_star).points)
    assert A_star == pytest.approx(want, rel=2e-2)
    bound = green_profile_bounds(prof.A[0], prof.L[0], p, prof.t)[0]
    assert np.all(prof.A <= bound * 1.02)


@pytest.mark.parametrize("p", [2.0, 1.5])
def test_gamma_slope_on_disks(p):
    rep = report(1.0, p)
    assert rep.gamma_check["gamma_p"] == gamma_p(p)
    assert rep.gamma_check["rel_dev"] < 5e-2


def test_disk_green_tau_is_k_p():
    # the k_p(s) part cancels: g + k_p(R) - k_p(s) vanishes identically
    for p in (1.3, 1.5, 2.0):
        s = np.geomspace(1e-6, 0.9, 7)
        diff = disk_green(s, 1.7, p) - k_p(s, p) + k_p(1.7, p)
        assert np.all(np.abs(diff) <= 1e-12 * (1 + np.abs(k_p(s, p))))
