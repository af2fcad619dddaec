import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ringcap.errors import DomainError
from ringcap.oracle import (RadialConfig, annulus_capacity, annulus_flux, annulus_level_radius,
                            annulus_potential, annulus_profile, disk_green, disk_green_profile)
from ringcap.greenfn import k_p, pcap_disk_plane

TWO_PI = 2 * math.pi


def test_annulus_capacity_examples():
    assert annulus_capacity(RadialConfig(1, math.e, 2)) == pytest.approx(TWO_PI, rel=1e-14)
    assert annulus_capacity(RadialConfig(1, 4, 1.5)) == pytest.approx(4 * math.pi / math.sqrt(3), rel=1e-14)


def test_annulus_capacity_limit_matches_plane_disk():
    big = annulus_capacity(RadialConfig(1, 1e12, 1.5))
    assert big == pytest.approx(pcap_disk_plane(1.0, 1.5), rel=1e-5)


def test_annulus_rejects_bad_radii():
    with pytest.raises(DomainError):
        RadialConfig(2, 1, 2)
    with pytest.raises(DomainError):
        RadialConfig(1, 2, 2.5)


def test_annulus_potential_examples():
    cfg = RadialConfig(1, 4, 1.5)
    assert annulus_potential(1.0, cfg) == pytest.approx(1.0)
    assert annulus_potential(4.0, cfg) == pytest.approx(0.0, abs=1e-15)
    assert annulus_potential(2.0, cfg) == pytest.approx(1 / 3, rel=1e-14)
    assert annulus_potential(2.0, RadialConfig(1, math.e, 2)) == pytest.approx(1 - math.log(2), rel=1e-14)
    with pytest.raises(DomainError):
        annulus_potential(5.0, cfg)


def test_annulus_profile_examples():
    e = annulus_profile(RadialConfig(1, math.e, 2), [0.5])
    assert e.A[0] == pytest.approx(math.pi * math.e, rel=1e-14)
    e = annulus_profile(RadialConfig(1, 4, 1.5), [1 / 3])
    assert e.radius[0] == pytest.approx(2.0, rel=1e-12)
    assert e.A[0] == pytest.approx(4 * math.pi, rel=1e-12)
    assert e.L[0] == pytest.approx(4 * math.pi, rel=1e-12)


def test_disk_green_examples():
    assert disk_green(1.0, 1.0, 2) == pytest.approx(0.0, abs=1e-15)
    assert disk_green(0.5, 1.0, 2) == pytest.approx(math.log(2) / TWO_PI, rel=1e-14)
    assert disk_green(0.5, 1.0, 1.5) == pytest.approx(1 / (4 * math.pi**2), rel=1e-14)
    with pytest.raises(DomainError):
        disk_green(0.0, 1.0, 2)
    with pytest.raises(DomainError):
        disk_green(1.5, 1.0, 2)


def _ps():
    return st.sampled_from([1.2, 1.5, 1.8, 2.0])


@settings(max_examples=60, deadline=None)
@given(r=st.floats(0.1, 2.0), ratio=st.floats(1.2, 20.0), p=_ps(), frac=st.floats(0.0, 1.0))
def test_capacity_equals_flux_of_potential(r, ratio, p, frac):
    cfg = RadialConfig(r, r * ratio, p)
    s = r + frac * (cfg.R - r)
    assert annulus_flux(s, cfg) == pytest.approx(annulus_capacity(cfg), rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(r=st.floats(0.1, 2.0), ratio=st.floats(1.2, 20.0), p=_ps(),
       t=st.floats(0.01, 0.99))
def test_level_radius_inverts_potential(r, ratio, p, t):
    cfg = RadialConfig(r, r * ratio, p)
    s = annulus_level_radius(t, cfg)
    assert annulus_potential(s, cfg) == pytest.approx(t, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(r=st.floats(0.2, 2.0), ratio=st.floats(1.5, 10.0), p=_ps())
def test_exact_profile_derivatives_match_differences(r, ratio, p):
    # independent check of the closed-form t-derivatives by central differences
    cfg = RadialConfig(r, r * ratio, p)
    t, h = 0.4, 1e-4
    e = annulus_profile(cfg, [t - 2 * h, t - h, t, t + h, t + 2 * h])
    A = e.A
    assert (A[3] - A[1]) / (2 * h) == pytest.approx(e.dA[2], rel=1e-6)
    assert (A[3] - 2 * A[2] + A[1]) / h**2 == pytest.approx(e.d2A[2], rel=1e-4)
    d3 = (A[4] - 2 * A[3] + 2 * A[1] - A[0]) / (2 * h**3)
    assert d3 == pytest.approx(e.d3A[2], rel=1e-2)


@settings(max_examples=40, deadline=None)
@given(r=st.floats(0.2, 2.0), ratio=st.floats(1.5, 10.0), p=_ps(),
       t=st.floats(0.05, 0.95))
def test_exact_profile_has_zero_longinetti_margin(r, ratio, p, t):
    e = annulus_profile(RadialConfig(r, r * ratio, p), [t])
    lhs = e.dA[0] * e.d3A[0]
    rhs = (2 / p) * e.d2A[0] ** 2
    assert abs(lhs - rhs) <= 1e-10 * (abs(lhs) + abs(rhs))
    # length form: s s'' = s'^2 / (p - 1) for the radial level radius
    lhs = e.L[0] * e.d2L[0]
    rhs = (1 / (p - 1)) * e.dL[0] ** 2
    assert abs(lhs - rhs) <= 1e-10 * (abs(lhs) + abs(rhs))


@settings(max_examples=40, deadline=None)
@given(R=st.floats(0.3, 5.0), p=_ps(), frac=st.floats(0.01, 0.99))
def test_disk_green_robin_constant(R, p, frac):
    # k_p(s) - g(s) does not depend on s, so the Robin constant of the centred disk is k_p(R)
    s = frac * R
    assert k_p(s, p) - disk_green(s, R, p) == pytest.approx(k_p(R, p), abs=1e-12 * (1 + abs(k_p(s, p))))


def test_disk_green_profile_area():
    e = disk_green_profile([0.1], 1.0, 2.0)
    assert e.A[0] == pytest.approx(math.pi * math.exp(-0.4 * math.pi), rel=1e-12)
    e = disk_green_profile([1 / (4 * math.pi**2)], 1.0, 1.5)
    assert e.A[0] == pytest.approx(math.pi / 4, rel=1e-12)
