import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import annulus_profile_num, solved, solved_ring
from ringcap.contour import level_segments
from ringcap.errors import DomainError, ResolutionError
from ringcap.levelflow import (LevelProfile, extract_level, profile_derivatives,
                               rescale_levels, sweep_levels, transform_exponents)
from ringcap.oracle import RadialConfig, annulus_profile
from ringcap.ringmesh import TriMesh


def test_extract_level_example():
    mesh, u, _ = solved(1.0, math.e, 2.0)
    c = extract_level(mesh, u, 0.5)
    assert c.L == pytest.approx(2 * math.pi * math.exp(0.5), rel=1e-2)
    assert c.A == pytest.approx(math.pi * math.e, rel=1e-2)
    for t in (0.0, 1.0, -0.1):
        with pytest.raises(DomainError):
            extract_level(mesh, u, t)


def test_level_segments_single_triangle():
    mesh = TriMesh(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]), np.array([[0, 1, 2]]),
                   np.zeros(3, dtype=int))
    seg = level_segments(mesh, np.array([0.0, 0.0, 1.0]), 0.5)
    assert seg.shape == (1, 2, 2)
    assert sorted(map(tuple, seg[0])) == [(0.0, 0.5), (0.5, 0.5)]
    assert level_segments(mesh, np.array([0.0, 0.0, 1.0]), 2.0).shape == (0, 2, 2)


def test_sweep_example_and_length_slope():
    mesh, u, _ = solved(1.0, math.e, 2.0)
    prof = sweep_levels(mesh, u, 9)
    i = np.argmin(np.abs(prof.t - 0.5))
    assert prof.A[i] == pytest.approx(math.pi * math.e, rel=1e-2)
    d = profile_derivatives(prof)
    ratio = (d.dL / d.L)[d.interior()]
    assert np.allclose(ratio, -1.0, atol=2e-2)


@pytest.mark.parametrize("r,R,p", [(1.0, math.e, 2.0), (1.0, 4.0, 1.5)])
def test_profile_matches_oracle(r, R, p):
    d = annulus_profile_num(r, R, p)
    ex = annulus_profile(RadialConfig(r, R, p), d.t)
    assert np.allclose(d.A, ex.A, rtol=1e-2)
    assert np.allclose(d.L, ex.L, rtol=1e-2)
    m = d.interior()
    assert np.allclose(d.dA[m], ex.dA[m], rtol=3e-2)
    assert np.allclose(d.d2A[m], ex.d2A[m], rtol=5e-2)


def test_longinetti_identity_on_annulus():
    d = annulus_profile_num(1.0, 4.0, 1.5)
    p = 1.5
    lhs = d.dA * d.d3A
    rhs = (2.0 / p) * d.d2A**2
    ok = np.isfinite(lhs)
    assert ok.sum() >= 10
    assert np.allclose(lhs[ok], rhs[ok], rtol=0.1)


def _profile(t, A, L, p=2.0):
    return LevelProfile(np.asarray(t), np.asarray(A), np.asarray(L), p=p)


@pytest.mark.parametrize("method", ["finite_diff", "smoothing_spline"])
def test_constant_profile_has_zero_derivatives(method):
    t = np.linspace(0, 1, 13)
    d = profile_derivatives(_profile(t, np.full(13, 3.0), np.full(13, 7.0)), method)
    for v in (d.dA, d.d2A, d.d3A, d.dL, d.d2L):
        assert np.nanmax(np.abs(v)) < 1e-8


def test_exact_profile_derivatives_recovered():
    # an exact annulus profile is affine after the transform, so both methods are exact
    cfg = RadialConfig(1.0, 3.0, 1.6)
    t = np.linspace(0, 1, 23)
    ex = annulus_profile(cfg, t)
    for method in ("finite_diff", "smoothing_spline"):
        d = profile_derivatives(_profile(t, ex.A, ex.L, 1.6), method)
        assert np.allclose(d.dA, ex.dA, rtol=1e-5)
        assert np.allclose(d.d2L, ex.d2L, rtol=1e-4)
        ok = np.isfinite(d.d3A)
        assert np.allclose(d.d3A[ok], ex.d3A[ok], rtol=1e-3)


def test_resolution_and_grid_errors():
    t = np.linspace(0, 1, 8)
    with pytest.raises(ResolutionError):
        profile_derivatives(_profile(t, np.ones(8), np.ones(8)))
    mesh, u, _ = solved(1.0, math.e, 2.0)
    with pytest.raises(ResolutionError):
        sweep_levels(mesh, u, 7)
    t = np.sort(np.r_[np.linspace(0, 1, 11), 0.05])
    with pytest.raises(DomainError):
        profile_derivatives(_profile(t, np.ones(12), np.ones(12)))


@pytest.mark.parametrize("name", ["disk_ellipse", "disk_square"])
def test_level_isoperimetry(name):
    mesh, u, _ = solved_ring(name, 2.0, 128, 32)
    prof = sweep_levels(mesh, u, 21)
    assert np.all(4 * np.pi * prof.A <= prof.L**2 * (1 + 1e-6))
    assert np.all(np.diff(prof.A) < 0)


@pytest.mark.parametrize("r,R,p", [(1.0, math.e, 2.0), (1.0, 4.0, 1.5), (1.0, 2.0, 1.8)])
def test_hull_rarely_changes_annulus_levels(r, R, p):
    mesh, u, _ = solved(r, R, p, 128, 32, 1.0)
    assert np.mean(sweep_levels(mesh, u, 21).hull_flags[1:-1]) <= 0.05


def test_area_error_decreases_under_refinement():
    cfg = RadialConfig(1.0, 4.0, 1.5)
    errs = []
    for n_phi, n_s in ((64, 16), (128, 32), (256, 64)):
        mesh, u, _ = solved(1.0, 4.0, 1.5, n_phi, n_s)
        prof = sweep_levels(mesh, u, 9)
        errs.append(np.max(np.abs(prof.A / annulus_profile(cfg, prof.t).A - 1)))
    assert errs[0] > errs[1] > errs[2]


@pytest.mark.parametrize("r,R,p", [(1.0, math.e, 2.0), (1.0, 4.0, 1.5), (1.0, 2.0, 1.8)])
def test_flux_constant_in_t(r, R, p):
    mesh, u, rep = solved(r, R, p)
    flux = sweep_levels(mesh, u, 21).meta["flux"]
    assert np.ptp(flux) / np.mean(flux) < 2e-2
    assert np.mean(flux) == pytest.approx(rep.cap_energy, rel=2e-2)


@settings(max_examples=30, deadline=None)
@given(st.floats(1.05, 1.95), st.floats(0.2, 5.0))
def test_transform_makes_annulus_affine(p, factor):
    qA, qL = transform_exponents(p)
    cfg = RadialConfig(1.0, 2.5, p)
    t = np.linspace(0, 1, 11)
    ex = annulus_profile(cfg, t)
    y = ex.A**qA
    assert np.allclose(np.diff(y, 2), 0, atol=1e-9 * np.abs(y).max())
    # rescaling the levels rescales the derivatives by powers of the factor
    d = profile_derivatives(_profile(t, ex.A, ex.L, p), "finite_diff")
    s = rescale_levels(d, factor)
    assert np.allclose(s.d2A, d.d2A / factor**2)
