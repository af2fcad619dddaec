import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays
from scipy.integrate import quad

from ringcap.convexgeom import (ConvexBody, area_length_from_support, convex_hull,
                                isoperimetric_deficit, polygon_geometry, support_eval,
                                support_samples)
from ringcap.errors import DegenerateInputError, DomainError, ResolutionError


def ellipse_perimeter(a, b):
    # independent dense quadrature of the arc-length integral
    return quad(lambda s: math.hypot(a * math.sin(s), b * math.cos(s)), 0, 2 * math.pi,
                epsabs=1e-13, epsrel=1e-13, limit=200)[0]


def test_support_eval_examples():
    assert support_eval(ConvexBody.disk(1.0), 1.0) == pytest.approx((1.0, 0.0, 1.0))
    h, _, _ = support_eval(ConvexBody.square(1.0), math.pi / 4)
    assert h == pytest.approx(math.sqrt(2))
    h, hp, _ = support_eval(ConvexBody.ellipse(2.0, 1.0), 0.0)
    assert (h, hp) == pytest.approx((2.0, 0.0))


def test_support_eval_rejects_exterior_ref():
    with pytest.raises(DomainError):
        support_eval(ConvexBody.disk(1.0), 0.0, ref=(2.0, 0.0))


def test_area_length_examples():
    for r in (1.0, 2.0):
        A, L = area_length_from_support(support_samples(ConvexBody.disk(r), 64))
        assert A == pytest.approx(math.pi * r * r, rel=1e-10)
        assert L == pytest.approx(2 * math.pi * r, rel=1e-10)
    A, L = area_length_from_support(support_samples(ConvexBody.ellipse(2.0, 1.0), 256))
    assert A == pytest.approx(2 * math.pi, rel=1e-10)
    assert L == pytest.approx(ellipse_perimeter(2, 1), rel=1e-10)
    assert L == pytest.approx(9.68845, abs=1e-5)


def test_area_length_polygon_support():
    A, L = area_length_from_support(support_samples(ConvexBody.square(1.0), 256))
    assert A == pytest.approx(4.0, rel=1e-3)
    assert L == pytest.approx(8.0, rel=1e-3)


def test_too_few_samples():
    with pytest.raises(ResolutionError):
        area_length_from_support(support_samples(ConvexBody.disk(1.0), 4))


def test_polygon_geometry_examples():
    _, A, L = polygon_geometry([(-1, -1), (1, -1), (1, 1), (-1, 1)])
    assert (A, L) == pytest.approx((4.0, 8.0))
    _, A, L = polygon_geometry([(0, 0), (1, 0), (0, 1)])
    assert (A, L) == pytest.approx((0.5, 2 + math.sqrt(2)))
    body, _, _ = polygon_geometry([(-1, -1), (1, -1), (1, 1), (-1, 1), (0, 0)])
    assert len(body.vertices) == 4
    with pytest.raises(DegenerateInputError):
        polygon_geometry([(0, 0), (1, 1), (2, 2), (3, 3)])


def test_isoperimetric_deficit_examples():
    assert isoperimetric_deficit(math.pi, 2 * math.pi) == pytest.approx(0.0, abs=1e-12)
    assert isoperimetric_deficit(4.0, 8.0) == pytest.approx(64 - 16 * math.pi)
    A, L = area_length_from_support(support_samples(ConvexBody.ellipse(2.0, 1.0), 256))
    # L^2 - 8 pi^2 with L = 9.68845 is 14.909
    assert isoperimetric_deficit(A, L) == pytest.approx(ellipse_perimeter(2, 1) ** 2 - 8 * math.pi**2, rel=1e-9)
    assert isoperimetric_deficit(A, L) == pytest.approx(14.909, abs=1e-3)
    with pytest.raises(DomainError):
        isoperimetric_deficit(0.0, 1.0)


def test_json_roundtrip_and_unknown_fields():
    for b in (ConvexBody.disk(1.5, (0.1, 0.2)), ConvexBody.ellipse(2, 1, 0.3), ConvexBody.square(1.0)):
        assert ConvexBody.from_json(b.to_json()) == b
    with pytest.raises(DomainError):
        ConvexBody.from_json({"kind": "disk", "r": 1, "colour": "red"})


clouds = arrays(np.float64, st.tuples(st.integers(5, 40), st.just(2)),
                elements=st.floats(-10, 10, allow_nan=False, width=64))


def _nondegenerate(pts):
    try:
        return polygon_geometry(pts)
    except DegenerateInputError:
        return None


@settings(max_examples=100, deadline=None)
@given(pts=clouds, theta=st.floats(0, 2 * math.pi))
def test_polygon_support_is_max_vertex_dot(pts, theta):
    g = _nondegenerate(pts)
    if g is None:
        return
    body = g[0]
    v = body.vertex_array
    ref = v.mean(axis=0)
    h, _, _ = support_eval(body, theta, ref)
    brute = np.max((v - ref) @ np.array([math.cos(theta), math.sin(theta)]))
    assert h == pytest.approx(brute, abs=1e-9 * (1 + abs(brute)))


@settings(max_examples=100, deadline=None)
@given(pts=clouds)
def test_hull_is_idempotent(pts):
    g = _nondegenerate(pts)
    if g is None:
        return
    body, A, L = g
    body2, A2, L2 = polygon_geometry(body.vertex_array)
    assert np.allclose(body2.vertex_array, body.vertex_array)
    assert (A2, L2) == pytest.approx((A, L))


def test_deficit_nonnegative_on_random_hulls(rng):
    n = 0
    while n < 1000:
        pts = rng.normal(size=(int(rng.integers(3, 30)), 2)) * rng.uniform(0.1, 10)
        try:
            _, A, L = polygon_geometry(pts)
        except DegenerateInputError:
            continue
        assert isoperimetric_deficit(A, L) >= 0
        n += 1


def test_convex_hull_indices():
    pts = np.array([[0, 0], [2, 0], [1, 0.5], [2, 2], [0, 2]], float)
    v, idx = convex_hull(pts, return_index=True)
    assert np.allclose(pts[idx], v)
    assert 2 not in idx


@settings(max_examples=50, deadline=None)
@given(a=st.floats(0.2, 5), b=st.floats(0.2, 5), rot=st.floats(0, math.pi),
       ang=st.floats(0, 2 * math.pi), s=st.floats(0.2, 3))
def test_rigid_motion_and_scaling(a, b, rot, ang, s):
    e = ConvexBody.ellipse(a, b, rot)
    t = e.transformed(ang, (1.0, -2.0), s)
    assert t.area() == pytest.approx(s * s * e.area(), rel=1e-9)
    assert t.perimeter() == pytest.approx(s * e.perimeter(), rel=1e-9)
