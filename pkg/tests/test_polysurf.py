import math

import numpy as np
import pytest

from kblab.checks import random_poly_through
from kblab.polysurf import (Cube, PolyError, PolyNVars, PolynomialMixture, ProductPoly, bezout_area_check,
                            bisection_area_check, build_p0, crofton_lines, crofton_root_oracle, directional_area,
                            ellipse_bisection_check, mesh_zero_set, mixture_normal_measure, normal_measure,
                            p0_offsets, poly_from_json)

Q2 = Cube.centered(2)
x1 = PolyNVars.linear([1, 0])


def test_plane_mesh():
    m = mesh_zero_set(x1, Q2)
    assert m.area == pytest.approx(1.0)
    assert np.allclose(np.abs(m.normals), [1, 0])
    assert directional_area(m, [1, 0]) == pytest.approx(1.0)
    assert directional_area(m, [0, 1]) == pytest.approx(0.0, abs=1e-12)
    mu = normal_measure(m)
    assert mu.mass == pytest.approx(1.0)
    m3 = mesh_zero_set(PolyNVars.linear([1, 0, 0]), Cube.centered(3))
    assert m3.area == pytest.approx(1.0)


@pytest.mark.parametrize("rho", [0.2, 0.35, 0.45])
def test_circle(rho):
    c = PolyNVars.sphere(2, rho)
    m = mesh_zero_set(c, Q2)
    assert m.area == pytest.approx(2 * math.pi * rho, rel=0.01)
    assert normal_measure(m).mass == pytest.approx(m.area, rel=1e-12)
    v = np.array([0.6, 0.8])
    assert directional_area(m, v) == pytest.approx(4 * rho, rel=0.01)
    assert crofton_root_oracle(c, Q2, v) == pytest.approx(4 * rho, rel=0.02)


def test_empty_and_zero():
    m = mesh_zero_set(PolyNVars.sphere(2, 0) + PolyNVars.constant(2, 1), Q2)
    assert len(m) == 0 and len(normal_measure(m)) == 0
    with pytest.raises(PolyError):
        PolynomialMixture([(PolyNVars.constant(2, 0), 1.0)])
    with pytest.raises(PolyError):
        mesh_zero_set(PolyNVars.linear([1, 0, 0, 0]), Cube.centered(4))


def test_scaled_mesh_doubles():
    p = PolyNVars.sphere(2, 0.3, center=[0.05, -0.1])
    big = mesh_zero_set(p.scaled(2.0), Cube.centered(2, 2.0))
    assert big.area == pytest.approx(2 * mesh_zero_set(p, Q2).area, rel=0.01)


def test_crofton_line_and_random():
    assert crofton_root_oracle(x1, Q2, np.array([1.0, 0.0])) == pytest.approx(1.0)
    rng = np.random.default_rng(3)
    for _ in range(3):
        p = random_poly_through(rng, Q2, 4)
        v = rng.normal(size=2)
        v /= np.linalg.norm(v)
        assert directional_area(mesh_zero_set(p, Q2), v) == pytest.approx(crofton_root_oracle(p, Q2, v), rel=0.03)


def test_bezout_examples():
    assert bezout_area_check(x1, Q2).ratio == pytest.approx(1.0)
    d = 5
    p = PolyNVars.constant(2, 1.0)
    for i in range(1, d + 1):
        p = p * PolyNVars.linear([1, 0], i / (d + 1))
    assert bezout_area_check(p, Cube((0.0, 0.0), 1.0)).ratio == pytest.approx(1.0, rel=0.01)
    rng = np.random.default_rng(5)
    for _ in range(3):
        chk = bezout_area_check(random_poly_through(rng, Q2, 6), Q2)
        assert chk.counts_ok and chk.ratio <= 3


def test_root_counts_bounded_by_degree():
    rng = np.random.default_rng(8)
    for _ in range(5):
        p = random_poly_through(rng, Q2, int(rng.integers(1, 7)))
        est = crofton_lines(p, Q2, np.array([0.0, 1.0]), 50, 1)
        assert est.counts.max() <= p.degree


def test_p0():
    assert p0_offsets(1) == [-1.5, -0.5, 0.5, 1.5]
    p0 = build_p0(1, 2)
    assert p0.degree == 8
    assert build_p0(3, 3).degree == 3 * 8
    assert np.allclose(p0(np.array([[0.5, 0.123], [-1.5, 7.0]])), 0)
    for corner in [(0.0, 0.0), (-2.0, 1.0)]:
        m = mesh_zero_set(p0, Cube(corner, 1.0))
        assert directional_area(m, [1, 0]) >= 1 - 1e-12 and directional_area(m, [0, 1]) >= 1 - 1e-12
    with pytest.raises(PolyError):
        build_p0(0, 2)


def test_mixture_linearity():
    p, q = x1, PolyNVars.linear([0, 1])
    mu = mixture_normal_measure(PolynomialMixture([(p, 0.5), (q, 0.5)]), Q2)
    assert mu.mass == pytest.approx(1.0)
    single = mixture_normal_measure(PolynomialMixture.dirac(p), Q2)
    assert single.mass == pytest.approx(mesh_zero_set(p, Q2).area)


def test_json_roundtrip():
    p = ProductPoly([x1, PolyNVars.sphere(2, 0.3)])
    r = poly_from_json(p.to_json())
    X = np.random.default_rng(0).random((5, 2))
    assert np.allclose(r(X), p(X)) and r.degree == 3


def test_bisection_examples():
    chk = bisection_area_check(x1)
    assert chk.value == pytest.approx(2.0, rel=1e-3)
    assert chk.bound == pytest.approx((math.sqrt(2) - 1) * math.pi, rel=0.01)
    assert chk.holds()
    pos = bisection_area_check(PolyNVars.sphere(2, 0) + PolyNVars.constant(2, 1))
    assert pos.value == 0 and pos.bound == 0 and pos.holds()
    rng = np.random.default_rng(6)
    for _ in range(3):
        p = PolyNVars.random(2, 3, rng)
        p = p - PolyNVars.constant(2, float(p(np.zeros((1, 2)))[0]))
        assert bisection_area_check(p, samples=50_000).holds()
    # the bound holds up to an unknown constant; 0.5 is the observed floor
    assert ellipse_bisection_check(PolyNVars.linear([1, 1]), np.array([[2, 0], [0, 0.5]])).holds(0.5)
