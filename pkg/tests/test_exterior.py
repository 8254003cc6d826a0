import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from kblab.exterior import (Blade, ExteriorError, GradedMeasure, MultiVector, abs_inner, blade_norm, first_moment,
                            hodge_star, measure_wedge, pairing_moment, pairing_moment_power, wedge, wedge_power)

e = lambda n, *idx: MultiVector.basis(n, idx)
vec = MultiVector.vector
finite = st.floats(-3, 3, allow_nan=False)


def test_basis_wedge():
    w = wedge(e(2, 0), e(2, 1))
    assert w.k == 2 and w.coeffs.tolist() == [1.0]


@pytest.mark.parametrize("theta", [0.3, 1.0, 2.5])
def test_wedge_angle(theta):
    w = vec([1, 0]) ^ vec([math.cos(theta), math.sin(theta)])
    assert w.coeffs[0] == pytest.approx(math.sin(theta), abs=1e-15)
    assert blade_norm(w) == pytest.approx(math.sin(theta))


def test_hodge_basis():
    assert np.allclose(np.abs(hodge_star(e(2, 0)).coeffs), [0, 1])
    assert np.allclose(np.abs(hodge_star(e(3, 0, 1)).coeffs), [0, 0, 1])


def test_abs_inner_examples():
    assert abs_inner(e(2, 0, 1), e(2, 0, 1)) == 1
    assert abs_inner(e(2, 0, 1), e(2, 1, 0)) == 1
    a = Blade([[1, 0], [1, 1]]).mv
    b = Blade([[0, 1], [1, 1]]).mv
    assert abs_inner(a, b) == pytest.approx(1.0)


def test_blade_norm_scaling():
    assert blade_norm(vec([2, 0]) ^ vec([0, 3])) == pytest.approx(6.0)


def test_grade_overflow_and_dimension_errors():
    with pytest.raises(ExteriorError):
        wedge(e(2, 0, 1), e(2, 0))
    with pytest.raises(ExteriorError):
        wedge(e(2, 0), e(3, 0))
    with pytest.raises(ExteriorError):
        MultiVector(9, 1, np.zeros(9))


def test_measure_wedge_examples():
    d1 = GradedMeasure.from_vectors([[1, 0]], [1])
    d2 = GradedMeasure.from_vectors([[0, 1]], [1])
    w = measure_wedge(d1, d2)
    assert len(w) == 1 and abs(w.coeffs[0, 0]) == 1
    mu = GradedMeasure.from_vectors([[1, 0], [0, 1]], [1, 1])
    sq = wedge_power(mu, 2)
    assert len(sq) == 4
    assert first_moment(sq) == pytest.approx(2.0)
    assert len(measure_wedge(mu, GradedMeasure.empty(2, 1))) == 0


def test_pairing_examples():
    top = Blade([[1, 0], [0, 1]])
    assert pairing_moment(GradedMeasure.from_atoms([(top, 1.0)]), top) == 1
    mu = GradedMeasure.from_vectors([[1, 0], [0, 1]], [1, 1])
    assert pairing_moment(wedge_power(mu, 2), top) == pytest.approx(2.0)
    assert pairing_moment_power(mu, 2, top) == pytest.approx(2.0)
    assert pairing_moment(GradedMeasure.from_vectors([[1, 0, 0]], [1]), Blade([0, 1, 0])) == 0


def test_pairing_power_rejects_wrong_grade():
    mu = GradedMeasure.from_vectors([[1, 0, 0]], [1])
    with pytest.raises(ExteriorError):
        pairing_moment_power(mu, 2, Blade([1, 0, 0]))


@given(arrays(float, 3, elements=finite))
def test_alternation(v):
    assert np.allclose((vec(v) ^ vec(v)).coeffs, 0)


@settings(max_examples=50)
@given(st.integers(2, 5), st.data())
def test_gram_hodge_hadamard(n, data):
    k = data.draw(st.integers(1, n))
    V = data.draw(arrays(float, (k, n), elements=finite))
    W = data.draw(arrays(float, (k, n), elements=finite))
    a, b = Blade(V).mv, Blade(W).mv
    assert abs_inner(a, b) == pytest.approx(abs(np.linalg.det(V @ W.T)), rel=1e-9, abs=1e-9)
    assert blade_norm(hodge_star(a)) == pytest.approx(blade_norm(a), rel=1e-12, abs=1e-12)
    assert blade_norm(a) <= np.prod(np.linalg.norm(V, axis=1)) * (1 + 1e-12) + 1e-12


@settings(max_examples=30)
@given(st.integers(2, 4), st.data())
def test_hodge_involution_sign(n, data):
    k = data.draw(st.integers(0, n))
    c = data.draw(arrays(float, math.comb(n, k), elements=finite))
    a = MultiVector(n, k, c)
    assert hodge_star(hodge_star(a)).allclose(a * (-1) ** (k * (n - k)), atol=1e-12)


@settings(max_examples=30)
@given(st.data())
def test_pairing_bilinearity(data):
    U = data.draw(arrays(float, (4, 3), elements=finite))
    w = data.draw(arrays(float, 4, elements=st.floats(0, 2)))
    t = Blade(data.draw(arrays(float, (1, 3), elements=finite)))
    whole = pairing_moment(GradedMeasure.from_vectors(U, w), t)
    parts = pairing_moment(GradedMeasure.from_vectors(U[:2], w[:2]), t) + pairing_moment(GradedMeasure.from_vectors(U[2:], w[2:]), t)
    assert whole == pytest.approx(parts, abs=1e-9)
    assert pairing_moment(GradedMeasure.from_vectors(U, 3 * w), t) == pytest.approx(3 * whole, abs=1e-9)
