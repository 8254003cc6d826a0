import math
from fractions import Fraction

import numpy as np
import pytest

from kblab.bl_core import (BLDatum, BLError, QuotientFn, TruncationWindow, axes_datum, bl_gaussian, bl_ratio,
                           bl_truncated_estimate, check_discrete, check_local, check_scaling, kappa, kappa_tilde,
                           lines_datum, lw_constant)
from kblab.checks import random_lattice_datum

point = lambda p: BLDatum(1, (np.zeros((0, 1)),), (p,))


def test_scaling_examples():
    assert check_scaling(axes_datum(2)) == (True, 0.0)
    ok, res = check_scaling(point(0.5))
    assert not ok and res == 0.5
    assert check_scaling(BLDatum(3, (np.zeros((0, 3)),), (1.0,)))[0]
    assert check_scaling(BLDatum(3, (np.eye(3),), (1.0,))) == (False, 3.0)


def test_kappa_examples():
    assert kappa(axes_datum(2)).exact == 0
    assert kappa_tilde(axes_datum(2)).exact == 0
    k = kappa(point(0.5))
    assert k.exact == Fraction(1, 2) and k.subspace.shape[0] == 1
    assert kappa_tilde(point(2.0)).exact == -1
    assert k.certificate == "lattice-certified"


def test_discrete_local():
    assert check_discrete(axes_datum(2)) and check_local(axes_datum(2))
    assert not check_discrete(point(0.5)) and check_local(point(0.5))
    assert check_discrete(point(2.0)) and not check_local(point(2.0))


def test_lw_constant():
    assert lw_constant(axes_datum(2)) == pytest.approx(1.0)
    assert lw_constant(lines_datum(math.pi / 3)) == pytest.approx(1 / math.sin(math.pi / 3))
    assert lw_constant(lines_datum(0.0)) == math.inf
    with pytest.raises(BLError):
        lw_constant(lines_datum(1.0, (0.5, 0.5)))


def test_datum_validation():
    with pytest.raises(BLError):
        BLDatum(2, (np.array([[1.0, 1.0]]),), (1.0,))
    with pytest.raises(BLError):
        BLDatum(2, (np.eye(2)[:1],), (0.0,))
    with pytest.raises(BLError):
        TruncationWindow(2.0, 1.0)
    d = BLDatum.from_json('{"n": 2, "subspaces": [[[1, 1]], [[0, 1]]], "exponents": [1, 1]}')
    assert np.allclose(d.subspaces[0], [[2 ** -0.5, 2 ** -0.5]])


def test_ratio_hand_values():
    r = 0.25
    assert bl_ratio(point(2.0), TruncationWindow(r, 1.0), [QuotientFn(0, r, {(0,): 1.0})]) == pytest.approx(1 / r)
    R = 8.0
    assert bl_ratio(point(0.5), TruncationWindow(1.0, R), [QuotientFn(0, 1.0, {(c,): 1.0 for c in range(-8, 8)})]) == pytest.approx(math.sqrt(2 * R))


def test_truncated_estimate_examples():
    for R in (4.0, 16.0):
        est = bl_truncated_estimate(point(0.5), TruncationWindow(1.0, R)).value
        assert 0.99 <= est / math.sqrt(2 * R) <= 1.0 + 1e-12
    assert bl_truncated_estimate(axes_datum(2), TruncationWindow(1.0, 16.0)).value == pytest.approx(1.0, rel=0.05)


def test_gaussian_examples():
    assert bl_gaussian(axes_datum(2)).value == pytest.approx(1.0, rel=1e-6)
    assert bl_gaussian(lines_datum(math.pi / 4)).value == pytest.approx(math.sqrt(2), rel=1e-4)
    assert bl_gaussian(lines_datum(0.0)).status == "divergent"


def test_gaussian_below_closed_form():
    rng = np.random.default_rng(5)
    for _ in range(5):
        th = rng.uniform(0.2, math.pi - 0.2)
        assert bl_gaussian(lines_datum(th)).value <= lw_constant(lines_datum(th)) * (1 + 1e-6)


def test_exponent_identity_random():
    rng = np.random.default_rng(11)
    for _ in range(30):
        d = random_lattice_datum(rng)
        k, kt = kappa(d), kappa_tilde(d)
        s = d.n - sum(Fraction(p) * c for p, c in zip(d.exponents, d.codims))
        assert k.exact + kt.exact == s
        assert k.exact >= 0 >= kt.exact


def test_scaling_identity_estimator():
    rng = np.random.default_rng(3)
    for _ in range(4):
        d = random_lattice_datum(rng)
        a = bl_truncated_estimate(d, TruncationWindow(0.5, 4.0), iters=5).value
        b = 0.5 ** d.scaling_exponent() * bl_truncated_estimate(d, TruncationWindow(1.0, 8.0), iters=5).value
        assert abs(a - b) <= 1e-9 * a
