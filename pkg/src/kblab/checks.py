"""Seeded numeric check suites shared by the command line and the tests.

Every check yields a CheckRow comparing an observed value to a target
under a relation and a tolerance.  Scaling the tolerances by a negative
factor makes every suite fail, which is how the gate is self-tested.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .bl_core import BLDatum, orthonormalize, TruncationWindow, bl_gaussian, bl_truncated_estimate, kappa, kappa_tilde, lines_datum
from .exterior import Blade, GradedMeasure, blade_norm, pairing_moment, pairing_moment_power, wedge_power
from .fremlin import NonnegTensor, fremlin_bruteforce, fremlin_norm, is_feasible, lm_lower_bound, weighted_norm
from .geometry import (Ellipsoid, Polytope, SeminormBall, john_ellipsoid, max_gauge, sandwich_ratio,
                       slice_projection_check, visibility, visibility_body, wedge_visibility_check)
from .harness import AffineSubspace, cube_incidence, duality_check
from .polysurf import (Cube, PolyNVars, build_p0, crofton_lines, crofton_root_oracle, directional_area,
                       mesh_zero_set, normal_measure)


@dataclass
class CheckRow:
    suite: str
    case: str
    observed: float
    target: float
    tol: float
    relation: str  # "le", "ge" or "eq"
    stderr: float = 0.0

    @property
    def passed(self) -> bool:
        o, t, tol = self.observed, self.target, self.tol
        if tol < 0 or not math.isfinite(o):
            # a negative tolerance is an unsatisfiable demand
            return False
        scale = abs(t) if t != 0 else 1.0  # tolerances are relative unless the target is zero
        if self.relation == "le":
            return o <= t + tol * scale
        if self.relation == "ge":
            return o >= t - tol * scale
        return abs(o - t) <= tol * scale

    def scaled(self, factor: float) -> "CheckRow":
        return CheckRow(self.suite, self.case, self.observed, self.target, self.tol * factor, self.relation, self.stderr)


def rows_to_csv(rows) -> str:
    out = io.StringIO()
    wr = csv.writer(out, lineterminator="\n")
    wr.writerow(["suite", "case", "observed", "target", "tol", "relation", "stderr", "passed"])
    for r in rows:
        wr.writerow([r.suite, r.case, repr(float(r.observed)), repr(float(r.target)), repr(float(r.tol)),
                     r.relation, repr(float(r.stderr)), "1" if r.passed else "0"])
    return out.getvalue()


def _unit(rng, n):
    v = rng.normal(size=n)
    return v / np.linalg.norm(v)


# ---------------------------------------------------------------- exterior

def exterior_suite(budget: int, seed: int = 0):
    rng = np.random.default_rng([seed, 1])
    for i in range(budget):
        n = int(rng.integers(2, 5))
        k = int(rng.integers(1, n + 1))
        V = rng.normal(size=(k, n))
        gram = math.sqrt(max(np.linalg.det(V @ V.T), 0.0))
        yield CheckRow("exterior", f"blade-norm-gram-{i}", blade_norm(Blade(V).mv), gram, 1e-9, "eq")
        if k >= 2:
            W = V.copy()
            W[[0, 1]] = W[[1, 0]]
            s = Blade(V).mv.coeffs + Blade(W).mv.coeffs
            yield CheckRow("exterior", f"antisymmetry-{i}", float(np.abs(s).max()), 0.0, 1e-12, "eq")
            mu = GradedMeasure.from_vectors(rng.normal(size=(4, n)), rng.random(4))
            T = Blade(rng.normal(size=(k, n)))
            yield CheckRow("exterior", f"pairing-power-{i}", pairing_moment_power(mu, k, T),
                           pairing_moment(wedge_power(mu, k), T), 1e-9, "eq")


# ---------------------------------------------------------------- bl_core

def random_lattice_datum(rng) -> BLDatum:
    n = int(rng.integers(1, 4))
    m = int(rng.integers(1, 4))
    subs = []
    for _ in range(m):
        k = int(rng.integers(0, n))
        while True:
            S = rng.integers(-1, 2, size=(k, n)).astype(float)
            if k == 0 or np.linalg.matrix_rank(S) == k:
                break
        subs.append(orthonormalize(S) if k else S)
    p = [int(rng.integers(1, 9)) / 4 for _ in range(m)]
    return BLDatum(n, tuple(subs), tuple(p))


def bl_suite(budget: int, seed: int = 0):
    rng = np.random.default_rng([seed, 2])
    for i in range(budget):
        d = random_lattice_datum(rng)
        k, kt = kappa(d), kappa_tilde(d)
        exact = d.n - sum(Fraction(p).limit_denominator(64) * c for p, c in zip(d.exponents, d.codims))
        yield CheckRow("bl_core", f"kappa-sum-{i}", float(k.exact + kt.exact - exact), 0.0, 0.0, "eq")
        yield CheckRow("bl_core", f"kappa-nonneg-{i}", float(k.exact), 0.0, 0.0, "ge")
        yield CheckRow("bl_core", f"kappa-tilde-nonpos-{i}", float(kt.exact), 0.0, 0.0, "le")
    for i, th in enumerate([math.pi / 2, math.pi / 3, math.pi / 4, math.pi / 6][:max(0, min(budget, 4))]):
        g = bl_gaussian(lines_datum(th))
        yield CheckRow("bl_core", f"lw-angle-{i}", g.value, 1 / math.sin(th), 1e-4, "eq")


def scaling_rows(budget: int, seed: int = 0):
    """|BL(r, R) - r^{n - sum p_j n_j} BL(1, R/r)| / BL(r, R) on random data."""
    rng = np.random.default_rng([seed, 3])
    for i in range(budget):
        d = random_lattice_datum(rng)
        r = float(rng.choice([0.5, 2.0]))
        R = float(rng.choice([4.0, 8.0]))
        if d.n == 3:
            R = min(R, 8 * r)
        a = bl_truncated_estimate(d, TruncationWindow(r, R), iters=5).value
        b = r ** d.scaling_exponent() * bl_truncated_estimate(d, TruncationWindow(1.0, R / r), iters=5).value
        yield CheckRow("bl_core", f"scaling-{i}", abs(a - b) / a, 0.0, 1e-9, "eq")


# ---------------------------------------------------------------- fremlin

def fremlin_suite(budget: int, seed: int = 0):
    rng = np.random.default_rng([seed, 4])
    if budget > 0:
        T = NonnegTensor(np.eye(2))
        yield CheckRow("fremlin", "identity", fremlin_norm(T, [2, 2]).value, fremlin_bruteforce(T, [2, 2]), 1e-6, "eq")
        yield CheckRow("fremlin", "diag-1-4", fremlin_norm(NonnegTensor(np.diag([1.0, 4.0])), [2, 2]).value, 5.0, 0.02, "eq")
    for i in range(budget):
        shape = tuple(int(s) for s in rng.integers(1, 5, size=int(rng.integers(2, 4))))
        m = len(shape)
        F = rng.random(shape) * (rng.random(shape) < 0.8)
        T = NonnegTensor(F, [rng.uniform(0.5, 2.0, s) for s in shape])
        res = fremlin_norm(T, [m] * m, seed=i)
        yield CheckRow("fremlin", f"lm-lower-{i}", res.value, lm_lower_bound(T, [m] * m), 1e-9, "ge")
        yield CheckRow("fremlin", f"feasible-{i}", float(is_feasible(T, res.factors, 1e-9)), 1.0, 0.0, "eq")
        q = list(rng.uniform(1.5, 4.0, size=m))
        q[-1] = 1 / (1 - sum(1 / x for x in q[:-1])) if sum(1 / x for x in q[:-1]) < 1 else float(m)
        if sum(1 / x for x in q) != 1 or min(q) <= 1:
            q = [float(m)] * m
        f = [rng.uniform(0.1, 2.0, s) for s in shape]
        W = [rng.uniform(0.5, 2.0, s) for s in shape]
        R1 = NonnegTensor.rank_one(f, W)
        cross = math.prod(weighted_norm(fj, wj, qj) for fj, wj, qj in zip(f, W, q))
        yield CheckRow("fremlin", f"rank-one-{i}", fremlin_norm(R1, q).value, cross, 1e-6, "eq")


# ---------------------------------------------------------------- geometry

def random_bounded_measure(rng, n: int = 2) -> GradedMeasure:
    while True:
        N = int(rng.integers(n, n + 5))
        mu = GradedMeasure.from_vectors(rng.normal(size=(N, n)), rng.uniform(0.2, 2.0, N))
        if np.linalg.matrix_rank(mu.vectors[:, 0, :]) == n:
            return mu


def john_rows(budget: int, seed: int = 0):
    rng = np.random.default_rng([seed, 5])
    for i in range(budget):
        n = 2 + i % 2
        K = Polytope.random_symmetric(n, int(rng.integers(3, 8)), rng)
        E = john_ellipsoid(K)
        inner, _ = max_gauge(E, K)
        yield CheckRow("geometry", f"john-inside-{i}", inner, 1.0, 1e-9, "le")
        yield CheckRow("geometry", f"john-sandwich-{i}", sandwich_ratio(K, E) / math.sqrt(n), 1.0, 1e-3, "le")


def slice_rows(budget: int, seed: int = 0, samples: int = 100_000):
    rng = np.random.default_rng([seed, 6])
    for i in range(budget):
        n = 2 + i % 2
        if i % 3 == 2:
            L = rng.normal(size=(n, n))
            K = Ellipsoid(L @ L.T + 0.2 * np.eye(n))
        else:
            K = Polytope.random_symmetric(n, int(rng.integers(3, 7)), rng)
        k = int(rng.integers(1, n))
        T = rng.normal(size=(k, n))
        chk = slice_projection_check(K, T, samples=samples, seed=seed + i)
        yield CheckRow("geometry", f"slice-projection-{i}", chk.lhs, chk.rhs, 3 * chk.rel_err, "le", chk.rel_err * chk.rhs)


def wedge_visibility_rows(budget: int, seed: int = 0, floor: float = 0.1):
    rng = np.random.default_rng([seed, 7])
    for i in range(budget):
        chk = wedge_visibility_check(random_bounded_measure(rng))
        yield CheckRow("geometry", f"wedge-visibility-{i}", chk.rhs, floor, 0.0, "ge", chk.rel_err * chk.rhs)


def geometry_suite(budget: int, seed: int = 0):
    yield from john_rows(budget, seed)
    yield from slice_rows(budget, seed)
    yield from wedge_visibility_rows(budget, seed)
    if budget > 0:
        l1 = SeminormBall.from_atoms(np.eye(2))
        yield CheckRow("geometry", "l1-visibility", visibility(l1), 0.5, 0.01, "eq")


# ---------------------------------------------------------------- polysurf

def random_poly_through(rng, Q: Cube, degree: int) -> PolyNVars:
    """Random polynomial vanishing at a random point of Q."""
    p = PolyNVars.random(Q.n, degree, rng, center=Q.center)
    x0 = Q.lo + rng.random(Q.n) * Q.side
    return p - PolyNVars.constant(Q.n, float(p(x0[None])[0]))


def bezout_rows(budget: int, seed: int = 0, lines: int = 25):
    rng = np.random.default_rng([seed, 8])
    Q = Cube.centered(2)
    for i in range(budget):
        deg = int(rng.integers(1, 7))
        p = random_poly_through(rng, Q, deg)
        v = _unit(rng, 2)
        est = crofton_lines(p, Q, v, lines, seed + i)
        yield CheckRow("polysurf", f"line-roots-{i}", float(est.counts.max(initial=0)), float(p.degree), 0.0, "le")


def crofton_rows(budget: int, seed: int = 0):
    rng = np.random.default_rng([seed, 9])
    Q = Cube.centered(2)
    for i in range(budget):
        p = random_poly_through(rng, Q, int(rng.integers(2, 7)))
        v = _unit(rng, 2)
        da = directional_area(mesh_zero_set(p, Q), v)
        yield CheckRow("polysurf", f"crofton-{i}", da, crofton_root_oracle(p, Q, v, seed=seed + i), 0.03, "eq")


def circle_rows(radii=(0.2, 0.3, 0.45)):
    Q = Cube.centered(2)
    for rho in radii:
        m = mesh_zero_set(PolyNVars.sphere(2, rho), Q)
        for t in (0.0, 0.7, 2.0):
            v = np.array([math.cos(t), math.sin(t)])
            yield CheckRow("polysurf", f"circle-{rho}-{t}", directional_area(m, v), 4 * rho, 0.02, "eq")


def p0_rows(radii=range(1, 9), directions: int = 360, floor: float = 0.5):
    """min over cubes in Q_R and sampled unit v of the seminorm of the p0 normal measure."""
    from .harness import DyadicGrid
    ang = np.arange(directions) * 2 * math.pi / directions
    V = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    for R in radii:
        p0 = build_p0(R, 2)
        worst = math.inf
        for c in DyadicGrid(2, R).corners:
            mu = normal_measure(mesh_zero_set(p0, Cube(tuple(c), 1.0)))
            vals = np.abs(mu.coeffs @ V.T).T @ mu.weights if len(mu) else np.zeros(directions)
            worst = min(worst, float(vals.min()))
        yield CheckRow("polysurf", f"p0-seminorm-R{R}", worst, floor, 0.0, "ge")


def polysurf_suite(budget: int, seed: int = 0):
    yield from bezout_rows(budget, seed)
    yield from crofton_rows(budget, seed)
    if budget > 0:
        yield from circle_rows()
        yield CheckRow("polysurf", "p0-degree", float(build_p0(1, 2).degree), 8.0, 0.0, "eq")
        yield from p0_rows(range(1, min(budget, 8) + 1))


# ---------------------------------------------------------------- harness

def duality_instances(budget: int, seed: int = 0):
    """(name, G, M, p, degs): single cube, equal weights, then random instances."""
    rng = np.random.default_rng([seed, 10])
    if budget > 0:
        yield "single-cube", np.array([2.5]), np.array([1.0]), np.array([0.5, 0.5]), np.array([3.0, 2.0])
        yield "equal-weights", np.ones(4), np.full(4, 0.25), np.array([1.0, 1.0]), np.array([2.0, 2.0])
    for i in range(budget):
        N = int(rng.integers(1, 30))
        m = int(rng.integers(1, 4))
        G = rng.random(N) * (rng.random(N) < 0.8)
        if not G.any():
            G[0] = 1.0
        M = rng.random(N) + 1e-3
        M /= M.sum()
        p = rng.uniform(0.2, 1.5, m)
        while p.sum() < 1:
            p = rng.uniform(0.2, 1.5, m)
        degs = rng.integers(1, 10, m).astype(float)
        yield f"random-{i}", G, M, p, degs


def harness_suite(budget: int, seed: int = 0):
    for name, G, M, p, degs in duality_instances(budget, seed):
        rep = duality_check(G, M, p, degs)
        yield CheckRow("harness", f"duality-{name}", rep.max_violation, 0.0, 1e-9, "le")
        yield CheckRow("harness", f"duality-ok-{name}", float(rep.ok), 1.0, 0.0, "eq")
    rng = np.random.default_rng([seed, 11])
    for i in range(budget):
        n = int(rng.integers(2, 5))
        k = int(rng.integers(0, n + 1))
        T = AffineSubspace(rng.uniform(-2, 2, n), rng.normal(size=(k, n)))
        c = tuple(float(x) for x in rng.integers(-3, 3, n))
        z = rng.integers(-5, 6, n).astype(float)
        a = cube_incidence(T, Cube(c, 1.0))
        b = cube_incidence(AffineSubspace(T.point + z, T.basis), Cube(tuple(np.add(c, z)), 1.0))
        yield CheckRow("harness", f"incidence-translation-{i}", float(a == b), 1.0, 0.0, "eq")


SUITES = {
    "exterior": exterior_suite,
    "bl_core": bl_suite,
    "fremlin": fremlin_suite,
    "geometry": geometry_suite,
    "polysurf": polysurf_suite,
    "harness": harness_suite,
}
