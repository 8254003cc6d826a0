"""Fremlin projective tensor norm on finite weighted index sets.

    ||F|| = inf { prod_j ||F_j||_{q_j} : F_j >= 0, |F| <= F_1 (x) ... (x) F_m }

with weighted l^{q_j} norms and sum 1/q_j = 1.  The constraint is pointwise
and weight-free.

In log coordinates x_j = log F_j, eliminating the last factor by its
pointwise-minimal (max-projection) value leaves a convex objective in the
remaining factors.  ``fremlin_norm`` minimizes a soft-max smoothing of that
objective (every smoothed iterate is still feasible), then polishes with
cyclic max updates.  Returned values are always attained by feasible
factors, hence upper bounds on the infimum.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.special import logsumexp

BRUTE_FORCE_MAX_POINTS = 8


class FremlinError(ValueError):
    pass


@dataclass
class WeightedIndexSet:
    labels: list
    weights: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        if np.any(self.weights <= 0):
            raise FremlinError("index-set weights must be positive")
        if len(self.labels) != self.weights.shape[0]:
            raise FremlinError("labels and weights differ in length")

    @classmethod
    def uniform(cls, size: int) -> "WeightedIndexSet":
        return cls(list(range(size)), np.ones(size))


class NonnegTensor:
    """Dense nonnegative m-way array over weighted finite index sets."""

    def __init__(self, entries, weights: Sequence | None = None, labels: Sequence | None = None):
        F = np.array(entries, dtype=float)
        if F.ndim < 1:
            raise FremlinError("tensor needs at least one axis")
        if np.any(F < 0) or not np.all(np.isfinite(F)):
            raise FremlinError("tensor entries must be finite and nonnegative")
        if weights is None:
            weights = [np.ones(s) for s in F.shape]
        if len(weights) != F.ndim:
            raise FremlinError("need one weight vector per axis")
        axes = []
        for j, w in enumerate(weights):
            lab = list(labels[j]) if labels is not None else list(range(F.shape[j]))
            axes.append(WeightedIndexSet(lab, w))
            if axes[-1].weights.shape[0] != F.shape[j]:
                raise FremlinError(f"axis {j}: weight length {axes[-1].weights.shape[0]} != size {F.shape[j]}")
        self.entries = F
        self.axes = axes

    @property
    def m(self) -> int:
        return self.entries.ndim

    @property
    def shape(self) -> tuple[int, ...]:
        return self.entries.shape

    @property
    def weights(self) -> list[np.ndarray]:
        return [a.weights for a in self.axes]

    @classmethod
    def rank_one(cls, factors: Sequence, weights: Sequence | None = None) -> "NonnegTensor":
        F = np.array(1.0)
        for f in factors:
            F = np.multiply.outer(F, np.asarray(f, dtype=float))
        return cls(F, weights)

    @classmethod
    def from_json(cls, obj) -> tuple["NonnegTensor", list[float]]:
        """Parse {"entries": nested list, "weights": [[...], ...] (optional), "q": [...]}."""
        if isinstance(obj, str):
            obj = json.loads(obj)
        T = cls(obj["entries"], obj.get("weights"))
        q = obj.get("q") or [float(T.m)] * T.m
        return T, [float(x) for x in q]

    def __add__(self, other: "NonnegTensor") -> "NonnegTensor":
        if self.shape != other.shape:
            raise FremlinError("shape mismatch")
        return NonnegTensor(self.entries + other.entries, self.weights)

    def scaled(self, c: float) -> "NonnegTensor":
        return NonnegTensor(c * self.entries, self.weights)


@dataclass
class FremlinResult:
    value: float
    factors: list
    label: str = "upper bound (multi-start)"


def weighted_norm(f: np.ndarray, w: np.ndarray, q: float) -> float:
    return float(np.sum(w * f ** q) ** (1.0 / q))


def _check_exponents(q: Sequence[float], m: int) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if q.shape[0] != m:
        raise FremlinError(f"need {m} exponents, got {q.shape[0]}")
    if np.any(q <= 1):
        raise FremlinError("exponents must exceed 1")
    if abs(np.sum(1.0 / q) - 1.0) > 1e-12:
        raise FremlinError(f"sum of 1/q_j must be 1 (got {np.sum(1.0 / q)!r})")
    return q


def _support(F: np.ndarray) -> list[np.ndarray]:
    """Per axis, indices whose slice is not identically zero."""
    out = []
    for j in range(F.ndim):
        other = tuple(i for i in range(F.ndim) if i != j)
        out.append(np.nonzero(F.max(axis=other) > 0)[0] if other else np.nonzero(F > 0)[0])
    return out


def _slice_max(F: np.ndarray, factors: Sequence[np.ndarray], j: int) -> np.ndarray:
    """Pointwise-minimal F_j given the others: max over the slice of F / prod_{i != j} F_i."""
    den = np.array(1.0)
    for i, f in enumerate(factors):
        if i == j:
            den = np.multiply.outer(den, np.ones_like(f))
        else:
            den = np.multiply.outer(den, f)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(F > 0, F / den, 0.0)
    other = tuple(i for i in range(F.ndim) if i != j)
    return ratio.max(axis=other) if other else ratio


def _value(factors, weights, q) -> float:
    return math.prod(weighted_norm(f, w, qj) for f, w, qj in zip(factors, weights, q))


def _balance(factors, weights, q):
    norms = [weighted_norm(f, w, qj) for f, w, qj in zip(factors, weights, q)]
    if any(nv == 0 for nv in norms):
        return factors
    g = math.exp(sum(math.log(nv) for nv in norms) / len(norms))
    return [f * (g / nv) for f, nv in zip(factors, norms)]


def _alternate(F, factors, weights, q, sweeps: int, rtol: float):
    m = F.ndim
    val = _value(factors, weights, q)
    for _ in range(sweeps):
        for j in range(m):
            factors[j] = _slice_max(F, factors, j)
        factors = _balance(factors, weights, q)
        new = _value(factors, weights, q)
        if val - new <= rtol * val:
            val = min(val, new)
            break
        val = new
    return factors, val


class _SmoothedProblem:
    """Convex objective in log factors x_1..x_{m-1}; the last factor is a soft max."""

    def __init__(self, F: np.ndarray, weights, q):
        self.m = F.ndim
        self.shape = F.shape
        with np.errstate(divide="ignore"):
            self.logF = np.where(F > 0, np.log(np.where(F > 0, F, 1.0)), -np.inf)
        self.logw = [np.log(w) for w in weights]
        self.q = q
        self.sizes = [s for s in F.shape[:-1]]
        self.offsets = np.cumsum([0] + self.sizes)

    def split(self, x):
        return [x[self.offsets[j]:self.offsets[j + 1]] for j in range(self.m - 1)]

    def last_factor(self, xs, tau):
        A = self.logF.copy()
        for j, xj in enumerate(xs):
            sh = [1] * self.m
            sh[j] = -1
            A = A - xj.reshape(sh)
        axes = tuple(range(self.m - 1))
        if tau == 0:
            return A.max(axis=axes), A
        return tau * logsumexp(A / tau, axis=axes), A

    def __call__(self, x, tau):
        xs = self.split(x)
        y, A = self.last_factor(xs, tau)
        total = 0.0
        grads = []
        for j, xj in enumerate(xs + [y]):
            qj = self.q[j]
            z = qj * xj + self.logw[j]
            lse = logsumexp(z)
            total += lse / qj
            grads.append(np.exp(z - lse))
        rho_m = grads[-1]
        # softmax of A/tau within each last-index slice, weighted by rho_m
        axes = tuple(range(self.m - 1))
        with np.errstate(invalid="ignore"):
            P = np.exp(A / tau - (y / tau).reshape((1,) * (self.m - 1) + (-1,)))
        P = np.nan_to_num(P) * rho_m.reshape((1,) * (self.m - 1) + (-1,))
        g = []
        for j in range(self.m - 1):
            other = tuple(i for i in range(self.m) if i != j)
            g.append(grads[j] - P.sum(axis=other))
        return total, np.concatenate(g)


def _solve_smoothed(F, weights, q, x0, taus=(1.0, 0.1, 1e-2, 1e-3, 1e-4)):
    prob = _SmoothedProblem(F, weights, q)
    x = x0
    for tau in taus:
        res = minimize(prob, x, args=(tau,), jac=True, method="L-BFGS-B",
                       options={"maxiter": 500, "gtol": 1e-12, "ftol": 1e-15})
        x = res.x
    xs = prob.split(x)
    y, _ = prob.last_factor(xs, 0)
    return [np.exp(xj) for xj in xs] + [np.exp(y)]


def fremlin_norm(T: NonnegTensor, q: Sequence[float], iters: int = 500, restarts: int = 4,
                 seed: int = 0, rtol: float = 1e-8) -> FremlinResult:
    """Upper bound on the Fremlin norm with the factors that attain it."""
    q = _check_exponents(q, T.m)
    F = T.entries
    full_factors = [np.zeros(s) for s in F.shape]
    if not np.any(F > 0):
        return FremlinResult(0.0, full_factors)
    supp = _support(F)
    Fr = F[np.ix_(*supp)]
    wr = [w[s] for w, s in zip(T.weights, supp)]
    m = T.m
    if m == 1:
        # sum 1/q = 1 forces q = 1, already rejected; kept for completeness
        raise FremlinError("need at least two tensor axes")
    rng = np.random.default_rng(seed)
    # marginal roots: x_j = (1/m) log max-slice
    init = []
    for j in range(m - 1):
        other = tuple(i for i in range(m) if i != j)
        init.append(np.log(Fr.max(axis=other)) / m)
    x_base = np.concatenate(init)
    best_val, best = math.inf, None
    for rs in range(max(1, restarts)):
        x0 = x_base if rs == 0 else x_base + rng.normal(scale=0.5, size=x_base.shape)
        factors = _solve_smoothed(Fr, wr, q, x0)
        factors, val = _alternate(Fr, factors, wr, q, iters, rtol)
        if val < best_val:
            best_val, best = val, factors
    # exact feasibility repair on the last factor
    best[-1] = np.maximum(best[-1], _slice_max(Fr, best, m - 1))
    value = _value(best, wr, q)
    for j in range(m):
        full_factors[j][supp[j]] = best[j]
    return FremlinResult(value, full_factors)


def is_feasible(T: NonnegTensor, factors: Sequence[np.ndarray], rtol: float = 1e-12) -> bool:
    prod = np.array(1.0)
    for f in factors:
        prod = np.multiply.outer(prod, f)
    return bool(np.all(T.entries <= prod * (1 + rtol) + 1e-300))


def fremlin_bruteforce(T: NonnegTensor, q: Sequence[float], grid: int | None = None,
                       rounds: int = 12, budget: int = 200_000) -> float:
    """Grid-search oracle for index sets with at most 8 points in total.

    Free factors F_1..F_{m-1} take values on a log grid (first support entry
    pinned to 1 by scale invariance); F_m is the max projection.  The grid
    is zoomed around the incumbent for ``rounds`` passes.
    """
    q = _check_exponents(q, T.m)
    if sum(T.shape) > BRUTE_FORCE_MAX_POINTS:
        raise FremlinError(f"brute force limited to {BRUTE_FORCE_MAX_POINTS} index points, got {sum(T.shape)}")
    F = T.entries
    if not np.any(F > 0):
        return 0.0
    supp = _support(F)
    Fr = F[np.ix_(*supp)]
    wr = [w[s] for w, s in zip(T.weights, supp)]
    m = T.m
    free_sizes = [Fr.shape[j] - 1 for j in range(m - 1)]
    dim = sum(free_sizes)

    def evaluate(logs: np.ndarray) -> np.ndarray:
        # logs: (B, dim) -> values (B,)
        B = logs.shape[0]
        vals = np.ones(B)
        facs = []
        pos = 0
        for j in range(m - 1):
            k = free_sizes[j]
            f = np.ones((B, k + 1))
            f[:, 1:] = np.exp2(logs[:, pos:pos + k])
            pos += k
            facs.append(f)
            vals *= np.sum(wr[j] * f ** q[j], axis=1) ** (1 / q[j])
        den = np.ones((B,) + (1,) * (m - 1))
        for j, f in enumerate(facs):
            sh = [B] + [1] * (m - 1)
            sh[j + 1] = -1
            den = den * f.reshape(sh)
        den = den[..., None]
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(Fr[None] > 0, Fr[None] / den, 0.0)
        last = ratio.reshape(B, -1, Fr.shape[-1]).max(axis=1)
        vals *= np.sum(wr[-1] * last ** q[-1], axis=1) ** (1 / q[-1])
        return vals

    if dim == 0:
        return float(evaluate(np.zeros((1, 0)))[0])
    lf = np.log2(Fr[Fr > 0])
    span = float(lf.max() - lf.min()) + 2.0
    # zooming makes very fine one-dimensional grids pointless
    G = grid or max(3, min(int(budget ** (1.0 / dim)), 4001))
    if G % 2 == 0:
        G += 1
    center = np.zeros(dim)
    best = math.inf
    half = span
    for _ in range(rounds):
        axis = np.linspace(-half, half, G)
        pts = np.stack([g.reshape(-1) for g in np.meshgrid(*([axis] * dim), indexing="ij")], axis=1) + center
        vals = evaluate(pts)
        i = int(np.argmin(vals))
        if vals[i] < best:
            best = float(vals[i])
            center = pts[i]
        half = max(half * 2.5 / (G - 1), 1e-6)
    return best


def lm_lower_bound(T: NonnegTensor, q: Sequence[float]) -> float:
    """Weighted L^m norm of F on the product space; needs q_1 = ... = q_m = m."""
    m = T.m
    if any(abs(x - m) > 1e-12 for x in q):
        raise FremlinError("L^m comparison needs all exponents equal to m")
    W = np.array(1.0)
    for w in T.weights:
        W = np.multiply.outer(W, w)
    return float(np.sum(W * T.entries ** m) ** (1.0 / m))


def subadditivity_check(F: NonnegTensor, G: NonnegTensor, q: Sequence[float], slack: float = 0.02) -> tuple[bool, float, float]:
    """Return (ok, norm(F+G), norm(F)+norm(G)); oracle values for small shapes."""
    small = sum(F.shape) <= BRUTE_FORCE_MAX_POINTS

    def norm(T):
        if small:
            return min(fremlin_bruteforce(T, q), fremlin_norm(T, q).value)
        return fremlin_norm(T, q).value

    lhs = norm(F + G)
    rhs = norm(F) + norm(G)
    return lhs <= rhs * (1 + slack) + 1e-12, lhs, rhs
