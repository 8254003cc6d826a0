"""Families of affine subspaces on the unit-cube grid, both sides of the
uniform, tensor-norm and wedge forms of the Kakeya-Brascamp-Lieb
inequality, the per-cube functionals S_j and G, and the duality checker.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import lsq_linear

from .bl_core import BLDatum, BLError, TruncationWindow, bl_gaussian, bl_truncated_estimate, complement_basis, is_lw_datum, lw_constant, orthonormalize
from .exterior import Blade, GradedMeasure, blade_norm, pairing_moment_power
from .fremlin import NonnegTensor, fremlin_norm
from .polysurf import Cube, PolyNVars, PolynomialMixture, mesh_zero_set, mixture_normal_measure

INCIDENCE_TOL = 1e-9
TUPLE_CAP = 100_000


class HarnessError(ValueError):
    pass


# ---------------------------------------------------------------- configurations

class AffineSubspace:
    """point + span(basis), with an orthonormal direction basis."""

    def __init__(self, point, basis):
        point = np.asarray(point, dtype=float).reshape(-1)
        n = point.shape[0]
        B = np.asarray(basis, dtype=float).reshape(-1, n)
        Q = orthonormalize(B) if B.shape[0] else B
        if Q.shape[0] != B.shape[0]:
            raise HarnessError("direction vectors are linearly dependent")
        self.point = point
        self.basis = Q
        self.n = n
        self.k = Q.shape[0]

    @cached_property
    def blade(self) -> Blade:
        return Blade(self.basis) if self.k else Blade(np.zeros((0, self.n)))

    @cached_property
    def complement(self) -> np.ndarray:
        return complement_basis(self.basis, self.n)

    def distance(self, X) -> np.ndarray:
        D = np.asarray(X, dtype=float).reshape(-1, self.n) - self.point
        if self.k:
            D = D - (D @ self.basis.T) @ self.basis
        return np.linalg.norm(D, axis=1)

    def to_json(self) -> dict:
        return {"point": self.point.tolist(), "basis": self.basis.tolist()}

    @classmethod
    def from_json(cls, obj) -> "AffineSubspace":
        return cls(obj["point"], obj["basis"])

    @classmethod
    def line(cls, point, direction) -> "AffineSubspace":
        return cls(point, [direction])


@dataclass
class AffineFamily:
    members: list
    k: int
    n: int

    def __post_init__(self):
        for T in self.members:
            if T.k != self.k or T.n != self.n:
                raise HarnessError(f"family members must all be {self.k}-planes in R^{self.n}")

    def __len__(self) -> int:
        return len(self.members)

    @classmethod
    def of(cls, members: Sequence[AffineSubspace], k: int | None = None, n: int | None = None) -> "AffineFamily":
        members = list(members)
        if members:
            k = members[0].k if k is None else k
            n = members[0].n if n is None else n
        if k is None or n is None:
            raise HarnessError("empty family needs explicit k and n")
        return cls(members, k, n)

    @classmethod
    def from_json(cls, obj) -> "AffineFamily":
        if isinstance(obj, str):
            obj = json.loads(obj)
        members = [AffineSubspace.from_json(m) for m in obj.get("members", [])]
        return cls.of(members, int(obj["k"]), obj.get("n"))

    def to_json(self) -> dict:
        return {"k": self.k, "n": self.n, "members": [T.to_json() for T in self.members]}


def grid_lines(N: int) -> list[AffineFamily]:
    """N horizontal and N vertical lines at half-integer offsets, centered on the origin."""
    offs = np.arange(N) - (N - 1) / 2
    horiz = [AffineSubspace.line([0.0, c], [1.0, 0.0]) for c in offs]
    vert = [AffineSubspace.line([c, 0.0], [0.0, 1.0]) for c in offs]
    return [AffineFamily.of(horiz), AffineFamily.of(vert)]


def random_lines(N: int, R: float, rng: np.random.Generator, n: int = 2) -> AffineFamily:
    """N lines with uniform directions through uniform points of B(0, R/2)."""
    members = []
    for _ in range(N):
        d = rng.normal(size=n)
        d /= np.linalg.norm(d)
        x = rng.normal(size=n)
        x *= R / 2 * rng.random() ** (1 / n) / np.linalg.norm(x)
        members.append(AffineSubspace.line(x, d))
    return AffineFamily.of(members, 1, n)


@dataclass(frozen=True)
class DyadicGrid:
    """Unit cubes with integer corners at distance at most R from the origin, in lexicographic order."""

    n: int
    R: float

    @cached_property
    def corners(self) -> np.ndarray:
        m = math.ceil(self.R) + 1
        Z = np.array(list(itertools.product(range(-m, m), repeat=self.n)), dtype=float)
        near = np.clip(0.0, Z, Z + 1)
        return Z[np.linalg.norm(near, axis=1) <= self.R + 1e-12]

    def __len__(self) -> int:
        return self.corners.shape[0]

    def cube(self, i: int) -> Cube:
        return Cube(tuple(self.corners[i]), 1.0)


# ---------------------------------------------------------------- incidence

def _min_distance_cd(T: AffineSubspace, lo: np.ndarray, hi: np.ndarray, sweeps: int = 200) -> float:
    """min over the box of dist(x, T) by projected coordinate descent, with a least-squares fallback."""
    n = T.n
    Pp = np.eye(n) - T.basis.T @ T.basis
    x = (lo + hi) / 2
    for _ in range(sweeps):
        x_old = x.copy()
        for i in range(n):
            if Pp[i, i] <= 1e-15:
                continue
            r = Pp[i] @ (x - T.point)
            x[i] = min(max(x[i] - r / Pp[i, i], lo[i]), hi[i])
        if np.max(np.abs(x - x_old)) <= 1e-15:
            break
    d = float(np.linalg.norm(Pp @ (x - T.point)))
    if INCIDENCE_TOL < d < 1e-6:
        res = lsq_linear(Pp, Pp @ T.point, bounds=(lo, hi))
        d = min(d, float(np.linalg.norm(Pp @ (res.x - T.point))))
    return d


def cube_incidence(T: AffineSubspace, Q: Cube) -> bool:
    """True iff T comes within 1e-9 of the closed cube Q."""
    lo, hi = Q.lo, Q.hi
    if T.k == T.n:
        return True
    if T.k == T.n - 1:
        u = T.complement[0]
        b = u @ T.point
        vmin = u @ lo + np.minimum(u, 0).sum() * Q.side
        vmax = u @ lo + np.maximum(u, 0).sum() * Q.side
        return bool(vmin <= b + INCIDENCE_TOL and vmax >= b - INCIDENCE_TOL)
    return _min_distance_cd(T, lo, hi) <= INCIDENCE_TOL


def incidence_matrix(fam: AffineFamily, grid: DyadicGrid) -> np.ndarray:
    """Boolean (cubes, members) incidence over the grid."""
    C = grid.corners
    M = len(fam)
    out = np.zeros((C.shape[0], M), dtype=bool)
    if not M:
        return out
    n, k = fam.n, fam.k
    if k == n:
        out[:] = True
    elif k == n - 1:
        U = np.stack([T.complement[0] for T in fam.members])  # (M, n)
        b = np.einsum("ij,ij->i", U, np.stack([T.point for T in fam.members]))
        base = C @ U.T
        vmin = base + np.minimum(U, 0).sum(axis=1)
        vmax = base + np.maximum(U, 0).sum(axis=1)
        out = (vmin <= b + INCIDENCE_TOL) & (vmax >= b - INCIDENCE_TOL)
    elif k == 1:
        # slab test on the box expanded by the tolerance
        for m, T in enumerate(fam.members):
            d, a = T.basis[0], T.point
            lo, hi = C - INCIDENCE_TOL, C + 1 + INCIDENCE_TOL
            tmin = np.full(C.shape[0], -np.inf)
            tmax = np.full(C.shape[0], np.inf)
            ok = np.ones(C.shape[0], dtype=bool)
            for i in range(n):
                if abs(d[i]) < 1e-15:
                    ok &= (a[i] >= lo[:, i]) & (a[i] <= hi[:, i])
                else:
                    t1, t2 = (lo[:, i] - a[i]) / d[i], (hi[:, i] - a[i]) / d[i]
                    tmin = np.maximum(tmin, np.minimum(t1, t2))
                    tmax = np.minimum(tmax, np.maximum(t1, t2))
            out[:, m] = ok & (tmax >= tmin)
    elif k == 0:
        P = np.stack([T.point for T in fam.members])
        for m in range(M):
            out[:, m] = np.all((P[m] >= C - INCIDENCE_TOL) & (P[m] <= C + 1 + INCIDENCE_TOL), axis=1)
    else:
        centers = C + 0.5
        reach = math.sqrt(n) / 2 + INCIDENCE_TOL
        for m, T in enumerate(fam.members):
            dist = T.distance(centers)
            cand = np.nonzero(dist <= reach)[0]
            for c in cand:
                out[c, m] = _min_distance_cd(T, C[c], C[c] + 1) <= INCIDENCE_TOL
    return out


def section_volume(T: AffineSubspace, Q: Cube) -> float:
    """k-dimensional volume of T intersected with the closed cube."""
    if T.k == 0:
        return 1.0 if np.all((T.point >= Q.lo) & (T.point <= Q.hi)) else 0.0
    if T.k == T.n:
        return Q.side ** T.n
    if T.k == 1:
        d, a = T.basis[0], T.point
        tmin, tmax = -np.inf, np.inf
        for i in range(T.n):
            if abs(d[i]) < 1e-15:
                if not Q.lo[i] <= a[i] <= Q.hi[i]:
                    return 0.0
            else:
                t1, t2 = (Q.lo[i] - a[i]) / d[i], (Q.hi[i] - a[i]) / d[i]
                tmin, tmax = max(tmin, min(t1, t2)), min(tmax, max(t1, t2))
        return max(0.0, tmax - tmin)
    if T.k == T.n - 1 and T.n == 3:
        u = T.complement[0]
        return mesh_zero_set(PolyNVars.linear(u, float(u @ T.point)), Q, 1).area
    raise HarnessError(f"section volumes implemented for points, lines, planes in R^3 and full space (k={T.k}, n={T.n})")


# ---------------------------------------------------------------- BL per tuple

@dataclass
class BLSource:
    """Per-tuple BL constants with precedence closed form > Gaussian > truncated estimate."""

    p: tuple
    R: float
    mode: str = "auto"
    used: set = field(default_factory=set)
    _cache: dict = field(default_factory=dict)

    def __call__(self, subspaces: Sequence[AffineSubspace]) -> float:
        key = b"".join(np.round(T.basis, 12).tobytes() for T in subspaces)
        if key in self._cache:
            return self._cache[key]
        n = subspaces[0].n
        d = BLDatum(n, tuple(T.basis for T in subspaces), self.p)
        val, src = self._evaluate(d)
        self.used.add(src)
        self._cache[key] = val
        return val

    def _evaluate(self, d: BLDatum) -> tuple[float, str]:
        if self.mode in ("auto", "closed-form") and is_lw_datum(d):
            return lw_constant(d), "closed-form"
        if self.mode == "closed-form":
            raise HarnessError("closed form requested but the datum is not of Loomis-Whitney type")
        if self.mode in ("auto", "gaussian"):
            g = bl_gaussian(d)
            if g.status == "finite":
                return g.value, "gaussian"
            if g.status == "divergent" and self.mode == "auto" and d.scaling_exponent() == 0:
                return math.inf, "gaussian"
        est = bl_truncated_estimate(d, TruncationWindow(1.0, self.R))
        return est.value, "truncated-estimate"

    @property
    def label(self) -> str:
        return "+".join(sorted(self.used)) if self.used else "none"

    @property
    def diagnostic_only(self) -> bool:
        return "truncated-estimate" in self.used


# ---------------------------------------------------------------- reports

@dataclass
class KBLReport:
    kind: str
    lhs: float
    rhs: float
    rows: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @property
    def ratio(self) -> float:
        if self.rhs > 0:
            return self.lhs / self.rhs
        return 0.0 if self.lhs == 0 else math.inf

    def to_json(self) -> dict:
        return {"kind": self.kind, "lhs": self.lhs, "rhs": self.rhs, "ratio": self.ratio,
                "meta": self.meta, "rows": self.rows}

    def to_csv(self) -> str:
        out = io.StringIO()
        wr = csv.writer(out, lineterminator="\n")
        m = len(self.meta.get("family_sizes", []))
        wr.writerow(["cube"] + [f"incident_{j + 1}" for j in range(m)] + ["term", "cumulative"])
        for r in self.rows:
            wr.writerow([" ".join(repr(float(c)) for c in r["cube"])] + list(r["incident"]) + [repr(r["term"]), repr(r["cumulative"])])
        wr.writerow(["summary", f"lhs={self.lhs!r}", f"rhs={self.rhs!r}", f"ratio={self.ratio!r}",
                     f"bl_source={self.meta.get('bl_source', '')}", f"flags={';'.join(self.meta.get('flags', []))}"])
        return out.getvalue()


def _check_families(families: Sequence[AffineFamily]) -> int:
    if not families:
        raise HarnessError("need at least one family")
    n = families[0].n
    if any(f.n != n for f in families):
        raise HarnessError("families live in different dimensions")
    return n


# ---------------------------------------------------------------- uniform form

class IndicatorTube:
    """c times the indicator of the unit quotient cell [-1/2, 1/2)^{n_j} around the subspace."""

    def __init__(self, c: float = 1.0):
        self.c = float(c)

    def __call__(self, y: np.ndarray) -> np.ndarray:
        return self.c * np.all((y >= -0.5) & (y < 0.5), axis=1)

    def integral(self, n_j: int) -> float:
        return self.c


class CellMapTube:
    """Values on unit quotient cells floor(y + 1/2) = z; zero elsewhere."""

    def __init__(self, values: dict):
        self.values = {tuple(int(t) for t in k): float(v) for k, v in values.items()}
        if any(v < 0 for v in self.values.values()):
            raise HarnessError("tube values must be nonnegative")

    def __call__(self, y: np.ndarray) -> np.ndarray:
        z = np.floor(y + 0.5).astype(int)
        return np.array([self.values.get(tuple(row), 0.0) for row in z])

    def integral(self, n_j: int) -> float:
        return float(sum(self.values.values()))


def _ball_points(n: int, R: float, s: int) -> tuple[np.ndarray, np.ndarray]:
    grid = DyadicGrid(n, R)
    sub = (np.array(list(itertools.product(range(s), repeat=n))) + 0.5) / s
    X = (grid.corners[:, None, :] + sub[None]).reshape(-1, n)
    inside = np.linalg.norm(X, axis=1) <= R
    return X[inside], np.full(int(inside.sum()), 1.0 / s ** n)


def lhs_uniform(families: Sequence[AffineFamily], p: Sequence[float], R: float, tube_fns=None, subsample: int = 4) -> float:
    """Integral over B(0, R) of prod_j (sum_T f_{j,T}(x + T))^{p_j}, by subsampled unit cells."""
    n = _check_families(families)
    if len(p) != len(families):
        raise HarnessError("need one exponent per family")
    tubes = tube_fns or [IndicatorTube() for _ in families]
    if any(len(f) == 0 for f in families):
        return 0.0
    X, w = _ball_points(n, R, subsample)
    integrand = np.ones(X.shape[0])
    for fam, pj, phi in zip(families, p, tubes):
        acc = np.zeros(X.shape[0])
        for T in fam.members:
            acc += phi((X - T.point) @ T.complement.T)
        integrand *= acc ** pj
    return float(w @ integrand)


def rhs_uniform(families: Sequence[AffineFamily], p: Sequence[float], A: float | None = None, tube_fns=None,
                R: float = 1.0, sample_cap: int = 2000, seed: int = 0) -> tuple[float, float, str]:
    """(A prod_j (sum_T int f_{j,T})^{p_j}, A, source of A).

    When A is not given it is the max BL constant over direction tuples;
    beyond ``sample_cap`` tuples a seeded sample is used and flagged.
    """
    _check_families(families)
    tubes = tube_fns or [IndicatorTube() for _ in families]
    prod = 1.0
    for fam, pj, phi in zip(families, p, tubes):
        prod *= (len(fam) * phi.integral(fam.n - fam.k)) ** pj
    if A is not None:
        return A * prod, A, "given"
    if prod == 0:
        return 0.0, 0.0, "empty"
    src = BLSource(tuple(p), R)
    sizes = [len(f) for f in families]
    total = math.prod(sizes)
    if total <= sample_cap:
        tuples = itertools.product(*[range(s) for s in sizes])
        tag = ""
    else:
        rng = np.random.default_rng(seed)
        tuples = (tuple(int(rng.integers(s)) for s in sizes) for _ in range(sample_cap))
        tag = "sampled-max:"
    A = max(src([fam.members[i] for fam, i in zip(families, t)]) for t in tuples)
    return A * prod, A, tag + src.label


# ---------------------------------------------------------------- tensor-norm form

def _exponents(p: Sequence[float]) -> tuple[float, list[float]]:
    P = float(sum(p))
    if any(pj >= P for pj in p):
        raise HarnessError("every p_j must be smaller than P = sum p_j (the tensor norm needs exponents q_j = P/p_j > 1)")
    return P, [P / pj for pj in p]


def _cube_tensor(families, idx: list[np.ndarray], bl: BLSource, P: float, rng) -> tuple[np.ndarray, bool]:
    sampled = False
    sizes = [len(i) for i in idx]
    if math.prod(sizes) > TUPLE_CAP:
        per = max(1, int(TUPLE_CAP ** (1 / len(idx))))
        idx = [np.sort(rng.choice(i, size=min(per, len(i)), replace=False)) for i in idx]
        sampled = True
    F = np.zeros([len(i) for i in idx])
    for pos in itertools.product(*[range(len(i)) for i in idx]):
        val = bl([fam.members[i[k]] for fam, i, k in zip(families, idx, pos)])
        F[pos] = 0.0 if not math.isfinite(val) else val ** (-1.0 / P)
    return F, sampled


def _tensor_term(F: np.ndarray, weights: list[np.ndarray], q: list[float], P: float, seed: int) -> float:
    if F.size == 0 or not np.any(F > 0):
        return 0.0
    return fremlin_norm(NonnegTensor(F, weights), q, seed=seed).value ** P


def lhs_fremlin(families: Sequence[AffineFamily], p: Sequence[float], R: float, bl_source: str = "auto",
                seed: int = 0, threads: int = 1) -> KBLReport:
    """Sum over cubes of the P-th power of the tensor norm of BL^{-1/P} over incident tuples."""
    n = _check_families(families)
    P, q = _exponents(p)
    grid = DyadicGrid(n, R)
    inc = [incidence_matrix(f, grid) for f in families]
    bl = BLSource(tuple(p), R, bl_source)
    live = np.nonzero(np.all([I.any(axis=1) for I in inc], axis=0))[0]

    def work(c):
        idx = [np.nonzero(I[c])[0] for I in inc]
        F, sampled = _cube_tensor(families, idx, bl, P, np.random.default_rng([seed, int(c)]))
        term = _tensor_term(F, [np.ones(s) for s in F.shape], q, P, seed + int(c))
        return [len(i) for i in idx], term, sampled

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            results = list(ex.map(work, live))
    else:
        results = [work(c) for c in live]
    rows, total, flags = [], 0.0, set()
    for c, (counts, term, sampled) in zip(live, results):
        if sampled:
            flags.add("sampled")
        total += term
        rows.append({"cube": grid.corners[c].tolist(), "incident": counts, "term": term, "cumulative": total})
    if bl.diagnostic_only:
        flags.add("diagnostic-only")
    rhs = math.prod(len(f) ** pj for f, pj in zip(families, p))
    meta = {"R": R, "family_sizes": [len(f) for f in families], "exponents": list(p),
            "bl_source": bl.label, "flags": sorted(flags), "value_label": "upper bound (multi-start)"}
    return KBLReport("fremlin", total, float(rhs), rows, meta)


# ---------------------------------------------------------------- wedge (Loomis-Whitney) form

def lw_kakeya(families: Sequence[AffineFamily], R: float) -> KBLReport:
    """Sum over cubes of (sum over incident tuples of |T_1 ^ ... ^ T_m|)^{1/(m-1)} against prod |T_j|^{1/(m-1)}."""
    n = _check_families(families)
    m = len(families)
    if m < 2:
        raise HarnessError("need at least two families")
    if sum(f.k for f in families) != n:
        raise HarnessError(f"dimensions must add up to n: {sum(f.k for f in families)} != {n}")
    grid = DyadicGrid(n, R)
    inc = [incidence_matrix(f, grid) for f in families]
    rhs = math.prod(len(f) for f in families) ** (1.0 / (m - 1))
    meta = {"R": R, "family_sizes": [len(f) for f in families], "exponents": [1.0 / (m - 1)] * m,
            "bl_source": "closed-form", "flags": []}
    if any(len(f) == 0 for f in families):
        return KBLReport("lw", 0.0, float(rhs), [], meta)
    # W[t_1, ..., t_m] = |T_1 ^ ... ^ T_m| = |det of stacked bases|
    bases = [np.stack([T.basis for T in f.members]) for f in families]  # (N_j, k_j, n)
    sizes = [len(f) for f in families]
    W = np.zeros(sizes)
    rest = list(itertools.product(*[range(s) for s in sizes[1:]]))
    for i0 in range(sizes[0]):
        stacks = np.stack([np.vstack([bases[0][i0]] + [b[i] for b, i in zip(bases[1:], pos)]) for pos in rest])
        W[i0] = np.abs(np.linalg.det(stacks)).reshape(sizes[1:])
    rows, total = [], 0.0
    live = np.nonzero(np.all([I.any(axis=1) for I in inc], axis=0))[0]
    for c in live:
        idx = [np.nonzero(I[c])[0] for I in inc]
        s = float(W[np.ix_(*idx)].sum())
        term = s ** (1.0 / (m - 1))
        total += term
        rows.append({"cube": grid.corners[c].tolist(), "incident": [len(i) for i in idx], "term": term, "cumulative": total})
    return KBLReport("lw", total, float(rhs), rows, meta)


# ---------------------------------------------------------------- S_j and G

def tangent_measure(H: AffineFamily, Q: Cube) -> GradedMeasure:
    """Atoms (direction blade of T, vol_k(T cap Q)) over members meeting Q."""
    vecs, weights = [], []
    for T in H.members:
        if cube_incidence(T, Q):
            v = section_volume(T, Q)
            if v > 0:
                vecs.append(T.basis)
                weights.append(v)
    if not vecs:
        return GradedMeasure.empty(H.n, H.k)
    return GradedMeasure(H.n, H.k, np.stack(vecs), weights)


def sj_functional(H: AffineFamily, Q: Cube, sigma: PolynomialMixture | GradedMeasure, R: float, cells: int | None = None) -> float:
    """R^{-k} sum over tangent atoms of vol * |<T, mu_Q^{^k}>|."""
    mu = sigma if isinstance(sigma, GradedMeasure) else mixture_normal_measure(sigma, Q, cells)
    tq = tangent_measure(H, Q)
    total = 0.0
    for Tb, w in tq.atoms:
        total += w * pairing_moment_power(mu, H.k, Tb)
    return R ** (-H.k) * total


def g_functional(H: Sequence[AffineFamily], p: Sequence[float], Q: Cube, R: float, bl_source: str = "auto",
                 seed: int = 0) -> float:
    """P-th power of the weighted tensor norm of BL^{-1/P} over members meeting Q, weights vol_k(T cap Q)."""
    _check_families(H)
    P, q = _exponents(p)
    bl = BLSource(tuple(p), R, bl_source)
    idx, wts = [], []
    for fam in H:
        keep, w = [], []
        for i, T in enumerate(fam.members):
            if cube_incidence(T, Q):
                v = section_volume(T, Q)
                if v > 0:
                    keep.append(i)
                    w.append(v)
        if not keep:
            return 0.0
        idx.append(np.array(keep))
        wts.append(np.array(w))
    F, _ = _cube_tensor(H, idx, bl, P, np.random.default_rng(seed))
    return _tensor_term(F, wts, q, P, seed)


# ---------------------------------------------------------------- duality

@dataclass
class DualityReport:
    converse_ok: bool
    forward_ok: bool
    C1P: float
    C2: float
    max_violation: float
    chain: list
    S: np.ndarray

    @property
    def ok(self) -> bool:
        return self.converse_ok and self.forward_ok


def _ansatz(G: np.ndarray, M: np.ndarray, P: float, degs: np.ndarray, C2: float) -> np.ndarray:
    s = G ** (1 / P) * M ** (1 - 1 / P)
    tot = s.sum()
    S = s / tot if tot > 0 else np.zeros_like(s)
    return C2 * S[None, :] * degs[:, None]


def duality_check(G, M, p: Sequence[float], degs: Sequence[float], S=None, tol: float = 1e-9) -> DualityReport:
    """Both directions of the equivalence between the summed bound on G and the per-cube factorization.

    Converse: the normalized ansatz S_j = C2 S deg_j with C2 = 1 and
    C1^P = sum G / prod deg^{p_j} satisfies both per-cube conditions.
    Forward: with M = G / sum G and the given (or ansatz) S_j, each step of
    the Hoelder chain is checked and the realized constants bound sum G.
    """
    G = np.asarray(G, dtype=float)
    M = np.asarray(M, dtype=float)
    degs = np.asarray(degs, dtype=float)
    p = np.asarray(p, dtype=float)
    if G.shape != M.shape:
        raise HarnessError("G and M need one value per cube")
    if np.any(G < 0) or np.any(M < 0):
        raise HarnessError("G and M must be nonnegative")
    if abs(M.sum() - 1) > 1e-12:
        raise HarnessError(f"M must sum to 1 (got {M.sum()!r})")
    P = float(p.sum())
    if P < 1:
        raise HarnessError(f"need P = sum p_j >= 1 (got {P!r})")
    total = float(G.sum())
    degprod = float(np.prod(degs ** p))
    C2 = 1.0
    C1P = total / degprod
    viol = 0.0

    def excess(lhs, rhs):
        return (lhs - rhs) / max(abs(rhs), abs(lhs), 1e-300)

    # converse direction
    Sc = _ansatz(G, M, P, degs, C2)
    lhs34 = G * M ** (P - 1)
    rhs34 = C1P * np.prod(Sc ** p[:, None], axis=0)
    e34 = max((excess(a, b) for a, b in zip(lhs34, rhs34)), default=0.0)
    e35 = max(excess(Sc[j].sum(), C2 * degs[j]) for j in range(len(degs)))
    viol = max(viol, e34, e35)
    converse_ok = e34 <= tol and e35 <= tol

    # forward direction with M = G / sum G
    chain = []
    forward_ok = True
    if total > 0:
        Mf = G / total
        Sf = _ansatz(G, Mf, P, degs, C2) if S is None else np.asarray(S, dtype=float)
        prodS = np.prod(Sf ** p[:, None], axis=0)
        with np.errstate(divide="ignore", invalid="ignore"):
            need = np.where(G > 0, G * Mf ** (P - 1) / prodS, 0.0)
        c1p = float(np.max(need))
        c2 = float(max(Sf[j].sum() / degs[j] for j in range(len(degs))))
        steps = [
            ("identity", total, float((G ** (1 / P) * Mf ** ((P - 1) / P)).sum() ** P)),
            ("per-cube", float((G ** (1 / P) * Mf ** ((P - 1) / P)).sum() ** P), c1p * float((prodS ** (1 / P)).sum() ** P)),
            ("hoelder", c1p * float((prodS ** (1 / P)).sum() ** P), c1p * float(np.prod(Sf.sum(axis=1) ** p))),
            ("degree", c1p * float(np.prod(Sf.sum(axis=1) ** p)), c1p * c2 ** P * degprod),
        ]
        for name, a, b in steps:
            e = excess(a, b) if name != "identity" else abs(excess(a, b))
            chain.append({"step": name, "lhs": a, "rhs": b, "excess": e})
            viol = max(viol, e)
            forward_ok &= e <= tol
    return DualityReport(converse_ok, forward_ok, C1P, C2, viol, chain, Sc)


def uniform_from_tensor_check(families: Sequence[AffineFamily], p: Sequence[float], R: float, A: float | None = None,
                              bl_source: str = "auto") -> tuple[float, float, float]:
    """(LHS_uniform, C_obs^P * A * prod (sum int f)^{p_j}, C_obs^P) with C_obs^P read off lhs_fremlin.

    Uses unit-tube indicators, so the uniform bound should dominate the
    uniform LHS up to discretization.
    """
    rep = lhs_fremlin(families, p, R, bl_source)
    cP = rep.ratio
    lhs = lhs_uniform(families, p, R)
    bound, _, _ = rhs_uniform(families, p, A, R=R)
    return lhs, cP * bound, cP
