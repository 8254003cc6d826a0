"""Brascamp-Lieb data: growth exponents, BCCT conditions, and constant estimates.

The quotient R^n / T_j is realized as the orthogonal complement of T_j with
its Euclidean metric.  Quotient coordinates use the basis obtained by
projecting e_1, ..., e_n onto the complement and orthonormalizing in order,
so axis-aligned data get axis-aligned quotient grids.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.linalg import expm

from .exterior import Blade, blade_norm

log = logging.getLogger(__name__)

ORTHO_TOL = 1e-10
RANK_TOL = 1e-9
LATTICE_CAP = 512
SUBSAMPLE = 4
# rotated quotient grids are not constant on ambient cells; integrate them on a finer lattice
SUBSAMPLE_ROTATED = {1: 4, 2: 16, 3: 8}


class BLError(ValueError):
    pass


def orthonormalize(rows: np.ndarray, tol: float = RANK_TOL) -> np.ndarray:
    """Gram-Schmidt on rows in order, dropping dependent ones."""
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    n = rows.shape[1]
    out: list[np.ndarray] = []
    for r in rows:
        v = r.copy()
        for _ in range(2):
            for q in out:
                v -= (q @ v) * q
        nv = np.linalg.norm(v)
        if nv > tol:
            out.append(v / nv)
    return np.array(out).reshape(len(out), n)


def complement_basis(basis: np.ndarray, n: int) -> np.ndarray:
    """Orthonormal basis of the orthogonal complement, built from projected e_i."""
    basis = np.asarray(basis, dtype=float).reshape(-1, n)
    proj = np.eye(n) - basis.T @ basis
    return orthonormalize(proj)


def projector(basis: np.ndarray, n: int) -> np.ndarray:
    basis = np.asarray(basis, dtype=float).reshape(-1, n)
    return basis.T @ basis


def _rank(rows: np.ndarray) -> int:
    if rows.size == 0:
        return 0
    s = np.linalg.svd(rows, compute_uv=False)
    return int(np.sum(s > RANK_TOL * max(1.0, s[0])))


def subspace_sum(a: np.ndarray, b: np.ndarray, n: int) -> np.ndarray:
    stacked = np.vstack([a.reshape(-1, n), b.reshape(-1, n)])
    if stacked.shape[0] == 0:
        return stacked
    u, s, vt = np.linalg.svd(stacked, full_matrices=False)
    r = int(np.sum(s > RANK_TOL * max(1.0, s[0]))) if s.size else 0
    return vt[:r]


def subspace_intersection(a: np.ndarray, b: np.ndarray, n: int) -> np.ndarray:
    """Orthonormal basis of span(a) ∩ span(b), as the complement of a^⊥ + b^⊥."""
    ca = complement_basis(a, n)
    cb = complement_basis(b, n)
    return complement_basis(subspace_sum(ca, cb, n), n)


def intersection_dim(a: np.ndarray, b: np.ndarray, n: int) -> int:
    a = a.reshape(-1, n)
    b = b.reshape(-1, n)
    return a.shape[0] + b.shape[0] - _rank(np.vstack([a, b]))


@dataclass(frozen=True, eq=False)
class BLDatum:
    """Tuple of linear subspaces (orthonormal row bases) with positive exponents."""

    n: int
    subspaces: tuple
    exponents: tuple
    complements: tuple = field(init=False, repr=False)

    def __post_init__(self):
        if self.n < 1:
            raise BLError("ambient dimension must be positive")
        if len(self.subspaces) != len(self.exponents):
            raise BLError("need one exponent per subspace")
        if len(self.subspaces) == 0:
            raise BLError("empty datum")
        subs = []
        for T in self.subspaces:
            T = np.asarray(T, dtype=float).reshape(-1, self.n)
            if T.shape[0] > self.n:
                raise BLError("subspace basis has more rows than the dimension")
            if T.shape[0] and np.max(np.abs(T @ T.T - np.eye(T.shape[0]))) > ORTHO_TOL:
                raise BLError("subspace bases must be orthonormal to 1e-10; use BLDatum.create to orthonormalize")
            T = T.copy()
            T.setflags(write=False)
            subs.append(T)
        exps = tuple(float(p) for p in self.exponents)
        if any(not p > 0 for p in exps):
            raise BLError("exponents must be positive")
        comps = []
        for T in subs:
            C = complement_basis(T, self.n)
            C.setflags(write=False)
            comps.append(C)
        object.__setattr__(self, "subspaces", tuple(subs))
        object.__setattr__(self, "exponents", exps)
        object.__setattr__(self, "complements", tuple(comps))

    @classmethod
    def create(cls, n: int, subspaces: Sequence, exponents: Sequence[float]) -> "BLDatum":
        """Build a datum, orthonormalizing each spanning set (warns if the change exceeds 1e-6)."""
        subs = []
        for S in subspaces:
            S = np.asarray(S, dtype=float).reshape(-1, n)
            Q = orthonormalize(S)
            if Q.shape[0] != S.shape[0]:
                raise BLError("subspace spanning rows are linearly dependent")
            if S.shape[0] and np.max(np.abs(Q - S)) > 1e-6:
                log.warning("orthonormalized a subspace basis (max adjustment %.3g)", np.max(np.abs(Q - S)))
            subs.append(Q)
        return cls(n, tuple(subs), tuple(exponents))

    @classmethod
    def from_json(cls, obj) -> "BLDatum":
        if isinstance(obj, str):
            obj = json.loads(obj)
        n = int(obj["n"])
        subs = [np.array(S, dtype=float).reshape(-1, n) for S in obj["subspaces"]]
        return cls.create(n, subs, obj["exponents"])

    def to_json(self) -> dict:
        return {"n": self.n, "subspaces": [T.tolist() for T in self.subspaces], "exponents": list(self.exponents)}

    @property
    def m(self) -> int:
        return len(self.subspaces)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(T.shape[0] for T in self.subspaces)

    @property
    def codims(self) -> tuple[int, ...]:
        """n_j = n - dim T_j."""
        return tuple(self.n - k for k in self.dims)

    @property
    def total_power(self) -> float:
        return float(sum(self.exponents))

    def scaling_exponent(self) -> float:
        """n - sum p_j n_j."""
        return self.n - sum(p * nj for p, nj in zip(self.exponents, self.codims))

    def key(self) -> bytes:
        return b"".join(C.tobytes() for C in self.complements) + repr((self.n, self.dims)).encode()


def axes_datum(n: int = 2) -> BLDatum:
    """Coordinate Loomis-Whitney datum: hyperplanes e_i^⊥ with p_j = 1/(n-1); for n=2 the two axes."""
    subs = [np.eye(n)[[i]] for i in range(n)] if n == 2 else [np.delete(np.eye(n), i, axis=0) for i in range(n)]
    p = 1.0 if n == 2 else 1.0 / (n - 1)
    return BLDatum(n, tuple(subs), (p,) * n)


def lines_datum(theta: float, p: tuple[float, float] = (1.0, 1.0)) -> BLDatum:
    """Two lines in R^2: the x-axis and the line at angle theta."""
    return BLDatum(2, (np.array([[1.0, 0.0]]), np.array([[math.cos(theta), math.sin(theta)]])), p)


# ---------------------------------------------------------------- exponents

@dataclass(frozen=True)
class SubspaceLattice:
    """Finite family of subspaces closed (up to the cap) under sums and intersections."""

    n: int
    members: tuple
    complete: bool = True

    def __len__(self) -> int:
        return len(self.members)


def _lattice_key(basis: np.ndarray, n: int) -> tuple:
    P = projector(basis, n)
    return (basis.shape[0], tuple(np.round(P.reshape(-1), 9) + 0.0))


def build_lattice(d: BLDatum, cap: int = LATTICE_CAP, extra: Sequence[np.ndarray] = ()) -> SubspaceLattice:
    """Lattice generated by {0}, R^n and the T_j (plus optional extra subspaces)."""
    n = d.n
    found: list[np.ndarray] = []
    projs: list[np.ndarray] = []

    def add(B: np.ndarray) -> bool:
        B = B.reshape(-1, n)
        P = projector(B, n)
        for Q in projs:
            if Q.shape == P.shape and np.max(np.abs(Q - P)) < 1e-8:
                return False
        found.append(B)
        projs.append(P)
        return True

    add(np.zeros((0, n)))
    add(np.eye(n))
    for T in d.subspaces:
        add(T)
    for E in extra:
        add(orthonormalize(E) if np.asarray(E).size else np.zeros((0, n)))
    complete = True
    i = 0
    while i < len(found):
        for j in range(i):
            for B in (subspace_sum(found[i], found[j], n), subspace_intersection(found[i], found[j], n)):
                if len(found) >= cap:
                    complete = False
                    break
                add(B)
        i += 1
        if len(found) >= cap:
            complete = False
            break
    members = sorted(found, key=lambda B: _lattice_key(B, n))
    return SubspaceLattice(n, tuple(members), complete)


@dataclass(frozen=True)
class ExponentResult:
    value: float
    exact: Fraction
    subspace: np.ndarray
    certificate: str = "lattice-certified"


def _frac(x: float) -> Fraction:
    return Fraction(x)


def _kappa_term(d: BLDatum, V: np.ndarray) -> Fraction:
    """dim V - sum p_j dim(V / T_j), with dim(V/T_j) = dim V - dim(V ∩ T_j)."""
    dv = V.shape[0]
    total = Fraction(dv)
    for T, p in zip(d.subspaces, d.exponents):
        total -= _frac(p) * (dv - intersection_dim(V, T, d.n))
    return total


def _scaling_exact(d: BLDatum) -> Fraction:
    return Fraction(d.n) - sum((_frac(p) * nj for p, nj in zip(d.exponents, d.codims)), Fraction(0))


def kappa(d: BLDatum, lat: SubspaceLattice | None = None) -> ExponentResult:
    """Discrete growth exponent: max over the lattice; ties go to the first (smallest) member."""
    lat = lat or build_lattice(d)
    best, arg = None, None
    for V in lat.members:
        t = _kappa_term(d, V)
        if best is None or t > best:
            best, arg = t, V
    return ExponentResult(float(best), best, arg, "lattice-certified" if lat.complete else "lattice-capped")


def kappa_tilde(d: BLDatum, lat: SubspaceLattice | None = None) -> ExponentResult:
    """Local growth exponent: min over the lattice of codim V - sum p_j codim(V / T_j)."""
    lat = lat or build_lattice(d)
    s = _scaling_exact(d)
    best, arg = None, None
    for V in lat.members:
        t = s - _kappa_term(d, V)
        if best is None or t < best:
            best, arg = t, V
    return ExponentResult(float(best), best, arg, "lattice-certified" if lat.complete else "lattice-capped")


def check_scaling(d: BLDatum) -> tuple[bool, float]:
    res = d.scaling_exponent()
    return abs(res) < 1e-9, res


def check_discrete(d: BLDatum, lat: SubspaceLattice | None = None) -> bool:
    return kappa(d, lat).exact == 0


def check_local(d: BLDatum, lat: SubspaceLattice | None = None) -> bool:
    return kappa_tilde(d, lat).exact == 0


# ---------------------------------------------------------------- closed form

def lw_constant(d: BLDatum) -> float:
    """|T_1 ^ ... ^ T_m|^{-1/(m-1)} for k-plane data with sum k_j = n and p_j = 1/(m-1).

    Returns ``math.inf`` when the wedge vanishes.
    """
    m = d.m
    if m < 2:
        raise BLError("closed form needs at least two subspaces")
    if sum(d.dims) != d.n:
        raise BLError(f"closed form needs sum of dimensions = n ({sum(d.dims)} != {d.n})")
    if any(abs(p - 1.0 / (m - 1)) > 1e-12 for p in d.exponents):
        raise BLError("closed form needs p_j = 1/(m-1)")
    w = blade_norm(Blade(np.vstack(d.subspaces)).mv)
    if w < 1e-14:
        return math.inf
    return w ** (-1.0 / (m - 1))


def is_lw_datum(d: BLDatum) -> bool:
    m = d.m
    return (m >= 2 and sum(d.dims) == d.n
            and all(abs(p - 1.0 / (m - 1)) <= 1e-12 for p in d.exponents))


# ---------------------------------------------------------------- truncated constant

@dataclass(frozen=True)
class TruncationWindow:
    r: float
    R: float

    def __post_init__(self):
        if not (0 < self.r < self.R < math.inf):
            raise BLError(f"need 0 < r < R < inf, got r={self.r}, R={self.R}")


@dataclass
class QuotientFn:
    """Function on R^n / T_j, constant on the scale-r cells of the quotient grid.

    ``values`` maps integer cell indices (length n_j tuples, in units of r)
    to nonnegative values; unlisted cells are zero.
    """

    j: int
    r: float
    values: dict

    def __post_init__(self):
        for v in self.values.values():
            if v < 0 or not math.isfinite(v):
                raise BLError("quotient function values must be finite and nonnegative")

    def integral(self, n_j: int) -> float:
        return self.r ** n_j * float(sum(self.values.values()))


def is_axis_aligned(d: BLDatum) -> bool:
    for C in d.complements:
        if C.size and not np.all((np.abs(C) < 1e-14) | (np.abs(np.abs(C) - 1) < 1e-14)):
            return False
    return True


def subsample_count(d: BLDatum) -> int:
    """Points per axis per unit cell: 4 when every quotient grid is aligned with Z^n."""
    if is_axis_aligned(d):
        return SUBSAMPLE
    return SUBSAMPLE_ROTATED.get(d.n, 4)


class _Domain:
    """Unit-scale incidence structure of B(0, rho) against the quotient grids.

    Every unit cell of Z^n meeting the ball is subsampled at S^n points
    (see ``subsample_count``); ``tuples`` lists distinct (cell_1, ..., cell_m) quotient-cell
    combinations with their ball volume ``vol``.
    """

    def __init__(self, d: BLDatum, rho: float):
        n = d.n
        self.rho = rho
        S = subsample_count(d)
        lo = int(math.floor(-rho)) - 1
        hi = int(math.ceil(rho)) + 1
        axis = np.arange(lo, hi)
        # cell c = [c, c+1]^n meets the open ball iff its nearest point is inside
        grids = np.meshgrid(*([axis] * n), indexing="ij")
        cells = np.stack([g.reshape(-1) for g in grids], axis=1)
        nearest = np.clip(0.0, cells, cells + 1)
        cells = cells[np.sum(nearest ** 2, axis=1) < rho ** 2]
        offs1 = (np.arange(S) + 0.5) / S
        offs = np.stack([g.reshape(-1) for g in np.meshgrid(*([offs1] * n), indexing="ij")], axis=1)
        pts = (cells[:, None, :] + offs[None, :, :]).reshape(-1, n)
        pts = pts[np.sum(pts ** 2, axis=1) <= rho ** 2]
        w = float(S) ** (-n)
        self.n_cells = cells.shape[0]
        ids = []
        self.cells: list[np.ndarray] = []
        for C in d.complements:
            if C.shape[0] == 0:
                cj = np.zeros((1, 0), dtype=np.int64)
                inv = np.zeros(pts.shape[0], dtype=np.int64)
            else:
                q = np.floor(pts @ C.T + 1e-12).astype(np.int64)
                cj, inv = np.unique(q, axis=0, return_inverse=True)
                inv = inv.reshape(-1)
            self.cells.append(cj)
            ids.append(inv)
        key = np.zeros(pts.shape[0], dtype=np.int64)
        for inv, cj in zip(ids, self.cells):
            key = key * cj.shape[0] + inv
        ukey, kinv = np.unique(key, return_inverse=True)
        self.vol = np.bincount(kinv.reshape(-1), minlength=ukey.shape[0]) * w
        tup = np.empty((ukey.shape[0], len(self.cells)), dtype=np.int64)
        rest = ukey.copy()
        for jj in range(len(self.cells) - 1, -1, -1):
            size = self.cells[jj].shape[0]
            tup[:, jj] = rest % size
            rest //= size
        self.tuples = tup
        self.centers = [c + 0.5 for c in self.cells]


_DOMAIN_CACHE: dict = {}


def _domain(d: BLDatum, rho: float) -> _Domain:
    key = (d.key(), float(rho))
    dom = _DOMAIN_CACHE.get(key)
    if dom is None:
        if len(_DOMAIN_CACHE) > 32:
            _DOMAIN_CACHE.clear()
        dom = _Domain(d, rho)
        _DOMAIN_CACHE[key] = dom
    return dom


def _unit_ratio(dom: _Domain, p: np.ndarray, F: Sequence[np.ndarray]) -> float:
    """Ratio at unit scale for arrays F_j over the domain's quotient cells."""
    sums = [f.sum() for f in F]
    if any(s <= 0 for s in sums):
        return 0.0
    prod = dom.vol.copy()
    for jj, f in enumerate(F):
        prod *= f[dom.tuples[:, jj]] ** p[jj]
    lhs = prod.sum()
    den = 1.0
    for s, pj in zip(sums, p):
        den *= s ** pj
    return float(lhs / den)


def bl_ratio(d: BLDatum, w: TruncationWindow, inputs: Sequence[QuotientFn]) -> float:
    """LHS / prod (int f_j)^{p_j} of the truncated BL inequality for explicit inputs."""
    if not inputs:
        raise BLError("no inputs")
    if len(inputs) != d.m:
        raise BLError(f"need {d.m} inputs, got {len(inputs)}")
    by_j = {f.j: f for f in inputs}
    if sorted(by_j) != list(range(d.m)):
        raise BLError("inputs must cover each subspace index exactly once")
    dom = _domain(d, w.R / w.r)
    p = np.array(d.exponents)
    F = []
    for jj in range(d.m):
        f = by_j[jj]
        if abs(f.r - w.r) > 1e-12 * w.r:
            raise BLError("input scale does not match the truncation window")
        if f.integral(d.codims[jj]) <= 0:
            raise BLError(f"input {jj} has zero integral")
        cells = dom.cells[jj]
        F.append(np.array([f.values.get(tuple(int(x) for x in c), 0.0) for c in cells], dtype=float))
    prod = dom.vol.copy()
    for jj, f in enumerate(F):
        prod *= f[dom.tuples[:, jj]] ** p[jj]
    lhs = w.r ** d.n * prod.sum()
    den = 1.0
    for jj in range(d.m):
        den *= by_j[jj].integral(d.codims[jj]) ** p[jj]
    return float(lhs / den)


@dataclass
class BLEstimate:
    value: float
    inputs: list
    family: str
    window: TruncationWindow


def _candidates(dom: _Domain, p: np.ndarray):
    m = len(dom.cells)
    rad = [np.sqrt(np.sum(c ** 2, axis=1)) for c in dom.centers]
    yield "all-cells", [np.ones(c.shape[0]) for c in dom.cells]
    s = 0.5
    while s < 2 * dom.rho + 2:
        yield f"disc({s:g})", [(r <= s + 1e-12).astype(float) for r in rad]
        yield f"gauss({s:g})", [np.exp(-0.5 * (r / s) ** 2) for r in rad]
        s *= 2
    order = np.lexsort((np.arange(dom.vol.shape[0]), -dom.vol))
    t = dom.tuples[order[0]]
    yield "cell", [np.eye(1, dom.cells[jj].shape[0], t[jj]).reshape(-1) for jj in range(m)]


def _ascend(dom: _Domain, p: np.ndarray, F0, iters: int) -> tuple[float, list]:
    """Gradient ascent of the log ratio in log cell values with step halving."""
    floor = 1e-9
    F = [np.maximum(f / f.max(), floor) for f in F0]
    logF = [np.log(f) for f in F]
    cur = _unit_ratio(dom, p, F)
    step = 0.5
    m = len(F)
    for _ in range(iters):
        prod = dom.vol.copy()
        for jj in range(m):
            prod *= F[jj][dom.tuples[:, jj]] ** p[jj]
        L = prod.sum()
        if L <= 0:
            break
        grads = []
        for jj in range(m):
            A = np.bincount(dom.tuples[:, jj], weights=prod, minlength=F[jj].shape[0])
            grads.append(p[jj] * (A / L - F[jj] / F[jj].sum()))
        gmax = max(np.abs(g).max() for g in grads)
        if gmax < 1e-14:
            break
        improved = False
        while step > 1e-6:
            trial_log = [lf + step * g / gmax for lf, g in zip(logF, grads)]
            trial = [np.exp(t - t.max()) for t in trial_log]
            val = _unit_ratio(dom, p, trial)
            if val > cur * (1 + 1e-13):
                logF = [np.log(np.maximum(t, 1e-300)) for t in trial]
                F = trial
                cur = val
                step = min(step * 1.5, 4.0)
                improved = True
                break
            step *= 0.5
        if not improved:
            break
    return cur, F


def bl_truncated_estimate(d: BLDatum, w: TruncationWindow, iters: int = 40, ascent_starts: int = 2) -> BLEstimate:
    """Lower bound on BL(T, p, (r, R)) from an explicit input family plus ascent.

    All work happens at unit scale on B(0, R/r); the result is multiplied by
    r^{n - sum p_j n_j}, so the scaling identity holds by construction.
    """
    dom = _domain(d, w.R / w.r)
    p = np.array(d.exponents)
    scored = []
    for name, F in _candidates(dom, p):
        scored.append((_unit_ratio(dom, p, F), name, F))
    scored.sort(key=lambda t: -t[0])
    best_val, best_name, best_F = scored[0]
    if iters > 0:
        for val, name, F in scored[:ascent_starts]:
            v2, F2 = _ascend(dom, p, F, iters)
            if v2 > best_val:
                best_val, best_name, best_F = v2, f"ascent<{name}>", F2
    factor = w.r ** d.scaling_exponent()
    inputs = []
    for jj, f in enumerate(best_F):
        vals = {tuple(int(x) for x in c): float(v) for c, v in zip(dom.cells[jj], f) if v > 0}
        inputs.append(QuotientFn(jj, w.r, vals))
    return BLEstimate(factor * best_val, inputs, best_name, w)


# ---------------------------------------------------------------- Gaussian constant

@dataclass
class GaussianResult:
    value: float
    status: str  # "finite" | "divergent" | "not-applicable"
    covariances: list | None = None


def _gauss_log_ratio(B: Sequence[np.ndarray], p: np.ndarray, A: Sequence[np.ndarray], n: int) -> float:
    M = np.zeros((n, n))
    num = 0.0
    for Bj, Aj, pj in zip(B, A, p):
        if Bj.shape[0] == 0:
            continue
        M += pj * Bj.T @ Aj @ Bj
        sign, ld = np.linalg.slogdet(Aj)
        num += pj * ld
    sign, ldM = np.linalg.slogdet(M)
    if sign <= 0 or ldM < -700:
        return math.inf
    return 0.5 * (num - ldM)


def _sqrtm_psd(A: np.ndarray) -> np.ndarray:
    w, V = np.linalg.eigh(A)
    return (V * np.sqrt(np.maximum(w, 0))) @ V.T


def bl_gaussian(d: BLDatum, iters: int = 300, restarts: int = 8, seed: int = 0, cap: float = 1e12,
                lat: SubspaceLattice | None = None) -> GaussianResult:
    """Scale-invariant BL constant as a supremum over centered Gaussian inputs.

    Ascent runs on the quotient covariances in the affine-invariant geometry
    (updates A <- A^{1/2} exp(t A^{1/2} G A^{1/2}) A^{1/2}) with step halving.
    """
    ok, _ = check_scaling(d)
    if not ok:
        return GaussianResult(math.nan, "not-applicable")
    n = d.n
    B = list(d.complements)
    p = np.array(d.exponents)
    if not check_discrete(d, lat):
        return GaussianResult(math.inf, "divergent")
    logcap = math.log(cap)
    rng = np.random.default_rng(seed)
    best = -math.inf
    best_A = None
    for rs in range(restarts):
        if rs == 0:
            A = [np.eye(Bj.shape[0]) for Bj in B]
        else:
            A = []
            for Bj in B:
                k = Bj.shape[0]
                S = rng.normal(size=(k, k))
                A.append(expm(0.5 * (S + S.T)))
        cur = _gauss_log_ratio(B, p, A, n)
        if cur == math.inf or cur > logcap:
            return GaussianResult(math.inf, "divergent")
        step = 0.5
        for _ in range(iters):
            M = sum(pj * Bj.T @ Aj @ Bj for Bj, Aj, pj in zip(B, A, p) if Bj.shape[0])
            Minv = np.linalg.inv(M)
            dirs = []
            for Bj, Aj, pj in zip(B, A, p):
                if Bj.shape[0] == 0:
                    dirs.append(None)
                    continue
                G = 0.5 * pj * (np.linalg.inv(Aj) - Bj @ Minv @ Bj.T)
                H = _sqrtm_psd(Aj)
                dirs.append((H, H @ G @ H))
            gnorm = math.sqrt(sum(float(np.sum(x[1] ** 2)) for x in dirs if x is not None))
            if gnorm < 1e-12:
                break
            accepted = False
            while step > 1e-10:
                trial = []
                for Aj, x in zip(A, dirs):
                    if x is None:
                        trial.append(Aj)
                        continue
                    H, S = x
                    E = expm(step * (S + S.T) / 2)
                    T = H @ E @ H
                    trial.append(0.5 * (T + T.T))
                val = _gauss_log_ratio(B, p, trial, n)
                if val > logcap:
                    return GaussianResult(math.inf, "divergent")
                if val > cur:
                    gain = val - cur
                    A, cur = trial, val
                    step *= 1.5
                    accepted = True
                    break
                step *= 0.5
            if not accepted or gain < 1e-15:
                break
        if cur > best:
            best, best_A = cur, A
    return GaussianResult(math.exp(best), "finite", best_A)
