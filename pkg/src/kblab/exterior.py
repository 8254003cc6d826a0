"""Dense exterior algebra over R^n and finite measures on simple k-vectors.

Coefficients of a grade-k element are indexed by the lexicographically
ordered k-subsets of ``range(n)``.  Blades are identified only up to sign:
every consumer of orientation-free quantities takes absolute values.
"""

from __future__ import annotations

import itertools
from functools import lru_cache
from math import comb
from typing import Iterator, Sequence

import numpy as np

MAX_DIM = 8


class ExteriorError(ValueError):
    pass


@lru_cache(maxsize=None)
def subsets(n: int, k: int) -> tuple[tuple[int, ...], ...]:
    return tuple(itertools.combinations(range(n), k))


@lru_cache(maxsize=None)
def subset_index(n: int, k: int) -> dict[tuple[int, ...], int]:
    return {s: i for i, s in enumerate(subsets(n, k))}


def _perm_sign(seq: Sequence[int]) -> int:
    seq = list(seq)
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


@lru_cache(maxsize=None)
def _wedge_table(n: int, ka: int, kb: int) -> np.ndarray:
    """Dense structure tensor W[a, b, c] with e_a ^ e_b = sum_c W[a,b,c] e_c."""
    out = np.zeros((comb(n, ka), comb(n, kb), comb(n, ka + kb)))
    idx = subset_index(n, ka + kb)
    for ia, sa in enumerate(subsets(n, ka)):
        for ib, sb in enumerate(subsets(n, kb)):
            if set(sa) & set(sb):
                continue
            merged = sa + sb
            out[ia, ib, idx[tuple(sorted(merged))]] = _perm_sign(merged)
    return out


@lru_cache(maxsize=None)
def _hodge_table(n: int, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Target index and sign of *e_I = sign(I, I^c) e_{I^c}."""
    idx = subset_index(n, n - k)
    target = np.empty(comb(n, k), dtype=int)
    sign = np.empty(comb(n, k))
    for i, s in enumerate(subsets(n, k)):
        rest = tuple(j for j in range(n) if j not in s)
        target[i] = idx[rest]
        sign[i] = _perm_sign(s + rest)
    return target, sign


def _check_dims(n: int, k: int) -> None:
    if not 0 <= n <= MAX_DIM:
        raise ExteriorError(f"ambient dimension {n} outside supported range 0..{MAX_DIM}")
    if not 0 <= k <= n:
        raise ExteriorError(f"grade {k} outside 0..{n}")


class MultiVector:
    """Homogeneous element of the k-th exterior power of R^n."""

    __slots__ = ("n", "k", "coeffs")

    def __init__(self, n: int, k: int, coeffs):
        _check_dims(n, k)
        c = np.array(coeffs, dtype=float).reshape(-1)
        if c.shape[0] != comb(n, k):
            raise ExteriorError(f"expected {comb(n, k)} coefficients for grade {k} in R^{n}, got {c.shape[0]}")
        c.setflags(write=False)
        self.n = n
        self.k = k
        self.coeffs = c

    @classmethod
    def basis(cls, n: int, indices: Sequence[int]) -> "MultiVector":
        """Basis blade e_{i1} ^ ... ^ e_{ik} (0-based indices, any order)."""
        k = len(indices)
        _check_dims(n, k)
        c = np.zeros(comb(n, k))
        if len(set(indices)) == k:
            c[subset_index(n, k)[tuple(sorted(indices))]] = _perm_sign(indices)
        return cls(n, k, c)

    @classmethod
    def vector(cls, v) -> "MultiVector":
        v = np.asarray(v, dtype=float)
        return cls(v.shape[0], 1, v)

    def __add__(self, other: "MultiVector") -> "MultiVector":
        _same_space(self, other)
        return MultiVector(self.n, self.k, self.coeffs + other.coeffs)

    def __sub__(self, other: "MultiVector") -> "MultiVector":
        _same_space(self, other)
        return MultiVector(self.n, self.k, self.coeffs - other.coeffs)

    def __mul__(self, s: float) -> "MultiVector":
        return MultiVector(self.n, self.k, float(s) * self.coeffs)

    __rmul__ = __mul__

    def __neg__(self) -> "MultiVector":
        return MultiVector(self.n, self.k, -self.coeffs)

    def __xor__(self, other: "MultiVector") -> "MultiVector":
        return wedge(self, other)

    def __repr__(self) -> str:
        terms = [f"{c:+.6g}*e{''.join(str(i + 1) for i in s)}"
                 for c, s in zip(self.coeffs, subsets(self.n, self.k)) if c != 0.0]
        return f"MultiVector(n={self.n}, k={self.k}, {' '.join(terms) or '0'})"

    def allclose(self, other: "MultiVector", atol: float = 1e-12) -> bool:
        return self.n == other.n and self.k == other.k and np.allclose(self.coeffs, other.coeffs, atol=atol)


def _same_space(a: MultiVector, b: MultiVector) -> None:
    if a.n != b.n:
        raise ExteriorError(f"dimension mismatch: R^{a.n} vs R^{b.n}")
    if a.k != b.k:
        raise ExteriorError(f"grade mismatch: {a.k} vs {b.k}")


def wedge(a: MultiVector, b: MultiVector) -> MultiVector:
    if a.n != b.n:
        raise ExteriorError(f"dimension mismatch: R^{a.n} vs R^{b.n}")
    if a.k + b.k > a.n:
        raise ExteriorError(f"grade overflow: {a.k} + {b.k} > {a.n}")
    table = _wedge_table(a.n, a.k, b.k)
    return MultiVector(a.n, a.k + b.k, np.einsum("a,b,abc->c", a.coeffs, b.coeffs, table))


def hodge_star(a: MultiVector) -> MultiVector:
    """Hodge dual with a ^ *b = <a, b> vol."""
    target, sign = _hodge_table(a.n, a.k)
    out = np.zeros(comb(a.n, a.n - a.k))
    out[target] = sign * a.coeffs
    return MultiVector(a.n, a.n - a.k, out)


def inner(a: MultiVector, b: MultiVector) -> float:
    """Signed Gram-determinant inner product; orthonormal in the subset basis."""
    _same_space(a, b)
    return float(a.coeffs @ b.coeffs)


def abs_inner(a: MultiVector, b: MultiVector) -> float:
    return abs(inner(a, b))


def blade_norm(a: MultiVector) -> float:
    return float(np.sqrt(a.coeffs @ a.coeffs))


def minors(vectors: np.ndarray) -> np.ndarray:
    """Plücker coordinates of the rows of ``vectors``.

    Accepts shape (k, n) or a batch (N, k, n); returns (C(n,k),) or (N, C(n,k)).
    """
    v = np.asarray(vectors, dtype=float)
    single = v.ndim == 2
    if single:
        v = v[None]
    N, k, n = v.shape
    if k == 0:
        out = np.ones((N, 1))
    else:
        cols = np.array(subsets(n, k))
        # (N, C, k, k): rows = vectors, columns = chosen coordinates
        sub = v[:, :, cols].transpose(0, 2, 1, 3)
        out = np.linalg.det(sub)
    return out[0] if single else out


class Blade:
    """A simple k-vector together with generating vectors (rows of ``rep``)."""

    __slots__ = ("mv", "rep")

    def __init__(self, rep):
        rep = np.array(rep, dtype=float)
        if rep.ndim == 1:
            rep = rep[None, :]
        rep.setflags(write=False)
        n = rep.shape[1]
        self.rep = rep
        self.mv = MultiVector(n, rep.shape[0], minors(rep))

    @classmethod
    def from_subspace(cls, basis) -> "Blade":
        """Unit blade of the span of orthonormal rows (the normalized volume form)."""
        return cls(basis)

    @property
    def n(self) -> int:
        return self.mv.n

    @property
    def k(self) -> int:
        return self.mv.k

    @property
    def norm(self) -> float:
        return blade_norm(self.mv)

    def wedge(self, other: "Blade") -> "Blade":
        if self.n != other.n:
            raise ExteriorError(f"dimension mismatch: R^{self.n} vs R^{other.n}")
        if self.k + other.k > self.n:
            raise ExteriorError(f"grade overflow: {self.k} + {other.k} > {self.n}")
        return Blade(np.vstack([self.rep, other.rep]))

    def hodge(self) -> "Blade":
        """Blade representing *self, with generators spanning the orthogonal complement."""
        target = hodge_star(self.mv)
        n, k = self.n, self.k
        if k == n:
            rep = np.zeros((0, n))
            b = Blade(rep)
            return _rescaled(b, target)
        if k == 0:
            return _rescaled(Blade(np.eye(n)), target)
        _, s, vt = np.linalg.svd(self.rep)
        rank = int(np.sum(s > 1e-12 * max(1.0, s.max())))
        if rank < k:
            # degenerate blade: *0 = 0
            return Blade(np.zeros((n - k, n)))
        comp = vt[k:]
        return _rescaled(Blade(comp), target)


def _rescaled(b: Blade, target: MultiVector) -> Blade:
    cur = b.mv.coeffs
    i = int(np.argmax(np.abs(cur)))
    if cur[i] == 0.0:
        return b
    scale = target.coeffs[i] / cur[i]
    rep = np.array(b.rep)
    if rep.shape[0] == 0:
        return b
    rep[0] *= scale
    return Blade(rep)


class GradedMeasure:
    """Finite atomic measure on simple k-vectors modulo sign.

    Atoms are stored as a batch of generating vectors ``vectors`` (N, k, n)
    with nonnegative ``weights`` (N,).  Atoms whose weight is below
    ``1e-15 * total`` are dropped; zero blades are kept.
    """

    __slots__ = ("n", "k", "vectors", "weights", "coeffs")

    def __init__(self, n: int, k: int, vectors, weights):
        _check_dims(n, k)
        vec = np.asarray(vectors, dtype=float).reshape(-1, k, n)
        w = np.asarray(weights, dtype=float).reshape(-1)
        if vec.shape[0] != w.shape[0]:
            raise ExteriorError("vectors and weights disagree in length")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ExteriorError("weights must be finite and nonnegative")
        total = w.sum()
        if w.size and total > 0:
            keep = w >= 1e-15 * total
            vec, w = vec[keep], w[keep]
        self.n = n
        self.k = k
        self.vectors = vec
        self.weights = w
        self.coeffs = minors(vec) if vec.shape[0] else np.zeros((0, comb(n, k)))

    @classmethod
    def empty(cls, n: int, k: int) -> "GradedMeasure":
        return cls(n, k, np.zeros((0, k, n)), np.zeros(0))

    @classmethod
    def from_vectors(cls, vectors, weights) -> "GradedMeasure":
        """Grade-1 measure with atoms at the given vectors."""
        v = np.atleast_2d(np.asarray(vectors, dtype=float))
        return cls(v.shape[1], 1, v[:, None, :], weights)

    @classmethod
    def from_atoms(cls, atoms: Sequence[tuple[Blade, float]]) -> "GradedMeasure":
        if not atoms:
            raise ExteriorError("from_atoms needs at least one atom; use GradedMeasure.empty")
        n, k = atoms[0][0].n, atoms[0][0].k
        for b, _ in atoms:
            if b.n != n or b.k != k:
                raise ExteriorError("atoms must share grade and dimension")
        return cls(n, k, np.stack([b.rep for b, _ in atoms]), [w for _, w in atoms])

    def __len__(self) -> int:
        return self.weights.shape[0]

    @property
    def atoms(self) -> Iterator[tuple[Blade, float]]:
        for v, w in zip(self.vectors, self.weights):
            yield Blade(v), float(w)

    @property
    def mass(self) -> float:
        return float(self.weights.sum())

    def scaled(self, t: float) -> "GradedMeasure":
        return GradedMeasure(self.n, self.k, self.vectors, t * self.weights)

    def __add__(self, other: "GradedMeasure") -> "GradedMeasure":
        if (self.n, self.k) != (other.n, other.k):
            raise ExteriorError("cannot add measures of different grade or dimension")
        return GradedMeasure(self.n, self.k, np.concatenate([self.vectors, other.vectors]),
                             np.concatenate([self.weights, other.weights]))


def first_moment(m: GradedMeasure) -> float:
    """|mu| = sum of w * |blade|."""
    if not len(m):
        return 0.0
    return float(m.weights @ np.sqrt(np.einsum("ij,ij->i", m.coeffs, m.coeffs)))


def measure_wedge(m1: GradedMeasure, m2: GradedMeasure) -> GradedMeasure:
    if m1.n != m2.n:
        raise ExteriorError(f"dimension mismatch: R^{m1.n} vs R^{m2.n}")
    if m1.k + m2.k > m1.n:
        raise ExteriorError(f"grade overflow: {m1.k} + {m2.k} > {m1.n}")
    n, k = m1.n, m1.k + m2.k
    if not len(m1) or not len(m2):
        return GradedMeasure.empty(n, k)
    N1, N2 = len(m1), len(m2)
    vec = np.concatenate([np.repeat(m1.vectors, N2, axis=0), np.tile(m2.vectors, (N1, 1, 1))], axis=1)
    w = np.outer(m1.weights, m2.weights).reshape(-1)
    return GradedMeasure(n, k, vec, w)


def wedge_power(m: GradedMeasure, k: int) -> GradedMeasure:
    """mu^{^k}: pushforward of the k-fold product under the wedge map."""
    if m.k != 1:
        raise ExteriorError("wedge_power expects a grade-1 measure")
    if k == 0:
        return GradedMeasure(m.n, 0, np.zeros((1, 0, m.n)), [1.0])
    out = m
    for _ in range(k - 1):
        out = measure_wedge(out, m)
    return out


def hodge_measure(m: GradedMeasure) -> GradedMeasure:
    blades = [Blade(v).hodge() for v in m.vectors]
    if not blades:
        return GradedMeasure.empty(m.n, m.n - m.k)
    return GradedMeasure(m.n, m.n - m.k, np.stack([b.rep for b in blades]), m.weights)


def pairing_moment(m: GradedMeasure, t: Blade | MultiVector) -> float:
    """First moment of the pairing measure <m, delta_t>: sum of w * |<blade, t>|."""
    mv = t.mv if isinstance(t, Blade) else t
    if m.n != mv.n or m.k != mv.k:
        raise ExteriorError(f"grade mismatch: measure grade {m.k} in R^{m.n} vs blade grade {mv.k} in R^{mv.n}")
    if not len(m):
        return 0.0
    return float(m.weights @ np.abs(m.coeffs @ mv.coeffs))


def pairing_moment_power(m: GradedMeasure, k: int, t: Blade | MultiVector) -> float:
    """pairing_moment(wedge_power(m, k), t) without materializing all N^k atoms."""
    mv = t.mv if isinstance(t, Blade) else t
    if m.k != 1:
        raise ExteriorError("pairing_moment_power expects a grade-1 measure")
    if mv.k != k or mv.n != m.n:
        raise ExteriorError("blade grade must equal the wedge power")
    if k == 0:
        return abs(float(mv.coeffs[0]))
    if not len(m):
        return 0.0
    if k == 1:
        return pairing_moment(m, mv)
    # <u1^...^uk, t> is the contraction of t with u1 (x) ... (x) uk, using antisymmetry
    n = m.n
    u = m.vectors[:, 0, :]
    w = m.weights
    T = np.zeros((n,) * k)
    for c, s in zip(mv.coeffs, subsets(n, k)):
        if c == 0.0:
            continue
        for perm in itertools.permutations(range(k)):
            T[tuple(s[p] for p in perm)] += _perm_sign(perm) * c
    # contract slot j with the j-th factor; the product weight is symmetric so axis order is irrelevant
    acc = T
    for step in range(k):
        acc = np.tensordot(u, acc, axes=([1], [step]))
    weights = w
    for _ in range(k - 1):
        weights = np.multiply.outer(weights, w)
    return float(np.sum(np.abs(acc) * weights))
