"""Polynomial zero sets in the plane and in space, their normal measures,
directional areas, and line-counting (Crofton) cross-checks.

Zero sets are meshed by marching squares (n=2) or marching tetrahedra on a
Kuhn triangulation (n=3), with edge crossings refined by bisection.  Facet
normals come from the gradient at the facet centroid.  Linear factors are
meshed on a single cell, which is exact.
"""

from __future__ import annotations

import csv
import io
import functools
import itertools
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .exterior import GradedMeasure

BISECT_TOL = 1e-10
DEFAULT_CELLS = {2: 128, 3: 24}


class PolyError(ValueError):
    pass


@dataclass(frozen=True)
class Cube:
    corner: tuple
    side: float = 1.0

    @classmethod
    def centered(cls, n: int, side: float = 1.0, center=None) -> "Cube":
        c = np.zeros(n) if center is None else np.asarray(center, dtype=float)
        return cls(tuple(float(x) for x in c - side / 2), float(side))

    @property
    def n(self) -> int:
        return len(self.corner)

    @property
    def lo(self) -> np.ndarray:
        return np.asarray(self.corner, dtype=float)

    @property
    def hi(self) -> np.ndarray:
        return self.lo + self.side

    @property
    def center(self) -> np.ndarray:
        return self.lo + self.side / 2


# ---------------------------------------------------------------- polynomials

class PolyNVars:
    """Dense polynomial in n variables: {exponent tuple: coefficient}."""

    def __init__(self, n: int, terms: dict):
        self.n = n
        clean = {}
        for e, c in terms.items():
            e = tuple(int(k) for k in e)
            if len(e) != n or any(k < 0 for k in e):
                raise PolyError(f"bad exponent tuple {e} for {n} variables")
            if c != 0:
                clean[e] = clean.get(e, 0.0) + float(c)
        self.terms = {e: c for e, c in clean.items() if c != 0}
        self.exps = np.array(list(self.terms), dtype=int).reshape(-1, n)
        self.coefs = np.array(list(self.terms.values()), dtype=float)

    @property
    def degree(self) -> int:
        return int(self.exps.sum(axis=1).max()) if len(self.coefs) else -1

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @classmethod
    def linear(cls, a: Sequence[float], b: float = 0.0) -> "PolyNVars":
        """a . x - b."""
        n = len(a)
        terms = {tuple(int(i == j) for j in range(n)): float(ai) for i, ai in enumerate(a)}
        terms[(0,) * n] = -float(b)
        return cls(n, terms)

    @classmethod
    def constant(cls, n: int, c: float) -> "PolyNVars":
        return cls(n, {(0,) * n: c})

    @classmethod
    def sphere(cls, n: int, rho: float, center=None) -> "PolyNVars":
        c = np.zeros(n) if center is None else np.asarray(center, dtype=float)
        p = cls.constant(n, -rho * rho)
        for i in range(n):
            li = cls.linear(np.eye(n)[i], c[i])
            p = p + li * li
        return p

    @classmethod
    def random(cls, n: int, degree: int, rng: np.random.Generator, center=None) -> "PolyNVars":
        """Gaussian coefficients on all monomials of total degree <= degree, in x - center."""
        terms = {e: rng.normal() for e in itertools.product(range(degree + 1), repeat=n) if sum(e) <= degree}
        p = cls(n, terms)
        return p if center is None else p.shifted(center)

    def shifted(self, center) -> "PolyNVars":
        """q(x) = p(x - center)."""
        c = np.asarray(center, dtype=float)
        out = PolyNVars.constant(self.n, 0.0)
        lin = [PolyNVars.linear(np.eye(self.n)[i], c[i]) for i in range(self.n)]
        for e, coef in self.terms.items():
            t = PolyNVars.constant(self.n, coef)
            for i, k in enumerate(e):
                for _ in range(k):
                    t = t * lin[i]
            out = out + t
        return out

    def scaled(self, s: float) -> "PolyNVars":
        """q(x) = p(x / s)."""
        return PolyNVars(self.n, {e: c * s ** (-sum(e)) for e, c in self.terms.items()})

    def __add__(self, other: "PolyNVars") -> "PolyNVars":
        t = dict(self.terms)
        for e, c in other.terms.items():
            t[e] = t.get(e, 0.0) + c
        return PolyNVars(self.n, t)

    def __sub__(self, other: "PolyNVars") -> "PolyNVars":
        return self + other * -1.0

    def __mul__(self, other) -> "PolyNVars":
        if not isinstance(other, PolyNVars):
            return PolyNVars(self.n, {e: c * float(other) for e, c in self.terms.items()})
        t: dict = {}
        for (e1, c1), (e2, c2) in itertools.product(self.terms.items(), other.terms.items()):
            e = tuple(a + b for a, b in zip(e1, e2))
            t[e] = t.get(e, 0.0) + c1 * c2
        return PolyNVars(self.n, t)

    __rmul__ = __mul__

    def __call__(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        X = X.reshape(-1, self.n)
        if not len(self.coefs):
            out = np.zeros(X.shape[0])
        else:
            M = np.ones((X.shape[0], len(self.coefs)))
            for i in range(self.n):
                top = int(self.exps[:, i].max())
                if top == 0:
                    continue
                P = X[:, i:i + 1] ** np.arange(top + 1)
                M *= P[:, self.exps[:, i]]
            out = M @ self.coefs
        return out[0] if single else out

    @cached_property
    def derivatives(self) -> list["PolyNVars"]:
        ds = []
        for i in range(self.n):
            t = {}
            for e, c in self.terms.items():
                if e[i]:
                    e2 = list(e)
                    e2[i] -= 1
                    t[tuple(e2)] = c * e[i]
            ds.append(PolyNVars(self.n, t))
        return ds

    def gradient(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float).reshape(-1, self.n)
        return np.column_stack([d(X) for d in self.derivatives])

    @property
    def factors(self) -> list["PolyNVars"]:
        return [self]

    def to_json(self) -> dict:
        return {"n": self.n, "terms": [{"exps": list(e), "coef": c} for e, c in sorted(self.terms.items())]}

    def __repr__(self) -> str:
        return f"PolyNVars(n={self.n}, degree={self.degree}, terms={len(self.terms)})"


class ProductPoly:
    """Product of polynomial factors kept unexpanded; Z(p) is the union of the factor zero sets."""

    def __init__(self, factors: Sequence[PolyNVars]):
        if not factors:
            raise PolyError("empty product")
        self.n = factors[0].n
        if any(f.n != self.n for f in factors):
            raise PolyError("factors in different numbers of variables")
        self._factors = list(factors)

    @property
    def factors(self) -> list[PolyNVars]:
        return self._factors

    @property
    def degree(self) -> int:
        return sum(f.degree for f in self._factors)

    @property
    def is_zero(self) -> bool:
        return any(f.is_zero for f in self._factors)

    def __call__(self, X) -> np.ndarray:
        out = self._factors[0](X)
        for f in self._factors[1:]:
            out = out * f(X)
        return out

    def __mul__(self, other) -> "ProductPoly":
        return ProductPoly(self._factors + list(other.factors))

    def gradient(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float).reshape(-1, self.n)
        vals = np.column_stack([f(X) for f in self._factors])
        g = np.zeros_like(X)
        for k, f in enumerate(self._factors):
            rest = np.prod(np.delete(vals, k, axis=1), axis=1)
            g += f.gradient(X) * rest[:, None]
        return g

    def to_json(self) -> dict:
        return {"n": self.n, "factors": [f.to_json() for f in self._factors]}

    def __repr__(self) -> str:
        return f"ProductPoly(n={self.n}, degree={self.degree}, factors={len(self._factors)})"


def poly_from_json(obj) -> PolyNVars | ProductPoly:
    if isinstance(obj, str):
        obj = json.loads(obj)
    n = int(obj["n"])
    if "factors" in obj:
        return ProductPoly([poly_from_json(f) for f in obj["factors"]])
    return PolyNVars(n, {tuple(t["exps"]): float(t["coef"]) for t in obj["terms"]})


def build_p0(R: float, n: int) -> ProductPoly:
    """Product of (x_i - c) over half-integers |c| <= R + 1 and all coordinates."""
    if R <= 0:
        raise PolyError("R must be positive")
    return ProductPoly([PolyNVars.linear(np.eye(n)[i], c) for i in range(n) for c in p0_offsets(R)])


def p0_offsets(R: float) -> list[float]:
    top = math.floor(R + 1 - 0.5)
    return [k + 0.5 for k in range(-top - 1, top + 1) if abs(k + 0.5) <= R + 1]


# ---------------------------------------------------------------- meshing

@dataclass
class ZeroSetMesh:
    n: int
    cube: Cube
    centroids: np.ndarray
    normals: np.ndarray
    areas: np.ndarray
    degenerate: int = 0
    coarse: bool = False
    extras: dict = field(default_factory=dict)

    @property
    def area(self) -> float:
        return float(self.areas.sum())

    def __len__(self) -> int:
        return self.areas.shape[0]

    @classmethod
    def empty(cls, n: int, cube: Cube) -> "ZeroSetMesh":
        return cls(n, cube, np.zeros((0, n)), np.zeros((0, n)), np.zeros(0))

    @classmethod
    def concat(cls, meshes: Sequence["ZeroSetMesh"], weights: Sequence[float] | None = None) -> "ZeroSetMesh":
        w = [1.0] * len(meshes) if weights is None else list(weights)
        m0 = meshes[0]
        return cls(m0.n, m0.cube,
                   np.vstack([m.centroids for m in meshes]),
                   np.vstack([m.normals for m in meshes]),
                   np.concatenate([wi * m.areas for wi, m in zip(w, meshes)]),
                   sum(m.degenerate for m in meshes), any(m.coarse for m in meshes))

    def to_csv(self, fh=None) -> str:
        out = fh or io.StringIO()
        axes = "xyz"[: self.n]
        wr = csv.writer(out, lineterminator="\n")
        wr.writerow([f"c{a}" for a in axes] + [f"n{a}" for a in axes] + ["area"])
        for c, nv, a in zip(self.centroids, self.normals, self.areas):
            wr.writerow([f"{x:.12g}" for x in c] + [f"{x:.12g}" for x in nv] + [f"{a:.12g}"])
        return out.getvalue() if fh is None else ""


def _bisect_edges(f, A: np.ndarray, B: np.ndarray, fa: np.ndarray, tol: float = BISECT_TOL) -> np.ndarray:
    """Roots of f on segments [A, B] with a sign change (fa < 0 <= fb or the reverse)."""
    if not len(A):
        return A
    length = float(np.max(np.linalg.norm(B - A, axis=1)))
    steps = max(1, math.ceil(math.log2(max(length, tol) / tol)))
    lo, hi = A.copy(), B.copy()
    neg_lo = fa < 0
    for _ in range(steps):
        mid = (lo + hi) / 2
        fm = f(mid)
        go_right = (fm < 0) == neg_lo
        lo = np.where(go_right[:, None], mid, lo)
        hi = np.where(go_right[:, None], hi, mid)
    return (lo + hi) / 2


def _grid(cube: Cube, cells: int) -> list[np.ndarray]:
    return [cube.lo[i] + cube.side * np.arange(cells + 1) / cells for i in range(cube.n)]


def _march_squares(f, cube: Cube, cells: int) -> np.ndarray:
    """Segments (S, 2, 2) approximating {f = 0} in the square."""
    xs, ys = _grid(cube, cells)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    V = f(np.column_stack([X.ravel(), Y.ravel()])).reshape(X.shape)
    pos = V >= 0
    N = cells
    # crossing points on horizontal (x-direction) and vertical edges
    hx = np.full((N, N + 1, 2), np.nan)
    m = pos[:-1, :] != pos[1:, :]
    if m.any():
        i, j = np.nonzero(m)
        A = np.column_stack([xs[i], ys[j]])
        B = np.column_stack([xs[i + 1], ys[j]])
        hx[i, j] = _bisect_edges(f, A, B, V[i, j])
    vy = np.full((N + 1, N, 2), np.nan)
    m = pos[:, :-1] != pos[:, 1:]
    if m.any():
        i, j = np.nonzero(m)
        A = np.column_stack([xs[i], ys[j]])
        B = np.column_stack([xs[i], ys[j + 1]])
        vy[i, j] = _bisect_edges(f, A, B, V[i, j])
    # edges of cell (i, j): e0 bottom, e1 right, e2 top, e3 left
    E = np.stack([hx[:, :-1], vy[1:, :], hx[:, 1:], vy[:-1, :]], axis=2)  # (N, N, 4, 2)
    s = pos[:-1, :-1].astype(int) + 2 * pos[1:, :-1] + 4 * pos[1:, 1:] + 8 * pos[:-1, 1:]
    segs = []
    has = ~np.isnan(E[..., 0])
    count = has.sum(axis=2)
    two = count == 2
    if two.any():
        idx = np.nonzero(two)
        pts = E[idx][has[idx]].reshape(-1, 2, 2)
        segs.append(pts)
    four = count == 4
    if four.any():
        i, j = np.nonzero(four)
        centers = np.column_stack([(xs[i] + xs[i + 1]) / 2, (ys[j] + ys[j + 1]) / 2])
        c_pos = f(centers) >= 0
        corner0 = pos[i, j]
        e = E[i, j]
        # center agrees with corner 0: corners 1 and 3 are cut off; otherwise corners 0 and 2
        same = c_pos == corner0
        a = np.where(same[:, None, None], np.stack([e[:, 0], e[:, 1]], 1), np.stack([e[:, 3], e[:, 0]], 1))
        b = np.where(same[:, None, None], np.stack([e[:, 2], e[:, 3]], 1), np.stack([e[:, 1], e[:, 2]], 1))
        segs += [a, b]
    return np.concatenate(segs) if segs else np.zeros((0, 2, 2))


_KUHN = [tuple(itertools.accumulate((0,) + tuple(1 << a for a in perm))) for perm in itertools.permutations(range(3))]


def _tet_table() -> dict[int, list[tuple]]:
    """Sign pattern (bit k set = vertex k positive) -> triangles as triples of vertex-pair edges."""
    table = {}
    for mask in range(16):
        P = [k for k in range(4) if mask >> k & 1]
        Nn = [k for k in range(4) if not mask >> k & 1]
        if len(P) in (0, 4):
            table[mask] = []
        elif len(P) in (1, 3):
            lone, others = (P[0], Nn) if len(P) == 1 else (Nn[0], P)
            table[mask] = [tuple((lone, o) for o in others)]
        else:
            a, b = P
            c, d = Nn
            quad = [(a, c), (a, d), (b, d), (b, c)]
            table[mask] = [(quad[0], quad[1], quad[2]), (quad[0], quad[2], quad[3])]
    return table


_TET_TABLE = _tet_table()


def _march_tets(f, cube: Cube, cells: int) -> np.ndarray:
    """Triangles (T, 3, 3) approximating {f = 0} in the cube."""
    xs = _grid(cube, cells)
    G = np.stack(np.meshgrid(*xs, indexing="ij"), axis=-1)
    V = f(G.reshape(-1, 3)).reshape(G.shape[:3])
    N = cells
    pos = V >= 0
    offs = [((c >> 0) & 1, (c >> 1) & 1, (c >> 2) & 1) for c in range(8)]
    cpos = np.stack([pos[o[0]:o[0] + N, o[1]:o[1] + N, o[2]:o[2] + N] for o in offs], axis=-1)
    mixed = cpos.any(axis=-1) & ~cpos.all(axis=-1)
    ci = np.argwhere(mixed)
    if not len(ci):
        return np.zeros((0, 3, 3))
    corners = np.stack([G[ci[:, 0] + o[0], ci[:, 1] + o[1], ci[:, 2] + o[2]] for o in offs], axis=1)  # (C, 8, 3)
    cvals = np.stack([V[ci[:, 0] + o[0], ci[:, 1] + o[1], ci[:, 2] + o[2]] for o in offs], axis=1)
    tris = []
    for tet in _KUHN:
        P = corners[:, tet]
        F = cvals[:, tet]
        mask = ((F >= 0) * (1 << np.arange(4))).sum(axis=1)
        for code in range(1, 15):
            sel = mask == code
            if not sel.any():
                continue
            Pc, Fc = P[sel], F[sel]
            edges = sorted({e for tri in _TET_TABLE[code] for e in tri})
            roots = {}
            for (u, v) in edges:
                roots[(u, v)] = _bisect_edges(f, Pc[:, u], Pc[:, v], Fc[:, u])
            for tri in _TET_TABLE[code]:
                tris.append(np.stack([roots[e] for e in tri], axis=1))
    return np.concatenate(tris) if tris else np.zeros((0, 3, 3))


def _facets(poly: PolyNVars, cube: Cube, cells: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, int]:
    n = cube.n
    if n == 2:
        S = _march_squares(poly, cube, cells)
        d = S[:, 1] - S[:, 0]
        area = np.linalg.norm(d, axis=1)
        geo = np.column_stack([-d[:, 1], d[:, 0]])
    else:
        T = _march_tets(poly, cube, cells)
        cr = np.cross(T[:, 1] - T[:, 0], T[:, 2] - T[:, 0])
        area = 0.5 * np.linalg.norm(cr, axis=1)
        geo = cr
        S = T
    keep = area > 0
    S, area, geo = S[keep], area[keep], geo[keep]
    cen = S.mean(axis=1)
    g = poly.gradient(cen)
    gn = np.linalg.norm(g, axis=1)
    scale = max(1.0, float(np.abs(poly.coefs).max()))
    bad = gn <= 1e-12 * scale
    normals = np.where(bad[:, None], geo, g)
    normals = normals / np.linalg.norm(normals, axis=1)[:, None]
    return cen, normals, area, int(bad.sum())


def mesh_zero_set(p: PolyNVars | ProductPoly, Q: Cube, cells: int | None = None, refine_check: bool = False) -> ZeroSetMesh:
    """Mesh of Z(p) inside Q; linear factors are meshed exactly on one cell."""
    if Q.n not in (2, 3):
        raise PolyError("meshing supports n = 2 or 3")
    if p.n != Q.n:
        raise PolyError(f"polynomial in {p.n} variables, cube in R^{Q.n}")
    if p.is_zero:
        raise PolyError("the zero polynomial has no hypersurface")
    cells = cells or DEFAULT_CELLS[Q.n]
    parts = []
    for f in p.factors:
        if f.degree <= 0:
            continue
        k = 1 if f.degree == 1 else cells
        cen, nrm, area, bad = _facets(f, Q, k)
        parts.append(ZeroSetMesh(Q.n, Q, cen, nrm, area, bad))
    mesh = ZeroSetMesh.concat(parts) if parts else ZeroSetMesh.empty(Q.n, Q)
    if refine_check and any(f.degree > 1 for f in p.factors):
        fine = mesh_zero_set(p, Q, 2 * cells)
        if abs(mesh.area - fine.area) > 0.02 * max(fine.area, 1e-300):
            mesh.coarse = True
    return mesh


def normal_measure(mesh: ZeroSetMesh) -> GradedMeasure:
    if not len(mesh):
        return GradedMeasure.empty(mesh.n, 1)
    return GradedMeasure.from_vectors(mesh.normals, mesh.areas)


def directional_area(mesh: ZeroSetMesh, v) -> float:
    v = np.asarray(v, dtype=float)
    if abs(np.linalg.norm(v) - 1) > 1e-9:
        raise PolyError("direction must be a unit vector")
    return float(mesh.areas @ np.abs(mesh.normals @ v))


# ---------------------------------------------------------------- line counting

def _line_segments(Q: Cube, v: np.ndarray, offsets: np.ndarray):
    """For lines x = o + t v (o in v-perp), the parameter interval inside Q."""
    lo, hi = Q.lo, Q.hi
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = (lo[None] - offsets) / v[None]
        t2 = (hi[None] - offsets) / v[None]
    tmin = np.where(v[None] != 0, np.minimum(t1, t2), -np.inf)
    tmax = np.where(v[None] != 0, np.maximum(t1, t2), np.inf)
    inside = (v[None] != 0) | ((offsets >= lo) & (offsets <= hi))
    a = tmin.max(axis=1)
    b = tmax.min(axis=1)
    ok = inside.all(axis=1) & (b > a)
    return a, b, ok


@functools.lru_cache(maxsize=None)
def _cheb_derivative_to_power(d: int) -> np.ndarray:
    """Matrix taking Chebyshev coefficients of a degree-d polynomial to power coefficients of its derivative."""
    M = np.zeros((d, d + 1))
    for j in range(d + 1):
        pw = np.polynomial.chebyshev.cheb2poly(np.polynomial.chebyshev.chebder(np.eye(d + 1)[j]))
        M[:len(pw), j] = pw
    return M


def _count_roots_on_lines(f: PolyNVars, starts: np.ndarray, v: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Distinct real roots of t -> f(start + t v) on (a, b), per line.

    The restriction is interpolated at Chebyshev nodes; its critical points
    split (a, b) into monotone pieces, each holding at most one root, so the
    count never exceeds the degree.
    """
    L = starts.shape[0]
    d = f.degree
    if d <= 0 or L == 0:
        return np.zeros(L, dtype=int)
    mid, half = (a + b) / 2, (b - a) / 2

    def ev(s):  # s: (L, K) in [-1, 1]
        t = mid[:, None] + half[:, None] * s
        X = starts[:, None, :] + t[..., None] * v
        return f(X.reshape(-1, f.n)).reshape(s.shape)

    if d == 1:
        e = ev(np.tile([-1.0, 1.0], (L, 1)))
        return ((e[:, 0] < 0) != (e[:, 1] < 0)).astype(int)
    nodes = np.cos(np.pi * (np.arange(d + 1) + 0.5) / (d + 1))
    vals = ev(np.tile(nodes, (L, 1)))
    cheb = np.linalg.solve(np.polynomial.chebyshev.chebvander(nodes, d), vals.T).T  # (L, d+1)
    dpow = cheb @ _cheb_derivative_to_power(d).T  # ascending powers of the derivative, (L, d)
    scale = np.maximum(np.abs(dpow).max(axis=1), 1e-300)
    live = np.abs(dpow) > 1e-13 * scale[:, None]
    top = np.where(live.any(axis=1), d - 1 - np.argmax(live[:, ::-1], axis=1), -1)
    crit = np.full((L, d - 1), np.nan)
    for k in np.unique(top[top >= 1]):
        idx = np.nonzero(top == k)[0]
        comp = np.zeros((len(idx), k, k))
        comp[:, np.arange(1, k), np.arange(k - 1)] = 1.0
        comp[:, :, -1] = -dpow[idx, :k] / dpow[idx, k:k + 1]
        r = np.linalg.eigvals(comp)
        real = (np.abs(r.imag) <= 1e-9 * (1 + np.abs(r.real))) & (np.abs(r.real) < 1)
        crit[idx, :k] = np.where(real, r.real, np.nan)
    # NaN sorts last, so the valid points form a prefix
    pts = np.sort(np.concatenate([np.full((L, 1), -1.0), crit, np.ones((L, 1))], axis=1), axis=1)
    valid = ~np.isnan(pts)
    sgn = ev(np.where(valid, pts, 1.0)) < 0
    return np.count_nonzero((sgn[:, 1:] != sgn[:, :-1]) & valid[:, 1:], axis=1)


def _perp_frame(v: np.ndarray) -> np.ndarray:
    n = v.shape[0]
    M = np.vstack([v, np.eye(n)])
    Qm, _ = np.linalg.qr(M.T)
    return Qm[:, 1:n].T


@dataclass(frozen=True)
class CroftonEstimate:
    value: float
    counts: np.ndarray
    cross_section: float


def crofton_lines(p: PolyNVars | ProductPoly, Q: Cube, v, lines: int = 400, seed: int = 0) -> CroftonEstimate:
    """Average number of roots along lines parallel to v through Q, times the cross-section measure."""
    v = np.asarray(v, dtype=float)
    if abs(np.linalg.norm(v) - 1) > 1e-9:
        raise PolyError("direction must be a unit vector")
    n = Q.n
    P = _perp_frame(v)  # (n-1, n)
    corners = np.array(list(itertools.product(*[(Q.lo[i], Q.hi[i]) for i in range(n)])))
    proj = corners @ P.T
    lo, hi = proj.min(axis=0), proj.max(axis=0)
    rng = np.random.default_rng(seed)
    if n == 2:
        s = (np.arange(lines) + rng.random(lines)) / lines
        U = lo + (hi - lo) * s[:, None]
    else:
        k = max(1, int(round(math.sqrt(lines))))
        g = np.stack(np.meshgrid(np.arange(k), np.arange(k), indexing="ij"), -1).reshape(-1, 2)
        U = lo + (hi - lo) * (g + rng.random(g.shape)) / k
    offsets = U @ P
    a, b, ok = _line_segments(Q, v, offsets)
    counts = np.zeros(offsets.shape[0], dtype=int)
    if ok.any():
        for f in p.factors:
            counts[ok] += _count_roots_on_lines(f, offsets[ok], v, a[ok], b[ok])
    cross = float(np.prod(hi - lo))
    return CroftonEstimate(cross * float(counts.mean()), counts, cross)


def crofton_root_oracle(p: PolyNVars | ProductPoly, Q: Cube, v, lines: int = 20_000, seed: int = 0) -> float:
    # dense enough that stratification noise stays well under a percent on short curve pieces
    return crofton_lines(p, Q, v, lines, seed).value


@dataclass(frozen=True)
class BezoutCheck:
    ratio: float
    area: float
    degree: int
    max_line_count: int
    lines_checked: int

    @property
    def counts_ok(self) -> bool:
        return self.max_line_count <= self.degree


def bezout_area_check(p: PolyNVars | ProductPoly, Q: Cube, directions: int = 4, lines: int = 100,
                      seed: int = 0, cells: int | None = None) -> BezoutCheck:
    """Mesh area over degree, with per-line root counts compared to the degree."""
    mesh = mesh_zero_set(p, Q, cells)
    rng = np.random.default_rng(seed)
    worst, total = 0, 0
    for k in range(directions):
        v = rng.normal(size=Q.n)
        v /= np.linalg.norm(v)
        est = crofton_lines(p, Q, v, lines, seed + k + 1)
        worst = max(worst, int(est.counts.max(initial=0)))
        total += est.counts.size
    return BezoutCheck(mesh.area / p.degree, mesh.area, p.degree, worst, total)


# ---------------------------------------------------------------- mixtures

class PolynomialMixture:
    """Finite probability measure on nonzero polynomials."""

    def __init__(self, atoms: Sequence[tuple]):
        if not atoms:
            raise PolyError("empty mixture")
        w = np.array([float(a[1]) for a in atoms])
        if np.any(w < 0) or abs(w.sum() - 1) > 1e-12:
            raise PolyError("mixture weights must be nonnegative and sum to 1")
        if any(a[0].is_zero for a in atoms):
            raise PolyError("mixture polynomials must be nonzero")
        self.polys = [a[0] for a in atoms]
        self.weights = w

    @property
    def max_degree(self) -> int:
        return max(p.degree for p in self.polys)

    @classmethod
    def dirac(cls, p) -> "PolynomialMixture":
        return cls([(p, 1.0)])


def mixture_normal_measure(sigma: PolynomialMixture, Q: Cube, cells: int | None = None) -> GradedMeasure:
    meshes = [mesh_zero_set(p, Q, cells) for p in sigma.polys]
    return normal_measure(ZeroSetMesh.concat(meshes, sigma.weights))


# ---------------------------------------------------------------- bisection inequalities

@dataclass(frozen=True)
class LowerBoundCheck:
    """Observed value against a lower bound; rel_err is the relative uncertainty of the bound."""

    value: float
    bound: float
    rel_err: float = 0.0
    a: float = float("nan")
    b: float = float("nan")

    def holds(self, const: float = 1.0) -> bool:
        return self.value >= const * self.bound * (1 - 3 * self.rel_err) - 1e-12


def _clip_to_ellipse(S: np.ndarray, A: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Parts of segments S (K, 2, n) inside {(x-c)^T A (x-c) <= 1}."""
    P0, D = S[:, 0] - c, S[:, 1] - S[:, 0]
    qa = np.einsum("ij,jk,ik->i", D, A, D)
    qb = np.einsum("ij,jk,ik->i", P0, A, D)
    qc = np.einsum("ij,jk,ik->i", P0, A, P0) - 1
    disc = qb * qb - qa * qc
    ok = (disc > 0) & (qa > 0)
    sq = np.sqrt(np.where(ok, disc, 0))
    t0 = np.clip((-qb - sq) / np.where(qa > 0, qa, 1), 0, 1)
    t1 = np.clip((-qb + sq) / np.where(qa > 0, qa, 1), 0, 1)
    ok &= t1 > t0
    return np.stack([S[ok, 0] + t0[ok, None] * D[ok], S[ok, 0] + t1[ok, None] * D[ok]], axis=1)


def _segments(p, Q: Cube, cells: int) -> np.ndarray:
    out = []
    for f in p.factors:
        if f.degree > 0:
            out.append(_march_squares(f, Q, 1 if f.degree == 1 else cells))
    return np.concatenate(out) if out else np.zeros((0, 2, 2))


def _sign_fractions(p, A: np.ndarray, c: np.ndarray, samples: int, seed: int) -> tuple[float, float, float]:
    rng = np.random.default_rng(seed)
    u = rng.normal(size=(samples, 2))
    u *= (np.sqrt(rng.random(samples)) / np.linalg.norm(u, axis=1))[:, None]
    L = np.linalg.cholesky(np.linalg.inv(A))
    vals = p(c + u @ L.T)
    a = float(np.mean(vals > 0))
    b = float(np.mean(vals < 0))
    return a, b, math.sqrt(max(a * (1 - a), 1e-300) / samples)


def bisection_area_check(p, samples: int = 100_000, seed: int = 0, cells: int = 256) -> LowerBoundCheck:
    """Length of Z(p) in the unit disk against (sqrt a + sqrt b - 1) pi, a and b the sign fractions."""
    if p.n != 2:
        raise PolyError("bisection check is planar")
    segs = _clip_to_ellipse(_segments(p, Cube.centered(2, 2.0), cells), np.eye(2), np.zeros(2))
    length = float(np.linalg.norm(segs[:, 1] - segs[:, 0], axis=1).sum())
    a, b, sd = _sign_fractions(p, np.eye(2), np.zeros(2), samples, seed)
    bound = 0.5 * (math.sqrt(a) + math.sqrt(b) - 1) * 2 * math.pi
    # first-order propagation of the sign-fraction error
    da = abs(0.5 / math.sqrt(a)) if a > 0 else 0.0
    db = abs(0.5 / math.sqrt(b)) if b > 0 else 0.0
    err = math.pi * (da + db) * sd
    rel = err / abs(bound) if bound > 0 else 0.0
    return LowerBoundCheck(length, max(bound, 0.0), rel, a, b)


def ellipse_bisection_check(p, axes: np.ndarray, center=None, samples: int = 100_000, seed: int = 0,
                            cells: int = 256) -> LowerBoundCheck:
    """Sum over principal axes v_j of |<v_j, N(Z(p) in E)>| against vol(E).

    ``axes`` holds the principal semi-axis vectors as rows.
    """
    V = np.asarray(axes, dtype=float)
    c = np.zeros(2) if center is None else np.asarray(center, dtype=float)
    Lm = V.T  # x = c + L u maps the disk onto E
    A = np.linalg.inv(Lm @ Lm.T)
    r = float(np.linalg.norm(V, axis=1).max())
    box = Cube.centered(2, 2 * r, c)
    segs = _clip_to_ellipse(_segments(p, box, cells), A, c)
    d = segs[:, 1] - segs[:, 0]
    length = np.linalg.norm(d, axis=1)
    cen = segs.mean(axis=1)
    g = p.gradient(cen) if len(cen) else np.zeros((0, 2))
    gn = np.linalg.norm(g, axis=1)
    geo = np.column_stack([-d[:, 1], d[:, 0]])
    nrm = np.where((gn > 0)[:, None], g, geo)
    nrm = nrm / np.maximum(np.linalg.norm(nrm, axis=1), 1e-300)[:, None]
    value = float(sum(length @ np.abs(nrm @ v) for v in V))
    a, b, _ = _sign_fractions(p, A, c, samples, seed)
    vol = math.pi * abs(np.linalg.det(V))
    return LowerBoundCheck(value, vol, 0.0, a, b)
