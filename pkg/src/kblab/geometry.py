"""Seminorm balls, convex body oracles, volumes, John ellipsoids and the
volume inequalities relating wedge moments, slices and projections.

Every body is centrally symmetric (or at least contains the origin) and
exposes a gauge ``g(x) = inf{t > 0 : x in tK}``; membership is ``g <= 1``.
Volumes are exact for polytopes, ellipsoids and disk-polygon intersections
in the plane, radial quadrature for other planar bodies, and Monte Carlo
with a standard error in dimension 3.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import linprog, minimize
from scipy.spatial import ConvexHull, HalfspaceIntersection, QhullError

from .bl_core import BLDatum, BLError, TruncationWindow, bl_gaussian, bl_truncated_estimate, complement_basis, is_lw_datum, lw_constant, orthonormalize
from .exterior import Blade, GradedMeasure, first_moment, pairing_moment_power, wedge_power

BOUNDED_TOL = 1e-9
MC_SAMPLES = 200_000
EXACT_3D_ATOMS = 80
RADIAL_POINTS = 1 << 14


class GeometryError(ValueError):
    pass


def unit_ball_volume(n: int) -> float:
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


def sphere_directions(n: int, count: int | None = None) -> np.ndarray:
    """Deterministic near-uniform unit vectors: 720 angles in R^2, 2562 Fibonacci points in R^3."""
    if n == 1:
        return np.array([[1.0], [-1.0]])
    if n == 2:
        count = count or 720
        t = 2 * np.pi * np.arange(count) / count
        return np.column_stack([np.cos(t), np.sin(t)])
    if n == 3:
        count = count or 2562
        i = np.arange(count) + 0.5
        z = 1 - 2 * i / count
        phi = np.pi * (1 + 5 ** 0.5) * i
        s = np.sqrt(1 - z * z)
        return np.column_stack([s * np.cos(phi), s * np.sin(phi), z])
    raise GeometryError(f"direction sampling supports n <= 3, got {n}")


def _rows(X, n: int) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.shape[-1] != n:
        raise GeometryError(f"dimension mismatch: expected vectors in R^{n}, got shape {X.shape}")
    return X.reshape(-1, n)


# ---------------------------------------------------------------- bodies

class ConvexBodyOracle:
    """Gauge-based oracle.  Subclasses override what they can do exactly."""

    n: int

    def gauge(self, X) -> np.ndarray:
        raise NotImplementedError

    def contains(self, X, tol: float = 1e-12) -> np.ndarray:
        return self.gauge(X) <= 1 + tol

    def support(self, U) -> np.ndarray:
        """Sampled support function from radial boundary points."""
        U = _rows(U, self.n)
        pts = self.boundary_points()
        return (U @ pts.T).max(axis=1)

    def boundary_points(self, count: int | None = None) -> np.ndarray:
        D = sphere_directions(self.n, count or (4096 if self.n == 2 else 20000))
        g = self.gauge(D)
        if np.any(g <= BOUNDED_TOL):
            raise GeometryError("unbounded body; intersect it with the Euclidean unit ball")
        return D / g[:, None]

    def is_bounded(self) -> bool:
        return bool(np.min(self.gauge(sphere_directions(self.n, 360 if self.n == 2 else 1000))) > BOUNDED_TOL)


class Polytope(ConvexBodyOracle):
    """Convex polytope with the origin in its interior, stored as {x : A x <= 1} plus vertices."""

    def __init__(self, halfspaces=None, vertices=None):
        if vertices is not None:
            V = np.asarray(vertices, dtype=float)
            self.n = V.shape[1]
            if self.n == 1:
                lo, hi = V.min(), V.max()
                if not lo < 0 < hi:
                    raise GeometryError("origin must be interior")
                self.A = np.array([[1 / hi], [1 / lo]])
                self.vertices = np.array([[lo], [hi]])
                return
            try:
                hull = ConvexHull(V)
            except QhullError as e:
                raise GeometryError(f"degenerate polytope: {e}") from None
            eq = hull.equations
            if np.any(eq[:, -1] >= -1e-12):
                raise GeometryError("origin must be interior to the polytope")
            self.A = eq[:, :-1] / (-eq[:, -1:])
            self.vertices = V[hull.vertices]
            self._volume = float(hull.volume)
        elif halfspaces is not None:
            A = np.asarray(halfspaces, dtype=float)
            self.n = A.shape[1]
            self.A = A
            if self.n == 1:
                self.vertices = np.array([[-1 / A[A[:, 0] < 0, 0].min()], [1 / A[A[:, 0] > 0, 0].max()]])
                return
            try:
                hs = HalfspaceIntersection(np.column_stack([A, -np.ones(len(A))]), np.zeros(self.n))
            except QhullError as e:
                raise GeometryError(f"unbounded or degenerate halfspace system: {e}") from None
            hull = ConvexHull(hs.intersections)
            self.vertices = hs.intersections[hull.vertices]
            self._volume = float(hull.volume)
            self.A = hull.equations[:, :-1] / (-hull.equations[:, -1:])
        else:
            raise GeometryError("need halfspaces or vertices")

    @classmethod
    def cube(cls, n: int, side: float = 2.0) -> "Polytope":
        I = np.eye(n) * (2.0 / side)
        return cls(halfspaces=np.vstack([I, -I]))

    @classmethod
    def cross_polytope(cls, n: int) -> "Polytope":
        return cls(vertices=np.vstack([np.eye(n), -np.eye(n)]))

    @classmethod
    def random_symmetric(cls, n: int, count: int, rng: np.random.Generator) -> "Polytope":
        V = rng.normal(size=(count, n)) * rng.uniform(0.3, 2.0, size=(1, n))
        return cls(vertices=np.vstack([V, -V]))

    def gauge(self, X) -> np.ndarray:
        X = _rows(X, self.n)
        return np.maximum((X @ self.A.T).max(axis=1), 0.0)

    def support(self, U) -> np.ndarray:
        return (_rows(U, self.n) @ self.vertices.T).max(axis=1)

    def volume(self) -> float:
        if self.n == 1:
            return float(self.vertices[1, 0] - self.vertices[0, 0])
        return self._volume


class Ellipsoid(ConvexBodyOracle):
    """{x : x^T A x <= 1} with A symmetric positive semidefinite."""

    def __init__(self, A):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        if A.shape[0] != A.shape[1]:
            raise GeometryError("shape matrix must be square")
        if not np.allclose(A, A.T, atol=1e-12 * max(1.0, np.abs(A).max())):
            raise GeometryError("shape matrix must be symmetric")
        A = (A + A.T) / 2
        if np.linalg.eigvalsh(A).min() < -1e-12 * max(1.0, np.abs(A).max()):
            raise GeometryError("shape matrix must be positive semidefinite")
        self.A = A
        self.n = A.shape[0]

    @classmethod
    def ball(cls, n: int, radius: float = 1.0) -> "Ellipsoid":
        return cls(np.eye(n) / radius ** 2)

    @classmethod
    def from_semiaxes(cls, axes: Sequence[float], rotation=None) -> "Ellipsoid":
        D = np.diag(1.0 / np.asarray(axes, dtype=float) ** 2)
        if rotation is not None:
            Rm = np.asarray(rotation, dtype=float)
            D = Rm @ D @ Rm.T
        return cls(D)

    def _require_pd(self) -> None:
        if np.linalg.eigvalsh(self.A).min() <= 1e-14:
            raise GeometryError("degenerate ellipsoid (unbounded)")

    def gauge(self, X) -> np.ndarray:
        X = _rows(X, self.n)
        return np.sqrt(np.maximum(np.einsum("ij,jk,ik->i", X, self.A, X), 0.0))

    def support(self, U) -> np.ndarray:
        self._require_pd()
        U = _rows(U, self.n)
        Ai = np.linalg.inv(self.A)
        return np.sqrt(np.einsum("ij,jk,ik->i", U, Ai, U))

    def volume(self) -> float:
        self._require_pd()
        return unit_ball_volume(self.n) / math.sqrt(np.linalg.det(self.A))


class SeminormBall(ConvexBodyOracle):
    """Unit ball of s(v) = sum_i w_i |<v, u_i>| for a grade-1 measure."""

    def __init__(self, mu: GradedMeasure):
        if mu.k != 1:
            raise GeometryError("seminorm balls need a grade-1 measure")
        self.mu = mu
        self.n = mu.n
        self.U = mu.coeffs.copy()  # grade-1 coefficients are the vectors themselves
        self.w = mu.weights.copy()
        self._poly = None

    @classmethod
    def from_atoms(cls, vectors, weights=None) -> "SeminormBall":
        V = np.atleast_2d(np.asarray(vectors, dtype=float))
        return cls(GradedMeasure.from_vectors(V, np.ones(len(V)) if weights is None else weights))

    def gauge(self, X) -> np.ndarray:
        X = _rows(X, self.n)
        if not len(self.w):
            return np.zeros(X.shape[0])
        return np.abs(X @ self.U.T) @ self.w

    def is_bounded(self) -> bool:
        if len(self.w) == 0 or np.linalg.matrix_rank(self.U * self.w[:, None], tol=1e-12) < self.n:
            return False
        return super().is_bounded()

    def require_bounded(self) -> None:
        if not self.is_bounded():
            raise GeometryError("seminorm ball is unbounded (the measure does not span); intersect it with the Euclidean unit ball")

    def polytope(self) -> Polytope | None:
        """Exact polytope: the seminorm is linear on the cones cut out by the hyperplanes u_i^perp,
        so the ball is the hull of the scaled extreme rays of that arrangement."""
        if self._poly is not None:
            return self._poly
        self.require_bounded()
        U = self.U[np.linalg.norm(self.U, axis=1) > 0]
        if self.n == 1:
            rays = np.array([[1.0], [-1.0]])
        elif self.n == 2:
            rays = np.column_stack([-U[:, 1], U[:, 0]])
        elif self.n == 3 and len(U) <= EXACT_3D_ATOMS:
            i, j = np.triu_indices(len(U), 1)
            rays = np.cross(U[i], U[j])
            rays = rays[np.linalg.norm(rays, axis=1) > 1e-12 * np.linalg.norm(U, axis=1).max() ** 2]
        else:
            return None
        rays = rays / np.linalg.norm(rays, axis=1)[:, None]
        pts = rays / self.gauge(rays)[:, None]
        self._poly = Polytope(vertices=np.vstack([pts, -pts]))
        return self._poly

    def support(self, U) -> np.ndarray:
        P = self.polytope()
        return P.support(U) if P is not None else super().support(U)


class Intersection(ConvexBodyOracle):
    def __init__(self, *bodies: ConvexBodyOracle):
        if not bodies:
            raise GeometryError("empty intersection")
        self.n = bodies[0].n
        if any(b.n != self.n for b in bodies):
            raise GeometryError("bodies live in different dimensions")
        self.bodies = bodies

    def gauge(self, X) -> np.ndarray:
        return np.max([b.gauge(X) for b in self.bodies], axis=0)


def seminorm_eval(s: SeminormBall, v) -> float:
    v = np.asarray(v, dtype=float)
    if v.shape != (s.n,):
        raise GeometryError(f"dimension mismatch: seminorm on R^{s.n}, vector of shape {v.shape}")
    return float(s.gauge(v)[0])


def visibility_body(s: SeminormBall) -> Intersection:
    """K_s: the Euclidean unit ball intersected with the seminorm ball."""
    return Intersection(Ellipsoid.ball(s.n), s)


# ---------------------------------------------------------------- volumes

@dataclass(frozen=True)
class VolumeEstimate:
    value: float
    stderr: float
    method: str


def _exact_polytope(K: ConvexBodyOracle) -> Polytope | None:
    if isinstance(K, Polytope):
        return K
    if isinstance(K, SeminormBall):
        return K.polytope()
    return None


def _sector_area(h: float, ta: float, tb: float) -> float:
    """Area of {rho(t) <= min(1, h / cos t)} over angles t in [ta, tb] within (-pi/2, pi/2)."""
    if h >= 1:
        return 0.5 * (tb - ta)
    a = math.acos(h)
    lo, hi = max(ta, -a), min(tb, a)
    area = 0.5 * (tb - ta)
    if hi > lo:
        area += 0.5 * h * h * (math.tan(hi) - math.tan(lo)) - 0.5 * (hi - lo)
    return area


def disk_polygon_area(P: Polytope) -> float:
    """Exact area of the unit disk intersected with a planar polygon containing the origin."""
    V = P.vertices
    ang = np.arctan2(V[:, 1], V[:, 0])
    order = np.argsort(ang)
    V, ang = V[order], ang[order]
    total = 0.0
    for i in range(len(V)):
        a, b = V[i], V[(i + 1) % len(V)]
        ta, tb = ang[i], ang[(i + 1) % len(V)]
        if tb <= ta:
            tb += 2 * np.pi
        e = b - a
        nrm = np.array([e[1], -e[0]])
        nrm /= np.linalg.norm(nrm)
        h = float(nrm @ a)
        if h < 0:
            nrm, h = -nrm, -h
        phi = math.atan2(nrm[1], nrm[0])
        off = (ta - phi + np.pi) % (2 * np.pi) - np.pi
        total += _sector_area(h, off, off + (tb - ta))
    return total


def _radial_area(K: ConvexBodyOracle, points: int = RADIAL_POINTS) -> float:
    D = sphere_directions(2, points)
    g = K.gauge(D)
    if np.any(g <= BOUNDED_TOL):
        raise GeometryError("unbounded body; intersect it with the Euclidean unit ball")
    return float(np.pi * np.mean(g ** -2.0))


def _box_bounds(K: ConvexBodyOracle) -> np.ndarray:
    """Half-widths of an axis box containing K (origin-symmetric bound on |x_i|)."""
    E = np.vstack([np.eye(K.n), -np.eye(K.n)])
    if isinstance(K, Intersection):
        best = np.full(K.n, np.inf)
        for b in K.bodies:
            try:
                best = np.minimum(best, _box_bounds(b))
            except GeometryError:
                continue
        if not np.all(np.isfinite(best)):
            raise GeometryError("unbounded body; intersect it with the Euclidean unit ball")
        return best
    if isinstance(K, SeminormBall):
        K.require_bounded()
    try:
        s = K.support(E)
    except np.linalg.LinAlgError:
        raise GeometryError("unbounded body; intersect it with the Euclidean unit ball") from None
    return np.maximum(s[:K.n], s[K.n:])


def monte_carlo_volume(K: ConvexBodyOracle, samples: int = MC_SAMPLES, seed: int = 0, chunk: int = 50_000) -> VolumeEstimate:
    half = _box_bounds(K)
    box = float(np.prod(2 * half))
    chunks = [chunk] * (samples // chunk) + ([samples % chunk] if samples % chunk else [])
    seeds = np.random.SeedSequence(seed).spawn(len(chunks))
    hits = 0
    for size, ss in zip(chunks, seeds):
        X = np.random.default_rng(ss).uniform(-1, 1, size=(size, K.n)) * half
        hits += int(np.count_nonzero(K.contains(X)))
    p = hits / samples
    return VolumeEstimate(box * p, box * math.sqrt(p * (1 - p) / samples), "monte-carlo")


def body_volume(K: ConvexBodyOracle, samples: int = MC_SAMPLES, seed: int = 0) -> VolumeEstimate:
    if isinstance(K, Ellipsoid):
        return VolumeEstimate(K.volume(), 0.0, "exact")
    P = _exact_polytope(K)
    if P is not None:
        return VolumeEstimate(P.volume(), 0.0, "exact")
    if isinstance(K, Intersection) and K.n == 2:
        balls = [b for b in K.bodies if isinstance(b, Ellipsoid) and np.allclose(b.A, np.eye(2))]
        polys = [_exact_polytope(b) for b in K.bodies if not isinstance(b, Ellipsoid)]
        if balls and len(polys) == 1 and len(K.bodies) == 2 and polys[0] is not None:
            return VolumeEstimate(disk_polygon_area(polys[0]), 0.0, "exact")
    if isinstance(K, SeminormBall):
        K.require_bounded()
    if K.n == 1:
        return VolumeEstimate(float(2 / K.gauge(np.ones((1, 1)))[0]), 0.0, "exact")
    if K.n == 2:
        return VolumeEstimate(_radial_area(K), 0.0, "radial-quadrature")
    return monte_carlo_volume(K, samples, seed)


def visibility(s: SeminormBall, samples: int = MC_SAMPLES, seed: int = 0) -> float:
    if len(s.w) == 0:
        return 1.0 / unit_ball_volume(s.n)
    return 1.0 / body_volume(visibility_body(s), samples, seed).value


# ---------------------------------------------------------------- John ellipsoid and distances

def _outer_halfspaces(K: ConvexBodyOracle) -> np.ndarray:
    """Rows a with K inside {a.x <= 1}: exact facets where known, sampled tangents otherwise."""
    P = _exact_polytope(K)
    if P is not None:
        return P.A
    if isinstance(K, Intersection):
        return np.vstack([_outer_halfspaces(b) for b in K.bodies])
    D = sphere_directions(K.n)
    return D / K.support(D)[:, None]


def _excess(K: ConvexBodyOracle, A: np.ndarray) -> float:
    """max over x in E = {x^T A x <= 1} of g_K(x)."""
    Ai = np.linalg.inv(A)
    P = _exact_polytope(K)
    if P is not None:
        return float(np.sqrt(np.einsum("ij,jk,ik->i", P.A, Ai, P.A)).max())
    if isinstance(K, Ellipsoid):
        return float(math.sqrt(max(np.linalg.eigvals(Ai @ K.A).real.max(), 0.0)))
    if isinstance(K, Intersection):
        return max(_excess(b, A) for b in K.bodies)
    L = np.linalg.cholesky(Ai)
    pts = sphere_directions(K.n, 20000 if K.n == 3 else 4096) @ L.T
    return float(K.gauge(pts).max())


def max_gauge(K: ConvexBodyOracle, L: ConvexBodyOracle) -> tuple[float, bool]:
    """(max over x in K of g_L(x), exact?).  Smallest a >= 0 with K inside aL."""
    P = _exact_polytope(K)
    if P is not None:
        return float(L.gauge(P.vertices).max()), _exact_gauge(L)
    if isinstance(K, Ellipsoid):
        if isinstance(L, Ellipsoid):
            return float(math.sqrt(max(np.linalg.eigvals(np.linalg.solve(K.A, L.A)).real.max(), 0.0))), True
        PL = _exact_polytope(L)
        if PL is not None:
            return float(K.support(PL.A).max()), True
    if isinstance(K, Intersection):
        return float(L.gauge(K.boundary_points()).max()), False
    D = sphere_directions(K.n, 20000 if K.n == 3 else 4096)
    return float((L.gauge(D) / K.gauge(D)).max()), False


def _exact_gauge(L: ConvexBodyOracle) -> bool:
    return isinstance(L, (Polytope, Ellipsoid, SeminormBall, Intersection))


def _d_optimal(a: np.ndarray, tol: float = 1e-7, iters: int = 200_000) -> np.ndarray:
    """Weights maximizing logdet(sum lam_i a_i a_i^T) over the simplex (Frank-Wolfe with away steps)."""
    N, n = a.shape
    lam = np.full(N, 1.0 / N)
    for _ in range(iters):
        M = (a * lam[:, None]).T @ a
        g = ((a @ np.linalg.inv(M)) * a).sum(axis=1)
        j = int(np.argmax(g))
        if g[j] <= n * (1 + tol):
            return lam
        active = np.nonzero(lam > 0)[0]
        i = int(active[np.argmin(g[active])])
        if g[j] / n - 1 >= 1 - g[i] / n:
            step = (g[j] / n - 1) / (g[j] - 1)
            lam *= 1 - step
            lam[j] += step
        else:
            # away step: move weight off the least useful active point, at most down to zero
            floor = -lam[i] / (1 - lam[i])
            tau = max((g[i] / n - 1) / (g[i] - 1), floor) if g[i] > 1 else floor
            lam *= 1 - tau
            lam[i] += tau
            lam[i] = max(lam[i], 0.0)
    raise GeometryError(f"John ellipsoid iteration did not converge (last max leverage {g.max() / n:.6g} n)")


def john_ellipsoid(K: ConvexBodyOracle, tol: float = 1e-7) -> Ellipsoid:
    """Maximal-volume inscribed ellipsoid of a symmetric body via the dual design problem on its facets."""
    if isinstance(K, Ellipsoid):
        K._require_pd()
        return Ellipsoid(K.A.copy())
    if isinstance(K, SeminormBall):
        K.require_bounded()
    a = _outer_halfspaces(K)
    n = K.n
    A = n * (a * _d_optimal(a, tol)[:, None]).T @ a
    s = _excess(K, A)
    if s > 1 + 1e-9 and _exact_polytope(K) is None:
        # append the most violated directions once and re-solve
        Ai = np.linalg.inv(A)
        L = np.linalg.cholesky(Ai)
        pts = sphere_directions(n, 20000 if n == 3 else 4096) @ L.T
        worst = pts[np.argsort(K.gauge(pts))[-32:]]
        u = worst / np.linalg.norm(worst, axis=1)[:, None]
        a = np.vstack([a, u / K.support(u)[:, None]])
        A = n * (a * _d_optimal(a, tol)[:, None]).T @ a
        s = _excess(K, A)
    if s > 1:
        A = A * s * s
    return Ellipsoid(A)


def sandwich_ratio(K: ConvexBodyOracle, E: Ellipsoid) -> float:
    """Smallest a with K inside aE (an upper bound when K is not exact)."""
    return max_gauge(K, E)[0]


def bm_distance(K: ConvexBodyOracle, L: ConvexBodyOracle) -> float:
    """log inf{a >= 1 : K/a inside L inside aK}."""
    for B in (K, L):
        if isinstance(B, SeminormBall):
            B.require_bounded()
        if isinstance(B, Ellipsoid):
            B._require_pd()
    a, _ = max_gauge(K, L)
    b, _ = max_gauge(L, K)
    return math.log(max(1.0, a, b))


# ---------------------------------------------------------------- inequalities

@dataclass(frozen=True)
class InequalityCheck:
    """An observed inequality lhs <= C rhs; rel_err is the relative uncertainty of the estimate."""

    lhs: float
    rhs: float
    rel_err: float = 0.0

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs if self.rhs > 0 else math.inf

    def holds(self, const: float = 1.0) -> bool:
        return self.lhs <= const * self.rhs * (1 + 3 * self.rel_err) + 1e-12 * max(1.0, abs(self.rhs))


def wedge_mass(mu: GradedMeasure, k: int) -> float:
    """|mu^{^k}|, the first moment of the k-th wedge power."""
    if k == mu.n and mu.n == 2:
        U, w = mu.coeffs, mu.weights
        det = np.abs(U[:, 0][:, None] * U[:, 1][None, :] - U[:, 1][:, None] * U[:, 0][None, :])
        return float(w @ det @ w)
    return first_moment(wedge_power(mu, k))


def wedge_visibility_check(mu: GradedMeasure) -> InequalityCheck:
    """Returns lhs = 1, rhs = |mu^{^n}| vol(B_mu)."""
    s = SeminormBall(mu)
    s.require_bounded()
    v = body_volume(s)
    return InequalityCheck(1.0, wedge_mass(mu, mu.n) * v.value, v.stderr / v.value if v.value else 0.0)


def _basis(T, n: int) -> np.ndarray:
    T = orthonormalize(np.asarray(T, dtype=float).reshape(-1, n))
    if not 0 < T.shape[0] < n:
        raise GeometryError("need a proper nonzero subspace")
    return T


def _line_interval(K: ConvexBodyOracle, p: np.ndarray, b: np.ndarray) -> tuple[float, float]:
    """{t : p + t b in K} as an interval (empty when lo > hi)."""
    P = _exact_polytope(K)
    if P is not None:
        c = P.A @ b
        r = 1 - P.A @ p
        lo, hi = -np.inf, np.inf
        pos, neg = c > 1e-15, c < -1e-15
        if np.any(r[~pos & ~neg] < 0):
            return 1.0, 0.0
        if pos.any():
            hi = float((r[pos] / c[pos]).min())
        if neg.any():
            lo = float((r[neg] / c[neg]).max())
        return lo, hi
    if isinstance(K, Ellipsoid):
        qa, qb, qc = b @ K.A @ b, p @ K.A @ b, p @ K.A @ p - 1
        if qa <= 1e-15:
            return (-np.inf, np.inf) if qc <= 0 else (1.0, 0.0)
        disc = qb * qb - qa * qc
        if disc < 0:
            return 1.0, 0.0
        sq = math.sqrt(disc)
        return (-qb - sq) / qa, (-qb + sq) / qa
    if isinstance(K, Intersection):
        lo, hi = -np.inf, np.inf
        for B in K.bodies:
            a, c = _line_interval(B, p, b)
            lo, hi = max(lo, a), min(hi, c)
        return lo, hi
    raise GeometryError("line sections need a polytope, ellipsoid or intersection of those")


def slice_volume(K: ConvexBodyOracle, T, point=None) -> float:
    """k-volume of K intersected with point + span(T), k = 1 or 2."""
    n = K.n
    B = _basis(T, n)
    p = np.zeros(n) if point is None else np.asarray(point, dtype=float)
    p = p - B.T @ (B @ p)  # representative orthogonal to T
    k = B.shape[0]
    if k == 1:
        lo, hi = _line_interval(K, p, B[0])
        if not np.isfinite(lo) or not np.isfinite(hi):
            raise GeometryError("unbounded slice")
        return max(0.0, hi - lo)
    if k != 2:
        raise GeometryError("slices of dimension 1 or 2 only")
    P = _exact_polytope(K)
    if P is not None:
        # halfspaces restricted to the plane: (A B^T) y <= 1 - A p
        A2, r = P.A @ B.T, 1 - P.A @ p
        res = linprog(np.r_[0, 0, -1], A_ub=np.column_stack([A2, np.linalg.norm(A2, axis=1)]), b_ub=r,
                      bounds=[(None, None), (None, None), (0, None)], method="highs")
        if res.status != 0 or res.x[2] <= 1e-12:
            return 0.0
        c = res.x[:2]
        try:
            hs = HalfspaceIntersection(np.column_stack([A2, -r]), c)
        except QhullError:
            return 0.0
        return float(ConvexHull(hs.intersections).volume)
    # interior point by minimizing the convex gauge on the plane, then exact radial sections
    f = lambda y: float(K.gauge(p + y @ B)[0])
    res = minimize(f, np.zeros(2), method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-12})
    if res.fun >= 1:
        return 0.0
    c = p + res.x @ B
    D = sphere_directions(2, 4096)
    rad = np.array([_line_interval(K, c, d @ B)[1] for d in D])
    return float(np.pi * np.mean(rad ** 2))


def projection_volume(K: ConvexBodyOracle, T) -> float:
    """(n-k)-volume of K + T, realized as the orthogonal projection onto T^perp."""
    n = K.n
    B = _basis(T, n)
    C = complement_basis(B, n)
    if C.shape[0] == 1:
        c = C[0]
        return float(K.support(c[None])[0] + K.support(-c[None])[0])
    if C.shape[0] != 2:
        raise GeometryError("projections of dimension 1 or 2 only")
    if isinstance(K, Ellipsoid):
        S = C @ np.linalg.inv(K.A) @ C.T
        return float(np.pi * math.sqrt(np.linalg.det(S)))
    P = _exact_polytope(K)
    pts = (P.vertices if P is not None else K.boundary_points()) @ C.T
    return float(ConvexHull(pts).volume)


def slice_projection_check(K: ConvexBodyOracle, T, point=None, samples: int = MC_SAMPLES, seed: int = 0) -> InequalityCheck:
    """vol_{n-k}(K + T) vol_k(K cap T) against binom(n, k) vol_n(K)."""
    B = _basis(T, K.n)
    k = B.shape[0]
    v = body_volume(K, samples, seed)
    lhs = projection_volume(K, B) * slice_volume(K, B, point)
    return InequalityCheck(lhs, math.comb(K.n, k) * v.value, v.stderr / v.value if v.value else 0.0)


def ball_projection_pairing_check(mu: GradedMeasure, T) -> InequalityCheck:
    """vol_{n-k}(B_mu + T) against |<mu^{^k}, T>| vol_n(B_mu)."""
    s = SeminormBall(mu)
    s.require_bounded()
    B = _basis(T, mu.n)
    v = body_volume(s)
    pair = pairing_moment_power(mu, B.shape[0], Blade(B))
    return InequalityCheck(projection_volume(s, B), pair * v.value, v.stderr / v.value if v.value else 0.0)


@dataclass(frozen=True)
class BallBLCheck:
    lhs: float
    rhs: float
    bl_value: float
    bl_method: str
    inradius: float
    circumradius: float

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs if self.rhs > 0 else math.inf


def bl_ball_inequality_check(d: BLDatum, mu: GradedMeasure, R: float, c: float = 0.1, C: float = 10.0) -> BallBLCheck:
    """vol(B_mu)^{1-P} against BL(T, p, (1/R, 1)) prod |<T_j, mu^{^k_j}>|^{p_j}.

    Requires (c/R) B inside B_mu inside C B.  The BL factor is the closed
    form or Gaussian value when available, else the truncated estimate.
    """
    s = SeminormBall(mu)
    s.require_bounded()
    P = s.polytope()
    if P is not None:
        inr = float(1 / np.linalg.norm(P.A, axis=1).max())
        outr = float(np.linalg.norm(P.vertices, axis=1).max())
    else:
        D = sphere_directions(mu.n)
        rad = 1 / s.gauge(D)
        inr, outr = float(rad.min()), float(rad.max())
    if inr < c / R or outr > C:
        raise GeometryError(f"ball sandwich violated: inradius {inr:.4g} (need >= {c / R:.4g}), circumradius {outr:.4g} (need <= {C:.4g})")
    vol = body_volume(s).value
    lhs = vol ** (1 - d.total_power)
    if is_lw_datum(d):
        bl, method = lw_constant(d), "closed-form"
    else:
        g = bl_gaussian(d)
        if g.status == "finite":
            bl, method = g.value, "gaussian"
        else:
            bl, method = bl_truncated_estimate(d, TruncationWindow(1.0 / R, 1.0)).value, "truncated-estimate"
    prod = 1.0
    for T, p in zip(d.subspaces, d.exponents):
        prod *= pairing_moment_power(mu, T.shape[0], Blade(T)) ** p
    return BallBLCheck(lhs, bl * prod, bl, method, inr, outr)
