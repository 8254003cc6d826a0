import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kblab.exterior import GradedMeasure
from kblab.harness import (AffineFamily, AffineSubspace, CellMapTube, DyadicGrid, HarnessError, IndicatorTube,
                           cube_incidence, duality_check, g_functional, grid_lines, incidence_matrix, lhs_fremlin,
                           lhs_uniform, lw_kakeya, random_lines, rhs_uniform, section_volume, sj_functional,
                           uniform_from_tensor_check)
from kblab.polysurf import Cube, PolyNVars, PolynomialMixture

line = AffineSubspace.line
unit = Cube((0.0, 0.0), 1.0)
fam = lambda *members: AffineFamily.of(list(members))


def test_subspace_invariants():
    T = AffineSubspace([1, 2, 3], [[1, 1, 0], [0, 1, 1]])
    assert np.allclose(T.basis @ T.basis.T, np.eye(2))
    assert T.blade.norm == pytest.approx(1.0)
    with pytest.raises(HarnessError):
        AffineSubspace([0, 0], [[1, 1], [2, 2]])
    with pytest.raises(HarnessError):
        AffineFamily.of([line([0, 0], [1, 0]), AffineSubspace([0, 0], [])])


def test_family_json():
    obj = {"k": 1, "members": [{"point": [0, 0.5], "basis": [[1, 0]]}, {"point": [0, 0.5], "basis": [[1, 0]]}]}
    f = AffineFamily.from_json(json.dumps(obj))
    assert len(f) == 2 and f.k == 1 and f.n == 2
    assert AffineFamily.from_json(f.to_json()).members[0].point.tolist() == [0, 0.5]
    assert len(AffineFamily.from_json({"k": 1, "n": 2, "members": []})) == 0


def test_grid():
    g = DyadicGrid(2, 2.0)
    C = g.corners
    assert C.dtype == float and np.all(C == np.round(C))
    nearest = np.clip(0.0, C, C + 1)
    assert np.all(np.linalg.norm(nearest, axis=1) <= 2.0)
    assert len({tuple(c) for c in C}) == len(C)
    assert [tuple(c) for c in C] == sorted(tuple(c) for c in C)


def test_incidence_examples():
    assert cube_incidence(line([0, 0], [1, 0]), unit)
    assert not cube_incidence(line([0, 5], [1, 0]), unit)
    assert cube_incidence(line([0, 1 + 1e-12], [1, 0]), unit)
    assert not cube_incidence(line([0, 1 + 1e-6], [1, 0]), unit)
    T = AffineSubspace([0.3, 0.2, 0.1, 0.4], [[1, 1, 0, 0], [0, 0, 1, -1]])
    assert cube_incidence(T, Cube((0.0,) * 4, 1.0)) and not cube_incidence(T, Cube((5.0, 0, 0, 0), 1.0))


def test_incidence_matrix_matches_pointwise():
    rng = np.random.default_rng(0)
    g = DyadicGrid(3, 2.5)
    for k in (0, 1, 2):
        members = [AffineSubspace(rng.uniform(-2, 2, 3), rng.normal(size=(k, 3))) for _ in range(4)]
        f = AffineFamily.of(members, k, 3)
        M = incidence_matrix(f, g)
        for c in range(0, len(g), 7):
            for m, T in enumerate(members):
                assert M[c, m] == cube_incidence(T, g.cube(c))


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 4), st.data())
def test_incidence_translation(n, data):
    rng = np.random.default_rng(data.draw(st.integers(0, 10 ** 6)))
    k = int(rng.integers(0, n + 1))
    T = AffineSubspace(rng.uniform(-2, 2, n), rng.normal(size=(k, n)))
    c = tuple(float(x) for x in rng.integers(-3, 3, n))
    z = rng.integers(-5, 6, n).astype(float)
    moved = AffineSubspace(T.point + z, T.basis)
    assert cube_incidence(T, Cube(c, 1.0)) == cube_incidence(moved, Cube(tuple(np.add(c, z)), 1.0))


def test_section_volume():
    assert section_volume(line([0, 0.5], [1, 0]), unit) == pytest.approx(1.0)
    assert section_volume(line([0, 0], [1, 1]), unit) == pytest.approx(math.sqrt(2))
    plane = AffineSubspace([0, 0, 0.5], [[1, 0, 0], [0, 1, 0]])
    assert section_volume(plane, Cube((0.0, 0.0, 0.0), 1.0)) == pytest.approx(1.0)


def test_lhs_uniform_examples():
    R = 10.0
    x_axis = fam(line([0, 0], [1, 0]))
    y_axis = fam(line([0, 0], [0, 1]))
    assert lhs_uniform([x_axis], [1.0], R) == pytest.approx(2 * R, rel=0.01)
    assert lhs_uniform([AffineFamily.of([], 1, 2)], [1.0], R) == 0
    assert lhs_uniform([x_axis, y_axis], [1.0, 1.0], R) == pytest.approx(1.0)


def test_rhs_uniform_examples():
    fams = grid_lines(4)
    rhs, A, src = rhs_uniform(fams, [1.0, 1.0])
    assert (rhs, A, src) == (16.0, 1.0, "closed-form")
    assert rhs_uniform(fams, [1.0, 1.0], A=2.5)[0] == 40.0
    tubes = [IndicatorTube(2.0), IndicatorTube(2.0)]
    assert rhs_uniform(fams, [1.0, 1.0], tube_fns=tubes)[0] == pytest.approx(4 * rhs)
    assert lhs_uniform(fams, [1.0, 1.0], 4.0, tube_fns=tubes) == pytest.approx(4 * lhs_uniform(fams, [1.0, 1.0], 4.0))


def test_cell_map_tubes():
    x_axis = fam(line([0, 0], [1, 0]))
    tube = CellMapTube({(0,): 0.5, (1,): 0.25})
    assert tube.integral(1) == 0.75
    assert lhs_uniform([x_axis], [1.0], 10.0, [tube]) == pytest.approx(0.75 * 20, rel=0.02)
    with pytest.raises(HarnessError):
        CellMapTube({(0,): -1.0})


def test_lhs_fremlin_examples():
    H = AffineFamily.of([line([0, c], [1, 0]) for c in range(-2, 2)])
    V = AffineFamily.of([line([c, 0], [0, 1]) for c in range(-2, 2)])
    rep = lhs_fremlin([H, V], [1.0, 1.0], 3.0)
    assert rep.meta["bl_source"] == "closed-form"
    for row in rep.rows:
        assert row["term"] == pytest.approx(row["incident"][0] * row["incident"][1], rel=1e-6)
    single = lhs_fremlin([fam(line([0, 0.5], [1, 0])), fam(line([0.5, 0], [1, 1]))], [1.0, 1.0], 0.9)
    assert single.rows[0]["term"] == pytest.approx(1 / math.sqrt(2), rel=1e-6)
    with pytest.raises(HarnessError):
        lhs_fremlin([H], [1.0], 3.0)


def test_lhs_fremlin_degenerate_tuples_contribute_zero():
    par = [fam(line([0, 0.5], [1, 0])), fam(line([0, 0.25], [1, 0]))]
    rep = lhs_fremlin(par, [1.0, 1.0], 2.0)
    assert rep.lhs == 0 and len(rep.rows) > 0


def test_lhs_fremlin_threads_match():
    fams = grid_lines(4)
    a = lhs_fremlin(fams, [1.0, 1.0], 4.0, threads=1)
    b = lhs_fremlin(fams, [1.0, 1.0], 4.0, threads=3)
    assert a.to_csv() == b.to_csv()


def test_lw_kakeya_examples():
    for N in (4, 8):
        rep = lw_kakeya(grid_lines(N), N)
        assert rep.lhs == N * N and rep.rhs == N * N
    par = [fam(line([0, 0.5], [1, 0])), fam(line([0, 1.5], [1, 0]))]
    assert lw_kakeya(par, 4.0).lhs == 0
    with pytest.raises(HarnessError):
        lw_kakeya([fam(line([0, 0, 0], [1, 0, 0])), fam(line([0, 0, 0], [0, 1, 0]))], 3.0)
    assert lw_kakeya([AffineFamily.of([], 1, 2), grid_lines(2)[1]], 2.0).lhs == 0


def test_lw_ratio_stable_under_sweep():
    means = []
    for N in (10, 40):
        ratios = [lw_kakeya([random_lines(N, 16.0, rng), random_lines(N, 16.0, rng)], 16.0).ratio
                  for rng in (np.random.default_rng([N, s]) for s in range(3))]
        means.append(np.mean(ratios))
    assert max(means) / min(means) <= 1.2


def test_report_csv_shape():
    rep = lw_kakeya(grid_lines(2), 2.0)
    lines = rep.to_csv().splitlines()
    assert lines[0] == "cube,incident_1,incident_2,term,cumulative"
    assert lines[-1].startswith("summary,lhs=4.0,rhs=4.0,ratio=1.0")


def test_sj_functional():
    x_axis = fam(line([0, 0], [1, 0]))
    sigma = PolynomialMixture.dirac(PolyNVars.linear([1, 0], 0.5))
    assert sj_functional(x_axis, unit, sigma, 4.0) == pytest.approx(0.25)
    parallel = PolynomialMixture.dirac(PolyNVars.linear([0, 1], 0.5))
    assert sj_functional(x_axis, unit, parallel, 4.0) == 0
    mu = GradedMeasure.from_vectors([[1, 0]], [1.0])
    assert sj_functional(x_axis, unit, mu.scaled(2.0), 4.0) == pytest.approx(2 * sj_functional(x_axis, unit, mu, 4.0))


def test_g_functional():
    a, b = fam(line([0, 0.5], [1, 0])), fam(line([0.5, 0], [0, 1]))
    assert g_functional([a, b], [1.0, 1.0], unit, 4.0) == pytest.approx(1.0)
    tilted = fam(line([0.5, 0], [1, 1]))
    assert g_functional([a, tilted], [1.0, 1.0], unit, 4.0) == pytest.approx(0.5)
    far = fam(line([0, 9.5], [1, 0]))
    assert g_functional([far, b], [1.0, 1.0], unit, 4.0) == 0
    # weights scaled by c: lines of length c in a cube of side c
    big = Cube((0.0, 0.0), 3.0)
    a3, b3 = fam(line([0, 1.5], [1, 0])), fam(line([1.5, 0], [0, 1]))
    assert g_functional([a3, b3], [1.0, 1.0], big, 4.0) == pytest.approx(3.0 ** 2)


def test_uniform_from_tensor_consistency():
    lhs, bound, cP = uniform_from_tensor_check(grid_lines(4), [1.0, 1.0], 4.0)
    assert cP == pytest.approx(1.0)
    assert lhs <= bound * 1.05


def test_duality_examples():
    rep = duality_check([2.5], [1.0], [0.5, 0.5], [3.0, 2.0])
    assert rep.ok
    eq = duality_check(np.ones(4), np.full(4, 0.25), [1.0, 1.0], [2.0, 2.0])
    assert eq.ok and all(step["excess"] == pytest.approx(0.0, abs=1e-15) for step in eq.chain)
    with pytest.raises(HarnessError):
        duality_check([1.0, 2.0], [0.5, 0.6], [1.0], [1.0])
    with pytest.raises(HarnessError):
        duality_check([1.0], [1.0], [0.3, 0.3], [1.0, 1.0])


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 40), st.integers(1, 4), st.integers(0, 10 ** 6))
def test_duality_random(N, m, seed):
    rng = np.random.default_rng(seed)
    G = rng.random(N)
    M = rng.random(N) + 1e-6
    M /= M.sum()
    p = rng.uniform(1.0 / m, 2.0, m)
    degs = rng.integers(1, 20, m).astype(float)
    rep = duality_check(G, M, p, degs)
    assert rep.ok and rep.max_violation <= 1e-9
    assert np.allclose(rep.S.sum(axis=1), rep.C2 * degs)


def test_duality_with_functionals():
    H = [AffineFamily.of([line([0, c + 0.5], [1, 0]) for c in range(-2, 2)]),
         AffineFamily.of([line([c + 0.5, 0], [0, 1]) for c in range(-2, 2)])]
    grid = DyadicGrid(2, 3.0)
    G = np.array([g_functional(H, [1.0, 1.0], grid.cube(i), 3.0) for i in range(len(grid))])
    M = G / G.sum()
    rep = duality_check(G, M, [1.0, 1.0], [4.0, 4.0])
    assert rep.ok
    assert rep.C1P == pytest.approx(G.sum() / 16.0)
