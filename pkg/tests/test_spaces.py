import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hyperfix.errors import NotInPsiClass, NotStrictlyMonotone
from hyperfix.spaces import (
    Ball,
    Box,
    DirectSumPoint,
    LpPsi,
    MaxPsi,
    Polytope,
    ProjectionOracle,
    SpacePoint,
    TabulatedPsi,
    convex_hull_member,
    direct_sum_norm,
    is_strictly_monotone,
    load_psi_table,
    lp_norm,
    min_norm_point,
    norm_from_psi,
    project,
    projection_unique,
    psi_from_norm,
    psi_from_spec,
    psi_inf,
    save_psi_table,
    uniform_monotonicity_modulus,
)


def test_lp_norm_examples():
    assert lp_norm(SpacePoint([3, 4], 2)) == 5
    assert lp_norm(SpacePoint([3, -4], 1)) == 7
    assert lp_norm(SpacePoint([3, -4], math.inf)) == 4
    assert lp_norm([3, 4]) == 5


def test_space_point_validates():
    with pytest.raises(ValueError):
        SpacePoint([1, float("inf")])
    with pytest.raises(ValueError):
        SpacePoint([1, 2], p=0.5)
    x = SpacePoint([1.0, 2.0])
    with pytest.raises(ValueError):
        x.coords[0] = 5.0


# -- psi ------------------------------------------------------------------------

def test_psi_from_norm_examples():
    l2 = psi_from_norm(lambda a, b: math.hypot(a, b))
    assert l2(0.5) == pytest.approx(math.sqrt(2) / 2, abs=1e-12)
    l1 = psi_from_norm(lambda a, b: abs(a) + abs(b))
    np.testing.assert_allclose(l1.grid, 1.0)
    mx = psi_from_norm(lambda a, b: max(abs(a), abs(b)))
    t = np.linspace(0, 1, 1001)
    np.testing.assert_allclose(mx(t), np.maximum(1 - t, t), atol=1e-15)


def test_psi_from_norm_rejects_non_psi():
    # the l_1/2 quasi-norm is not convex and exceeds 1
    with pytest.raises(NotInPsiClass) as exc:
        psi_from_norm(lambda a, b: (abs(a) ** 0.5 + abs(b) ** 0.5) ** 2, M=10)
    assert exc.value.invariant == "upper_bound"
    assert exc.value.index is not None


def test_tabulated_psi_invariants():
    with pytest.raises(NotInPsiClass) as exc:
        TabulatedPsi([1.0, 0.4, 1.0])
    assert exc.value.invariant == "lower_bound"
    # convex but touching psi_inf only at the kink is allowed
    TabulatedPsi([1.0, 0.5, 1.0])
    with pytest.raises(NotInPsiClass) as exc:
        TabulatedPsi([1.0, 0.9, 0.6, 0.9, 1.0])
    assert exc.value.invariant == "convexity"


def test_norm_from_psi_examples():
    assert norm_from_psi(LpPsi(1), 3, 4) == pytest.approx(7)
    assert norm_from_psi(MaxPsi(), 3, 4) == pytest.approx(4)
    assert norm_from_psi(LpPsi(2), 3, 4) == pytest.approx(5, abs=1e-12)
    assert norm_from_psi(LpPsi(2), 0, 0) == 0
    tab = psi_from_norm(lambda a, b: math.hypot(a, b))
    assert norm_from_psi(tab, 3, 4) == pytest.approx(5, abs=1e-3)


def test_direct_sum_norm_examples():
    x, y = SpacePoint([3, 0]), SpacePoint([0, 4])
    assert direct_sum_norm(DirectSumPoint(x, y, LpPsi(1))) == pytest.approx(7)
    assert direct_sum_norm(DirectSumPoint(x, y, LpPsi(2))) == pytest.approx(5)
    zero = SpacePoint([0, 0])
    for psi in (LpPsi(1), LpPsi(3), MaxPsi()):
        assert direct_sum_norm(DirectSumPoint(x, zero, psi)) == pytest.approx(3)
        assert psi(0.0) == 1 and psi(1.0) == 1


def test_strict_monotonicity_examples():
    assert is_strictly_monotone(LpPsi(1))
    assert is_strictly_monotone(LpPsi(2))
    assert not is_strictly_monotone(MaxPsi())
    # a table equal to psi_inf at one interior grid point is rejected
    g = np.array([1.0, 0.75, 0.6, 0.8, 1.0])
    assert not is_strictly_monotone(TabulatedPsi(g), M=4)
    with pytest.raises(ValueError):
        is_strictly_monotone(LpPsi(2), M=1)


def test_modulus_examples():
    assert uniform_monotonicity_modulus(LpPsi(1), 0.1, 200) == pytest.approx(0.1, abs=2 / 200)
    with pytest.raises(NotStrictlyMonotone):
        uniform_monotonicity_modulus(MaxPsi(), 0.1)
    d = [uniform_monotonicity_modulus(LpPsi(2), e, 100) for e in (0.05, 0.1, 0.3, 1.0)]
    assert d[-1] > 0
    assert all(a <= b for a, b in zip(d, d[1:]))


def test_psi_spec_and_table_roundtrip(tmp_path):
    assert psi_from_spec("max") == MaxPsi()
    assert psi_from_spec("lp:1.5") == LpPsi(1.5)
    path = tmp_path / "psi.csv"
    save_psi_table(LpPsi(2), path, M=50)
    tab = psi_from_spec(f"table:{path}")
    t = np.linspace(0, 1, 51)
    np.testing.assert_allclose(tab(t), LpPsi(2)(t), atol=1e-15)
    with pytest.raises(ValueError):
        psi_from_spec("bogus:1")


def test_table_loader_reports_row(tmp_path):
    path = tmp_path / "bad.csv"
    rows = ["t,psi", "0,1", "0.25,0.9", "0.5,0.3", "0.75,0.9", "1,1"]
    path.write_text("\n".join(rows) + "\n")
    with pytest.raises(NotInPsiClass) as exc:
        load_psi_table(path)
    assert "row 3" in str(exc.value)
    path.write_text("x,y\n0,1\n")
    with pytest.raises(NotInPsiClass):
        load_psi_table(path)
    path.write_text("t,psi\n0,1\n0.7,0.9\n1,1\n")
    with pytest.raises(NotInPsiClass) as exc:
        load_psi_table(path)
    assert exc.value.index == 2


psis = st.sampled_from([LpPsi(1), LpPsi(1.5), LpPsi(2), LpPsi(4), MaxPsi(),
                        psi_from_norm(lambda a, b: math.hypot(a, b), 200)])
coord = st.floats(-10, 10, allow_nan=False)


@given(psis, coord, coord, coord, coord, st.floats(-5, 5))
@settings(max_examples=300, deadline=None)
def test_norm_axioms(psi, a1, a2, b1, b2, c):
    n = lambda u, v: norm_from_psi(psi, u, v)  # noqa: E731
    assert n(c * a1, c * a2) == pytest.approx(abs(c) * n(a1, a2), rel=1e-12, abs=1e-12)
    assert n(a1 + b1, a2 + b2) <= n(a1, a2) + n(b1, b2) + 1e-12 * (1 + n(a1, a2) + n(b1, b2))
    if (a1, a2) != (0, 0):
        assert n(a1, a2) > 0


@given(psis, st.floats(0, 5), st.floats(0, 5), st.floats(0, 5), st.floats(0, 5))
@settings(max_examples=300, deadline=None)
def test_norm_monotone(psi, x1, dx, y1, dy):
    assert norm_from_psi(psi, x1, y1) <= norm_from_psi(psi, x1 + dx, y1 + dy) + 1e-12


@pytest.mark.parametrize("psi", [LpPsi(1), LpPsi(1.5), LpPsi(2), LpPsi(3), MaxPsi()])
def test_roundtrip_reproduces_psi(psi):
    tab = psi_from_norm(lambda a, b: norm_from_psi(psi, a, b), 1000)
    t = np.linspace(0, 1, 1001)
    assert np.max(np.abs(tab(t) - psi(t))) <= 1e-3
    assert np.all(tab(t) >= psi_inf(t) - 1e-12)


# -- convex sets and projection ---------------------------------------------------

def test_projection_examples():
    B = Ball([0, 0], 1)
    np.testing.assert_allclose(project(B, SpacePoint([3, 4])).coords, [0.6, 0.8])
    x = np.array([0.1, -0.2])
    np.testing.assert_array_equal(project(B, x), x)
    np.testing.assert_array_equal(project(Box([0, 0], [1, 1]), [2, -1], p=2), [1, 0])


def test_lq_ball_projection_is_euclidean_nearest():
    rng = np.random.default_rng(0)
    for q in (1.0, 1.5, 3.0, math.inf):
        B = Ball([0.0, 0.0, 0.0], 1.0, p=q)
        for _ in range(20):
            x = 3 * rng.standard_normal(3)
            y = B.project(x, 2.0)
            assert lp_norm(y, q) <= 1 + 1e-9
            dist = np.linalg.norm(x - y)
            cand = B.sample(rng, 4000)
            assert dist <= np.min(np.linalg.norm(cand - x, axis=1)) + 1e-9


def test_ball_diameter_and_projection_uniqueness():
    assert Ball([0, 0], 1).diameter() == 2
    assert Ball([0, 0], 1, p=1).diameter(p=2) == 2
    assert Ball([0, 0], 1, p=math.inf).diameter(p=2) == pytest.approx(2 * math.sqrt(2))
    assert Box([0, 0], [1, 1]).diameter(p=1) == 2
    assert projection_unique(2) and not projection_unique(1) and not projection_unique(math.inf)


def test_polytope_projection():
    P = Polytope([[0, 0], [1, 0], [0, 1]])
    np.testing.assert_allclose(P.project(np.array([1.0, 1.0])), [0.5, 0.5], atol=1e-12)
    np.testing.assert_allclose(P.project(np.array([-1.0, -2.0])), [0.0, 0.0], atol=1e-12)
    assert P.diameter() == pytest.approx(math.sqrt(2))
    with pytest.raises(NotImplementedError):
        P.project(np.array([1.0, 1.0]), p=1)


def test_projection_oracle_delegates():
    C = ProjectionOracle(lambda x: np.clip(x, -1, 1), 2, 2 * math.sqrt(2))
    np.testing.assert_array_equal(C.project(np.array([3.0, 0.5])), [1, 0.5])
    assert C.diameter() == pytest.approx(2 * math.sqrt(2))
    assert C.contains([0.5, 0.5])


sets = st.sampled_from([Ball([0.5, -1.0], 2.0), Box([-1, 0], [2, 1]),
                        Polytope([[0, 0], [2, 0], [1, 3], [-1, 1]])])
vec = st.lists(st.floats(-10, 10, allow_nan=False), min_size=2, max_size=2).map(np.array)


@given(sets, vec, vec)
@settings(max_examples=300, deadline=None)
def test_projection_idempotent_and_nonexpansive(C, x, z):
    px, pz = C.project(x), C.project(z)
    np.testing.assert_allclose(C.project(px), px, atol=1e-9)
    assert np.linalg.norm(px - pz) <= np.linalg.norm(x - z) + 1e-9
    assert C.contains(px)


# -- hull membership --------------------------------------------------------------

def test_hull_examples():
    pts = np.array([[0.0, 0.0], [2.0, 0.0], [0.0, 2.0]])
    assert convex_hull_member(pts[0], pts)
    r = convex_hull_member([1.0, 0.0], pts[:2])
    assert r and np.allclose(r.weights, [0.5, 0.5])
    theta = np.linspace(0.0, math.pi / 2, 20)
    arc = np.c_[np.cos(theta), np.sin(theta)]
    r = convex_hull_member([0.0, 0.0], arc, tol=1e-6)
    assert not r
    # distance from the origin to the chord hull is cos(pi/4)
    assert r.residual == pytest.approx(math.cos(math.pi / 4), rel=1e-9)
    with pytest.raises(ValueError):
        convex_hull_member([0, 0], [])


def test_min_norm_point_simple():
    lam, x = min_norm_point([[1.0, 1.0], [1.0, -1.0]])
    np.testing.assert_allclose(x, [1.0, 0.0], atol=1e-12)
    np.testing.assert_allclose(lam, [0.5, 0.5])


@given(st.integers(1, 8), st.integers(1, 5), st.integers(0, 2**32 - 1))
@settings(max_examples=100, deadline=None)
def test_random_convex_combination_is_member(m, d, seed):
    rng = np.random.default_rng(seed)
    P = rng.standard_normal((m, d))
    lam = rng.dirichlet(np.ones(m))
    r = convex_hull_member(lam @ P, P, 1e-8)
    assert r and r.residual <= 1e-8
    assert r.weights.min() >= 0 and r.weights.sum() == pytest.approx(1)
