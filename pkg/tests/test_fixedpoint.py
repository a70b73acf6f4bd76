import math

import numpy as np
import pytest

from hyperfix.errors import (
    AlphaOutOfRange,
    DomainViolation,
    EpsOutOfRange,
    IterationCap,
    NotAContraction,
    NotBounded,
    PreconditionError,
)
from hyperfix.fixedpoint import (
    IterationTrace,
    RegularizationSchedule,
    Termination,
    affine_map,
    custom_map,
    fixed_point_via_projection,
    halpern_iterate,
    mann_iterate,
    nonstandard_picard,
    operator_norm,
    picard_contraction,
    projection_composition,
    random_nonexpansive_affine,
    regularized_map,
    rotation_map,
    symbolic_fixed_point,
)
from hyperfix.infinitesimal import Hyperreal
from hyperfix.spaces import Ball, Box

DISK = Ball([0.0, 0.0], 1.0)


def rot90():
    return rotation_map(math.pi / 2, [0.0, 0.0], DISK)


def line(a, b, r=10.0):
    return affine_map([[a]], [b], Ball([0.0], r))


# -- maps ------------------------------------------------------------------------

def test_operator_norm_matches_svd():
    rng = np.random.default_rng(0)
    A = rng.standard_normal((5, 5))
    assert operator_norm(A) == pytest.approx(np.linalg.norm(A, 2), rel=1e-7)
    assert operator_norm(A, 1) == pytest.approx(np.abs(A).sum(axis=0).max())
    assert operator_norm(A, math.inf) == pytest.approx(np.abs(A).sum(axis=1).max())


def test_rotation_is_isometry():
    T = rot90()
    assert T.lipschitz == 1.0 and T.nonexpansive
    np.testing.assert_allclose(T([1.0, 0.0]), [0.0, 1.0], atol=1e-15)


def test_construction_spot_checks_domain():
    with pytest.raises(DomainViolation):
        affine_map([[1.0]], [0.5], Ball([0.0], 1.0))
    with pytest.raises(ValueError):
        affine_map([[1.0, 0.0]], [0.0], Ball([0.0], 1.0))


def test_nonexpansive_on_random_pairs():
    rng = np.random.default_rng(1)
    maps = [rot90(),
            random_nonexpansive_affine(rng, 4, fixed_dim=1),
            projection_composition([Ball([0.5, 0.0], 1.0), Box([-1, -1], [1, 0.2])], Box([-2, -2], [2, 2]))]
    for T in maps:
        X = T.domain.sample(rng, 10_000)
        Y = T.domain.sample(rng, 10_000)
        lhs = np.linalg.norm(T.apply_batch(X) - T.apply_batch(Y), axis=1)
        assert np.all(lhs <= np.linalg.norm(X - Y, axis=1) + 1e-9), T.kind


# -- Banach ------------------------------------------------------------------------

def test_picard_examples():
    x, tr = picard_contraction(line(0.5, 1.0), [0.0], tol=1e-10)
    assert abs(x[0] - 2) <= 1e-10
    assert tr.terminated_by is Termination.TOLERANCE
    # a constant map lands on its value after one step
    x, tr = picard_contraction(affine_map(np.zeros((2, 2)), [0.3, -0.2], DISK), [0.5, 0.5])
    np.testing.assert_array_equal(x, [0.3, -0.2])
    assert tr.map_evals == 1


@pytest.mark.parametrize("accelerate", [True, False])
def test_picard_iteration_count_matches_geometric_decay(accelerate):
    T = affine_map(0.9 * np.eye(2), [0.0, 0.0], Ball([0.0, 0.0], 2.0))
    tol = 1e-10
    x, tr = picard_contraction(T, [1.0, 1.0], tol=tol, accelerate=accelerate)
    assert np.linalg.norm(x) <= tol
    # first n with 0.9^(n-1) * 0.1 * |x0| <= tol * (1 - k) / k
    d0 = 0.1 * math.sqrt(2)
    expected = 1 + math.ceil(math.log(tol * (0.1 / 0.9) / d0) / math.log(0.9))
    assert tr.map_evals == expected
    assert abs(expected - math.log(tol) / math.log(0.9)) < 30


def test_doubling_agrees_with_plain_loop():
    rng = np.random.default_rng(2)
    M = rng.standard_normal((3, 3))
    T = affine_map(0.8 * M / np.linalg.norm(M, 2), rng.standard_normal(3), Ball([0, 0, 0], 100.0))
    x0 = np.array([1.0, -2.0, 0.5])
    xa, ta = picard_contraction(T, x0, tol=1e-9)
    xb, tb = picard_contraction(T, x0, tol=1e-9, accelerate=False)
    assert ta.map_evals == tb.map_evals
    np.testing.assert_allclose(xa, xb, atol=1e-12)


def test_banach_rate_on_known_fixed_point():
    rng = np.random.default_rng(3)
    for k in (0.2, 0.5, 0.95):
        Q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
        xs = rng.standard_normal(3)
        T = affine_map(k * Q, xs - k * Q @ xs, Ball(xs, 3.0))
        x0 = xs + np.array([1.0, 1.0, -1.0])
        _, tr = picard_contraction(T, x0, tol=1e-12, accelerate=False)
        e0 = np.linalg.norm(x0 - xs)
        for n, x in zip(tr.iters, tr.points):
            assert np.linalg.norm(x - xs) <= k ** int(n) * e0 * (1 + 1e-9) + 1e-15


def test_picard_errors():
    with pytest.raises(NotAContraction):
        picard_contraction(rot90(), [1.0, 0.0])
    with pytest.raises(DomainViolation):
        picard_contraction(line(0.5, 1.0), [50.0])
    with pytest.raises(IterationCap) as exc:
        picard_contraction(line(0.99, 0.0, 2.0), [1.0], tol=1e-12, cap=10, accelerate=False)
    assert exc.value.trace.terminated_by is Termination.ITERATION_CAP
    with pytest.raises(IterationCap):
        picard_contraction(line(0.99, 0.0, 2.0), [1.0], tol=1e-12, cap=10)


# -- regularization ------------------------------------------------------------------

def test_regularized_map_examples():
    I = affine_map(np.eye(2), [0.0, 0.0], DISK)
    S = regularized_map(I, [0.0, 0.0], 0.5)
    np.testing.assert_allclose(S([0.4, -0.8]), [0.2, -0.4])
    for eps in (0.0, 1.0, -0.1, 1.5):
        with pytest.raises(EpsOutOfRange):
            regularized_map(I, [0.0, 0.0], eps)
    with pytest.raises(DomainViolation):
        regularized_map(I, [2.0, 0.0], 0.5)


def test_regularized_lipschitz_scales():
    rng = np.random.default_rng(4)
    T = rot90()
    S = regularized_map(T, [0.5, 0.0], 0.3)
    assert S.lipschitz == pytest.approx(0.7)
    X, Y = DISK.sample(rng, 500), DISK.sample(rng, 500)
    ratio = np.linalg.norm(S.apply_batch(X) - S.apply_batch(Y), axis=1) / np.linalg.norm(X - Y, axis=1)
    np.testing.assert_allclose(ratio, 0.7, rtol=1e-12)
    # non-affine maps are blended pointwise
    C = custom_map(lambda x: T(x), 1.0, DISK)
    Sc = regularized_map(C, [0.5, 0.0], 0.3)
    np.testing.assert_allclose(Sc.apply_batch(X), S.apply_batch(X), atol=1e-15)


def test_schedule_validation():
    s = RegularizationSchedule(0.1, 0.5, 3)
    np.testing.assert_allclose(s.values, [0.1, 0.05, 0.025, 0.0125])
    assert s.inner_tol(1) == pytest.approx(0.0025)
    with pytest.raises(EpsOutOfRange):
        RegularizationSchedule(eps0=1.0)
    for bad in ({"gamma": 1.0}, {"j_max": 0}, {"j_max": 2.5}, {"inner_tol_coeff": 0.0}):
        with pytest.raises(ValueError):
            RegularizationSchedule(**bad)


# -- ladder ------------------------------------------------------------------------

def test_ladder_rotation_converges_to_center():
    run = nonstandard_picard(rot90(), [1.0, 0.0], [1.0, 0.0], RegularizationSchedule(0.1, 0.5, 20))
    assert len(run.ladder) == 21
    assert np.linalg.norm(rot90()(run.point) - run.point) <= 1e-5
    assert np.linalg.norm(run.point) <= 1e-5


def test_ladder_residual_law_every_stage():
    rng = np.random.default_rng(5)
    for _ in range(5):
        T = random_nonexpansive_affine(rng, 3, fixed_dim=int(rng.integers(0, 3)))
        u, x0 = T.domain.sample(rng, 2)
        run = nonstandard_picard(T, u, x0, RegularizationSchedule(0.2, 0.5, 15))
        D = T.domain.diameter()
        for s in run.stages:
            assert s.ok
            assert s.residual <= s.eps * D + 2 * 1.0 * s.eps ** 2 + 1e-12


def test_ladder_cauchy_property():
    rng = np.random.default_rng(6)
    for T in (rot90(), random_nonexpansive_affine(rng, 4, fixed_dim=2)):
        u, x0 = T.domain.sample(rng, 2)
        sched = RegularizationSchedule(0.1, 0.5, 20)
        run = nonstandard_picard(T, u, x0, sched)
        gaps = [np.linalg.norm(b.point - a.point) for a, b in zip(run.stages, run.stages[1:])]
        assert gaps[-1] <= 10 * sched.eps(sched.j_max - 1) * T.domain.diameter()
        assert gaps[-1] < gaps[0]


def test_ladder_identity_and_known_fixed_point():
    I = affine_map(np.eye(2), [0.0, 0.0], DISK)
    u = np.array([0.3, -0.4])
    sched = RegularizationSchedule(0.1, 0.5, 10)
    run = nonstandard_picard(I, u, [0.0, 0.9], sched)
    # each stage is solved to its inner tolerance, which the stopping rule guarantees
    for j, (_, z) in enumerate(run.ladder):
        assert np.linalg.norm(z - u) <= sched.inner_tol(j)
    rng = np.random.default_rng(7)
    T = random_nonexpansive_affine(rng, 3, fixed_dim=0)
    xs = np.array(T.params["fixed_point"])
    run = nonstandard_picard(T, xs, xs, RegularizationSchedule(0.1, 0.5, 10))
    for _, z in run.ladder:
        np.testing.assert_allclose(z, xs, atol=1e-12)


def test_ladder_budget_and_trace():
    run = nonstandard_picard(rot90(), [1.0, 0.0], [1.0, 0.0], RegularizationSchedule(0.1, 0.5, 20),
                             max_evals=500)
    assert run.exhausted and run.trace.map_evals <= 500
    tr = nonstandard_picard(rot90(), [1.0, 0.0], [1.0, 0.0], RegularizationSchedule(0.1, 0.5, 3)).trace
    assert tr.eps.size == len(tr) and np.all(tr.residuals >= 0)
    # stage boundaries repeat the iterate number of the warm start
    assert np.all(np.diff(tr.iters) >= 0)


def test_fixed_point_via_projection():
    res = fixed_point_via_projection(rot90(), [1.0, 0.0], [1.0, 0.0], RegularizationSchedule(0.1, 0.5, 20))
    assert np.linalg.norm(res.point) <= 1e-5 and res.residual <= 1e-5
    # the ladder stays in the domain, so the projection does not move it
    assert res.dist_to_set == 0.0
    np.testing.assert_array_equal(res.point, res.ladder.point)
    I = affine_map(np.eye(2), [0.0, 0.0], DISK)
    sched = RegularizationSchedule(0.1, 0.5, 8)
    res = fixed_point_via_projection(I, [0.1, 0.2], [0.5, 0.5], sched)
    assert np.linalg.norm(res.point - [0.1, 0.2]) <= sched.inner_tol(8)
    T1 = rotation_map(math.pi / 2, [0.0, 0.0], Box([-1, -1], [1, 1], ), p=math.inf)
    with pytest.raises(PreconditionError):
        fixed_point_via_projection(T1, [0.0, 0.0], [0.0, 0.0])


# -- symbolic ------------------------------------------------------------------------

def test_symbolic_examples():
    T = line(0.5, 1.0)
    r = symbolic_fixed_point(T, [0.0], window=3)
    assert r.z == [Hyperreal({0: 2, 1: -4, 2: 4, 3: -4}, 3)]
    assert r.shadow[0] == 2
    I = affine_map(np.eye(2), [0.0, 0.0], DISK)
    r = symbolic_fixed_point(I, [1.0, 0.0])
    assert r.z == [Hyperreal({0: 1.0}, 8), Hyperreal({}, 8)]
    with pytest.raises(NotBounded):
        symbolic_fixed_point(affine_map([[1.0]], [1.0], Ball([0.0], 5.0), check=False), [0.0])


def test_symbolic_rejects_nonaffine_and_expansive():
    with pytest.raises(PreconditionError):
        symbolic_fixed_point(custom_map(lambda x: x, 1.0, DISK), [0.0, 0.0])
    with pytest.raises(PreconditionError):
        symbolic_fixed_point(affine_map([[2.0]], [0.0], Ball([0.0], 1.0), check=False), [0.0])


def test_symbolic_shadow_is_fixed_point():
    rng = np.random.default_rng(8)
    for _ in range(10):
        T = random_nonexpansive_affine(rng, 3, fixed_dim=int(rng.integers(0, 3)))
        u = T.domain.sample(rng, 1)[0]
        s = symbolic_fixed_point(T, u).shadow
        assert np.linalg.norm(T(s) - s) <= 1e-9


# -- Mann / Halpern --------------------------------------------------------------------

def test_mann_degenerate_steps():
    T = rot90()
    x0 = [1.0, 0.0]
    tr = mann_iterate(T, x0, 1.0, n=8)
    orbit = [np.array(x0)]
    for _ in range(8):
        orbit.append(T(orbit[-1]))
    np.testing.assert_allclose(tr.points, orbit, atol=1e-15)
    tr = mann_iterate(T, x0, 0.0, n=5)
    np.testing.assert_array_equal(tr.points, np.tile(x0, (6, 1)))


def test_mann_rotation_residual_decreases():
    tr = mann_iterate(rot90(), [1.0, 0.0], 0.5, n=200)
    assert tr.final_residual <= 1e-2
    assert np.all(np.diff(tr.residuals) <= 1e-15)


def test_halpern_degenerate_steps():
    T = rot90()
    u = np.array([0.0, 0.5])
    tr = halpern_iterate(T, u, [1.0, 0.0], 1.0, n=4)
    np.testing.assert_array_equal(tr.points[1:], np.tile(u, (4, 1)))
    tr = halpern_iterate(T, u, [1.0, 0.0], 0.0, n=4)
    np.testing.assert_allclose(tr.points, mann_iterate(T, [1.0, 0.0], 1.0, n=4).points, atol=1e-15)


def test_halpern_rotation_converges():
    tr = halpern_iterate(rot90(), [1.0, 0.0], [1.0, 0.0], n=10_000)
    assert tr.final_residual <= 5e-2
    assert np.linalg.norm(tr.final_point) <= 5e-2


def test_alpha_validation():
    with pytest.raises(AlphaOutOfRange):
        mann_iterate(rot90(), [1.0, 0.0], 1.5, n=3)
    with pytest.raises(AlphaOutOfRange, match="alpha_2"):
        halpern_iterate(rot90(), [0.0, 0.0], [1.0, 0.0], [0.5, 0.5, -0.1], n=3)
    with pytest.raises(ValueError):
        mann_iterate(rot90(), [1.0, 0.0], [0.5], n=3)
    with pytest.raises(DomainViolation):
        halpern_iterate(rot90(), [2.0, 0.0], [1.0, 0.0], n=3)


# -- traces ------------------------------------------------------------------------

def test_trace_csv_format(tmp_path):
    tr = mann_iterate(rot90(), [1.0, 0.0], 0.5, n=3)
    text = tr.to_csv_text()
    lines = text.splitlines()
    assert lines[0] == "iter,eps,residual,step,coord_0,coord_1"
    assert len(lines) == 5
    assert lines[1].split(",")[1] == ""
    ladder = nonstandard_picard(rot90(), [1.0, 0.0], [1.0, 0.0], RegularizationSchedule(0.1, 0.5, 2)).trace
    assert all(row.split(",")[1] for row in ladder.to_csv_text().splitlines()[1:])
    tr.write_csv(tmp_path / "t.csv")
    assert (tmp_path / "t.csv").read_text() == text


def test_trace_validation_and_concat():
    with pytest.raises(ValueError):
        IterationTrace([0, 1], [[0.0], [1.0]], [0.0], [np.nan, 1.0])
    a = mann_iterate(rot90(), [1.0, 0.0], 0.5, n=3)
    b = mann_iterate(rot90(), a.final_point, 0.5, n=2)
    c = IterationTrace.concat([a, b])
    np.testing.assert_array_equal(c.iters, [0, 1, 2, 3, 3, 4, 5])
    assert c.map_evals == 5
