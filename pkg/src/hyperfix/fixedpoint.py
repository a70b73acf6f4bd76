"""Fixed-point engines for nonexpansive maps.

Everything here iterates on numpy vectors.  A :class:`MapDescriptor` bundles
the map with its domain, ambient lp exponent and Lipschitz metadata; affine
maps additionally expose their linear part so the Picard engine can walk the
orbit by repeated squaring instead of one step at a time.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from ._io import atomic_write, csv_text, fmt_float
from .errors import (
    AlphaOutOfRange,
    DomainViolation,
    EpsOutOfRange,
    IterationCap,
    NotAContraction,
    NumericalFailure,
    PreconditionError,
)
from .infinitesimal import (
    Classification,
    chop,
    classify,
    const,
    eta,
    hr_solve_linear,
    shadow,
    DEFAULT_WINDOW,
)
from .spaces import INF, Ball, ConvexSet, lp_norm

log = logging.getLogger(__name__)

NONEXPANSIVE_SLACK = 1e-9
_FLOAT_FLOOR = 8 * np.finfo(float).eps


class VerificationFailed(NumericalFailure):
    pass


# ---------------------------------------------------------------------------
# maps
# ---------------------------------------------------------------------------

def operator_norm(A: np.ndarray, p: float = 2.0, tol: float = 1e-8, max_iter: int = 10_000) -> float:
    """Induced lp operator norm; power iteration on ``A^T A`` for p = 2.

    For p outside {1, 2, inf} the Riesz-Thorin bound is returned, which is
    an upper bound and therefore safe for nonexpansiveness claims.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if p == 1:
        return float(np.abs(A).sum(axis=0).max())
    if p == INF:
        return float(np.abs(A).sum(axis=1).max())
    if p != 2:
        n1 = operator_norm(A, 1)
        ninf = operator_norm(A, INF)
        return float(n1 ** (1 / p) * ninf ** (1 - 1 / p))
    if not A.any():
        return 0.0
    v = np.random.default_rng(0).standard_normal(A.shape[1])
    v /= np.linalg.norm(v)
    sigma = 0.0
    for _ in range(max_iter):
        w = A.T @ (A @ v)
        nw = np.linalg.norm(w)
        if nw == 0:
            return 0.0
        new = math.sqrt(nw)
        v = w / nw
        if abs(new - sigma) <= tol * new:
            sigma = new
            break
        sigma = new
    return float(sigma)


@dataclass(frozen=True, eq=False)
class MapDescriptor:
    """A self-map of ``domain`` together with its Lipschitz metadata.

    ``linear``/``offset`` are set for affine maps (``T x = linear @ x +
    offset``).  ``lipschitz`` is measured in the ambient ``p`` norm.
    """

    kind: str
    func: Callable[[np.ndarray], np.ndarray]
    domain: ConvexSet
    lipschitz: float
    p: float = 2.0
    linear: np.ndarray | None = None
    offset: np.ndarray | None = None
    params: dict = field(default_factory=dict)

    def __call__(self, x):
        return self.func(np.asarray(x, dtype=float))

    @property
    def is_affine(self) -> bool:
        return self.linear is not None

    @property
    def nonexpansive(self) -> bool:
        return self.lipschitz <= 1 + NONEXPANSIVE_SLACK

    @property
    def dim(self) -> int:
        return self.domain.dim

    def norm(self, v) -> float:
        return lp_norm(v, self.p)

    def apply_batch(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(X)
        if self.is_affine:
            return X @ self.linear.T + self.offset
        return np.array([self(x) for x in X])


def check_maps_into(T: MapDescriptor, n: int = 1000, seed: int = 0, tol: float = 1e-9) -> None:
    """Spot-check that ``T`` sends ``n`` random domain points into the domain."""
    rng = np.random.default_rng(seed)
    pts = T.domain.sample(rng, n)
    for x in pts:
        y = T(x)
        if not T.domain.contains(y, tol=tol * max(1.0, T.norm(y)), p=T.p):
            raise DomainViolation(f"{T.kind} map sends {x} outside its domain (image {y})")


def _affine(kind, A, b, domain, p, check, params=None, lipschitz=None):
    A = np.atleast_2d(np.asarray(A, dtype=float)).copy()
    b = np.asarray(b, dtype=float).ravel().copy()
    if A.shape != (b.size, b.size):
        raise ValueError(f"affine map needs square A matching b, got {A.shape} and {b.shape}")
    if domain.dim != b.size:
        raise ValueError(f"domain dimension {domain.dim} does not match map dimension {b.size}")
    A.setflags(write=False)
    b.setflags(write=False)
    k = operator_norm(A, p) if lipschitz is None else lipschitz
    T = MapDescriptor(kind, lambda x: A @ x + b, domain, k, p, A, b, dict(params or {}))
    if check:
        check_maps_into(T)
    return T


def affine_map(A, b, domain: ConvexSet, p: float = 2.0, check: bool = True) -> MapDescriptor:
    return _affine("affine", A, b, domain, p, check)


def rotation_map(theta: float, center, domain: ConvexSet, p: float = 2.0, check: bool = True) -> MapDescriptor:
    """Rotation by ``theta`` about ``center`` in the plane of the first two axes."""
    c = np.asarray(center, dtype=float).ravel()
    if c.size < 2:
        raise ValueError("rotation needs dimension >= 2")
    A = np.eye(c.size)
    A[:2, :2] = [[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]]
    b = c - A @ c
    return _affine("rotation", A, b, domain, p, check,
                   {"theta": theta, "center": c.tolist()},
                   lipschitz=1.0 if p == 2 else None)


def projection_composition(sets: Sequence[ConvexSet], domain: ConvexSet, p: float = 2.0,
                           check: bool = True) -> MapDescriptor:
    """``P_{C_m} o ... o P_{C_1}``; nonexpansive when the metric is Euclidean."""
    sets = list(sets)
    if not sets:
        raise ValueError("projection composition needs at least one set")

    def func(x):
        for C in sets:
            x = C.project(x, p)
        return x

    T = MapDescriptor("projections", func, domain, 1.0 if p == 2 else INF, p,
                      params={"n_sets": len(sets)})
    if check:
        check_maps_into(T)
    return T


def custom_map(func: Callable, lipschitz_claim: float, domain: ConvexSet, p: float = 2.0,
               check: bool = True) -> MapDescriptor:
    T = MapDescriptor("custom", lambda x: np.asarray(func(x), dtype=float), domain,
                      float(lipschitz_claim), p)
    if check:
        check_maps_into(T)
    return T


def regularized_map(T: MapDescriptor, u, eps: float) -> MapDescriptor:
    """``S x = (1 - eps) T x + eps u``, a contraction with factor ``(1-eps) k``."""
    if not 0 < eps < 1:
        raise EpsOutOfRange(f"eps must lie in (0, 1), got {eps!r}")
    u = np.asarray(u, dtype=float).ravel()
    if not T.domain.contains(u, p=T.p):
        raise DomainViolation("anchor u must lie in the map's domain")
    # snap eps so the two blend weights sum to exactly 1 in floating point
    eps = 1.0 - (1.0 - eps)
    k = (1 - eps) * T.lipschitz
    params = {"base": T.kind, "eps": eps}
    if T.is_affine:
        A = (1 - eps) * T.linear
        c = (1 - eps) * T.offset + eps * u
        return MapDescriptor("affine", lambda x: A @ x + c, T.domain, k, T.p, A, c, params)
    base = T.func
    return MapDescriptor("regularized", lambda x: (1 - eps) * base(x) + eps * u, T.domain, k, T.p, params=params)


# ---------------------------------------------------------------------------
# traces
# ---------------------------------------------------------------------------

class Termination(enum.Enum):
    TOLERANCE = "tolerance"
    ITERATION_CAP = "iteration_cap"
    # step fell to float resolution before reaching the requested tolerance
    PRECISION = "precision"


@dataclass
class IterationTrace:
    """Recorded iterates of one run.

    Row ``i`` holds iterate number ``iters[i]``; ``steps[i]`` is the length
    of the step that produced it (NaN for the start point) and
    ``residuals[i]`` is ``||T x - x||`` at it.  ``eps`` is empty for runs
    without regularization, else one value per row.
    """

    iters: np.ndarray
    points: np.ndarray
    residuals: np.ndarray
    steps: np.ndarray
    eps: np.ndarray = field(default_factory=lambda: np.empty(0))
    terminated_by: Termination = Termination.TOLERANCE
    map_evals: int = 0

    def __post_init__(self):
        self.iters = np.asarray(self.iters, dtype=np.int64)
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        self.residuals = np.asarray(self.residuals, dtype=float)
        self.steps = np.asarray(self.steps, dtype=float)
        self.eps = np.asarray(self.eps, dtype=float)
        n = len(self.iters)
        if not (len(self.points) == len(self.residuals) == len(self.steps) == n):
            raise ValueError("trace arrays must have equal length")
        if self.eps.size not in (0, n):
            raise ValueError("eps schedule must be empty or one value per row")

    def __len__(self):
        return len(self.iters)

    @property
    def final_point(self) -> np.ndarray:
        return self.points[-1]

    @property
    def final_residual(self) -> float:
        return float(self.residuals[-1])

    def to_csv_text(self) -> str:
        d = self.points.shape[1]
        header = ["iter", "eps", "residual", "step"] + [f"coord_{i}" for i in range(d)]
        rows = []
        for i in range(len(self)):
            e = fmt_float(self.eps[i]) if self.eps.size else ""
            rows.append([str(int(self.iters[i])), e, fmt_float(self.residuals[i]), fmt_float(self.steps[i])]
                        + [fmt_float(v) for v in self.points[i]])
        return csv_text(header, rows)

    def write_csv(self, path) -> None:
        atomic_write(path, self.to_csv_text())

    @staticmethod
    def concat(traces: Sequence["IterationTrace"]) -> "IterationTrace":
        """Join traces end to end, renumbering iterations cumulatively."""
        offset = 0
        iters, pts, res, steps, eps = [], [], [], [], []
        evals = 0
        for tr in traces:
            iters.append(tr.iters + offset)
            offset += int(tr.iters[-1]) if len(tr) else 0
            pts.append(tr.points)
            res.append(tr.residuals)
            steps.append(tr.steps)
            eps.append(tr.eps if tr.eps.size else np.full(len(tr), np.nan))
            evals += tr.map_evals
        last = traces[-1].terminated_by if traces else Termination.TOLERANCE
        cat = np.concatenate
        return IterationTrace(cat(iters), np.vstack(pts), cat(res), cat(steps), cat(eps), last, evals)


# ---------------------------------------------------------------------------
# Banach / Picard
# ---------------------------------------------------------------------------

def _picard_loop(T, x0, thr, cap):
    x = x0.copy()
    iters, pts, steps, res = [0], [x], [np.nan], []
    xn = T.norm(x)
    for n in range(1, cap + 1):
        y = T(x)
        s = T.norm(y - x)
        res.append(s)
        x = y
        iters.append(n)
        pts.append(x)
        steps.append(s)
        if s <= thr:
            term = Termination.TOLERANCE
            break
        xn = T.norm(x)
        if s <= _FLOAT_FLOOR * max(1.0, xn):
            term = Termination.PRECISION
            break
    else:
        res.append(T.norm(T(x) - x))
        tr = IterationTrace(iters, pts, res, steps, terminated_by=Termination.ITERATION_CAP, map_evals=cap)
        raise IterationCap(f"Picard iteration hit cap {cap} (last step {s:.3e}, need {thr:.3e})", tr)
    res.append(T.norm(T(x) - x))
    return x, IterationTrace(iters, pts, res, steps, terminated_by=term, map_evals=iters[-1])


def _picard_doubling(T, x0, thr, cap):
    """Exact Picard orbit of an affine contraction by repeated squaring.

    With ``S x = L x + c`` and ``d = S x0 - x0`` the n-th step is
    ``x_n - x_{n-1} = L^{n-1} d``, which is monotonically decreasing in norm
    because ``||L|| < 1``.  The first ``n`` meeting the stopping rule is
    located by doubling then bisection on the binary digits of ``n - 1``;
    ``x_n = L^n x0 + (I + L + ... + L^{n-1}) c`` is then assembled from the
    squared maps.  Every recorded row is an honest orbit point.
    """
    L, c = T.linear, T.offset
    dim = c.size
    d = L @ x0 + c - x0
    norm = T.norm
    iters, pts, steps, res = [0], [x0.copy()], [np.nan], [norm(d)]

    # P[j] = L^(2^j), C[j] = sum_{i < 2^j} L^i c, Q = L^(2^j - 1)
    P, C = [L], [c]
    Q = np.eye(dim)
    j = 0
    if norm(d) <= thr:
        n = 1
    else:
        while True:
            n_j = 1 << j
            if n_j > cap:
                tr = IterationTrace(iters, pts, res, steps, terminated_by=Termination.ITERATION_CAP,
                                    map_evals=cap)
                raise IterationCap(f"Picard iteration hit cap {cap}", tr)
            x_nj = P[j] @ x0 + C[j]
            iters.append(n_j)
            pts.append(x_nj)
            steps.append(norm(Q @ d))
            w = P[j] @ d
            res.append(norm(w))
            if norm(w) <= thr:
                break
            Q = P[j] @ Q
            P.append(P[j] @ P[j])
            C.append(P[j] @ C[j] + C[j])
            j += 1
        # L^(2^j) d meets the rule, L^(2^(j-1)) d does not (or j == 0)
        if j == 0:
            m_star = 1
        else:
            m = 1 << (j - 1)
            w = P[j - 1] @ d
            for b in range(j - 2, -1, -1):
                cand = P[b] @ w
                if norm(cand) > thr:
                    m += 1 << b
                    w = cand
            m_star = m + 1
        n = m_star + 1
    if n > cap:
        tr = IterationTrace(iters, pts, res, steps, terminated_by=Termination.ITERATION_CAP, map_evals=cap)
        raise IterationCap(f"Picard iteration needs {n} steps, cap is {cap}", tr)

    Mn, cn = np.eye(dim), np.zeros(dim)
    Lm = np.eye(dim)  # L^(n-1)
    for b in range(n.bit_length()):
        if b >= len(P):
            P.append(P[-1] @ P[-1])
            C.append(P[-2] @ C[-1] + C[-1])
        if (n >> b) & 1:
            Mn, cn = P[b] @ Mn, P[b] @ cn + C[b]
        if ((n - 1) >> b) & 1:
            Lm = P[b] @ Lm
    x = Mn @ x0 + cn
    # doubling probes past n are real orbit points but lie beyond the stop
    keep = [i for i, it in enumerate(iters) if it < n]
    iters, pts, steps, res = ([seq[i] for i in keep] for seq in (iters, pts, steps, res))
    if iters[-1] != n:
        w = Lm @ d
        iters.append(n)
        pts.append(x)
        steps.append(norm(w))
        res.append(norm(L @ w))
    return x, IterationTrace(iters, pts, res, steps, terminated_by=Termination.TOLERANCE, map_evals=n)


def picard_contraction(T: MapDescriptor, x0, tol: float = 1e-10, cap: int = 1_000_000,
                       accelerate: bool = True, check_start: bool = True):
    """Banach iteration ``x_{n+1} = T x_n`` with an a-posteriori stopping rule.

    Stops at the first ``n`` with ``||x_n - x_{n-1}|| <= tol (1 - k) / k``,
    which guarantees ``||x_n - x*|| <= tol``.  Affine maps are iterated by
    orbit doubling (same iterates, logarithmic cost) unless ``accelerate``
    is off.  In the plain loop a step that reaches float resolution ends
    the run with ``Termination.PRECISION``.

    Returns ``(x_n, trace)``.  Raises :class:`NotAContraction` when the
    Lipschitz constant is not below 1 and :class:`IterationCap` when ``cap``
    iterations do not suffice.
    """
    k = float(T.lipschitz)
    if not k < 1:
        raise NotAContraction(f"Lipschitz constant {k} is not below 1")
    x0 = np.asarray(x0, dtype=float).ravel()
    if check_start and not T.domain.contains(x0, p=T.p):
        raise DomainViolation("starting point lies outside the domain")
    thr = tol * (1 - k) / k if k > 0 else INF
    if accelerate and T.is_affine:
        return _picard_doubling(T, x0, thr, cap)
    return _picard_loop(T, x0, thr, cap)


# ---------------------------------------------------------------------------
# regularized (nonstandard) Picard ladder
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RegularizationSchedule:
    """Geometric schedule ``eps_j = eps0 * gamma**j`` for ``j = 0..j_max``."""

    eps0: float = 0.1
    gamma: float = 0.5
    j_max: int = 30
    inner_tol_coeff: float = 1.0

    def __post_init__(self):
        if not 0 < self.eps0 < 1:
            raise EpsOutOfRange(f"eps0 must lie in (0, 1), got {self.eps0!r}")
        if not 0 < self.gamma < 1:
            raise ValueError(f"gamma must lie in (0, 1), got {self.gamma!r}")
        if int(self.j_max) != self.j_max or self.j_max < 1:
            raise ValueError("j_max must be a positive integer")
        if not self.inner_tol_coeff > 0:
            raise ValueError("inner_tol_coeff must be positive")

    def eps(self, j: int) -> float:
        return self.eps0 * self.gamma ** j

    def inner_tol(self, j: int) -> float:
        return self.inner_tol_coeff * self.eps(j) ** 2

    @property
    def values(self) -> np.ndarray:
        return self.eps0 * self.gamma ** np.arange(self.j_max + 1)


class Stage(NamedTuple):
    j: int
    eps: float
    point: np.ndarray
    residual: float  # ||T z_j - z_j||
    bound: float  # eps_j * D + 2 tol_j
    iterations: int

    @property
    def ok(self) -> bool:
        return self.residual <= self.bound * (1 + 1e-9) + 1e-15


class LadderResult(NamedTuple):
    point: np.ndarray
    stages: list
    trace: IterationTrace
    exhausted: bool = False  # evaluation budget ran out before j_max

    @property
    def ladder(self) -> list[tuple[float, np.ndarray]]:
        return [(s.eps, s.point) for s in self.stages]


def nonstandard_picard(T: MapDescriptor, u, x0, sched: RegularizationSchedule | None = None,
                       cap: int | None = None, max_evals: int | None = None,
                       accelerate: bool = True) -> LadderResult:
    """Continuation ladder over ``S_eps x = (1-eps) T x + eps u``.

    Stage ``j`` runs :func:`picard_contraction` on ``S_{eps_j}`` from the
    previous stage's point with tolerance ``inner_tol_coeff * eps_j**2``.
    Each stage's residual ``||T z_j - z_j||`` is compared to
    ``eps_j * diam(C) + 2 tol_j``; violations are logged and visible through
    ``Stage.ok``.

    ``cap`` bounds each stage (default: unbounded for affine maps walked by
    doubling, 10**6 otherwise).  With ``max_evals`` the ladder instead stops
    once the total number of map evaluations is spent, returning the last
    iterate reached (``exhausted=True``).
    """
    sched = sched or RegularizationSchedule()
    u = np.asarray(u, dtype=float).ravel()
    z = np.asarray(x0, dtype=float).ravel()
    if not T.domain.contains(z, p=T.p):
        raise DomainViolation("starting point lies outside the domain")
    if cap is None:
        cap = (1 << 62) if (accelerate and T.is_affine) else 1_000_000
    D = T.domain.diameter(T.p)
    stages, traces = [], []
    used = 0
    exhausted = False
    for j in range(sched.j_max + 1):
        eps, tol = sched.eps(j), sched.inner_tol(j)
        S = regularized_map(T, u, eps)
        stage_cap = cap if max_evals is None else min(cap, max_evals - used)
        if stage_cap <= 0:
            exhausted = True
            break
        try:
            z_new, tr = picard_contraction(S, z, tol, stage_cap, accelerate, check_start=False)
        except IterationCap as exc:
            if max_evals is None or exc.trace is None:
                raise
            tr = exc.trace
            z_new = tr.final_point
            exhausted = True
        used += tr.map_evals
        tr.eps = np.full(len(tr), eps)
        tr.residuals = np.linalg.norm(T.apply_batch(tr.points) - tr.points, ord=T.p, axis=1)
        traces.append(tr)
        z = z_new
        res = T.norm(T(z) - z)
        stage = Stage(j, eps, z, res, eps * D + 2 * tol, tr.map_evals)
        if not exhausted and not stage.ok:
            log.warning("stage %d: residual %.3e exceeds bound %.3e", j, res, stage.bound)
        stages.append(stage)
        if exhausted:
            break
    trace = IterationTrace.concat(traces)
    return LadderResult(z, stages, trace, exhausted)


class ProjectedFixedPoint(NamedTuple):
    point: np.ndarray
    residual: float  # ||T p - p||
    dist_to_set: float  # ||z_jmax - P_C z_jmax||
    ladder: LadderResult


def fixed_point_via_projection(T: MapDescriptor, u, x0, sched: RegularizationSchedule | None = None,
                               C: ConvexSet | None = None, **kwargs) -> ProjectedFixedPoint:
    """Project the ladder's last point onto ``C`` (default: T's domain).

    The distance that the projection actually moves the point is reported
    as ``dist_to_set``; whether it can ever be nonzero is open.
    """
    if not 1 < T.p < INF:
        raise PreconditionError("metric projection needs a uniformly convex ambient norm (1 < p < inf)")
    C = C or T.domain
    run = nonstandard_picard(T, u, x0, sched, **kwargs)
    z = run.point
    pz = C.project(z, T.p)
    return ProjectedFixedPoint(pz, T.norm(T(pz) - pz), T.norm(z - pz), run)


# ---------------------------------------------------------------------------
# symbolic route: eps = h exactly
# ---------------------------------------------------------------------------

class SymbolicFixedPoint(NamedTuple):
    z: list
    shadow: np.ndarray


def symbolic_fixed_point(T: MapDescriptor, u, window: int = DEFAULT_WINDOW,
                         rtol: float = 1e-12) -> SymbolicFixedPoint:
    """Fixed point of ``S = (1 - h) T + h u`` over the hyperreals.

    Solves ``(I - (1-h) A) z = (1-h) b + h u`` and checks that every
    component of ``T z - z`` is infinitesimal.  An unbounded ``z`` (no
    standard part) raises :class:`NotBounded`; it signals that T has no
    fixed point.
    """
    if not T.is_affine:
        raise PreconditionError("symbolic fixed point needs an affine map")
    if not T.nonexpansive:
        raise PreconditionError(f"map is not nonexpansive (Lipschitz {T.lipschitz})")
    A, b = T.linear, T.offset
    n = b.size
    u = np.asarray(u, dtype=float).ravel()
    h = eta(1, window)
    M = [[const(float(i == j) - A[i, j], window) + A[i, j] * h for j in range(n)] for i in range(n)]
    rhs = [const(b[i], window) + (u[i] - b[i]) * h for i in range(n)]
    z = hr_solve_linear(M, rhs, window, rtol=rtol)
    sh = shadow(z)
    for i in range(n):
        acc = const(b[i], window) - z[i]
        for j in range(n):
            if A[i, j] != 0.0:
                acc = acc + A[i, j] * z[j]
        # Only non-positive exponents decide infinitesimality, so only the
        # size of those coefficients sets the noise floor.
        scale = max([abs(zz.coeff(0)) for zz in z] + [abs(b[i]), 1.0])
        acc = chop(acc, 1e3 * rtol * scale * (1.0 + np.abs(A[i]).sum()))
        if classify(acc) is not Classification.INFINITESIMAL:
            raise VerificationFailed(f"component {i} of Tz - z is not infinitesimal: {acc}")
    return SymbolicFixedPoint(z, sh)


# ---------------------------------------------------------------------------
# Mann and Halpern baselines
# ---------------------------------------------------------------------------

def _alpha_array(alphas, n: int) -> np.ndarray:
    if callable(alphas):
        arr = np.array([alphas(k) for k in range(n)], dtype=float)
    elif np.ndim(alphas) == 0:
        arr = np.full(n, float(alphas))
    else:
        arr = np.asarray(alphas, dtype=float).ravel()
        if arr.size < n:
            raise ValueError(f"need {n} step sizes, got {arr.size}")
        arr = arr[:n]
    bad = np.flatnonzero(~((arr >= 0) & (arr <= 1)))
    if bad.size:
        k = int(bad[0])
        raise AlphaOutOfRange(f"alpha_{k} = {arr[k]!r} not in [0, 1]")
    return arr


def harmonic(k: int) -> float:
    return 1.0 / (k + 1)


def mann_iterate(T: MapDescriptor, x0, alphas=0.5, n: int = 1000) -> IterationTrace:
    """``x_{k+1} = (1 - a_k) x_k + a_k T x_k`` for ``k < n``."""
    a = _alpha_array(alphas, n)
    x = np.asarray(x0, dtype=float).ravel()
    if not T.domain.contains(x, p=T.p):
        raise DomainViolation("starting point lies outside the domain")
    pts = np.empty((n + 1, x.size))
    res = np.empty(n + 1)
    steps = np.empty(n + 1)
    pts[0], steps[0] = x, np.nan
    for k in range(n):
        tx = T(x)
        res[k] = T.norm(tx - x)
        y = (1 - a[k]) * x + a[k] * tx
        steps[k + 1] = T.norm(y - x)
        x = y
        pts[k + 1] = x
    res[n] = T.norm(T(x) - x)
    return IterationTrace(np.arange(n + 1), pts, res, steps,
                          terminated_by=Termination.ITERATION_CAP, map_evals=n)


def halpern_iterate(T: MapDescriptor, u, x0, alphas=harmonic, n: int = 1000) -> IterationTrace:
    """``x_{k+1} = a_k u + (1 - a_k) T x_k``; default ``a_k = 1/(k+1)``."""
    a = _alpha_array(alphas, n)
    u = np.asarray(u, dtype=float).ravel()
    x = np.asarray(x0, dtype=float).ravel()
    for name, v in (("starting point", x), ("anchor u", u)):
        if not T.domain.contains(v, p=T.p):
            raise DomainViolation(f"{name} lies outside the domain")
    pts = np.empty((n + 1, x.size))
    res = np.empty(n + 1)
    steps = np.empty(n + 1)
    pts[0], steps[0] = x, np.nan
    for k in range(n):
        tx = T(x)
        res[k] = T.norm(tx - x)
        y = a[k] * u + (1 - a[k]) * tx
        steps[k + 1] = T.norm(y - x)
        x = y
        pts[k + 1] = x
    res[n] = T.norm(T(x) - x)
    return IterationTrace(np.arange(n + 1), pts, res, steps,
                          terminated_by=Termination.ITERATION_CAP, map_evals=n)


# ---------------------------------------------------------------------------
# random test maps
# ---------------------------------------------------------------------------

def random_nonexpansive_affine(rng: np.random.Generator, dim: int, fixed_point=None,
                               fixed_dim: int = 1, radius: float = 1.0) -> MapDescriptor:
    """Euclidean-nonexpansive affine map with a known fixed point.

    ``A = Q D Q^T`` with ``Q`` orthogonal and ``D`` block diagonal: an
    identity block of size ``fixed_dim`` (the fixed-point set is an affine
    subspace of that dimension), then scaled rotation blocks and a scalar,
    all of norm <= 1.  ``b = x* - A x*`` so ``x*`` (default: random) is
    fixed; the domain is the Euclidean ball of ``radius`` around it, which
    every such map leaves invariant.
    """
    if not 0 <= fixed_dim <= dim:
        raise ValueError("fixed_dim must lie in [0, dim]")
    Q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    D = np.zeros((dim, dim))
    D[:fixed_dim, :fixed_dim] = np.eye(fixed_dim)
    i = fixed_dim
    while i + 1 < dim:
        r = rng.choice([1.0, rng.uniform(0.3, 1.0)])
        th = rng.uniform(0.3, math.pi - 0.3)
        D[i:i + 2, i:i + 2] = r * np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]])
        i += 2
    if i < dim:
        D[i, i] = rng.uniform(-0.9, 0.9)
    A = Q @ D @ Q.T
    xs = rng.standard_normal(dim) if fixed_point is None else np.asarray(fixed_point, dtype=float)
    b = xs - A @ xs
    return _affine("affine", A, b, Ball(xs, radius), 2.0, check=False,
                   params={"fixed_point": xs.tolist(), "fixed_dim": fixed_dim})
