"""Norms, psi-direct sums, convex sets and metric projection.

Points are plain numpy arrays throughout the numerical code; the
:class:`SpacePoint` / :class:`DirectSumPoint` wrappers attach the ambient
norm when a value has to carry its geometry around (samples, files, CLI).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import NoConvergence, NotInPsiClass, NotStrictlyMonotone

INF = math.inf
PSI_TOL = 1e-12


# ---------------------------------------------------------------------------
# points and lp norms
# ---------------------------------------------------------------------------

def _check_p(p):
    if not (p == INF or 1 <= p < INF):
        raise ValueError(f"lp exponent must lie in [1, inf], got {p!r}")
    return float(p)


@dataclass(frozen=True)
class SpacePoint:
    coords: np.ndarray
    p: float = 2.0

    def __post_init__(self):
        arr = np.array(self.coords, dtype=float).ravel()
        if not np.all(np.isfinite(arr)):
            raise ValueError("SpacePoint coordinates must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "coords", arr)
        object.__setattr__(self, "p", _check_p(self.p))

    @property
    def dim(self) -> int:
        return self.coords.size

    def __array__(self, dtype=None, copy=None):
        return self.coords if dtype is None else self.coords.astype(dtype)


def lp_norm(v, p=None) -> float:
    """lp norm of a point; ``p`` defaults to the point's own exponent."""
    if isinstance(v, SpacePoint):
        p = v.p if p is None else p
        v = v.coords
    p = _check_p(2.0 if p is None else p)
    return float(np.linalg.norm(np.asarray(v, dtype=float).ravel(), ord=p))


def _coords(x) -> np.ndarray:
    return x.coords if isinstance(x, SpacePoint) else np.asarray(x, dtype=float)


# ---------------------------------------------------------------------------
# psi functions (Bonsall-Duncan generators of monotone planar norms)
# ---------------------------------------------------------------------------

class PsiFunction:
    """Convex ``psi`` on [0, 1] with ``max(1-t, t) <= psi(t) <= 1``."""

    kind = "abstract"

    def __call__(self, t):
        raise NotImplementedError

    def spec(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class LpPsi(PsiFunction):
    p: float
    kind = "lp"

    def __post_init__(self):
        if not 1 <= self.p < INF:
            raise ValueError(f"LpPsi needs 1 <= p < inf, got {self.p!r}")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return ((1 - t) ** self.p + t ** self.p) ** (1 / self.p)

    def spec(self):
        return f"lp:{self.p:g}"


@dataclass(frozen=True)
class MaxPsi(PsiFunction):
    """``psi_inf(t) = max(1 - t, t)``, the generator of the max norm."""

    kind = "max"

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return np.maximum(1 - t, t)

    def spec(self):
        return "max"


@dataclass(frozen=True, eq=False)
class TabulatedPsi(PsiFunction):
    """psi sampled at ``t = i/M``; evaluated by linear interpolation."""

    grid: np.ndarray
    kind = "tabulated"
    source: str | None = field(default=None, compare=False)

    def __post_init__(self):
        g = np.array(self.grid, dtype=float).ravel()
        _validate_psi_grid(g)
        g[0] = g[-1] = 1.0
        g.setflags(write=False)
        object.__setattr__(self, "grid", g)

    @property
    def M(self) -> int:
        return self.grid.size - 1

    @property
    def t(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.grid.size)

    def __call__(self, t):
        return np.interp(np.asarray(t, dtype=float), self.t, self.grid)

    def spec(self):
        return f"table:{self.source}" if self.source else f"table[{self.M}]"


def psi_inf(t):
    return np.maximum(1 - np.asarray(t, dtype=float), np.asarray(t, dtype=float))


def _validate_psi_grid(g: np.ndarray) -> None:
    if g.size < 3:
        raise NotInPsiClass("psi grid needs at least 3 points", "size", None)
    if not np.all(np.isfinite(g)):
        i = int(np.flatnonzero(~np.isfinite(g))[0])
        raise NotInPsiClass(f"non-finite psi value at grid index {i}", "finite", i)
    for i in (0, g.size - 1):
        if abs(g[i] - 1.0) > PSI_TOL:
            raise NotInPsiClass(f"psi endpoint at grid index {i} is {g[i]!r}, not 1", "endpoints", i)
    t = np.linspace(0.0, 1.0, g.size)
    low = np.flatnonzero(g < psi_inf(t) - PSI_TOL)
    if low.size:
        i = int(low[0])
        raise NotInPsiClass(f"psi({t[i]:g}) = {g[i]!r} below max(1-t, t)", "lower_bound", i)
    high = np.flatnonzero(g > 1.0 + PSI_TOL)
    if high.size:
        i = int(high[0])
        raise NotInPsiClass(f"psi({t[i]:g}) = {g[i]!r} above 1", "upper_bound", i)
    bad = np.flatnonzero(g[:-2] + g[2:] < 2 * g[1:-1] - PSI_TOL)
    if bad.size:
        i = int(bad[0]) + 1
        raise NotInPsiClass(f"psi grid not convex at index {i}", "convexity", i)


def psi_from_norm(norm2: Callable[[float, float], float], M: int = 1000) -> TabulatedPsi:
    """Tabulate ``psi(t) = ||(1-t, t)||`` for a monotone normalized planar norm."""
    t = np.linspace(0.0, 1.0, M + 1)
    grid = np.array([norm2(1.0 - ti, ti) for ti in t], dtype=float)
    return TabulatedPsi(grid)


def norm_from_psi(psi: PsiFunction, x1, x2):
    """The absolute normalized norm ``(|x1|+|x2|) psi(|x2|/(|x1|+|x2|))``.

    Broadcasts over array arguments; returns a float for scalar input.
    """
    a1 = np.abs(np.asarray(x1, dtype=float))
    a2 = np.abs(np.asarray(x2, dtype=float))
    s = a1 + a2
    with np.errstate(invalid="ignore", divide="ignore"):
        t = np.where(s > 0, a2 / np.where(s > 0, s, 1.0), 0.0)
    out = np.where(s > 0, s * psi(t), 0.0)
    return float(out) if out.ndim == 0 else out


def psi_from_spec(spec: str) -> PsiFunction:
    """Parse ``lp:<p>``, ``max`` or ``table:<csv path>``."""
    spec = spec.strip()
    if spec == "max":
        return MaxPsi()
    kind, _, arg = spec.partition(":")
    if kind == "lp":
        return LpPsi(float(arg))
    if kind == "table":
        return load_psi_table(arg)
    raise ValueError(f"unknown psi spec {spec!r}")


def load_psi_table(path) -> TabulatedPsi:
    """Read a ``t,psi`` CSV; errors name the offending data row (1-based)."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [h.strip() for h in rows[0]] != ["t", "psi"]:
        raise NotInPsiClass(f"{path}: header must be 't,psi'", "header", 0)
    data = rows[1:]
    M = len(data) - 1
    if M < 2:
        raise NotInPsiClass(f"{path}: need at least 3 rows", "size", len(data))
    ts, vals = [], []
    for r, row in enumerate(data, start=1):
        try:
            t, v = float(row[0]), float(row[1])
        except (ValueError, IndexError):
            raise NotInPsiClass(f"{path}: row {r} is not two numbers", "format", r) from None
        if abs(t - (r - 1) / M) > 1e-9:
            raise NotInPsiClass(f"{path}: row {r} has t={t!r}, expected {(r - 1) / M!r}", "grid", r)
        ts.append(t)
        vals.append(v)
    try:
        return TabulatedPsi(np.array(vals), source=str(path))
    except NotInPsiClass as exc:
        row = None if exc.index is None else exc.index + 1
        raise NotInPsiClass(f"{path}: row {row}: {exc}", exc.invariant, row) from None


def save_psi_table(psi: PsiFunction, path, M: int = 1000) -> None:
    t = np.linspace(0.0, 1.0, M + 1)
    vals = psi(t)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "psi"])
        for ti, vi in zip(t, vals):
            w.writerow([repr(float(ti)), repr(float(vi))])


def is_strictly_monotone(psi: PsiFunction, M: int = 1000) -> bool:
    """Grid test of ``psi(t) > max(1-t, t)`` on interior points ``i/M``.

    The inequality is strict with no tolerance, so a psi touching psi_inf
    within float resolution reads as not strictly monotone.
    """
    if M < 2:
        raise ValueError("grid size M must be at least 2")
    t = np.arange(1, M) / M
    return bool(np.all(psi(t) > psi_inf(t)))


def uniform_monotonicity_modulus(psi: PsiFunction, eps: float, grid: int = 200) -> float:
    """Brute-force modulus of uniform monotonicity of ``||.||_psi``.

    Over the grid ``{0, 1/(N-1), ..., 1}^3`` restricted to triples with
    ``(a, b)`` and ``(a, c)`` in the unit ball, returns the largest ``delta``
    such that ``||(a,b)|| < ||(a,c)|| + delta`` forces ``b < c + eps``, i.e.
    the minimum of ``||(a,b)|| - ||(a,c)||`` over grid triples with
    ``b >= c + eps``.  ``inf`` if there are no such triples.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if not is_strictly_monotone(psi):
        raise NotStrictlyMonotone(f"psi {psi.spec()} is not strictly monotone")
    vals = np.linspace(0.0, 1.0, grid)
    gap = vals[:, None] - vals[None, :] >= eps - 1e-12  # rows b, cols c
    delta = INF
    for a in vals:
        n = norm_from_psi(psi, a, vals)
        inside = n <= 1.0 + PSI_TOL
        mask = gap & inside[:, None] & inside[None, :]
        if mask.any():
            delta = min(delta, float((n[:, None] - n[None, :])[mask].min()))
    return max(delta, 0.0)


# ---------------------------------------------------------------------------
# psi direct sums
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DirectSumPoint:
    x: SpacePoint
    y: SpacePoint
    psi: PsiFunction

    def concat(self) -> np.ndarray:
        return np.concatenate([self.x.coords, self.y.coords])


def direct_sum_norm(w: DirectSumPoint) -> float:
    return norm_from_psi(w.psi, lp_norm(w.x), lp_norm(w.y))


def direct_sum_norm_fn(psi: PsiFunction, dx: int, px: float = 2.0, py: float = 2.0):
    """Norm on concatenated vectors ``[x, y]`` of ``l_px^dx (+)_psi l_py``."""
    px, py = _check_p(px), _check_p(py)

    def norm(v):
        v = np.asarray(v, dtype=float)
        nx = np.linalg.norm(v[..., :dx], ord=px, axis=-1)
        ny = np.linalg.norm(v[..., dx:], ord=py, axis=-1)
        return norm_from_psi(psi, nx, ny)

    return norm


# ---------------------------------------------------------------------------
# convex sets
# ---------------------------------------------------------------------------

class ConvexSet:
    """Closed bounded convex set with a metric projection."""

    dim: int

    def project(self, x: np.ndarray, p: float = 2.0) -> np.ndarray:
        raise NotImplementedError

    def contains(self, x, tol: float = 1e-9, p: float = 2.0) -> bool:
        x = _coords(x)
        return lp_norm(self.project(x, p) - x, p) <= tol

    def diameter(self, p: float = 2.0) -> float:
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class Ball(ConvexSet):
    """Closed lp ball; ``p`` is the norm defining the ball itself."""

    center: np.ndarray
    radius: float
    p: float = 2.0

    def __post_init__(self):
        c = np.array(_coords(self.center), dtype=float).ravel()
        c.setflags(write=False)
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "p", _check_p(self.p))
        if not self.radius > 0:
            raise ValueError("Ball radius must be positive")

    @property
    def dim(self):
        return self.center.size

    def contains(self, x, tol=1e-9, p=None):
        return lp_norm(_coords(x) - self.center, self.p) <= self.radius + tol

    def project(self, x, p=2.0):
        x = _coords(x)
        z = x - self.center
        nz = lp_norm(z, self.p)
        if nz <= self.radius:
            return x.copy()
        if p == self.p:
            # radial point attains ||x - c|| - r, which bounds every distance from below
            return self.center + z * (self.radius / nz)
        if p == 2:
            return self.center + _euclidean_proj_lq_ball(z, self.radius, self.p)
        raise NotImplementedError(f"projection onto an l{self.p:g} ball in the l{p:g} metric")

    def diameter(self, p=2.0):
        p = _check_p(p)
        # ratio max ||v||_p / ||v||_q over R^d
        expo = max(0.0, (0.0 if p == INF else 1 / p) - (0.0 if self.p == INF else 1 / self.p))
        return 2 * self.radius * self.dim ** expo

    def sample(self, rng, n):
        g = rng.standard_normal((n, self.dim))
        g /= np.linalg.norm(g, ord=self.p, axis=1)[:, None]
        r = self.radius * rng.random(n) ** (1 / self.dim)
        return self.center + g * r[:, None]


def _euclidean_proj_lq_ball(z: np.ndarray, r: float, q: float) -> np.ndarray:
    """Euclidean projection of ``z`` onto ``{||y||_q <= r}`` (``z`` outside).

    KKT: ``y_i = sign(z_i) s_i`` with ``s_i + lam d/ds(s^q/q) = |z_i|``; the
    multiplier ``lam`` is found by bisection on ``||s(lam)||_q = r``.
    """
    a = np.abs(z)
    if q == INF:
        return np.sign(z) * np.minimum(a, r)

    if q == 1:
        def s_of(lam):
            return np.maximum(a - lam, 0.0)
    else:
        def s_of(lam):
            lo, hi = np.zeros_like(a), a.copy()
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                f = mid + lam * mid ** (q - 1) - a
                lo = np.where(f < 0, mid, lo)
                hi = np.where(f < 0, hi, mid)
                if np.all(hi - lo <= 1e-16 * np.maximum(a, 1e-300)):
                    break
            return 0.5 * (lo + hi)

    lo, hi = 0.0, 1.0
    while np.linalg.norm(s_of(hi), ord=q) > r:
        hi *= 2.0
        if hi > 1e300:
            raise NoConvergence("lq-ball multiplier bracket diverged")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if np.linalg.norm(s_of(mid), ord=q) > r:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * max(hi, 1e-300):
            break
    return np.sign(z) * s_of(hi)


@dataclass(frozen=True, eq=False)
class Box(ConvexSet):
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.array(self.lo, dtype=float).ravel()
        hi = np.array(self.hi, dtype=float).ravel()
        if lo.shape != hi.shape or np.any(lo > hi):
            raise ValueError("Box needs lo <= hi componentwise")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self):
        return self.lo.size

    def contains(self, x, tol=1e-9, p=None):
        x = _coords(x)
        return bool(np.all(x >= self.lo - tol) and np.all(x <= self.hi + tol))

    def project(self, x, p=2.0):
        # separable, so the clamp minimizes every lp distance
        return np.clip(_coords(x), self.lo, self.hi)

    def diameter(self, p=2.0):
        return lp_norm(self.hi - self.lo, p)

    def sample(self, rng, n):
        return self.lo + (self.hi - self.lo) * rng.random((n, self.dim))


@dataclass(frozen=True, eq=False)
class Polytope(ConvexSet):
    """Convex hull of finitely many vertices (rows of ``vertices``)."""

    vertices: np.ndarray

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[0] == 0:
            raise ValueError("Polytope needs a nonempty (n, d) vertex array")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    @property
    def dim(self):
        return self.vertices.shape[1]

    def project(self, x, p=2.0):
        if p != 2:
            raise NotImplementedError("polytope projection is Euclidean only")
        x = _coords(x)
        lam, _ = min_norm_point(self.vertices - x)
        return lam @ self.vertices

    def diameter(self, p=2.0):
        v = self.vertices
        d = v[:, None, :] - v[None, :, :]
        return float(np.linalg.norm(d, ord=_check_p(p), axis=-1).max()) if len(v) > 1 else 0.0

    def sample(self, rng, n):
        lam = rng.dirichlet(np.ones(len(self.vertices)), size=n)
        return lam @ self.vertices


@dataclass(frozen=True, eq=False)
class ProjectionOracle(ConvexSet):
    """Set known only through a (pure) projection callback.

    ``diameter_bound`` is required because nothing else about the set is
    observable.
    """

    callback: Callable[[np.ndarray], np.ndarray]
    dim: int
    diameter_bound: float

    def project(self, x, p=2.0):
        return np.asarray(self.callback(_coords(x)), dtype=float)

    def diameter(self, p=2.0):
        return float(self.diameter_bound)

    def sample(self, rng, n):
        anchor = self.project(np.zeros(self.dim))
        pts = anchor + self.diameter_bound * rng.standard_normal((n, self.dim))
        return np.array([self.project(q) for q in pts])


def projection_unique(p: float) -> bool:
    """Metric projections onto convex sets are single-valued for 1 < p < inf."""
    return 1 < p < INF


def project(C: ConvexSet, x, p: float | None = None):
    """Nearest point of ``C`` to ``x`` in the ambient lp metric.

    ``p`` defaults to ``x.p`` for a :class:`SpacePoint`, else 2.  For
    ``p`` in {1, inf} the result is a minimizer, not necessarily the only one.
    """
    if isinstance(x, SpacePoint):
        amb = x.p if p is None else p
        return SpacePoint(C.project(x.coords, amb), amb)
    return C.project(np.asarray(x, dtype=float), 2.0 if p is None else p)


# ---------------------------------------------------------------------------
# minimum-norm point and convex-hull membership
# ---------------------------------------------------------------------------

def _affine_minimizer(P: np.ndarray) -> np.ndarray:
    """Weights ``mu`` (summing to 1) minimizing ``||mu @ P||`` on aff(P)."""
    k = P.shape[0]
    G = P @ P.T
    kkt = np.zeros((k + 1, k + 1))
    kkt[:k, :k] = G
    kkt[:k, k] = 1.0
    kkt[k, :k] = 1.0
    rhs = np.zeros(k + 1)
    rhs[k] = 1.0
    sol = np.linalg.lstsq(kkt, rhs, rcond=None)[0]
    return sol[:k]


def min_norm_point(points, tol: float = 1e-15, max_iter: int = 10_000):
    """Wolfe's algorithm: convex weights minimizing ``||lam @ points||_2``.

    Returns ``(lam, x)`` with ``x = lam @ points``.  Raises
    :class:`NoConvergence` after ``max_iter`` major cycles.
    """
    P = np.asarray(points, dtype=float)
    m = P.shape[0]
    sq = np.einsum("ij,ij->i", P, P)
    scale = max(float(sq.max()), 1e-300)
    S = [int(np.argmin(sq))]
    lam = np.array([1.0])
    x = P[S[0]].copy()
    best = (float(x @ x), list(S), lam)
    for _ in range(max_iter):
        dots = P @ x
        j = int(np.argmin(dots))
        if x @ x - dots[j] <= tol * scale or j in S:
            break
        S.append(j)
        lam = np.append(lam, 0.0)
        while True:
            mu = _affine_minimizer(P[S])
            if np.all(mu > 1e-14):
                lam = mu
                break
            # step from lam toward mu until a weight hits zero
            dec = lam - mu
            idx = np.flatnonzero((mu <= 1e-14) & (dec > 0))
            theta = min(1.0, float(np.min(lam[idx] / dec[idx]))) if idx.size else 1.0
            lam = lam + theta * (mu - lam)
            keep = lam > 1e-14
            if not keep.any():
                keep[np.argmax(lam)] = True
            S = [s for s, k in zip(S, keep) if k]
            lam = lam[keep]
            lam /= lam.sum()
            if len(S) == 1:
                lam = np.array([1.0])
                break
        x = lam @ P[S]
        # exact arithmetic strictly decreases ||x||; a stall means rounding has taken over
        if x @ x >= best[0]:
            _, S, lam = best
            break
        best = (float(x @ x), list(S), lam)
    else:
        raise NoConvergence(f"min-norm-point did not terminate in {max_iter} cycles")
    full = np.zeros(m)
    full[S] = lam
    return full, full @ P


@dataclass(frozen=True)
class HullMembership:
    member: bool
    weights: np.ndarray
    residual: float

    def __bool__(self):
        return self.member


def convex_hull_member(a, pts, tol: float = 1e-8) -> HullMembership:
    """Decide whether ``a`` is within ``tol`` (Euclidean) of conv(pts).

    The certificate ``weights`` realise the nearest hull point and
    ``residual`` is its distance to ``a``.
    """
    P = np.array([_coords(q) for q in pts], dtype=float)
    if P.size == 0:
        raise ValueError("convex_hull_member needs at least one point")
    a = _coords(a)
    lam, _ = min_norm_point(P - a)
    residual = float(np.linalg.norm(lam @ P - a))
    return HullMembership(residual <= tol, lam, residual)
