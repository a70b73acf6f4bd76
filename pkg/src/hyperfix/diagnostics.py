"""Finite-sample diagnostics for sequences in lp spaces and psi-direct sums.

Limits are estimated on a tail window of the last ``W`` points.  Weak
convergence to 0 is proxied coordinatewise: the median over the tail of
``|x_n[i]|`` must be below a threshold for every coordinate ``i``.  For the
basis-vector samples used throughout, each coordinate is nonzero at no more
than one tail index, so the proxy holds exactly.
"""

from __future__ import annotations

import csv
import enum
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ._io import atomic_write, csv_text, fmt_float
from .errors import DomainViolation, NotStrictlyMonotone
from .spaces import (
    DirectSumPoint,
    PsiFunction,
    SpacePoint,
    direct_sum_norm_fn,
    is_strictly_monotone,
    psi_from_spec,
)

WEAK_NULL_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class SequenceSample:
    """``N`` points (rows) with the norm they live in and a tail window ``W``.

    For a direct sum the rows are concatenations ``[x, y]`` and ``split``
    is ``dim x``.
    """

    points: np.ndarray
    tail_window: int
    norm: Callable[[np.ndarray], np.ndarray]
    p: float | None = 2.0
    split: int | None = None
    psi: PsiFunction | None = None
    px: float = 2.0
    py: float = 2.0

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        object.__setattr__(self, "points", pts)
        N, W = len(pts), int(self.tail_window)
        if not (N >= 2 * W and W >= 2):
            raise ValueError(f"sample needs N >= 2W >= 4, got N={N}, W={W}")

    @classmethod
    def lp(cls, points, tail_window: int, p: float = 2.0) -> "SequenceSample":
        def norm(v):
            return np.linalg.norm(v, ord=p, axis=-1)
        return cls(points, tail_window, norm, p=p)

    @classmethod
    def direct_sum(cls, xs, ys, psi: PsiFunction, tail_window: int,
                   px: float = 2.0, py: float = 2.0) -> "SequenceSample":
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        ys = np.atleast_2d(np.asarray(ys, dtype=float))
        if len(xs) != len(ys):
            raise ValueError("x and y components need the same number of points")
        dx = xs.shape[1]
        return cls(np.hstack([xs, ys]), tail_window, direct_sum_norm_fn(psi, dx, px, py),
                   p=None, split=dx, psi=psi, px=px, py=py)

    @classmethod
    def from_points(cls, pts: Sequence, tail_window: int) -> "SequenceSample":
        """Build from :class:`SpacePoint` or :class:`DirectSumPoint` objects."""
        first = pts[0]
        if isinstance(first, DirectSumPoint):
            return cls.direct_sum([w.x.coords for w in pts], [w.y.coords for w in pts], first.psi,
                                  tail_window, first.x.p, first.y.p)
        if isinstance(first, SpacePoint):
            return cls.lp([q.coords for q in pts], tail_window, first.p)
        return cls.lp(pts, tail_window)

    @property
    def is_direct_sum(self) -> bool:
        return self.split is not None

    @property
    def tail(self) -> np.ndarray:
        return self.points[-self.tail_window:]

    def y_part(self) -> "SequenceSample":
        if not self.is_direct_sum:
            raise ValueError("sample is not a direct sum")
        return SequenceSample.lp(self.points[:, self.split:], self.tail_window, self.py)

    def scaled(self, c: float) -> "SequenceSample":
        return SequenceSample(c * self.points, self.tail_window, self.norm, self.p, self.split,
                              self.psi, self.px, self.py)


def _pairwise(sample: SequenceSample) -> np.ndarray:
    T = sample.tail
    return sample.norm(T[:, None, :] - T[None, :, :])


def double_limsup(s: SequenceSample) -> float:
    """Tail estimate of ``limsup_m limsup_n ||x_n - x_m||`` (max over n > m)."""
    D = _pairwise(s)
    iu = np.triu_indices(len(D), k=1)
    return float(D[iu].max())


def double_limit(s: SequenceSample) -> float:
    """Tail estimate of ``lim_{n,m, n != m} ||x_n - x_m||`` (mean over pairs)."""
    D = _pairwise(s)
    iu = np.triu_indices(len(D), k=1)
    return float(D[iu].mean())


def norm_limit(s: SequenceSample) -> float:
    return float(np.mean(s.norm(s.tail)))


def weakly_null(s: SequenceSample, tol: float = WEAK_NULL_TOL) -> bool:
    """Coordinatewise proxy: tail median of every ``|x_n[i]|`` is <= tol."""
    return bool(np.median(np.abs(s.tail), axis=0).max() <= tol)


class GGLDVerdict(enum.Enum):
    PASSES = "passes"
    FAILS = "fails"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class GGLDReport:
    verdict: GGLDVerdict
    estimate: float  # double limsup after normalization (nan if inconclusive)
    weak_null: bool
    norm_limit: float
    reason: str = ""


def ggld_check(s: SequenceSample, norm_tol: float = 1e-6,
               weak_tol: float = WEAK_NULL_TOL) -> GGLDReport:
    """Test the GGLD inequality on a sample.

    Hypotheses: weakly null (coordinatewise proxy) and tail norms settle to
    a positive limit ``L`` (spread within ``norm_tol * L``).  The sample is
    rescaled by ``1/L`` and the verdict is PASSES iff the double limsup
    exceeds ``1 + norm_tol``.
    """
    wn = weakly_null(s, weak_tol)
    norms = s.norm(s.tail)
    L = float(norms.mean())
    if not wn:
        return GGLDReport(GGLDVerdict.INCONCLUSIVE, float("nan"), wn, L, "not weakly null")
    if L <= norm_tol:
        return GGLDReport(GGLDVerdict.INCONCLUSIVE, float("nan"), wn, L, "tail norms tend to 0")
    if float(np.abs(norms - L).max()) > norm_tol * L:
        return GGLDReport(GGLDVerdict.INCONCLUSIVE, float("nan"), wn, L, "tail norms do not settle")
    est = double_limsup(s) / L
    verdict = GGLDVerdict.PASSES if est > 1 + norm_tol else GGLDVerdict.FAILS
    return GGLDReport(verdict, est, wn, L)


class Lemma4Verdict(enum.Enum):
    CONSISTENT = "consistent"
    HYPOTHESES_VIOLATED = "inconsistent-hypotheses"
    # hypotheses hold yet y does not decay: contradicts the lemma
    INCONSISTENT = "inconsistent"


@dataclass(frozen=True)
class Lemma4Report:
    hypotheses: dict
    y_norm_tail: np.ndarray
    double_limit: float
    norm_limit: float
    verdict: Lemma4Verdict

    @property
    def failed(self) -> list[str]:
        return [k for k, v in self.hypotheses.items() if not v]


def lemma4_check(s: SequenceSample, y_ggld: bool = True,
                 weak_tol: float = WEAK_NULL_TOL) -> Lemma4Report:
    """Consistency harness for the ``y_n -> 0`` lemma on psi-direct sums.

    Hypotheses checked: strict monotonicity of psi (hard gate), weak
    nullity of ``w_n``, agreement of the double limit of ``||w_n - w_m||``
    with the limit of ``||w_n||`` (within ``2/W``), and GGLD of the Y
    factor (caller's claim, cross-checked on the y tail when it is not
    already negligible).  The conclusion holds when the last tail value of
    ``||y_n||`` is at most half the first or at most 1e-3.
    """
    if not s.is_direct_sum:
        raise ValueError("lemma4_check needs a direct-sum sample")
    if not is_strictly_monotone(s.psi):
        raise NotStrictlyMonotone(f"psi {s.psi.spec()} is not strictly monotone")
    W = s.tail_window
    dl, nl = double_limit(s), norm_limit(s)
    ys = s.y_part()
    y_tail = ys.norm(ys.tail)
    ggld_ok = bool(y_ggld)
    if ggld_ok and y_tail.max() > 1e-3:
        ggld_ok = ggld_check(ys).verdict is not GGLDVerdict.FAILS
    hyps = {
        "strictly_monotone": True,
        "weakly_null": weakly_null(s, weak_tol),
        "limits_agree": abs(dl - nl) <= 2 / W,
        "y_ggld": ggld_ok,
    }
    decays = y_tail[-1] <= y_tail[0] / 2 or y_tail[-1] <= 1e-3
    if decays:
        verdict = Lemma4Verdict.CONSISTENT
    elif all(hyps.values()):
        verdict = Lemma4Verdict.INCONSISTENT
    else:
        verdict = Lemma4Verdict.HYPOTHESES_VIOLATED
    return Lemma4Report(hyps, y_tail, dl, nl, verdict)


@dataclass(frozen=True)
class DiametralReport:
    deviations: np.ndarray
    estimates: np.ndarray
    passed: bool


def diametral_check(s: SequenceSample, probes, diam: float, tol: float = 1e-6) -> DiametralReport:
    """Check ``lim_n ||w_n - w|| = diam`` for every probe ``w``.

    The limit is the tail median, so a probe that coincides with one of
    the tail points is not penalised for that single zero distance.
    """
    if not diam > 0:
        raise ValueError("diam must be positive")
    probes = [np.asarray(getattr(w, "coords", w), dtype=float) for w in probes]
    if not probes:
        warnings.warn("diametral_check called with no probes; vacuous pass", stacklevel=2)
        return DiametralReport(np.empty(0), np.empty(0), True)
    est = np.array([np.median(s.norm(s.tail - w)) for w in probes])
    dev = np.abs(est - diam)
    return DiametralReport(dev, est, bool(np.all(dev <= tol)))


@dataclass(frozen=True)
class AfpsReport:
    residuals: np.ndarray
    monotone_fraction: float  # share of consecutive pairs that do not increase
    decay_rate: float  # fitted geometric ratio of the positive residuals

    def __array__(self, dtype=None, copy=None):
        return self.residuals if dtype is None else self.residuals.astype(dtype)


def afps_residuals(T, s: SequenceSample, tol: float = 1e-9) -> AfpsReport:
    """Residuals ``||T w_n - w_n||`` along a sample, with trend statistics."""
    pts = s.points
    for i, w in enumerate(pts):
        if not T.domain.contains(w, tol=tol, p=T.p):
            raise DomainViolation(f"sample point {i} lies outside the map's domain")
    res = np.linalg.norm(T.apply_batch(pts) - pts, ord=T.p, axis=1)
    diffs = np.diff(res)
    mono = float(np.mean(diffs <= 1e-15 * max(1.0, res.max()))) if diffs.size else 1.0
    pos = res > 0
    if pos.sum() >= 2:
        n = np.flatnonzero(pos)
        slope = np.polyfit(n, np.log(res[pos]), 1)[0]
        rate = float(np.exp(slope))
    else:
        rate = 0.0
    return AfpsReport(res, mono, rate)


# ---------------------------------------------------------------------------
# sample files
# ---------------------------------------------------------------------------

def write_sample_csv(s: SequenceSample, path) -> None:
    """Write ``idx,coord_*`` or, for direct sums, ``idx,x_*,y_*`` with a dims line."""
    lines = ""
    if s.is_direct_sum:
        dx = s.split
        dy = s.points.shape[1] - dx
        lines = f"# dims {dx} {dy} psi {s.psi.spec()} px {s.px:g} py {s.py:g}\n"
        header = ["idx"] + [f"x_{i}" for i in range(dx)] + [f"y_{i}" for i in range(dy)]
    else:
        if s.p is not None and s.p != 2:
            lines = f"# p {s.p:g}\n"
        header = ["idx"] + [f"coord_{i}" for i in range(s.points.shape[1])]
    rows = [[str(i)] + [fmt_float(v) for v in row] for i, row in enumerate(s.points)]
    atomic_write(path, lines + csv_text(header, rows))


def read_sample_csv(path, tail_window: int | None = None, p: float | None = None) -> SequenceSample:
    """Load a sample file; ``tail_window`` defaults to ``N // 2``."""
    meta: dict = {}
    body = []
    with open(path, newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                tok = line[1:].split()
                if tok[:1] == ["dims"]:
                    meta["dims"] = (int(tok[1]), int(tok[2]))
                    rest = tok[3:]
                    for key, val in zip(rest[::2], rest[1::2]):
                        meta[key] = val
                elif tok[:1] == ["p"]:
                    meta["p"] = tok[1]
            elif line.strip():
                body.append(line)
    rows = list(csv.reader(body))
    header, data = rows[0], rows[1:]
    arr = np.array([[float(v) for v in r[1:]] for r in data], dtype=float)
    W = tail_window if tail_window is not None else len(arr) // 2
    if "dims" in meta:
        dx, dy = meta["dims"]
        if arr.shape[1] != dx + dy:
            raise ValueError(f"{path}: dims line says {dx}+{dy} columns, found {arr.shape[1]}")
        psi = psi_from_spec(meta.get("psi", "lp:2"))
        return SequenceSample.direct_sum(arr[:, :dx], arr[:, dx:], psi, W,
                                         float(meta.get("px", 2)), float(meta.get("py", 2)))
    if header[1:] and not header[1].startswith("coord_"):
        raise ValueError(f"{path}: expected coord_* columns or a '# dims' line")
    pp = p if p is not None else float(meta.get("p", 2))
    return SequenceSample.lp(arr, W, pp)
