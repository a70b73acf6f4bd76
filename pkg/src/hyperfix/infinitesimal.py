"""Computable hyperreals: truncated Laurent series in a formal infinitesimal.

A :class:`Hyperreal` is a finite sum ``sum(c_e * h**e)`` where ``h`` is a
fixed positive infinitesimal and every exponent ``e`` lies in a window
``[-K, K]``.  Negative exponents give unbounded numbers, positive ones
infinitesimals.  The order is lexicographic on the lowest-order term, which
makes the set of such series an ordered field (up to the window).

Addition never leaves the window.  Multiplication refuses to drop terms
unless explicitly asked to (``truncate=True``); division necessarily
truncates and records where in its ``trunc`` attribute: a value is exact at
every exponent strictly below ``trunc``.
"""

from __future__ import annotations

import enum
import math
import numbers
import re
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    DivisionByZero,
    NotBounded,
    SingularMatrix,
    WindowMismatch,
    WindowOverflow,
)

__all__ = [
    "DEFAULT_WINDOW",
    "Classification",
    "Ordering",
    "Hyperreal",
    "eta",
    "const",
    "hr_add",
    "hr_sub",
    "hr_mul",
    "hr_div",
    "hr_cmp",
    "classify",
    "st",
    "monad_eq",
    "galaxy_eq",
    "shadow",
    "chop",
    "hr_solve_linear",
    "format_hyperreal",
    "parse_hyperreal",
]

DEFAULT_WINDOW = 8


class Classification(enum.Enum):
    INFINITESIMAL = "infinitesimal"
    BOUNDED_APPRECIABLE = "bounded"
    UNBOUNDED = "unbounded"


class Ordering(enum.IntEnum):
    LT = -1
    EQ = 0
    GT = 1


def _min_opt(*values):
    vals = [v for v in values if v is not None]
    return min(vals) if vals else None


@dataclass(frozen=True, eq=False)
class Hyperreal:
    """Laurent polynomial in the infinitesimal ``h`` with exponents in [-K, K].

    ``terms`` may be given as a mapping ``{exponent: coefficient}`` or an
    iterable of pairs; it is stored canonically as a sorted tuple with zero
    coefficients removed.  ``trunc`` is error-bar metadata and does not take
    part in equality.
    """

    terms: tuple = ()
    window: int = DEFAULT_WINDOW
    trunc: int | None = field(default=None, compare=False)

    def __post_init__(self):
        if not isinstance(self.window, numbers.Integral) or self.window < 1:
            raise ValueError(f"window must be a positive integer, got {self.window!r}")
        raw = self.terms.items() if isinstance(self.terms, Mapping) else self.terms
        acc: dict[int, float] = {}
        for e, c in raw:
            if not isinstance(e, numbers.Integral):
                raise TypeError(f"exponent must be an integer, got {e!r}")
            c = float(c)
            if not math.isfinite(c):
                raise ValueError(f"non-finite coefficient {c!r} at exponent {e}")
            acc[int(e)] = acc.get(int(e), 0.0) + c
        out = tuple(sorted((e, c) for e, c in acc.items() if c != 0.0))
        for e, _ in out:
            if not -self.window <= e <= self.window:
                raise WindowOverflow(f"exponent {e} outside window [-{self.window}, {self.window}]")
        object.__setattr__(self, "terms", out)
        object.__setattr__(self, "window", int(self.window))

    # -- structure -----------------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def order(self) -> int | None:
        """Exponent of the leading (lowest-order) term, ``None`` for zero."""
        return self.terms[0][0] if self.terms else None

    @property
    def leading(self) -> tuple[int, float] | None:
        return self.terms[0] if self.terms else None

    def coeff(self, e: int) -> float:
        return dict(self.terms).get(e, 0.0)

    def as_dict(self) -> dict[int, float]:
        return dict(self.terms)

    def sign(self) -> int:
        if not self.terms:
            return 0
        return 1 if self.terms[0][1] > 0 else -1

    # -- python protocol -----------------------------------------------------

    def _coerce(self, other) -> Hyperreal:
        if isinstance(other, Hyperreal):
            if other.window != self.window:
                raise WindowMismatch(f"windows differ: {self.window} vs {other.window}")
            return other
        if isinstance(other, numbers.Real):
            return const(other, self.window)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        return NotImplemented if other is NotImplemented else hr_add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        return NotImplemented if other is NotImplemented else hr_sub(self, other)

    def __rsub__(self, other):
        other = self._coerce(other)
        return NotImplemented if other is NotImplemented else hr_sub(other, self)

    def __mul__(self, other):
        other = self._coerce(other)
        return NotImplemented if other is NotImplemented else hr_mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        return NotImplemented if other is NotImplemented else hr_div(self, other)

    def __rtruediv__(self, other):
        other = self._coerce(other)
        return NotImplemented if other is NotImplemented else hr_div(other, self)

    def __neg__(self):
        return Hyperreal(tuple((e, -c) for e, c in self.terms), self.window, self.trunc)

    def __pos__(self):
        return self

    def __abs__(self):
        return -self if self.sign() < 0 else self

    def __eq__(self, other):
        if isinstance(other, Hyperreal):
            return self.window == other.window and self.terms == other.terms
        if isinstance(other, numbers.Real):
            return self.terms == const(other, self.window).terms
        return NotImplemented

    def __hash__(self):
        return hash((self.terms, self.window))

    def __lt__(self, other):
        other = self._coerce(other)
        return NotImplemented if other is NotImplemented else hr_cmp(self, other) is Ordering.LT

    def __le__(self, other):
        other = self._coerce(other)
        return NotImplemented if other is NotImplemented else hr_cmp(self, other) is not Ordering.GT

    def __gt__(self, other):
        other = self._coerce(other)
        return NotImplemented if other is NotImplemented else hr_cmp(self, other) is Ordering.GT

    def __ge__(self, other):
        other = self._coerce(other)
        return NotImplemented if other is NotImplemented else hr_cmp(self, other) is not Ordering.LT

    def __str__(self):
        return format_hyperreal(self)

    def __repr__(self):
        return f"Hyperreal({format_hyperreal(self)!r}, window={self.window})"


def eta(power: int = 1, window: int = DEFAULT_WINDOW) -> Hyperreal:
    """The monomial ``h**power``."""
    return Hyperreal({power: 1.0}, window)


def const(c: float, window: int = DEFAULT_WINDOW) -> Hyperreal:
    return Hyperreal({0: float(c)}, window)


def _check_windows(a: Hyperreal, b: Hyperreal) -> int:
    if a.window != b.window:
        raise WindowMismatch(f"windows differ: {a.window} vs {b.window}")
    return a.window


def hr_add(a: Hyperreal, b: Hyperreal) -> Hyperreal:
    K = _check_windows(a, b)
    acc = dict(a.terms)
    for e, c in b.terms:
        acc[e] = acc.get(e, 0.0) + c
    return Hyperreal(acc, K, _min_opt(a.trunc, b.trunc))


def hr_sub(a: Hyperreal, b: Hyperreal) -> Hyperreal:
    return hr_add(a, -b)


def hr_mul(a: Hyperreal, b: Hyperreal, truncate: bool = False) -> Hyperreal:
    """Exact product.

    Any product term above the window raises :class:`WindowOverflow` unless
    ``truncate`` is set, in which case it is dropped and ``trunc`` records
    the first unrepresented exponent.  Terms below the window always raise.
    """
    K = _check_windows(a, b)
    if a.is_zero or b.is_zero:
        return Hyperreal((), K)
    acc: dict[int, float] = {}
    dropped = False
    for ea, ca in a.terms:
        for eb, cb in b.terms:
            e = ea + eb
            if e < -K or (e > K and not truncate):
                raise WindowOverflow(f"product exponent {e} outside window [-{K}, {K}]")
            if e > K:
                dropped = True
                continue
            acc[e] = acc.get(e, 0.0) + ca * cb
    trunc = _min_opt(
        K + 1 if dropped else None,
        a.trunc + b.order if a.trunc is not None else None,
        b.trunc + a.order if b.trunc is not None else None,
    )
    return Hyperreal(acc, K, trunc)


def hr_div(a: Hyperreal, b: Hyperreal) -> Hyperreal:
    """Series long division ``a / b`` carried up to the window edge.

    The quotient is built one term at a time from the lowest exponent up
    (leading-term division, which for ``b = c h^m (1 + r)`` reproduces the
    geometric expansion of ``1/(1 + r)``).  When a nonzero remainder is left
    the result's ``trunc`` is ``K + 1``.
    """
    K = _check_windows(a, b)
    if b.is_zero:
        raise DivisionByZero("hyperreal division by zero")
    if a.is_zero:
        return Hyperreal((), K)
    mb, cb = b.leading
    q_order = a.order - mb
    if not -K <= q_order <= K:
        raise WindowOverflow(f"quotient leading exponent {q_order} outside window [-{K}, {K}]")
    rem = dict(a.terms)
    quot: dict[int, float] = {}
    while rem:
        e = min(rem)
        qe = e - mb
        if qe > K:
            break
        c = rem.pop(e) / cb
        quot[qe] = c
        for eb, cbk in b.terms[1:]:
            k = qe + eb
            v = rem.get(k, 0.0) - c * cbk
            if v == 0.0:
                rem.pop(k, None)
            else:
                rem[k] = v
    trunc = _min_opt(
        K + 1 if rem else None,
        a.trunc - mb if a.trunc is not None else None,
        q_order + b.trunc - mb if b.trunc is not None else None,
    )
    return Hyperreal(quot, K, trunc)


def hr_cmp(a: Hyperreal, b: Hyperreal) -> Ordering:
    """Order by the sign of the leading coefficient of ``a - b``."""
    _check_windows(a, b)
    return Ordering(hr_sub(a, b).sign())


def classify(x: Hyperreal) -> Classification:
    if x.is_zero or x.order > 0:
        return Classification.INFINITESIMAL
    if x.order == 0:
        return Classification.BOUNDED_APPRECIABLE
    return Classification.UNBOUNDED


def st(x: Hyperreal) -> float:
    """Standard part: the real number infinitely close to a bounded ``x``."""
    if classify(x) is Classification.UNBOUNDED:
        raise NotBounded(f"{format_hyperreal(x)} is unbounded and has no standard part")
    return x.coeff(0)


def monad_eq(x: Hyperreal, y: Hyperreal) -> bool:
    """True iff ``x - y`` is infinitesimal."""
    return classify(hr_sub(x, y)) is Classification.INFINITESIMAL


def galaxy_eq(x: Hyperreal, y: Hyperreal) -> bool:
    """True iff ``x - y`` is bounded."""
    return classify(hr_sub(x, y)) is not Classification.UNBOUNDED


def shadow(v: Sequence[Hyperreal]) -> np.ndarray:
    """Componentwise standard part of a vector of bounded hyperreals."""
    out = np.empty(len(v))
    for i, x in enumerate(v):
        if classify(x) is Classification.UNBOUNDED:
            raise NotBounded(f"component {i} ({format_hyperreal(x)}) is unbounded", index=i)
        out[i] = x.coeff(0)
    return out


def chop(x: Hyperreal, atol: float) -> Hyperreal:
    """Drop coefficients with magnitude ``<= atol`` (float clean-up)."""
    if atol <= 0:
        return x
    return Hyperreal(tuple((e, c) for e, c in x.terms if abs(c) > atol), x.window, x.trunc)



def _as_hyper(v, window: int) -> Hyperreal:
    if isinstance(v, Hyperreal):
        if v.window != window:
            raise WindowMismatch(f"windows differ: {v.window} vs {window}")
        return v
    return const(float(v), window)


def _infer_window(*items) -> int:
    for it in items:
        if isinstance(it, Hyperreal):
            return it.window
        if isinstance(it, (list, tuple)):
            for sub in it:
                w = _infer_window(sub)
                if w is not None:
                    return w
    return None


def hr_solve_linear(A, b, window: int | None = None, rtol: float = 1e-12) -> list[Hyperreal]:
    """Solve ``A x = b`` over the hyperreals by Gaussian elimination.

    The pivot in each column is the entry of lowest order (largest in
    magnitude class), ties broken by the largest leading coefficient.
    Entries may be plain reals.  After every update a coefficient is
    discarded when it is below ``rtol`` times both the magnitude of what was
    summed into its exponent and the largest input coefficient; with float
    input this keeps rounding noise from masquerading as an appreciable
    term (pass ``rtol=0`` for exact integer data).
    """
    A = [list(row) for row in A]
    b = list(b)
    n = len(A)
    if any(len(row) != n for row in A) or len(b) != n:
        raise ValueError("hr_solve_linear needs a square system")
    K = window if window is not None else (_infer_window(A, b) or DEFAULT_WINDOW)
    M = [[_as_hyper(v, K) for v in row] for row in A]
    rhs = [_as_hyper(v, K) for v in b]

    # Rounding error left over from earlier steps is absolute, so it is also
    # judged against the size of the input data.
    floor = max((abs(c) for x in [*(v for row in M for v in row), *rhs] for _, c in x.terms), default=0.0)

    def update(target: Hyperreal, factor: Hyperreal, src: Hyperreal) -> Hyperreal:
        prod = hr_mul(factor, src, truncate=True)
        out = hr_sub(target, prod)
        if rtol <= 0:
            return out
        # Noise at exponent e is relative to what was summed into e, not to
        # the largest coefficient overall (high orders can be huge).
        mag = dict((e, abs(c)) for e, c in target.terms)
        for ea, ca in factor.terms:
            for eb, cb in src.terms:
                e = ea + eb
                if e <= K:
                    mag[e] = mag.get(e, 0.0) + abs(ca * cb)
        kept = tuple((e, c) for e, c in out.terms if abs(c) > rtol * max(mag.get(e, 0.0), floor))
        return Hyperreal(kept, K, out.trunc)

    for k in range(n):
        candidates = [i for i in range(k, n) if not M[i][k].is_zero]
        if not candidates:
            raise SingularMatrix(f"no nonzero pivot in column {k}")
        piv = min(candidates, key=lambda i: (M[i][k].order, -abs(M[i][k].leading[1])))
        M[k], M[piv] = M[piv], M[k]
        rhs[k], rhs[piv] = rhs[piv], rhs[k]
        pivot = M[k][k]
        for i in range(k + 1, n):
            if M[i][k].is_zero:
                continue
            f = hr_div(M[i][k], pivot)
            for j in range(k + 1, n):
                M[i][j] = update(M[i][j], f, M[k][j])
            rhs[i] = update(rhs[i], f, rhs[k])
            M[i][k] = Hyperreal((), K)

    x = [Hyperreal((), K)] * n
    for i in reversed(range(n)):
        acc = rhs[i]
        for j in range(i + 1, n):
            acc = update(acc, M[i][j], x[j])
        x[i] = hr_div(acc, M[i][i])
    return x


# -- text form ---------------------------------------------------------------

def _fmt_coeff(c: float) -> str:
    if c.is_integer() and abs(c) < 1e16:
        return str(int(c))
    return repr(c)


def format_hyperreal(x: Hyperreal) -> str:
    """Render as ``c*h^e`` terms, ascending exponent, joined by `` + ``."""
    if x.is_zero:
        return "0"
    parts = []
    for e, c in x.terms:
        parts.append(_fmt_coeff(c) if e == 0 else f"{_fmt_coeff(c)}*h^{e}")
    return " + ".join(parts)


_TERM = re.compile(
    r"^(?P<c>[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?|[-+]?(?:inf|nan))?"
    r"(?:\*?h(?:\^(?P<e>[-+]?\d+))?)?$"
)


def parse_hyperreal(text: str, window: int = DEFAULT_WINDOW) -> Hyperreal:
    """Inverse of :func:`format_hyperreal`.

    Also accepts bare ``h``/``h^e`` monomials and ``c*h`` for ``c*h^1``.
    """
    text = text.strip()
    if not text:
        raise ValueError("empty hyperreal literal")
    terms: dict[int, float] = {}
    for raw in re.split(r"\s+\+\s+", text):
        tok = raw.replace(" ", "")
        m = _TERM.match(tok)
        if not m or not tok:
            raise ValueError(f"cannot parse hyperreal term {raw!r}")
        has_h = "h" in tok
        c = m.group("c")
        coef = float(c) if c is not None else 1.0
        if c is None and not has_h:
            raise ValueError(f"cannot parse hyperreal term {raw!r}")
        e = int(m.group("e")) if m.group("e") is not None else (1 if has_h else 0)
        terms[e] = terms.get(e, 0.0) + coef
    return Hyperreal(terms, window)
