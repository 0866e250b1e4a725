"""Outward-rounded interval arithmetic on binary64 endpoints.

Every operation computes the round-to-nearest result and then steps each
endpoint one ulp outward with :func:`math.nextafter`.  Round-to-nearest is
off by at most half an ulp, so the stepped interval always contains the
exact real result.  No rounding-mode switching is needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Union

__all__ = [
    "DivisionByIntervalContainingZero",
    "Interval",
    "arith",
    "bound_monotone",
    "exp_iv",
    "sqrt_iv",
    "hull",
]

_INF = math.inf
EXP_SLACK_ULPS = 2


class DivisionByIntervalContainingZero(ZeroDivisionError):
    pass


def _down(x: float) -> float:
    return math.nextafter(x, -_INF)


def _up(x: float) -> float:
    return math.nextafter(x, _INF)


Number = Union[int, float, Fraction]


def _outward(cands) -> "Interval":
    # cands: (u, v, fl(u op v)) for op in {*, /}; exact when u or v is 0.
    # The true result has the sign of u*v, so an underflow to 0 is widened
    # on one side only.
    lo, hi = _INF, -_INF
    for u, v, p in cands:
        if u == 0.0 or v == 0.0:
            lo, hi = min(lo, p), max(hi, p)
        elif p == 0.0:
            if (u > 0.0) == (v > 0.0):
                lo, hi = min(lo, 0.0), max(hi, _up(0.0))
            else:
                lo, hi = min(lo, _down(0.0)), max(hi, 0.0)
        else:
            lo, hi = min(lo, _down(p)), max(hi, _up(p))
    return Interval(lo, hi)


@dataclass(frozen=True, slots=True)
class Interval:
    """Closed interval ``[lo, hi]``.

    Plain ints and floats mix freely with intervals and are treated as
    exact point values.  Use :meth:`exact` for constants such as ``22/10``
    that are not representable in binary64.
    """

    lo: float
    hi: float

    def __post_init__(self):
        lo, hi = float(self.lo), float(self.hi)
        if math.isnan(lo) or math.isnan(hi):
            raise ValueError("interval endpoints must not be NaN")
        if lo > hi:
            raise ValueError(f"empty interval [{lo!r}, {hi!r}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    # -- construction -------------------------------------------------

    @classmethod
    def point(cls, x: float) -> "Interval":
        return cls(x, x)

    @classmethod
    def exact(cls, q: Number) -> "Interval":
        """Tightest binary64 enclosure of a rational number."""
        if isinstance(q, float):
            return cls(q, q)
        q = Fraction(q)
        x = float(q)
        fx = Fraction(x)
        if fx == q:
            return cls(x, x)
        if fx < q:
            return cls(x, _up(x))
        return cls(_down(x), x)

    @staticmethod
    def coerce(x: Union["Interval", Number]) -> "Interval":
        if isinstance(x, Interval):
            return x
        if isinstance(x, Fraction):
            return Interval.exact(x)
        return Interval(x, x)

    # -- queries ------------------------------------------------------

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def contains(self, x: Union["Interval", Number]) -> bool:
        if isinstance(x, Interval):
            return self.lo <= x.lo and x.hi <= self.hi
        if isinstance(x, Fraction):
            return Fraction(self.lo) <= x <= Fraction(self.hi)
        return self.lo <= x <= self.hi

    __contains__ = contains

    def is_subset(self, other: "Interval") -> bool:
        return other.lo <= self.lo and self.hi <= other.hi

    def __repr__(self) -> str:
        return f"Interval({self.lo!r}, {self.hi!r})"

    # -- arithmetic ---------------------------------------------------

    def __neg__(self) -> "Interval":
        return Interval(-self.hi, -self.lo)

    def __add__(self, other):
        y = Interval.coerce(other)
        return Interval(_down(self.lo + y.lo), _up(self.hi + y.hi))

    __radd__ = __add__

    def __sub__(self, other):
        y = Interval.coerce(other)
        return Interval(_down(self.lo - y.hi), _up(self.hi - y.lo))

    def __rsub__(self, other):
        return Interval.coerce(other) - self

    def __mul__(self, other):
        y = Interval.coerce(other)
        return _outward(
            [(a, b, a * b) for a in (self.lo, self.hi) for b in (y.lo, y.hi)]
        )

    __rmul__ = __mul__

    def recip(self) -> "Interval":
        if self.lo <= 0.0 <= self.hi:
            raise DivisionByIntervalContainingZero(f"1 / {self!r}")
        return Interval(_down(1.0 / self.hi), _up(1.0 / self.lo))

    def __truediv__(self, other):
        y = Interval.coerce(other)
        if y.lo <= 0.0 <= y.hi:
            raise DivisionByIntervalContainingZero(f"{self!r} / {y!r}")
        return _outward(
            [(a, b, a / b) for a in (self.lo, self.hi) for b in (y.lo, y.hi)]
        )

    def __rtruediv__(self, other):
        return Interval.coerce(other) / self

    def sqr(self) -> "Interval":
        lo, hi = self.lo, self.hi
        if lo >= 0.0:
            a, b = lo * lo, hi * hi
        elif hi <= 0.0:
            a, b = hi * hi, lo * lo
        else:
            return Interval(0.0, _up(max(lo * lo, hi * hi)))
        return Interval(a if a == 0.0 else _down(a), _up(b))

    def __pow__(self, n: int) -> "Interval":
        if not isinstance(n, int) or n < 0:
            raise TypeError("only non-negative integer powers are supported")
        if n == 0:
            return Interval(1.0, 1.0)
        if n == 2:
            return self.sqr()
        out = self
        for _ in range(n - 1):
            out = out * self
        return out

    def exp(self) -> "Interval":
        return exp_iv(self)

    def sqrt(self) -> "Interval":
        return sqrt_iv(self)


def hull(*xs: Interval) -> Interval:
    return Interval(min(x.lo for x in xs), max(x.hi for x in xs))


_UNARY = {"neg", "sqr", "recip"}


def arith(op: str, x: Interval, y: Interval | None = None) -> Interval:
    """Dispatch one of ``add, sub, mul, div, neg, sqr, recip``."""
    if op in _UNARY:
        if op == "neg":
            return -x
        if op == "sqr":
            return x.sqr()
        return x.recip()
    if y is None:
        raise TypeError(f"{op} needs two operands")
    if op == "add":
        return x + y
    if op == "sub":
        return x - y
    if op == "mul":
        return x * y
    if op == "div":
        return x / y
    raise ValueError(f"unknown operation {op!r}")


def _step(x: float, direction: float, n: int) -> float:
    for _ in range(n):
        x = math.nextafter(x, direction)
    return x


def exp_iv(x: Interval) -> Interval:
    """Enclosure of ``exp`` over ``x``; endpoints padded by 2 ulp."""
    x = Interval.coerce(x)
    lo = math.exp(x.lo)
    try:
        hi = math.exp(x.hi)
    except OverflowError:
        hi = _INF
    lo = max(0.0, _step(lo, -_INF, EXP_SLACK_ULPS))
    return Interval(lo, _step(hi, _INF, EXP_SLACK_ULPS))


def sqrt_iv(x: Interval) -> Interval:
    x = Interval.coerce(x)
    if x.lo < 0.0:
        raise ValueError(f"sqrt of interval with negative part {x!r}")
    # math.sqrt is correctly rounded
    lo = math.sqrt(x.lo)
    hi = math.sqrt(x.hi)
    return Interval(lo if lo == 0.0 else _down(lo), _up(hi))


def _pad(v: Interval | float, slack: float) -> Interval:
    v = Interval.coerce(v)
    lo = v.lo - abs(v.lo) * slack
    hi = v.hi + abs(v.hi) * slack
    return Interval(_down(lo), _up(hi))


def bound_monotone(
    f: Callable[[Interval], Interval | float],
    x: Interval,
    slack: float = 0.0,
    increasing: bool = True,
) -> Interval:
    """Enclose a monotone map over ``x`` from its endpoint values.

    ``f`` is evaluated on the degenerate intervals at ``x.lo`` and ``x.hi``;
    it may return a float (then ``slack`` must bound its relative error)
    or an :class:`Interval`.  The caller is responsible for monotonicity.
    """
    x = Interval.coerce(x)
    at_lo = _pad(f(Interval.point(x.lo)), slack)
    at_hi = _pad(f(Interval.point(x.hi)), slack)
    if increasing:
        return Interval(at_lo.lo, at_hi.hi)
    return Interval(at_hi.lo, at_lo.hi)
