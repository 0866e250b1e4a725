"""Truncated univariate Taylor arithmetic (forward-mode AD to any order).

A :class:`Jet` stores normalized Taylor coefficients ``c[k] = f^(k)(x0)/k!``.
Arithmetic on jets propagates exact derivatives through closed-form
expressions, so identities between differential expressions can be checked
to rounding error instead of finite-difference error.
"""

from __future__ import annotations

import math
from typing import Callable, Sequence, Union

Scalar = Union[int, float]


class Jet:
    __slots__ = ("c",)

    def __init__(self, coeffs: Sequence[float]):
        self.c = [float(x) for x in coeffs]

    @classmethod
    def variable(cls, x0: float, order: int) -> "Jet":
        c = [0.0] * (order + 1)
        c[0] = float(x0)
        if order >= 1:
            c[1] = 1.0
        return cls(c)

    @classmethod
    def constant(cls, x0: float, order: int) -> "Jet":
        return cls([float(x0)] + [0.0] * order)

    @classmethod
    def from_derivatives(cls, derivs: Sequence[float]) -> "Jet":
        return cls([d / math.factorial(k) for k, d in enumerate(derivs)])

    @property
    def order(self) -> int:
        return len(self.c) - 1

    @property
    def value(self) -> float:
        return self.c[0]

    def d(self, k: int) -> float:
        """k-th derivative at the expansion point."""
        return self.c[k] * math.factorial(k)

    def derivatives(self) -> list[float]:
        return [self.d(k) for k in range(len(self.c))]

    def deriv(self) -> "Jet":
        """Jet of the derivative (one order lower)."""
        if self.order == 0:
            raise ValueError("cannot differentiate an order-0 jet")
        return Jet([(k + 1) * self.c[k + 1] for k in range(self.order)])

    def truncate(self, order: int) -> "Jet":
        return Jet(self.c[: order + 1])

    def __repr__(self) -> str:
        return f"Jet({self.c})"

    # -- arithmetic ---------------------------------------------------

    def _lift(self, other) -> "Jet":
        if isinstance(other, Jet):
            return other
        return Jet.constant(other, self.order)

    @staticmethod
    def _common(a: "Jet", b: "Jet") -> tuple[list[float], list[float]]:
        n = min(len(a.c), len(b.c))
        return a.c[:n], b.c[:n]

    def __add__(self, other):
        if not isinstance(other, Jet):
            return Jet([self.c[0] + other] + self.c[1:])
        a, b = self._common(self, other)
        return Jet([x + y for x, y in zip(a, b)])

    __radd__ = __add__

    def __neg__(self):
        return Jet([-x for x in self.c])

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet([x * other for x in self.c])
        a, b = self._common(self, other)
        n = len(a)
        return Jet([sum(a[i] * b[k - i] for i in range(k + 1)) for k in range(n)])

    __rmul__ = __mul__

    def recip(self) -> "Jet":
        a = self.c
        if a[0] == 0.0:
            raise ZeroDivisionError("reciprocal of jet with zero value")
        out = [1.0 / a[0]]
        for k in range(1, len(a)):
            out.append(-sum(a[i] * out[k - i] for i in range(1, k + 1)) / a[0])
        return Jet(out)

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            return Jet([x / other for x in self.c])
        return self * other.recip()

    def __rtruediv__(self, other):
        return self.recip() * other

    def __pow__(self, n):
        if isinstance(n, int) and n >= 0:
            out = Jet.constant(1.0, self.order)
            base = self
            while n:
                if n & 1:
                    out = out * base
                base = base * base
                n >>= 1
            return out
        if isinstance(n, int):
            return (self ** (-n)).recip()
        return power(self, float(n))


def exp(x):
    if not isinstance(x, Jet):
        return math.exp(x)
    a = x.c
    out = [math.exp(a[0])]
    # f' = a' f  =>  k f_k = sum_{j=1..k} j a_j f_{k-j}
    for k in range(1, len(a)):
        out.append(sum(j * a[j] * out[k - j] for j in range(1, k + 1)) / k)
    return Jet(out)


def power(x, p: float):
    """``x**p`` for real ``p``; requires a positive value."""
    if not isinstance(x, Jet):
        return x**p
    a = x.c
    if a[0] <= 0.0:
        raise ValueError("real power of jet needs a positive value")
    out = [a[0] ** p]
    # a f' = p a' f
    for k in range(1, len(a)):
        s = sum((p * j - (k - j)) * a[j] * out[k - j] for j in range(1, k + 1))
        out.append(s / (k * a[0]))
    return Jet(out)


def sqrt(x):
    return power(x, 0.5) if isinstance(x, Jet) else math.sqrt(x)


def compose(inner: Jet, derivs: Sequence[float]) -> Jet:
    """Jet of ``f(inner)`` given ``f^(k)`` at ``inner.value`` for k = 0..order."""
    n = inner.order
    if len(derivs) < n + 1:
        raise ValueError(f"need {n + 1} derivatives, got {len(derivs)}")
    dx = Jet([0.0] + inner.c[1:])
    out = Jet.constant(derivs[0], n)
    term = Jet.constant(1.0, n)
    for k in range(1, n + 1):
        term = term * dx
        out = out + term * (derivs[k] / math.factorial(k))
    return out


def derivatives(f: Callable, x0: float, order: int) -> list[float]:
    """Derivatives ``f^(k)(x0)``, k = 0..order, of a jet-compatible callable."""
    y = f(Jet.variable(x0, order))
    if not isinstance(y, Jet):
        return [float(y)] + [0.0] * order
    return y.derivatives()
