"""Certified envelopes for K = psi/r and the coefficient inequalities built on them.

Everything here runs in outward-rounded interval arithmetic.  Lower bounds
propagate interval infima and upper bounds propagate suprema, so each
recursion step remains a valid comparison bound after rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Optional

from bowlcert.interval import DivisionByIntervalContainingZero, Interval, exp_iv

__all__ = [
    "Certificate",
    "BoundTable",
    "DomainError",
    "GridTooCoarse",
    "eval_F",
    "lower_table",
    "upper_table",
    "envelope_table",
    "certify_envelope",
    "certify_a34",
    "certify_upper_closed_form",
    "certify_lower_closed_form",
    "delta_lower_bound",
    "certify_delta",
    "tail_channel_certificates",
    "certify_tail_coeffs",
]

METHODS = ("interval-recursion", "interval-bracketing", "closed-form-tail", "grid-oracle")

HALF = Interval(0.5, 0.5)
ONE = Interval(1.0, 1.0)
R_SHIFT = Interval.exact(Fraction(22, 10))
R_JOIN = Fraction(39, 10)


class DomainError(ValueError):
    pass


class GridTooCoarse(RuntimeError):
    pass


@dataclass
class Certificate:
    name: str
    inequality: str
    domain: str
    method: str
    margin: float
    verdict: str
    details: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "inequality": self.inequality,
            "domain": self.domain,
            "method": self.method,
            "margin": self.margin,
            "verdict": self.verdict,
        }


def _verdict(margin: float) -> str:
    return "pass" if margin > 0.0 else "fail"


def _as_interval(x) -> Interval:
    return Interval.coerce(x)


def _lower_diff(x: Interval, y: Interval) -> float:
    """Certified lower bound of ``x - y``."""
    return (x - y).lo


# -- the comparison function F -----------------------------------------


def eval_F(r, a, rho, alpha) -> Interval:
    """Enclosure of F(r, a | rho, alpha).

    F solves ``(rF)'/(1 + a^2 r^2) + F = 1`` with ``F(rho) = alpha``::

        F = 1 - (1 - [1 - (1-alpha) a^2 rho^2] exp(-a^2 (r^2 - rho^2)/2)) / (a^2 r^2)
    """
    r, a, rho, alpha = map(_as_interval, (r, a, rho, alpha))
    a2 = a.sqr()
    bracket = 1 - (1 - alpha) * a2 * rho.sqr()
    decay = exp_iv(-(a2 * (r - rho) * (r + rho)) * 0.5)
    try:
        return 1 - (1 - bracket * decay) / (a2 * r.sqr())
    except DivisionByIntervalContainingZero as exc:
        raise DomainError("a^2 r^2 must be bounded away from 0") from exc


# -- recursion tables --------------------------------------------------


@dataclass(frozen=True)
class BoundTable:
    """Rows ``(r_i, a_i, b_i)`` of the certified envelope.

    ``a[i]`` encloses the computed lower bound (its ``lo`` is the certified
    value), ``b[i]`` encloses the upper bound (its ``hi`` is certified).
    ``c`` and ``c_tilde`` hold the two intermediate upper-stage values for
    audit; entry 0 of those is ``None``.
    """

    h: Fraction
    n: int
    r: tuple
    a: Optional[tuple] = None
    b: Optional[tuple] = None
    c: Optional[tuple] = None
    c_tilde: Optional[tuple] = None

    def r_value(self, i: int) -> float:
        return float(i * self.h)

    def a_lo(self, i: int) -> float:
        return self.a[i].lo

    def b_hi(self, i: int) -> float:
        return self.b[i].hi

    def rows(self) -> Iterator[tuple[int, float, Optional[float], Optional[float]]]:
        for i in range(self.n + 1):
            yield (
                i,
                self.r_value(i),
                None if self.a is None else self.a[i].lo,
                None if self.b is None else self.b[i].hi,
            )

    def to_csv(self) -> str:
        lines = ["i,r,a_lo,b_hi"]
        for i, r, a, b in self.rows():
            lines.append(f"{i},{_fmt(r)},{_fmt(a)},{_fmt(b)}")
        return "\n".join(lines) + "\n"


def _fmt(x) -> str:
    if x is None:
        return ""
    if float(x).is_integer():
        return str(int(x))
    return repr(float(x))


def _check_args(h, n) -> Fraction:
    h = Fraction(h) if not isinstance(h, float) else Fraction(str(h))
    if h <= 0:
        raise ValueError("step h must be positive")
    if n < 0:
        raise ValueError("step count n must be non-negative")
    return h


def _grid(h: Fraction, n: int) -> tuple:
    return tuple(Interval.exact(i * h) for i in range(n + 1))


def lower_table(h, n: int) -> BoundTable:
    """a_{i+1} = F(r_{i+1}, a_i | r_i, a_i), a_0 = 1/2."""
    h = _check_args(h, n)
    r = _grid(h, n)
    a = [HALF]
    for i in range(n):
        ai = Interval.point(a[i].lo)
        a.append(eval_F(r[i + 1], ai, r[i], ai))
    return BoundTable(h=h, n=n, r=r, a=tuple(a))


def upper_table(h, n: int) -> BoundTable:
    """b_{i+1} = F(r_{i+1}, F(r_{i+1}, F(r_{i+1}, 1 | r_i, b_i) | r_i, b_i) | r_i, b_i)."""
    h = _check_args(h, n)
    r = _grid(h, n)
    b, c, ct = [HALF], [None], [None]
    for i in range(n):
        bi = Interval.point(b[i].hi)
        c1 = eval_F(r[i + 1], ONE, r[i], bi)
        c2 = eval_F(r[i + 1], Interval.point(c1.hi), r[i], bi)
        b.append(eval_F(r[i + 1], Interval.point(c2.hi), r[i], bi))
        c.append(c1)
        ct.append(c2)
    return BoundTable(h=h, n=n, r=r, b=tuple(b), c=tuple(c), c_tilde=tuple(ct))


def envelope_table(h, n: int) -> BoundTable:
    lo, up = lower_table(h, n), upper_table(h, n)
    return BoundTable(h=lo.h, n=n, r=lo.r, a=lo.a, b=up.b, c=up.c, c_tilde=up.c_tilde)


# -- envelope and closed-form certificates ------------------------------


def certify_envelope(h, n: int, profile=None) -> Certificate:
    """Check table invariants and, if a profile is given, oracle containment.

    The margin is the smallest of ``K_ref(r_i) - a_i``, ``b_i - K_ref(r_i)``
    over ``i >= 1`` and ``1 - max b_i``.
    """
    from bowlcert.profile import K_at

    table = envelope_table(h, n)
    invariants_ok = (
        table.a[0] == HALF
        and table.b[0] == HALF
        and all(ai.lo >= 0.5 for ai in table.a)
        and all(bi.hi <= 1.0 for bi in table.b)
        and all(table.a[i].lo <= table.b[i].hi for i in range(n + 1))
    )
    gaps = [1.0 - max(bi.hi for bi in table.b)]
    worst = None
    if profile is not None:
        for i in range(1, n + 1):
            r = table.r_value(i)
            if r > profile.r_max:
                break
            k = float(K_at(profile, r))
            g = min(k - table.a_lo(i), table.b_hi(i) - k)
            if worst is None or g < worst[1]:
                worst = (i, g)
            gaps.append(g)
    margin = min(gaps)
    verdict = _verdict(margin) if invariants_ok else "fail"
    return Certificate(
        name="envelope",
        inequality="a_i <= K(r) for r >= r_i and K(r) <= b_i for r <= r_i",
        domain=f"r_i = i*{table.h}, i = 0..{n}",
        method="interval-recursion" if profile is None else "grid-oracle",
        margin=margin,
        verdict=verdict,
        details={"table": table, "invariants_ok": invariants_ok, "worst_row": worst},
    )


def certify_a34(h=Fraction(1, 10), index: int = 34) -> Certificate:
    table = lower_table(h, index)
    target = Interval.exact(Fraction(173, 200))
    margin = _lower_diff(Interval.point(table.a_lo(index)), target)
    return Certificate(
        name="a34_lower",
        inequality=f"a_{index} >= 173/200",
        domain=f"h = {table.h}",
        method="interval-recursion",
        margin=margin,
        verdict=_verdict(margin),
        details={"a": table.a[index], "table": table},
    )


def certify_upper_closed_form(ratio: float = 1.02, r_min: float = 0.01) -> Certificate:
    """K(r) <= 1/2 + r^2/20 on (0, 1] from the h = 1 upper stage.

    With c = F(1, 1 | 0, 1/2) = e^{-1/2}, comparison gives
    K(r) <= F(r, c | 0, 1/2) for r <= 1.  On cells [s, t] of a geometric
    cover of [r_min, 1] we use that this F increases in r and check
    F(t) <= 1/2 + s^2/20.  On (0, r_min] the bound
    1 - e^{-y} >= y - y^2/2 gives F <= 1/2 + c^2 r^2 / 8, and c^2/8 < 1/20.
    """
    c = eval_F(1.0, ONE, 0.0, HALF)
    c_hi = Interval.point(c.hi)
    twentieth = Interval.exact(Fraction(1, 20))
    series_margin = _lower_diff(twentieth, c_hi.sqr() / 8)

    cells = []
    t = 1.0
    while t > r_min:
        s = max(t / ratio, r_min)
        cells.append((s, t))
        t = s
    cells.reverse()
    margin = series_margin
    worst = (0.0, r_min, series_margin)
    for s, t in cells:
        f_hi = eval_F(t, c_hi, 0.0, HALF).hi
        bound = HALF + Interval.point(s).sqr() * twentieth
        m = _lower_diff(bound, Interval.point(f_hi))
        if m < margin:
            margin, worst = m, (s, t, m)
    return Certificate(
        name="K_upper_closed_form",
        inequality="K(r) <= 1/2 + r^2/20",
        domain="(0, 1]",
        method="interval-bracketing",
        margin=margin,
        verdict=_verdict(margin),
        details={
            "c1": c,
            "cover": {"series_cell": [0.0, r_min], "ratio": ratio, "cells": len(cells)},
            "worst_cell": worst,
        },
    )


def certify_lower_closed_form(a34: Optional[float] = None) -> Certificate:
    """K(r) >= 1 - 7/(5 r^2) for r >= 39/10, via K >= F(r, a_34 | 34/10, a_34).

    r^2 (1 - F) = (1 - B e^{-a^2 (r^2 - rho^2)/2}) / a^2 with
    B = 1 - (1-a) a^2 rho^2 is monotone in r, so its supremum over
    [39/10, oo) is the larger of the values at 39/10 and at infinity.
    """
    if a34 is None:
        a34 = lower_table(Fraction(1, 10), 34).a_lo(34)
    a = Interval.point(a34)
    rho = Interval.exact(Fraction(34, 10))
    r0 = Interval.exact(R_JOIN)
    a2 = a.sqr()
    bracket = 1 - (1 - a) * a2 * rho.sqr()
    at_join = (1 - bracket * exp_iv(-(a2 * (r0 - rho) * (r0 + rho)) * 0.5)) / a2
    at_inf = 1 / a2
    sup = max(at_join.hi, at_inf.hi)
    margin = _lower_diff(Interval.exact(Fraction(7, 5)), Interval.point(sup))
    return Certificate(
        name="K_lower_closed_form",
        inequality="K(r) >= 1 - 7/(5 r^2)",
        domain="[39/10, inf)",
        method="closed-form-tail",
        margin=margin,
        verdict=_verdict(margin),
        details={"a34": a34, "sup_r2_gap": sup, "bracket": bracket},
    )


# -- delta bracketing --------------------------------------------------


def delta_lower_bound(s, t, k_lo: float, k_hi: float) -> float:
    """Certified lower bound of delta(r) on [s, t] given k_lo <= K <= k_hi there.

    delta = 2 r^2 alpha + 2 (r - 22/10) r^2 beta + (5 - (r - 22/10)^2)(-r^2 gamma).
    Each channel is bounded separately with the endpoint min/max pattern:
    the beta channel as the min of four corner products of
    (r - 22/10) r and r beta, the gamma channel as the extreme value of the
    quadratic weight times a lower bound of -r^2 gamma.
    """
    s, t = _as_interval(s), _as_interval(t)
    a, b = Interval.point(k_lo), Interval.point(k_hi)
    s2, t2 = s.sqr(), t.sqr()

    alpha_term = (2 * s2 / (1 + b.sqr() * t2)).lo

    rb_lo = (1 - 4 * b * (1 - a) * t2 / (1 + a.sqr() * s2)).lo
    rb_hi = (1 - 4 * a * (1 - b) * s2 / (1 + b.sqr() * t2)).hi
    xs = [(s - R_SHIFT) * s, (t - R_SHIFT) * t]
    vertex = Interval.exact(Fraction(11, 10))
    if s.hi >= vertex.lo and t.lo <= vertex.hi:
        xs.append(-vertex.sqr())
    x_lo = min(x.lo for x in xs)
    x_hi = max(x.hi for x in xs)
    corners = [
        (Interval.point(x) * Interval.point(y)).lo
        for x in (x_lo, x_hi)
        for y in (rb_lo, rb_hi)
    ]
    beta_term = (2 * Interval.point(min(corners))).lo

    g_lo = (
        (1 + 2 * s2 * a.sqr() / (1 + s2 * a.sqr()))
        - 2 * (1 - a) * t2
        + 4 * (1 - b).sqr() * s2 / (1 + t2 * b.sqr())
    ).lo
    ds, dt = (s - R_SHIFT).sqr(), (t - R_SHIFT).sqr()
    weight_lo = (5 - Interval.point(max(ds.hi, dt.hi))).lo
    if s.hi >= R_SHIFT.lo and t.lo <= R_SHIFT.hi:
        weight_hi = 5.0
    else:
        weight_hi = (5 - Interval.point(min(ds.lo, dt.lo))).hi
    weight = weight_lo if g_lo >= 0.0 else weight_hi
    gamma_term = (Interval.point(weight) * Interval.point(g_lo)).lo

    return (
        Interval.point(alpha_term) + Interval.point(beta_term) + Interval.point(gamma_term)
    ).lo


def certify_delta(h=Fraction(1, 10), r_end=Fraction(4), raise_on_fail: bool = True) -> Certificate:
    """delta(r) >= 1/100 on (0, r_end], one bracket per cell [r_i, r_{i+1}].

    On each cell K is bracketed by [a_i, b_{i+1}] from the certified tables.
    With ``raise_on_fail`` a failing cell raises GridTooCoarse; otherwise
    the failing certificate is returned.  The bracket is first order in
    the cell width and needs cells of about 1/200 to clear 1/100.
    """
    h = _check_args(h, 1)
    r_end = Fraction(r_end)
    cells = math.ceil(r_end / h)
    table = envelope_table(h, cells)
    threshold = Interval.exact(Fraction(1, 100))
    bounds = []
    for i in range(cells):
        s = table.r[i]
        t = table.r[i + 1] if (i + 1) * h <= r_end else Interval.exact(r_end)
        bounds.append(delta_lower_bound(s, t, table.a_lo(i), table.b_hi(i + 1)))
    margins = [_lower_diff(Interval.point(lb), threshold) for lb in bounds]
    margin = min(margins)
    failing = [i for i, m in enumerate(margins) if m <= 0.0]
    cert = Certificate(
        name="delta_lower",
        inequality="delta(r) >= 1/100",
        domain=f"(0, {r_end}] in cells of width {h}",
        method="interval-bracketing",
        margin=margin,
        verdict=_verdict(margin),
        details={
            "h": h,
            "lower_bounds": bounds,
            "min_lower_bound": min(bounds),
            "argmin_cell": margins.index(margin),
            "failing_cells": failing,
        },
    )
    if raise_on_fail and failing:
        raise GridTooCoarse(
            f"{len(failing)} cells below 1/100 at h = {h} "
            f"(first at r = {float(failing[0] * h)}); try a smaller h"
        )
    return cert


# -- tail coefficient bounds -------------------------------------------


def _k_floor(s: Interval) -> Interval:
    """Certified lower bound for K on [s, oo), s >= 39/10."""
    closed = 1 - Interval.exact(Fraction(7, 5)) / s.sqr()
    return Interval.point(max(0.9, closed.lo))


def _tail_cells(r_cap: float, step: float) -> list[tuple[float, float]]:
    cells, s = [], float(R_JOIN)
    while s < r_cap:
        t = min(s + step, r_cap)
        cells.append((s, t))
        s = t
    return cells


def tail_channel_certificates(r_cap: float = 100.0, step: float = 0.05) -> list[Certificate]:
    """Three certificates for r >= 39/10: r^2 alpha <= 5/4, r beta >= 5/9, r^2 gamma <= -1/25.

    Cells of [39/10, r_cap] use K in [max(9/10, 1 - 7/(5 s^2)), 1].  Beyond
    r_cap the r-free reductions r^2 alpha <= 1/K^2,
    r beta >= 1 - 4 (1-K)/K, 2 (1-K) r^2 <= 14/5 and the monotonicity of
    x -> x/(1+x) at x = r_cap^2 K^2 are used.
    """
    five_quarters = Interval.exact(Fraction(5, 4))
    five_ninths = Interval.exact(Fraction(5, 9))
    neg_25th = Interval.exact(Fraction(-1, 25))
    seven_fifths = Interval.exact(Fraction(7, 5))
    start = Interval.exact(R_JOIN)

    m_alpha = m_beta = m_gamma = math.inf
    for s_f, t_f in _tail_cells(r_cap, step):
        s = start if s_f == float(R_JOIN) else Interval.point(s_f)
        t = Interval.point(t_f)
        r = Interval(s.lo, t.hi)
        k = Interval(_k_floor(s).lo, 1.0)
        x = r.sqr() * k.sqr()
        frac = 1 - 1 / (1 + x)  # x/(1+x), monotone form
        r2alpha = 1 / (1 / r.sqr() + k.sqr())
        rbeta = 1 - 4 * (1 / k - 1) * frac
        one_minus_k = Interval(0.0, (1 - _k_floor(s)).hi)
        two_gap_r2 = 2 * one_minus_k * r.sqr()
        two_gap_r2 = Interval(two_gap_r2.lo, min(two_gap_r2.hi, (2 * seven_fifths).hi))
        r2gamma = two_gap_r2 * (1 - 2 * one_minus_k / (1 + x)) - (1 + 2 * frac)
        m_alpha = min(m_alpha, _lower_diff(five_quarters, Interval.point(r2alpha.hi)))
        m_beta = min(m_beta, _lower_diff(Interval.point(rbeta.lo), five_ninths))
        m_gamma = min(m_gamma, _lower_diff(neg_25th, Interval.point(r2gamma.hi)))

    cap = Interval.point(r_cap)
    k_cap = _k_floor(cap)
    tail_alpha = 1 / k_cap.sqr()
    tail_beta = 1 - 4 * (1 / k_cap - 1)
    x_cap = cap.sqr() * k_cap.sqr()
    tail_gamma = 2 * seven_fifths - (1 + 2 * (1 - 1 / (1 + x_cap)))
    m_alpha = min(m_alpha, _lower_diff(five_quarters, Interval.point(tail_alpha.hi)))
    m_beta = min(m_beta, _lower_diff(Interval.point(tail_beta.lo), five_ninths))
    m_gamma = min(m_gamma, _lower_diff(neg_25th, Interval.point(tail_gamma.hi)))

    domain = f"[39/10, {r_cap}] in cells of width {step}, closed-form beyond"
    return [
        Certificate("tail_alpha", "alpha(r) <= 5/(4 r^2)", domain, "closed-form-tail",
                    m_alpha, _verdict(m_alpha)),
        Certificate("tail_beta", "beta(r) >= 5/(9 r)", domain, "closed-form-tail",
                    m_beta, _verdict(m_beta)),
        Certificate("tail_gamma", "gamma(r) <= -1/(25 r^2)", domain, "closed-form-tail",
                    m_gamma, _verdict(m_gamma)),
    ]


def certify_tail_coeffs(r_cap: float = 100.0, step: float = 0.05) -> Certificate:
    channels = tail_channel_certificates(r_cap, step)
    margin = min(c.margin for c in channels)
    return Certificate(
        name="tail_coefficients",
        inequality="alpha <= 5/(4r^2), beta >= 5/(9r), gamma <= -1/(25r^2)",
        domain=channels[0].domain,
        method="closed-form-tail",
        margin=margin,
        verdict=_verdict(margin) if all(c.passed for c in channels) else "fail",
        details={"channels": {c.name: c.margin for c in channels}},
    )


def join_fraction_bound(k_floor: float = 0.9) -> float:
    """Certified lower bound of r^2 K^2 / (1 + r^2 K^2) at r = 39/10 with K >= k_floor."""
    x = Interval.exact(R_JOIN).sqr() * Interval.point(k_floor).sqr()
    return (1 - 1 / (1 + x)).lo
