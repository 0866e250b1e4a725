"""Glued supersolution for the model operator L0' on the bowl.

L0'[p] = alpha p'' + beta p' + gamma p with the coefficients of
:mod:`bowlcert.profile`.  The barrier is assembled from

* p1(r) = 5 - (r - 22/10)^2 on the inner region,
* p2(r) = a + b * int_j^r exp((2/9)(j^2 - s^2)) ds for r >= j = 39/10 + delta,

joined over [39/10, j] by a C^2 smoothed minimum, then flattened to its
limit constant beyond a far cutoff and scaled by 400.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from bowlcert.bounds import Certificate
from bowlcert.profile import OperatorCoefficients, ProfileTable, coefficients_at

__all__ = [
    "Barrier",
    "OperatorCoefficients",
    "QuadratureFailure",
    "WindowViolation",
    "p1",
    "p1_derivs",
    "p2",
    "p2_derivs",
    "tail_integral",
    "tail_closed_form",
    "one_third_check",
    "build_barrier",
    "operator_coefficients",
    "default_grid",
    "verify_supersolution",
    "supersolution_csv",
]

R_SHIFT = 2.2
R_JOIN = 3.9
DECAY = 2.0 / 9.0
SCALE = 400.0
TARGETS = ("p", "p1", "p2", "pbar", "const")


class QuadratureFailure(RuntimeError):
    pass


class WindowViolation(ValueError):
    pass


# -- the two pieces ----------------------------------------------------


def p1(r):
    return 5.0 - (r - R_SHIFT) ** 2


def p1_derivs(r):
    r = np.asarray(r, dtype=float)
    v = 5.0 - (r - R_SHIFT) ** 2
    out = (v, -2.0 * (r - R_SHIFT), np.full_like(r, -2.0))
    return tuple(float(x) for x in out) if r.ndim == 0 else out


def _quad(f, lo, hi, tol):
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(f, lo, hi, epsabs=tol, epsrel=0.0, limit=200)
        except integrate.IntegrationWarning as exc:
            raise QuadratureFailure(str(exc)) from exc
    if not err <= tol:
        raise QuadratureFailure(f"quadrature error estimate {err:.3e} exceeds {tol:.3e}")
    return val, err


def tail_integral(x0: float, j: float | None = None, tol: float = 1e-10, return_error: bool = False):
    """int_{x0}^inf exp((2/9)(j^2 - s^2)) ds by adaptive quadrature (j defaults to x0).

    The infinite range is mapped to (0, 1] inside QUADPACK.
    """
    j = x0 if j is None else j
    val, err = _quad(lambda s: math.exp(DECAY * (j * j - s * s)), x0, math.inf, tol)
    return (val, err) if return_error else val


def tail_closed_form(x0, j=None):
    """Same integral through the scaled complementary error function."""
    x0 = np.asarray(x0, dtype=float)
    j = x0 if j is None else j
    k = math.sqrt(DECAY)
    val = (
        math.sqrt(math.pi) / (2.0 * k)
        * special.erfcx(k * x0)
        * np.exp(DECAY * (j * j - x0 * x0))
    )
    return float(val) if np.ndim(val) == 0 else val


def one_third_check(tol: float = 1e-10) -> float:
    """5 - 1.7^2 - 2 * 1.7 * int_{3.9}^inf exp((2/9)(3.9^2 - s^2)) ds."""
    return p1(R_JOIN) - 2.0 * (R_JOIN - R_SHIFT) * tail_integral(R_JOIN, tol=tol)


# -- barrier -----------------------------------------------------------


def _smoothstep(u):
    u = np.clip(u, 0.0, 1.0)
    return u**3 * (10.0 - 15.0 * u + 6.0 * u * u)


def _smoothstep_derivs(u, width):
    u = np.clip(u, 0.0, 1.0)
    s = u**3 * (10.0 - 15.0 * u + 6.0 * u * u)
    ds = 30.0 * u * u * (1.0 - u) ** 2 / width
    dds = 60.0 * u * (1.0 - u) * (1.0 - 2.0 * u) / width**2
    return s, ds, dds


def _soft_abs(x, eta):
    """C^2 even function equal to |x| for |x| >= eta."""
    t = x / eta
    inner = np.abs(t) < 1.0
    s = np.where(inner, eta * (3.0 + 6.0 * t * t - t**4) / 8.0, np.abs(x))
    ds = np.where(inner, (12.0 * t - 4.0 * t**3) / 8.0, np.sign(x))
    dds = np.where(inner, (12.0 - 12.0 * t * t) / (8.0 * eta), 0.0)
    return s, ds, dds


@dataclass(frozen=True)
class Barrier:
    a: float
    b: float
    delta: float
    delta_bar: float
    transition: tuple
    c: float
    chi_far: tuple
    eta: float
    scale: float = SCALE

    @property
    def junction(self) -> float:
        return R_JOIN + self.delta

    @property
    def window_offset(self) -> float:
        """|a - p1(j)| + |b - p1'(j)|."""
        v, d1, _ = p1_derivs(self.junction)
        return abs(self.a - v) + abs(self.b - d1)

    def p2_derivs(self, r):
        """p2, p2', p2'' from the closed-form tail (vectorized)."""
        r = np.asarray(r, dtype=float)
        j = self.junction
        e = np.exp(DECAY * (j * j - r * r))
        v = self.c - self.b * tail_closed_form(r, j)
        d1 = self.b * e
        return v, d1, -2.0 * DECAY * r * d1

    def pbar_derivs(self, r):
        r = np.asarray(r, dtype=float)
        q1 = p1_derivs(r)
        q2 = self.p2_derivs(r)
        t_lo, t_hi = self.transition
        d = [x - y for x, y in zip(q1, q2)]
        s, ds, dds = _soft_abs(d[0], self.eta)
        blend = (
            0.5 * (q1[0] + q2[0]) - 0.5 * s,
            0.5 * (q1[1] + q2[1]) - 0.5 * ds * d[1],
            0.5 * (q1[2] + q2[2]) - 0.5 * (dds * d[1] ** 2 + ds * d[2]),
        )
        inner, outer = r <= t_lo, r >= t_hi
        return tuple(
            np.where(inner, x1, np.where(outer, x2, xb)) for x1, x2, xb in zip(q1, q2, blend)
        )

    def p_derivs(self, r):
        """The final barrier p = scale * (chi pbar + (1 - chi) c) and two derivatives."""
        r = np.asarray(r, dtype=float)
        lo, hi = self.chi_far
        g = self.pbar_derivs(r)
        s, ds, dds = _smoothstep_derivs((r - lo) / (hi - lo), hi - lo)
        chi, dchi, ddchi = 1.0 - s, -ds, -dds
        gc = g[0] - self.c
        mid = (
            self.c + chi * gc,
            dchi * gc + chi * g[1],
            ddchi * gc + 2.0 * dchi * g[1] + chi * g[2],
        )
        q1 = p1_derivs(r)
        inner = r <= self.transition[0]
        near = r <= lo
        far = r >= hi
        zero = np.zeros_like(r)
        const = (np.full_like(r, self.c), zero, zero)
        return tuple(
            np.where(inner, self.scale * x1,
                     np.where(near, self.scale * xg,
                              np.where(far, self.scale * xc, self.scale * xm)))
            for x1, xg, xc, xm in zip(q1, g, const, mid)
        )

    def p(self, r):
        return self.p_derivs(r)[0]


def build_barrier(
    delta: float = 0.01,
    delta_bar: float = 1e-3,
    chi_far: tuple = (20.0, 25.0),
    quad_tol: float = 1e-10,
    check_window: bool = True,
) -> Barrier:
    """Assemble the glued barrier.

    b is the slope of p1 at the junction j = 39/10 + delta.  a sits
    eps = kappa (delta/2)^2 below p1(j), where 2 kappa = p2'' - p1'' at j,
    so that p1 - p2 changes sign near the middle of [39/10, j] and the
    smoothed minimum selects p1 at 39/10 and p2 at j.  The offset eps must
    fit in the delta_bar window and the limit c = a + b * tail must stay
    at or above 1/4, otherwise WindowViolation is raised.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    lo, hi = chi_far
    if not R_JOIN + delta < lo < hi:
        raise ValueError("far cutoff window must lie beyond the junction")
    j = R_JOIN + delta
    v, b, _ = p1_derivs(j)
    kappa = 0.5 * (-2.0 * DECAY * j * b + 2.0)
    eps = kappa * (0.5 * delta) ** 2
    a = v - eps
    c = a + b * tail_integral(j, tol=quad_tol)
    bar = Barrier(
        a=a, b=b, delta=delta, delta_bar=delta_bar, transition=(R_JOIN, j),
        c=c, chi_far=(float(lo), float(hi)), eta=eps / 4.0,
    )
    if check_window:
        problems = []
        if bar.window_offset > delta_bar:
            problems.append(f"offset {bar.window_offset:.3e} exceeds delta_bar {delta_bar:.3e}")
        if c < 0.25:
            problems.append(f"limit c = {c:.6f} < 1/4")
        gap_lo = p1(R_JOIN) - float(bar.p2_derivs(R_JOIN)[0])
        gap_hi = p1(j) - float(bar.p2_derivs(j)[0])
        if not (gap_lo <= -bar.eta and gap_hi >= bar.eta):
            problems.append("p1 - p2 does not change sign across the transition")
        if problems:
            raise WindowViolation("; ".join(problems))
    return bar


def p2(r, bar: Barrier, tol: float = 1e-10) -> float:
    """p2(r) by adaptive quadrature from the junction."""
    j = bar.junction
    if r < j:
        raise ValueError(f"p2 is defined for r >= {j}")
    val, _ = _quad(lambda s: math.exp(DECAY * (j * j - s * s)), j, r, tol)
    return bar.a + bar.b * val


def p2_derivs(r, bar: Barrier, tol: float = 1e-10) -> tuple[float, float, float]:
    """p2 by quadrature, p2' from the integrand and p2'' = -(4/9) r p2'."""
    v = p2(r, bar, tol)
    j = bar.junction
    d1 = bar.b * math.exp(DECAY * (j * j - r * r))
    return v, d1, -2.0 * DECAY * r * d1


# -- verification ------------------------------------------------------


def operator_coefficients(profile: ProfileTable, r) -> OperatorCoefficients:
    """L0' coefficients at r taken from K alone."""
    cb = coefficients_at(profile, r)
    return OperatorCoefficients(cb.r, cb.alpha, cb.beta, cb.gamma)


def default_grid(bar: Barrier, r_end: float = 30.0, step: float = 1e-3, fine: float = 1e-5) -> np.ndarray:
    """Uniform grid on (0, r_end] refined near 22/10 and across the transition."""
    n = int(round(r_end / step))
    base = np.arange(1, n + 1) * step
    t_lo, t_hi = bar.transition
    pieces = [base]
    for lo, hi in ((R_SHIFT - 0.05, R_SHIFT + 0.05), (t_lo - 0.01, t_hi + 0.01)):
        pieces.append(np.arange(lo, hi + fine / 2, fine))
    grid = np.unique(np.concatenate(pieces))
    return grid[(grid > 0) & (grid <= r_end)]


def _target(bar: Barrier, target: str, r):
    if target == "p":
        return bar.p_derivs(r), -1.0, "L0'[p] <= -1/r^2"
    if target == "p1":
        return p1_derivs(r), -0.01, "L0'[p1] <= -1/(100 r^2)"
    if target == "p2":
        return bar.p2_derivs(r), -0.01, "L0'[p2] <= -1/(100 r^2)"
    if target == "pbar":
        return bar.pbar_derivs(r), -0.005, "L0'[pbar] <= -1/(200 r^2)"
    if target == "const":
        zero = np.zeros_like(r)
        return (np.full_like(r, bar.c), zero, zero), 0.0, "L0'[c] = gamma c <= 0"
    raise ValueError(f"unknown target {target!r}; expected one of {TARGETS}")


def _default_domain(bar: Barrier, target: str) -> tuple[float, float]:
    if target == "p1":
        return 0.0, 4.0
    if target == "p2":
        return bar.junction, 30.0
    return 0.0, 30.0


def evaluate_operator(bar: Barrier, profile: ProfileTable, grid, target: str = "p"):
    """(r, f, L0'[f], bound) arrays for the selected target."""
    r = np.asarray(grid, dtype=float)
    (f, df, ddf), level, _ = _target(bar, target, r)
    lf = operator_coefficients(profile, r).apply(f, df, ddf)
    return r, np.asarray(f), np.asarray(lf), level / r**2


def verify_supersolution(
    bar: Barrier,
    profile: ProfileTable,
    grid=None,
    target: str = "p",
) -> Certificate:
    """Grid check of L0'[f] <= level / r^2.

    The margin is min over the grid of r^2 (level/r^2 - L0'[f]), i.e. the
    slack measured in units of 1/r^2.
    """
    if target not in TARGETS:
        raise ValueError(f"unknown target {target!r}; expected one of {TARGETS}")
    lo, hi = _default_domain(bar, target)
    if grid is None:
        grid = default_grid(bar, r_end=hi)
        grid = grid[grid >= lo]
    r = np.asarray(grid, dtype=float)
    if r.size == 0:
        raise ValueError("empty verification grid")
    _, _, statement = _target(bar, target, r[:1])
    _, _, lf, bound = evaluate_operator(bar, profile, r, target)
    slack = (bound - lf) * r**2
    k = int(np.argmin(slack))
    margin = float(slack[k])
    return Certificate(
        name=f"supersolution_{target}",
        inequality=statement,
        domain=f"grid of {r.size} points on [{r[0]:.6g}, {r[-1]:.6g}]",
        method="grid-oracle",
        margin=margin,
        verdict="pass" if margin > 0.0 else "fail",
        details={"worst_r": float(r[k]), "points": int(r.size)},
    )


def supersolution_csv(bar: Barrier, profile: ProfileTable, grid=None) -> str:
    if grid is None:
        grid = default_grid(bar)
    r, f, lf, bound = evaluate_operator(bar, profile, grid, "p")
    lines = ["r,p,L0p,bound"]
    for row in zip(r, f, lf, bound):
        lines.append(",".join(repr(float(x)) for x in row))
    return "\n".join(lines) + "\n"
