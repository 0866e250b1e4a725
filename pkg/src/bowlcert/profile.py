"""Reference (non-certified) solution of the bowl profile equation.

psi'/(1 + psi^2) + psi/r = 1,  psi(0) = 0,  K = psi/r.

The removable singularity at r = 0 is handled by a short power series; past
the switch radius DOP853 integrates psi' = (1 - psi/r)(1 + psi^2).  The
table stores psi, psi', psi'' on a uniform grid and interpolates with
quintic Hermite pieces, so first and second derivatives of the interpolant
are smooth enough for second-order operators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import BPoly

from bowlcert.jets import Jet

__all__ = [
    "ProfileTable",
    "CoefficientBundle",
    "OperatorCoefficients",
    "OutOfRange",
    "ToleranceNotMet",
    "solve_profile",
    "K_at",
    "coefficients_at",
    "operator_coefficients",
    "l0_coefficient_consistency",
    "psi_jet",
]

R_SHIFT = 2.2
# psi = r/2 + r^3/32 + r^5/768 - r^7/49152 + O(r^9)
SERIES = (0.5, 1.0 / 32, 1.0 / 768, -1.0 / 49152)


class OutOfRange(ValueError):
    pass


class ToleranceNotMet(RuntimeError):
    pass


def _series(r):
    r2 = r * r
    psi = r * (SERIES[0] + r2 * (SERIES[1] + r2 * (SERIES[2] + r2 * SERIES[3])))
    dpsi = SERIES[0] + r2 * (3 * SERIES[1] + r2 * (5 * SERIES[2] + r2 * 7 * SERIES[3]))
    ddpsi = r * (6 * SERIES[1] + r2 * (20 * SERIES[2] + r2 * 42 * SERIES[3]))
    return psi, dpsi, ddpsi


def rhs(r, psi):
    """psi' from the profile equation (r > 0)."""
    return (1.0 - psi / r) * (1.0 + psi * psi)


def second_derivative(r, psi, dpsi):
    """psi'' obtained by differentiating the closed form of psi'."""
    return (psi / r**2 - dpsi / r) * (1.0 + psi * psi) + (1.0 - psi / r) * 2.0 * psi * dpsi


def ode_residual(r, psi, dpsi):
    return dpsi / (1.0 + psi * psi) + psi / r - 1.0


@dataclass(frozen=True)
class ProfileTable:
    r: np.ndarray
    psi: np.ndarray
    dpsi: np.ndarray
    ddpsi: np.ndarray
    K: np.ndarray
    residual_bound: float
    tol: float
    step: float
    switch: float
    interp: BPoly = field(repr=False)

    @property
    def r_max(self) -> float:
        return float(self.r[-1])

    @cached_property
    def phi_interp(self) -> BPoly:
        """Antiderivative of the psi interpolant, zero at r = 0."""
        return self.interp.antiderivative()

    def psi_derivs(self, r, nu: int = 0):
        """psi^(nu) at r for nu in {0, 1, 2}.

        psi comes from the Hermite interpolant (series below the switch);
        psi' and psi'' come from the ODE closed forms at that value.  The
        interpolant's own second derivative carries ~1e-9 rounding from
        the Bernstein coefficients at step 1e-3, so it is not used.
        """
        if nu not in (0, 1, 2):
            raise ValueError("nu must be 0, 1 or 2")
        r = np.asarray(r, dtype=float)
        small = r < self.switch
        safe = np.where(small, 1.0, r)
        psi = np.asarray(self.interp(r), dtype=float)
        out = psi
        if nu >= 1:
            d1 = rhs(safe, psi)
            out = d1 if nu == 1 else second_derivative(safe, psi, d1)
        if np.any(small):
            out = np.where(small, _series(r)[nu], out)
        return out

    def to_csv(self) -> str:
        lines = ["r,psi,dpsi,K"]
        for row in zip(self.r, self.psi, self.dpsi, self.K):
            lines.append(",".join(repr(float(x)) for x in row))
        return "\n".join(lines) + "\n"


def _integrate(r_max: float, step: float, switch: float, rtol: float):
    n = int(math.ceil(r_max / step - 1e-9))
    grid = np.arange(n + 1) * step
    grid[-1] = r_max
    psi = np.empty_like(grid)
    head = grid <= switch
    psi[head] = _series(grid[head])[0]
    tail = grid[~head]
    if tail.size:
        y0 = _series(switch)[0]
        sol = solve_ivp(
            lambda t, y: rhs(t, y),
            (switch, r_max),
            [y0],
            method="DOP853",
            t_eval=tail,
            rtol=rtol,
            atol=rtol * 1e-2,
        )
        if not sol.success:
            raise ToleranceNotMet(f"integrator failed: {sol.message}")
        psi[~head] = sol.y[0]
    return grid, psi


def _build(grid, psi, switch):
    dpsi = np.empty_like(psi)
    ddpsi = np.empty_like(psi)
    small = grid < switch
    _, d1, d2 = _series(grid[small])
    dpsi[small], ddpsi[small] = d1, d2
    g = grid[~small]
    dpsi[~small] = rhs(g, psi[~small])
    ddpsi[~small] = second_derivative(g, psi[~small], dpsi[~small])
    return dpsi, ddpsi, _quintic_hermite(grid, psi, dpsi, ddpsi)


def _quintic_hermite(x, f, d1, d2) -> BPoly:
    """Piecewise quintic matching f, f', f'' at every node, in Bernstein form."""
    h = np.diff(x)
    c = np.empty((6, h.size))
    c[0] = f[:-1]
    c[1] = f[:-1] + h * d1[:-1] / 5
    c[2] = f[:-1] + 2 * h * d1[:-1] / 5 + h * h * d2[:-1] / 20
    c[3] = f[1:] - 2 * h * d1[1:] / 5 + h * h * d2[1:] / 20
    c[4] = f[1:] - h * d1[1:] / 5
    c[5] = f[1:]
    return BPoly(c, x)


def _midpoint_residual(grid, interp, switch) -> float:
    mid = 0.5 * (grid[1:] + grid[:-1])
    mid = mid[mid > switch]
    if mid.size == 0:
        return 0.0
    res = ode_residual(mid, interp(mid), interp(mid, 1))
    return float(np.max(np.abs(res)))


def solve_profile(
    r_max: float = 60.0,
    tol: float = 1e-10,
    step: float = 1e-3,
    switch: float = 1e-3,
    max_refine: int = 3,
) -> ProfileTable:
    """Tabulate the bowl profile on [0, r_max].

    The reported residual is the worst ODE residual of the interpolant at
    cell midpoints, where it is not forced to vanish.  If it exceeds ``tol``
    the grid is halved up to ``max_refine`` times before giving up.
    """
    if not r_max > 0:
        raise ValueError("r_max must be positive")
    if not tol > 0:
        raise ValueError("tol must be positive")
    if not 0 < step <= r_max:
        raise ValueError("step must lie in (0, r_max]")
    rtol = max(min(1e-13, tol * 1e-3), 2.5e-14)
    for _ in range(max_refine + 1):
        grid, psi = _integrate(r_max, step, switch, rtol)
        dpsi, ddpsi, interp = _build(grid, psi, switch)
        residual = _midpoint_residual(grid, interp, switch)
        if residual <= tol:
            K = np.empty_like(psi)
            K[0] = 0.5
            K[1:] = psi[1:] / grid[1:]
            return ProfileTable(
                r=grid,
                psi=psi,
                dpsi=dpsi,
                ddpsi=ddpsi,
                K=K,
                residual_bound=residual,
                tol=tol,
                step=step,
                switch=switch,
                interp=interp,
            )
        step /= 2
    raise ToleranceNotMet(f"residual {residual:.3e} > tol {tol:.3e} after refinement")


def _check_range(table: ProfileTable, r, allow_zero: bool = False) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    bad = (r < 0) | (r > table.r_max) | np.isnan(r)
    if not allow_zero:
        bad |= r == 0
    if np.any(bad):
        raise OutOfRange(f"radius outside (0, {table.r_max}]")
    return r


def K_at(table: ProfileTable, r):
    """K = psi/r, with the series used below the switch radius."""
    r = _check_range(table, r)
    small = r < table.switch
    safe = np.where(small, 1.0, r)
    k = np.where(small, _series(r)[0] / np.where(small, r, 1.0), table.interp(r) / safe)
    return k if k.ndim else float(k)


@dataclass(frozen=True)
class CoefficientBundle:
    r: object
    alpha: object
    beta: object
    gamma: object
    delta: object


@dataclass(frozen=True)
class OperatorCoefficients:
    """L0'[p] = alpha p'' + beta p' + gamma p."""

    r: object
    alpha: object
    beta: object
    gamma: object

    def apply(self, p, dp, ddp):
        return self.alpha * ddp + self.beta * dp + self.gamma * p


def coefficients_from_K(r, K) -> CoefficientBundle:
    r = np.asarray(r, dtype=float)
    K = np.asarray(K, dtype=float)
    x = r * r * K * K
    alpha = 1.0 / (1.0 + x)
    beta = 1.0 / r - 4.0 * (1.0 - K) * r * K / (1.0 + x)
    gamma = 2.0 * (1.0 - K) * (1.0 - 2.0 * (1.0 - K) / (1.0 + x)) - (1.0 + 2.0 * x / (1.0 + x)) / (r * r)
    d = r - R_SHIFT
    delta = 2 * r * r * alpha + 2 * d * r * r * beta - (5.0 - d * d) * r * r * gamma
    return CoefficientBundle(*(_unwrap(v) for v in (r, alpha, beta, gamma, delta)))


def _unwrap(v):
    return float(v) if np.ndim(v) == 0 else v


def coefficients_at(table: ProfileTable, r) -> CoefficientBundle:
    """alpha, beta, gamma, delta from K(r) alone."""
    return coefficients_from_K(r, K_at(table, r))


def operator_coefficients(table: ProfileTable, r) -> OperatorCoefficients:
    """Coefficients of L0' computed directly from psi, psi', psi''.

    alpha = 1/(1+psi^2), beta = 1/r - 4 psi psi'/(1+psi^2)^2 and
    gamma = -1/r^2 - 2 (psi psi'/(1+psi^2)^2)'.
    """
    r = _check_range(table, r)
    psi, d1, d2 = (table.psi_derivs(r, k) for k in range(3))
    q = 1.0 + psi * psi
    alpha = 1.0 / q
    beta = 1.0 / r - 4.0 * psi * d1 / q**2
    gamma = -1.0 / r**2 - 2.0 * ((d2 * psi + d1 * d1) / q**2 - 4.0 * psi**2 * d1**2 / q**3)
    return OperatorCoefficients(*(_unwrap(v) for v in (r, alpha, beta, gamma)))


def l0_coefficient_consistency(table: ProfileTable, r) -> float:
    """Largest discrepancy between the K-route and the direct psi-route coefficients.

    gamma is compared after scaling by r^2 and beta after scaling by r, so the
    1/r^2 and 1/r singular parts near the origin do not swamp the comparison.
    """
    r = _check_range(table, r)
    a = coefficients_at(table, r)
    b = operator_coefficients(table, r)
    diffs = [
        np.abs(np.asarray(a.alpha) - b.alpha),
        np.abs(np.asarray(a.beta) - b.beta) * np.minimum(r, 1.0),
        np.abs(np.asarray(a.gamma) - b.gamma) * np.minimum(r, 1.0) ** 2,
    ]
    return float(max(np.max(d) for d in diffs))


def psi_jet(table: ProfileTable, r0: float, order: int) -> Jet:
    """Taylor jet of psi at r0 > 0 by Picard iteration of the profile ODE."""
    if r0 <= 0:
        raise OutOfRange("jet expansion needs r0 > 0")
    psi0 = float(table.psi_derivs(_check_range(table, r0)))
    y = Jet([psi0])
    for k in range(1, order + 1):
        rv = Jet.variable(r0, k - 1)
        yk = Jet(y.c + [0.0] * (k - len(y.c)))
        f = (1 - yk / rv) * (1 + yk * yk)
        y = Jet([psi0] + [f.c[j] / (j + 1) for j in range(k)])
    return y


def phi_derivs(table: ProfileTable, r0: float, order: int = 5) -> list[float]:
    """phi, phi', ..., phi^(order) at r0 where phi' = psi and phi(0) = 0."""
    phi0 = float(table.phi_interp(r0))
    jet = psi_jet(table, r0, order - 1)
    return [phi0] + jet.derivatives()

