"""Exact-arithmetic checks of operator transcriptions on synthetic profiles.

Each check evaluates both sides of an identity independently.  The
operator side is built from Taylor jets, so every derivative is exact up to
rounding.  The transcribed side is assembled from closed-form formulas.  Residuals
are relative to the largest term involved, which is the scale at which
rounding error lives.

The operator under test is

    L[P] = -P_tau + P_vv/(1+Y_v^2) + (1/v - v/2 - 4 Y_vv Y_v/(1+Y_v^2)^2) P_v
           - (1/v^2 + 2 (Y_vv Y_v/(1+Y_v^2)^2)_v) P

with T = |tau| and tau < 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from bowlcert import jets
from bowlcert.jets import Jet, compose

__all__ = [
    "SyntheticProfile",
    "IdentityReport",
    "polynomial",
    "gaussian",
    "smoothstep",
    "bowl_phi",
    "barrier_profile",
    "fd_check",
    "ltip",
    "check_collar_identity",
    "check_ansatz_identity",
    "check_cylindrical_substitution",
    "check_gluing_expansion",
    "check_qzzz_evolution",
    "run_all",
    "TOLERANCES",
]

DEFAULT_SEED = 20251016

TOLERANCES = {
    "collar": 1e-12,
    "gluing_expansion": 1e-12,
    "cylindrical_substitution": 1e-10,
    "ansatz": 1e-10,
    "qzzz_evolution": 1e-8,
}


# -- synthetic profiles ------------------------------------------------


class SyntheticProfile:
    """A smooth scalar function with exact derivative evaluators.

    ``derivs(x, n)`` returns ``[f(x), f'(x), ..., f^(n)(x)]``.
    """

    def __init__(self, derivs: Callable[[float, int], Sequence[float]], max_order: int = 5, name: str = ""):
        self._derivs = derivs
        self.max_order = max_order
        self.name = name

    def derivs(self, x: float, n: int = 5) -> list[float]:
        if n > self.max_order:
            raise ValueError(f"{self.name or 'profile'} provides {self.max_order} derivatives, {n} requested")
        return [float(d) for d in self._derivs(float(x), n)][: n + 1]

    def __call__(self, x: float) -> float:
        return self.derivs(x, 0)[0]

    def jet(self, x: float, n: int) -> Jet:
        return Jet.from_derivatives(self.derivs(x, n))

    def of(self, inner: Jet) -> Jet:
        """Jet of f(inner)."""
        return compose(inner, self.derivs(inner.value, inner.order))

    def __add__(self, other: "SyntheticProfile") -> "SyntheticProfile":
        return SyntheticProfile(
            lambda x, n: [u + w for u, w in zip(self.derivs(x, n), other.derivs(x, n))],
            min(self.max_order, other.max_order),
            f"{self.name}+{other.name}",
        )

    def scaled(self, c: float) -> "SyntheticProfile":
        return SyntheticProfile(lambda x, n: [c * u for u in self.derivs(x, n)], self.max_order, self.name)

    def shifted(self, c: float) -> "SyntheticProfile":
        def d(x, n):
            out = self.derivs(x, n)
            out[0] += c
            return out

        return SyntheticProfile(d, self.max_order, self.name)


def from_expression(f: Callable, name: str = "", max_order: int = 5) -> SyntheticProfile:
    """Profile from a jet-compatible callable."""
    return SyntheticProfile(lambda x, n: jets.derivatives(f, x, n), max_order, name)


def polynomial(coeffs: Sequence[float]) -> SyntheticProfile:
    """sum coeffs[k] x^k."""
    p = np.polynomial.Polynomial(coeffs)

    def d(x, n):
        return [p.deriv(k)(x) if k else p(x) for k in range(n + 1)]

    return SyntheticProfile(d, 10**6, "polynomial")


def gaussian(amp: float = 1.0, center: float = 0.0, width: float = 1.0) -> SyntheticProfile:
    s2 = 2.0 * width * width
    return from_expression(lambda x: amp * jets.exp(-((x - center) ** 2) / s2), "gaussian", 10**6)


def smoothstep(lo: float, hi: float) -> SyntheticProfile:
    """Quintic step from 0 (x <= lo) to 1 (x >= hi); C^2 at both ends."""
    w = hi - lo
    poly = polynomial([0, 0, 0, 10, -15, 6])

    def d(x, n):
        u = (x - lo) / w
        if u <= 0.0:
            return [0.0] * (n + 1)
        if u >= 1.0:
            return [1.0] + [0.0] * n
        return [v / w**k for k, v in enumerate(poly.derivs(u, n))]

    return SyntheticProfile(d, 2, "smoothstep")


def bowl_phi(table) -> SyntheticProfile:
    """phi with phi' = psi, the bowl profile (r > 0)."""
    from bowlcert.profile import phi_derivs

    return SyntheticProfile(lambda x, n: phi_derivs(table, x, n), 6, "bowl_phi")


def barrier_profile(bar) -> SyntheticProfile:
    """The glued barrier p with its two derivatives."""

    def d(x, n):
        return [float(v) for v in bar.p_derivs(x)][: n + 1]

    return SyntheticProfile(d, 2, "barrier_p")


_FD = (-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0)


def fd_check(profile: SyntheticProfile, points, step: float = 1e-3, orders: int | None = None) -> float:
    """Worst relative disagreement between f^(k) and a 6th-order central difference of f^(k-1)."""
    orders = min(profile.max_order, 5) if orders is None else orders
    worst = 0.0
    for x in points:
        exact = profile.derivs(x, orders)
        samples = [profile.derivs(x + (i - 3) * step, orders - 1) for i in range(7)]
        for k in range(1, orders + 1):
            fd = sum(c * s[k - 1] for c, s in zip(_FD, samples)) / (60.0 * step)
            worst = max(worst, abs(fd - exact[k]) / max(1.0, abs(exact[k])))
    return worst


# -- report ------------------------------------------------------------


@dataclass
class IdentityReport:
    name: str
    samples: int
    max_residual: float
    fitted_constants: dict = field(default_factory=dict)
    verdict: str = "fail"
    tolerance: float = 0.0
    seed: int = DEFAULT_SEED
    details: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "samples": self.samples,
            "max_residual": self.max_residual,
            "fitted_constants": dict(self.fitted_constants),
            "verdict": self.verdict,
        }


def _rel(lhs: float, rhs: float, *terms: float) -> float:
    scale = max([abs(lhs), abs(rhs)] + [abs(t) for t in terms])
    if scale == 0.0:
        return 0.0
    return abs(lhs - rhs) / scale


def _report(name, samples, worst, seed, extra_ok=True, fitted=None, details=None):
    tol = TOLERANCES[name]
    ok = worst <= tol and extra_ok
    return IdentityReport(
        name=name,
        samples=samples,
        max_residual=float(worst),
        fitted_constants=fitted or {},
        verdict="pass" if ok else "fail",
        tolerance=tol,
        seed=seed,
        details=details or {},
    )


# -- the operator ------------------------------------------------------


def ltip_parts(v: float, P: Jet, P_tau: float, Y: Jet) -> dict:
    """Channels of L[P] at v from a v-jet of P (order >= 2) and of Y (order >= 3)."""
    y1 = Y.deriv()
    y2 = y1.deriv()
    w = 1.0 + y1 * y1
    g = y2 * y1 / (w * w)
    p0, p1, p2 = P.c[0], P.d(1), P.d(2)
    return {
        "time": -P_tau,
        "diffusion": p2 / w.value,
        "transport": (1.0 / v - 4.0 * g.value) * p1,
        "drift": -0.5 * v * p1,
        "potential": -(1.0 / v**2 + 2.0 * g.d(1)) * p0,
    }


def ltip(v: float, P: Jet, P_tau: float, Y: Jet) -> float:
    return sum(ltip_parts(v, P, P_tau, Y).values())


def _tau_derivative(f: Callable[[Jet], Jet], tau: float) -> float:
    return f(Jet.variable(tau, 1)).d(1)


# -- collar ------------------------------------------------------------


def check_collar_identity(samples: int = 1000, seed: int = DEFAULT_SEED) -> IdentityReport:
    """(1/v) P_v - P/v^2 = -T^{1/2} - A/v^2 for P = A + (v - v^2) T^{1/2}.

    Also checks the sign facts P_vv <= 0, -v P_v <= 0 (only for v <= 1/2,
    where it is literally true) and -P_tau <= T^{-1/2}.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    signs_ok = True
    for _ in range(samples):
        v = rng.uniform(1e-3, 1.0)
        T = rng.uniform(1.0, 1e4)
        A = rng.uniform(0.0, 100.0)
        vj = Jet.variable(v, 2)
        P = A + (vj - vj * vj) * math.sqrt(T)
        lhs = P.d(1) / v - P.value / v**2
        rhs = -math.sqrt(T) - A / v**2
        worst = max(worst, _rel(lhs, rhs, P.d(1) / v, P.value / v**2))
        p_tau = _tau_derivative(lambda t: A + (v - v * v) * jets.sqrt(-t), -T)
        signs_ok &= P.d(2) <= 0.0
        signs_ok &= -p_tau <= 1.0 / math.sqrt(T) * (1 + 1e-12)
        if v <= 0.5:
            signs_ok &= -v * P.d(1) <= 0.0
    return _report("collar", samples, worst, seed, signs_ok, details={"signs_ok": bool(signs_ok)})


# -- ansatz ------------------------------------------------------------


def _ansatz_sample(p: SyntheticProfile, Z: SyntheticProfile, v: float, T: float) -> dict:
    k = math.sqrt(T / 2.0)
    r = k * v
    # operator side, in v and tau
    vj = Jet.variable(v, 3)
    Y = Z.of(k * vj) / k
    P = 2.0 * p.of((k * vj).truncate(2))
    P_tau = _tau_derivative(lambda t: 2.0 * p.of(v * jets.sqrt(-t / 2.0)), -T)
    op = ltip_parts(v, P, P_tau, Y)
    # transcribed side, in r
    z = Z.derivs(r, 3)
    q = p.derivs(r, 2)
    w = 1.0 + z[1] ** 2
    g = z[2] * z[1] / w**2
    g_r = (z[3] * z[1] + z[2] ** 2) / w**2 - 4.0 * z[1] ** 2 * z[2] ** 2 / w**3
    return {
        "T": T,
        "r": r,
        "rp": r * q[1],
        "op": op,
        "diffusion": (op["diffusion"], T * q[2] / w),
        "transport": (op["transport"], T * (1.0 / r - 4.0 * g) * q[1]),
        "potential": (op["potential"], -T * (1.0 / r**2 + 2.0 * g_r) * q[0]),
        "drift_total": op["time"] + op["drift"],
    }


def check_ansatz_identity(
    samples: int = 1000,
    seed: int = DEFAULT_SEED,
    p: SyntheticProfile | None = None,
    Z: SyntheticProfile | None = None,
) -> IdentityReport:
    """P(v, tau) = 2 p(v sqrt(T/2)) with a tau-frozen zoomed profile Z.

    Y(v) = Z(v sqrt(T/2)) / sqrt(T/2) up to a constant.  The diffusion,
    transport and potential channels of L[P] are matched against T times
    their r-space counterparts.  The remaining time and drift channels
    are fitted to -(c - 1/T) r p_r; c and its spread are reported.
    """
    rng = np.random.default_rng(seed)
    if p is None:
        p = gaussian(1.5, 0.7, 1.3).shifted(0.5)
    if Z is None:
        Z = polynomial([0.0, 0.0, 0.25, 0.0, 0.01])
    worst = 0.0
    xs, ys = [], []
    for _ in range(samples):
        T = rng.uniform(2.0, 1e3)
        r = rng.uniform(0.05, 4.0)
        s = _ansatz_sample(p, Z, r / math.sqrt(T / 2.0), T)
        for ch in ("diffusion", "transport", "potential"):
            a, b = s[ch]
            worst = max(worst, _rel(a, b))
        if s["rp"] != 0.0:
            xs.append(s)
            ys.append(s["drift_total"])
    # model: drift_total = -(c - 1/T) rp = -c rp + rp/T
    rp = np.array([s["rp"] for s in xs])
    tinv = np.array([1.0 / s["T"] for s in xs])
    y = np.array(ys)
    if rp.size == 0:
        # p constant: no drift channel to fit
        return _report("ansatz", samples, worst, seed, details={"channel_residual": worst})
    c_fit = float(np.sum(rp * (rp * tinv - y)) / np.sum(rp * rp))
    per_sample = (rp * tinv - y) / rp
    spread = float(np.std(per_sample))
    drift_res = float(max(
        _rel(yi, -(c_fit - ti) * ri, yi, ri) for yi, ti, ri in zip(y, tinv, rp)
    ))
    worst_all = max(worst, drift_res)
    fitted = {"c": c_fit, "c_std": spread}
    alt = {
        cand: float(max(_rel(yi, -(cval - ti) * ri, ri) for yi, ti, ri in zip(y, tinv, rp)))
        for cand, cval in (("1", 1.0), ("sqrt2", math.sqrt(2.0)))
    }
    return _report(
        "ansatz",
        samples,
        worst_all,
        seed,
        spread <= 1e-8,
        fitted,
        {"channel_residual": worst, "drift_residual": drift_res, "candidate_residuals": alt},
    )


# -- cylindrical region ------------------------------------------------


def check_cylindrical_substitution(
    samples: int = 1000,
    seed: int = DEFAULT_SEED,
    Y: SyntheticProfile | None = None,
) -> IdentityReport:
    """L[R] for R = (2 - v^2)^{-1/2} T^{1/2} against the bracketed closed form times R."""
    rng = np.random.default_rng(seed)
    if Y is None:
        Y = gaussian(-0.8, 0.4, 0.6) + polynomial([0.0, 0.3, -0.2])
    worst = 0.0
    vmax = math.sqrt(2.0) - 0.1
    for _ in range(samples):
        v = rng.uniform(0.02, vmax)
        T = rng.uniform(2.0, 1e3)
        vj = Jet.variable(v, 2)
        R = math.sqrt(T) * jets.power(2.0 - vj * vj, -0.5)
        R_tau = _tau_derivative(lambda t: (2.0 - v * v) ** -0.5 * jets.sqrt(-t), -T)
        lhs = ltip(v, R, R_tau, Y.jet(v, 3))

        y = Y.derivs(v, 3)
        w = 1.0 + y[1] ** 2
        g_v = 2.0 * (y[2] ** 2 + y[1] * y[3]) / w**2 - 8.0 * y[1] ** 2 * y[2] ** 2 / w**3
        terms = [
            1.0 / (2.0 * T),
            2.0 * (1.0 + v * v) / ((2.0 - v * v) ** 2 * w),
            0.5,
            -4.0 * v * y[1] * y[2] / ((2.0 - v * v) * w**2),
            -1.0 / v**2,
            -g_v,
        ]
        r0 = math.sqrt(T) / math.sqrt(2.0 - v * v)
        rhs = sum(terms) * r0
        worst = max(worst, _rel(lhs, rhs, *(t * r0 for t in terms)))
    return _report("cylindrical_substitution", samples, worst, seed)


# -- gluing ------------------------------------------------------------


def check_gluing_expansion(
    samples: int = 1000,
    seed: int = DEFAULT_SEED,
    theta: float = 0.5,
    lam: float | None = None,
) -> IdentityReport:
    """L[chi R + (1-chi) lam S] = chi L[R] + (1-chi) lam L[S] + E + D.

    E is the transcribed error term and D = (1/v - v/2) chi' (R - lam S) is
    the drift commutator.  D <= 0 is checked wherever R <= lam S, chi' >= 0
    and v < sqrt(2).
    """
    rng = np.random.default_rng(seed)
    chi = smoothstep(theta / 2.0, theta)
    Y = gaussian(-0.8, 0.4, 0.6) + polynomial([0.0, 0.3, -0.2])
    R0 = polynomial([1.0, 0.2, 0.5])
    S0 = gaussian(0.5, 0.3, 0.8).shifted(1.0)
    # tau dependence: R = sqrt(T) R0(v), S = (1 + 1/T) S0(v)
    def r_fac(t):
        return jets.sqrt(-t)

    def s_fac(t):
        return 1.0 + 1.0 / (-t)

    if lam is None:
        grid = np.linspace(theta / 2.0, theta, 201)
        lam = 2.0 * max(math.sqrt(1e3) * R0(x) / S0(x) for x in grid)
    worst = 0.0
    sign_ok = True
    worst_d = -math.inf
    for _ in range(samples):
        v = rng.uniform(theta / 4.0, 1.3 * theta)
        T = rng.uniform(2.0, 1e3)
        Yj = Y.jet(v, 3)
        c = chi.jet(v, 2)
        Rj = R0.jet(v, 2) * math.sqrt(T)
        Sj = S0.jet(v, 2) * (1.0 + 1.0 / T)
        R_tau = _tau_derivative(r_fac, -T) * R0(v)
        S_tau = _tau_derivative(s_fac, -T) * S0(v)
        B = c * Rj + (1.0 - c) * lam * Sj
        B_tau = c.value * R_tau + (1.0 - c.value) * lam * S_tau
        lhs = ltip(v, B, B_tau, Yj)

        LR = ltip(v, Rj, R_tau, Yj)
        LS = ltip(v, Sj, S_tau, Yj)
        y = Yj.derivatives()
        w = 1.0 + y[1] ** 2
        diff0 = Rj.value - lam * Sj.value
        diff1 = Rj.d(1) - lam * Sj.d(1)
        chi0, chi1, chi2 = c.derivatives()[:3]
        E = (chi2 / w - chi1 * 4.0 * y[1] * y[2] / w**2) * diff0 + 2.0 * chi1 / w * diff1
        D = (1.0 / v - v / 2.0) * chi1 * diff0
        parts = [chi0 * LR, (1.0 - chi0) * lam * LS, E, D]
        rhs = sum(parts)
        worst = max(worst, _rel(lhs, rhs, *parts))
        if diff0 <= 0.0 and chi1 >= 0.0 and v < math.sqrt(2.0):
            sign_ok &= D <= 0.0
            worst_d = max(worst_d, D)
    return _report(
        "gluing_expansion",
        samples,
        worst,
        seed,
        sign_ok,
        details={"lambda": lam, "D_sign_ok": bool(sign_ok), "max_D": worst_d},
    )


# -- q_zzz evolution ---------------------------------------------------


def qzz_rhs(z, T, q0, q1, q2, q3, q4):
    """Right-hand side of the q_zz evolution (error term dropped)."""
    dn = 4.0 * q0 * T + q1 * q1
    m = q1 * q1 - 2.0 * q0 * q2
    s = 2.0 * T + q2
    return (
        (4.0 * q0 * q4 - 4.0 * q1 * q3) / dn
        - 0.5 * z * (1.0 + 1.0 / T) * q3
        - q2 / T
        + 4.0 * m * s / dn**2 * q2
        + 12.0 * q1 * q3 * m / dn**2
        - 16.0 * q1 * q1 * m * s * s / dn**3
    )


def qzzz_rhs(z, T, q0, q1, q2, q3, q4, q5):
    """Right-hand side of the q_zzz evolution with the transcribed A, B, R."""
    dn = 4.0 * q0 * T + q1 * q1
    m = q1 * q1 - 2.0 * q0 * q2
    s = 2.0 * T + q2
    A = -8.0 * q0 * q1 * s / dn**2 + 12.0 * q1 * m / dn**2
    B = (
        -4.0 * q2 / dn
        + 8.0 * q1**2 * s / dn**2
        - 8.0 * q0 * s * q2 / dn**2
        + 8.0 * m * (T + q2) / dn**2
        + 12.0 * q2 * m / dn**2
        - 24.0 * q0 * q1 * q3 / dn**2
        - 48.0 * q1**2 * m * s / dn**3
        + 32.0 * q0 * q1**2 * s**2 / dn**3
        - 32.0 * q1**2 * m * s / dn**3
    )
    R = -48.0 * q1 * q2 * m * s**2 / dn**3 + 96.0 * q1**3 * m * s**3 / dn**4
    terms = [
        4.0 * q0 * q5 / dn,
        -0.5 * z * (1.0 + 1.0 / T) * q4,
        A * q4,
        -0.5 * (1.0 + 3.0 / T) * q3,
        B * q3,
        R,
    ]
    return sum(terms), terms


def check_qzzz_evolution(
    samples: int = 1000,
    seed: int = DEFAULT_SEED,
    q: SyntheticProfile | None = None,
) -> IdentityReport:
    """d/dz of the q_zz right-hand side equals the q_zzz right-hand side."""
    rng = np.random.default_rng(seed)
    if q is None:
        q = polynomial([0.0, 0.0, 1.0]) + gaussian(1e-3, 0.5, 0.3)
    worst = 0.0
    for _ in range(samples):
        z = rng.uniform(0.1, 1.0)
        T = rng.uniform(2.0, 1e3)
        d = q.derivs(z, 5)
        zj = Jet.variable(z, 1)
        qs = [Jet([d[k], d[k + 1]]) for k in range(5)]
        lhs = qzz_rhs(zj, T, *qs).d(1)
        rhs, terms = qzzz_rhs(z, T, *d)
        worst = max(worst, _rel(lhs, rhs, *terms))
    return _report("qzzz_evolution", samples, worst, seed)


def run_all(samples: int = 1000, seed: int = DEFAULT_SEED, table=None, p=None) -> list[IdentityReport]:
    """The five identity checks.

    With a profile table the ansatz check uses Z = phi, and ``p`` (a
    SyntheticProfile, e.g. from :func:`barrier_profile`) replaces the
    default test function.
    """
    kwargs = {}
    if table is not None:
        kwargs["Z"] = bowl_phi(table)
    if p is not None:
        kwargs["p"] = p
    return [
        check_collar_identity(samples, seed),
        check_ansatz_identity(samples, seed, **kwargs),
        check_cylindrical_substitution(samples, seed),
        check_gluing_expansion(samples, seed),
        check_qzzz_evolution(samples, seed),
    ]
