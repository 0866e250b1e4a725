import math

import numpy as np
import pytest

from bowlcert import jets
from bowlcert.identities import (
    DEFAULT_SEED,
    TOLERANCES,
    barrier_profile,
    bowl_phi,
    check_ansatz_identity,
    check_collar_identity,
    check_cylindrical_substitution,
    check_gluing_expansion,
    check_qzzz_evolution,
    fd_check,
    gaussian,
    ltip,
    polynomial,
    qzz_rhs,
    qzzz_rhs,
    run_all,
    smoothstep,
)
from bowlcert.jets import Jet

CHECKS = [
    check_collar_identity,
    check_ansatz_identity,
    check_cylindrical_substitution,
    check_gluing_expansion,
    check_qzzz_evolution,
]


@pytest.mark.parametrize("check", CHECKS)
def test_identity_passes(check):
    rep = check(1000)
    assert rep.passed, rep
    assert rep.max_residual <= TOLERANCES[rep.name]
    assert rep.samples == 1000 and rep.seed == DEFAULT_SEED


@pytest.mark.parametrize("check", CHECKS)
def test_sample_doubling_stable(check):
    small, big = check(500), check(1000)
    assert big.passed
    assert big.max_residual <= TOLERANCES[big.name]
    assert big.max_residual >= small.max_residual  # same seed: prefix of the draws


def test_seeds_reproducible():
    a = check_gluing_expansion(200, seed=5)
    b = check_gluing_expansion(200, seed=5)
    c = check_gluing_expansion(200, seed=6)
    assert a.max_residual == b.max_residual
    assert a.max_residual != c.max_residual


def test_collar_plug_in():
    # A = 0, v = 1/2, T = 4: P_v = 0, so (1/v) P_v - P/v^2 = -(1/4)*2*4 = -2
    v, T = 0.5, 4.0
    vj = Jet.variable(v, 1)
    P = (vj - vj * vj) * math.sqrt(T)
    assert P.d(1) == 0.0
    assert P.d(1) / v - P.value / v**2 == -2.0 == -math.sqrt(T)


def test_collar_small_v_ratio():
    A, T = 1.0, 9.0
    for v in (1e-3, 1e-5):
        vj = Jet.variable(v, 1)
        P = A + (vj - vj * vj) * math.sqrt(T)
        lhs = P.d(1) / v - P.value / v**2
        assert lhs / (-1.0 / v**2) == pytest.approx(1.0, rel=1e-2)


def test_ansatz_fitted_constant():
    rep = check_ansatz_identity(1000)
    c, std = rep.fitted_constants["c"], rep.fitted_constants["c_std"]
    assert std <= 1e-8
    assert c == pytest.approx(1.0, abs=1e-10)
    cands = rep.details["candidate_residuals"]
    assert cands["1"] < 1e-10 < cands["sqrt2"]


def test_ansatz_constant_p():
    rep = check_ansatz_identity(200, p=polynomial([3.0]))
    assert rep.details["channel_residual"] <= 1e-10


def test_ansatz_linear_Z():
    rep = check_ansatz_identity(200, Z=polynomial([0.0, 1.3]))
    assert rep.passed


def test_ansatz_bowl_instance(profile, barrier):
    rep = check_ansatz_identity(200, p=barrier_profile(barrier), Z=bowl_phi(profile))
    assert rep.details["channel_residual"] <= 1e-10
    assert rep.fitted_constants["c"] == pytest.approx(1.0, abs=1e-8)


def test_cylindrical_linear_Y():
    assert check_cylindrical_substitution(200, Y=polynomial([0.1, 0.7])).passed


def test_gluing_D_sign():
    rep = check_gluing_expansion(1000)
    assert rep.details["D_sign_ok"]
    assert rep.details["max_D"] <= 0.0


def test_gluing_trivial_cases():
    # chi constant: expansion reduces to linearity
    v, T = 0.4, 10.0
    Y = gaussian(-0.8, 0.4, 0.6).jet(v, 3)
    R = polynomial([1.0, 0.2, 0.5]).jet(v, 2) * math.sqrt(T)
    L = ltip(v, 2.0 * R, 2.0 * 0.5 / math.sqrt(T), Y)
    assert L == pytest.approx(2.0 * ltip(v, R, 0.5 / math.sqrt(T), Y), rel=1e-14)


def test_qzzz_quadratic():
    rep = check_qzzz_evolution(500, q=polynomial([0.3, 0.1, 1.0]))
    assert rep.max_residual <= 1e-12


def test_qzzz_drift_channel():
    # with a constant denominator surrogate the linear channels differentiate by hand
    z, T = 0.6, 7.0
    q = [0.0, 0.0, 0.7, -0.3, 0.2, 0.05]
    lin = lambda zz, q2, q3: -zz / 2 * (1 + 1 / T) * q3 - q2 / T
    zj = Jet.variable(z, 1)
    lhs = lin(zj, Jet([q[2], q[3]]), Jet([q[3], q[4]])).d(1)
    rhs = -z / 2 * (1 + 1 / T) * q[4] - 0.5 * (1 + 3 / T) * q[3]
    assert lhs == pytest.approx(rhs, rel=1e-15)


def test_qzz_rhs_consistent_with_jets():
    q = polynomial([0.0, 0.0, 1.0]) + gaussian(1e-3, 0.5, 0.3)
    d = q.derivs(0.4, 5)
    total, terms = qzzz_rhs(0.4, 5.0, *d)
    assert total == pytest.approx(sum(terms))
    assert math.isfinite(qzz_rhs(0.4, 5.0, *d[:5]))


def test_fd_cross_check(profile):
    pts = np.linspace(0.5, 3.0, 100)
    assert fd_check(gaussian(1.5, 0.7, 1.3), pts) <= 1e-6
    assert fd_check(polynomial([1, -2, 0.5, 0.1]), pts) <= 1e-6
    assert fd_check(bowl_phi(profile), pts) <= 1e-6


def test_smoothstep_family():
    s = smoothstep(0.0, 1.0)
    assert s.derivs(-1.0, 2) == [0.0, 0.0, 0.0]
    assert s.derivs(2.0, 2) == [1.0, 0.0, 0.0]
    assert s(0.5) == pytest.approx(0.5)


def test_report_schema():
    d = check_collar_identity(10).to_dict()
    assert set(d) == {"name", "samples", "max_residual", "fitted_constants", "verdict"}


def test_run_all():
    reps = run_all(100)
    assert sorted(r.name for r in reps) == sorted(TOLERANCES)
    assert all(r.passed for r in reps)
