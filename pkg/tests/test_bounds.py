import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest

from bowlcert.bounds import (
    Certificate,
    DomainError,
    GridTooCoarse,
    certify_a34,
    certify_delta,
    certify_envelope,
    certify_lower_closed_form,
    certify_tail_coeffs,
    certify_upper_closed_form,
    delta_lower_bound,
    envelope_table,
    eval_F,
    join_fraction_bound,
    lower_table,
    tail_channel_certificates,
    upper_table,
)
from bowlcert.interval import Interval

# 20-digit values from mpmath at 50 digits of working precision.
E_HALF_INV = 0.60653065971263342360
A1_H10 = 0.50031236983234660043        # F(1/10, 1/2 | 0, 1/2)
F_02_01 = 0.50117011910846063068       # F(2/10, 1/2 | 1/10, 1/2)


def _mp_F(r, a, rho, alpha):
    mpmath.mp.dps = 50
    r, a, rho, alpha = map(mpmath.mpf, (r, a, rho, alpha))
    e = mpmath.exp(-a**2 * (r**2 - rho**2) / 2)
    return 1 - (1 - (1 - (1 - alpha) * a**2 * rho**2) * e) / (a**2 * r**2)


def test_F_initial_value():
    for rho, alpha in ((0.5, 0.7), (1.3, 0.55), (3.0, 0.9)):
        assert eval_F(rho, 0.8, rho, alpha).contains(alpha)


def test_F_unit_example():
    assert eval_F(1.0, 1.0, 0.0, 0.5).contains(E_HALF_INV)


def test_F_frozen_values():
    assert eval_F(0.2, 0.5, 0.1, 0.5).contains(F_02_01)
    assert eval_F(0.1, 0.5, 0.0, 0.5).contains(A1_H10)


def test_F_solves_comparison_ode():
    # (rF)' / (1 + a^2 r^2) + F = 1, checked with a central difference
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(1000):
        a = rng.uniform(0.5, 1.0)
        rho = rng.uniform(0.0, 4.0)
        alpha = rng.uniform(0.5, 1.0)
        r = rho + rng.uniform(0.05, 1.0)
        f = lambda x: eval_F(x, a, rho, alpha).mid
        hstep = 1e-4
        d = ((r + hstep) * f(r + hstep) - (r - hstep) * f(r - hstep)) / (2 * hstep)
        worst = max(worst, abs(d / (1 + a * a * r * r) + f(r) - 1))
    assert worst < 1e-6


def test_F_encloses_high_precision():
    rng = np.random.default_rng(1)
    for _ in range(200):
        a, alpha = rng.uniform(0.5, 1.0, 2)
        rho = rng.uniform(0.0, 4.0)
        r = rho + rng.uniform(0.01, 1.0)
        enc = eval_F(r, a, rho, alpha)
        exact = _mp_F(r, a, rho, alpha)
        assert mpmath.mpf(enc.lo) <= exact <= mpmath.mpf(enc.hi)


def test_F_domain_error():
    with pytest.raises(DomainError):
        eval_F(0.0, 0.5, 0.0, 0.5)


def test_a34_clears_exactly():
    cert = certify_a34()
    a34 = cert.details["a"].lo
    assert Fraction(a34) >= Fraction(173, 200)
    assert cert.passed and cert.margin > 0
    assert cert.method == "interval-recursion"


def test_first_rows():
    table = envelope_table(Fraction(1, 10), 2)
    assert table.a[0] == Interval(0.5, 0.5) and table.b[0] == Interval(0.5, 0.5)
    assert table.a_lo(1) <= A1_H10
    assert A1_H10 - table.a_lo(1) < 1e-11
    assert table.b_hi(1) >= A1_H10


def test_upper_stage_unit_step():
    t = upper_table(1, 1)
    assert t.c[1].contains(E_HALF_INV)
    assert t.b_hi(1) <= 1.0


def test_closed_forms():
    up = certify_upper_closed_form()
    lo = certify_lower_closed_form()
    assert up.passed and lo.passed
    assert up.details["cover"]["series_cell"] == [0.0, 0.01]
    assert lo.details["sup_r2_gap"] <= 1.4


@pytest.mark.parametrize("h,n", [(Fraction(1, 10), 40), (1, 1), (Fraction(1, 20), 60)])
def test_envelope_invariants(h, n):
    cert = certify_envelope(h, n)
    assert cert.details["invariants_ok"]
    assert cert.passed
    t = cert.details["table"]
    for i in range(n + 1):
        assert 0.5 <= t.a_lo(i) <= t.b_hi(i) <= 1.0


def test_envelope_contains_profile(profile):
    cert = certify_envelope(Fraction(1, 10), 40, profile=profile)
    assert cert.passed and cert.method == "grid-oracle"


def test_envelope_empty_table():
    cert = certify_envelope(Fraction(1, 10), 0)
    assert cert.margin == 0.5 and cert.passed
    assert list(cert.details["table"].rows()) == [(0, 0.0, 0.5, 0.5)]


def test_lower_bounds_monotone():
    a = lower_table(Fraction(1, 10), 40)
    b = upper_table(Fraction(1, 10), 40)
    for i in range(40):
        assert a.a_lo(i + 1) >= a.a_lo(i) - 1e-12
        assert b.b_hi(i + 1) >= b.b_hi(i) - 1e-12


def test_refinement_tightens_lower():
    coarse = lower_table(Fraction(1, 10), 34).a_lo(34)
    fine = lower_table(Fraction(1, 20), 68).a_lo(68)
    assert fine >= coarse - 1e-12


def test_determinism():
    one = envelope_table(Fraction(1, 10), 40).to_csv()
    two = envelope_table(Fraction(1, 10), 40).to_csv()
    assert one == two


def test_float_step_matches_fraction():
    assert lower_table(0.1, 5).to_csv() == lower_table(Fraction(1, 10), 5).to_csv()


def test_invalid_arguments():
    with pytest.raises(ValueError):
        lower_table(0, 3)
    with pytest.raises(ValueError):
        upper_table(Fraction(1, 10), -1)


def test_csv_layout():
    text = envelope_table(Fraction(1, 10), 3).to_csv()
    lines = text.splitlines()
    assert lines[0] == "i,r,a_lo,b_hi"
    assert lines[1] == "0,0,0.5,0.5"
    assert len(lines) == 5


def test_delta_coarse_grid_rejected():
    with pytest.raises(GridTooCoarse):
        certify_delta(Fraction(1, 10))
    cert = certify_delta(Fraction(1, 10), raise_on_fail=False)
    assert not cert.passed and cert.details["failing_cells"]


def test_delta_fine_grid_certifies():
    cert = certify_delta(Fraction(1, 200))
    assert cert.passed
    assert cert.details["min_lower_bound"] >= 0.01
    assert len(cert.details["lower_bounds"]) == 800


def test_delta_bound_is_below_true_values(profile):
    from bowlcert.profile import coefficients_at

    table = envelope_table(Fraction(1, 200), 800)
    for i in range(0, 800, 37):
        s, t = table.r[i], table.r[i + 1]
        lb = delta_lower_bound(s, t, table.a_lo(i), table.b_hi(i + 1))
        r = np.linspace(max(s.lo, 1e-4), t.hi, 9)
        assert lb <= np.min(coefficients_at(profile, r).delta)


def test_delta_negative_control():
    # an unconstrained K bracket cannot certify positivity near the junction
    assert delta_lower_bound(3.9, 4.0, 0.0, 1.0) < 0


def test_tail_channels():
    certs = tail_channel_certificates()
    assert [c.name for c in certs] == ["tail_alpha", "tail_beta", "tail_gamma"]
    assert all(c.passed and c.method == "closed-form-tail" for c in certs)
    assert certify_tail_coeffs().passed


def test_join_fraction():
    assert join_fraction_bound() >= 369 / 400


def test_certificate_schema():
    d = certify_a34().to_dict()
    assert set(d) == {"name", "inequality", "domain", "method", "margin", "verdict"}
    with pytest.raises(ValueError):
        Certificate("x", "y", "z", "guesswork", 1.0, "pass")


def test_a34_runtime():
    import time

    t0 = time.perf_counter()
    certify_a34()
    assert time.perf_counter() - t0 < 1.0
