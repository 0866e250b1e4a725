"""Acceptance criteria, one [PASS]/[FAIL] line each.

Run with ``pytest tests/test_acceptance.py`` or directly as a script.
Each ``criterion_*`` function returns ``(id, ok, summary)``.
"""
import contextlib
import csv
import io
import time
from fractions import Fraction

import numpy as np
import pytest

from bowlcert.barrier import (
    build_barrier,
    default_grid,
    one_third_check,
    tail_integral,
    verify_supersolution,
)
from bowlcert.bounds import certify_a34, certify_delta, certify_envelope, tail_channel_certificates
from bowlcert.cli import RunConfig, cmd_plot_data
from bowlcert.identities import TOLERANCES, run_all
from bowlcert.profile import K_at, solve_profile

ONE_THIRD_ORACLE = 0.35986286047006744677  # mpmath, erfc and quadrature routes agree


def _line(cid: str, ok: bool, text: str) -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] criterion {cid}: {text}", flush=True)


def criterion_01_a34():
    t0 = time.perf_counter()
    cert = certify_a34()
    dt = time.perf_counter() - t0
    a34 = cert.details["a"].lo
    ok = Fraction(a34) >= Fraction(173, 200) and dt < 1.0
    return "1", ok, f"inf(a_34) = {a34:.12f} >= 0.865, margin {cert.margin:.3e}, {dt:.3f} s"


def _delta(cid, h):
    t0 = time.perf_counter()
    cert = certify_delta(h, raise_on_fail=False)
    dt = time.perf_counter() - t0
    cells = len(cert.details["lower_bounds"])
    bad = len(cert.details["failing_cells"])
    ok = cert.passed and dt < 5.0
    text = (
        f"h = {h} delta bracket min lower bound {cert.details['min_lower_bound']:.4f} "
        f"(margin {cert.margin:.4f}, {bad}/{cells} cells below 1/100), {dt:.3f} s"
    )
    return cid, ok, text


def criterion_02_delta_h10():
    return _delta("2", Fraction(1, 10))


def criterion_02b_delta_h200():
    return _delta("2b", Fraction(1, 200))


def criterion_03_tail():
    certs = tail_channel_certificates()
    ok = all(c.passed and c.margin > 0 for c in certs)
    text = ", ".join(f"{c.name} {c.margin:.4f}" for c in certs)
    return "3", ok, f"tail channels on r >= 3.9: {text}"


def criterion_04_closed_forms(profile):
    r = np.arange(1, 1001) * 1e-3
    m_up = float(np.min(0.5 + r**2 / 20 - K_at(profile, r)))
    r = np.arange(3900, 50001) * 1e-3
    m_lo = float(np.min(K_at(profile, r) - (1 - 1.4 / r**2)))
    ok = m_up > 0 and m_lo > 0
    return "4", ok, f"K <= 1/2 + r^2/20 margin {m_up:.3e}; K >= 1 - 7/(5r^2) margin {m_lo:.3e}"


def criterion_05_envelope(profile):
    cert = certify_envelope(Fraction(1, 10), 40, profile=profile)
    ok = cert.passed and profile.residual_bound <= 1e-10
    text = (
        f"a_i <= K(r_i) <= b_i for i <= 40, margin {cert.margin:.3e}, "
        f"ODE residual {profile.residual_bound:.2e}"
    )
    return "5", ok, text


def criterion_06_barrier(profile, barrier):
    grid = default_grid(barrier, r_end=30.0)
    p = verify_supersolution(barrier, profile, grid, "p")
    q1 = verify_supersolution(barrier, profile, grid[grid <= 4.0], "p1")
    q2 = verify_supersolution(barrier, profile, grid[grid >= 3.95], "p2")
    ok = p.passed and q1.passed and q2.passed
    text = (
        f"L0'[p] <= -1/r^2 on {p.details['points']} pts margin {p.margin:.3f}; "
        f"p1 on (0,4] margin {q1.margin:.4f}; p2 on [3.95,30] margin {q2.margin:.4f}"
    )
    return "6", ok, text


def criterion_07_one_third():
    _, err = tail_integral(3.9, tol=1e-10, return_error=True)
    v = one_third_check()
    ok = v >= 1 / 3 and err <= 1e-8 and abs(v - ONE_THIRD_ORACLE) <= 1e-8
    return "7", ok, f"value {v:.10f} >= 1/3, quadrature error {err:.1e}, oracle {ONE_THIRD_ORACLE:.10f}"


def criterion_07b_one_third_stated_value():
    v = one_third_check()
    ok = abs(v - 0.340) <= 0.005
    return "7b", ok, f"stated expectation 0.340 +- 0.005 vs computed {v:.6f}"


def criterion_08_p2_window(barrier):
    r = np.arange(barrier.junction, 30.0, 1e-3)
    v, d1, d2 = barrier.p2_derivs(r)
    ok = bool(np.all(v >= 0.25) and np.all(d1 < 0) and np.all(d2 > 0) and barrier.c >= 0.25)
    text = (
        f"p2 >= 1/4 (min {float(np.min(v)):.4f}, limit {barrier.c:.5f}), p2' < 0, p2'' > 0 "
        f"on [{barrier.junction:.2f}, 30]"
    )
    return "8", ok, text


def criterion_09_asymptotics(profile):
    small = (K_at(profile, 0.1) - 0.5) / 0.01
    large = 2500.0 * (1.0 - K_at(profile, 50.0))
    ok = abs(small - 1 / 32) <= 1e-3 and abs(large - 1) <= 0.01
    return "9", ok, f"(K-1/2)/r^2 at 0.1 = {small:.6f}; r^2(1-K) at 50 = {large:.6f}"


def criterion_10_identities():
    reps = run_all(1000)
    ansatz = next(r for r in reps if r.name == "ansatz")
    ok = all(r.passed and r.max_residual <= TOLERANCES[r.name] for r in reps)
    ok = ok and ansatz.fitted_constants["c_std"] <= 1e-8
    text = ", ".join(f"{r.name} {r.max_residual:.1e}" for r in reps)
    c, std = ansatz.fitted_constants["c"], ansatz.fitted_constants["c_std"]
    return "10", ok, f"{text}; drift constant c = {c:.12f} (std {std:.1e})"


def _read(path):
    with open(path, newline="") as fh:
        return [[float(x) for x in row] for row in list(csv.reader(fh))[1:]]


def criterion_11_figures(out):
    cfg = RunConfig(out_dir=str(out))
    with contextlib.redirect_stdout(io.StringIO()):
        cmd_plot_data("K", cfg)
        cmd_plot_data("delta", cfg)
    k = _read(out / "figure_K.csv")
    d = _read(out / "figure_delta.csv")
    monotone = all(b[1] >= a[1] for a, b in zip(k, k[1:]))
    enclosed = all(lo <= kk <= hi for _, kk, lo, hi in k)
    d_min = min(row[1] for row in d)
    ok = monotone and enclosed and d_min >= 0.01 and abs(d[0][1] - 0.16) <= 1e-3
    text = (
        f"K figure {len(k)} rows, monotone {monotone}, enclosed {enclosed}; "
        f"delta figure min {d_min:.4f}, first row {d[0][1]:.5f}"
    )
    return "11", ok, text


CRITERIA = [
    ("01_a34", criterion_01_a34, ()),
    ("02_delta_h10", criterion_02_delta_h10, ()),
    ("02b_delta_h200", criterion_02b_delta_h200, ()),
    ("03_tail", criterion_03_tail, ()),
    ("04_closed_forms", criterion_04_closed_forms, ("profile",)),
    ("05_envelope", criterion_05_envelope, ("profile",)),
    ("06_barrier", criterion_06_barrier, ("profile", "barrier")),
    ("07_one_third", criterion_07_one_third, ()),
    ("07b_one_third_stated_value", criterion_07b_one_third_stated_value, ()),
    ("08_p2_window", criterion_08_p2_window, ("barrier",)),
    ("09_asymptotics", criterion_09_asymptotics, ("profile",)),
    ("10_identities", criterion_10_identities, ()),
    ("11_figures", criterion_11_figures, ("tmp_path",)),
]


@pytest.mark.parametrize(
    "fn,needs", [(fn, needs) for _, fn, needs in CRITERIA], ids=[name for name, _, _ in CRITERIA]
)
def test_criterion(fn, needs, request, capsys):
    cid, ok, text = fn(*(request.getfixturevalue(n) for n in needs))
    with capsys.disabled():
        print()
        _line(cid, ok, text)
    assert ok, text


if __name__ == "__main__":
    import tempfile
    from pathlib import Path

    env = {
        "profile": solve_profile(),
        "barrier": build_barrier(),
        "tmp_path": Path(tempfile.mkdtemp()),
    }
    failed = 0
    for _, fn, needs in CRITERIA:
        cid, ok, text = fn(*(env[n] for n in needs))
        _line(cid, ok, text)
        failed += not ok
    raise SystemExit(1 if failed else 0)
