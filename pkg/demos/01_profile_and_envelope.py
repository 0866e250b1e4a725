"""
Bowl profile and the certified K envelope
=========================================

Solve for the profile, tabulate K = psi/r and overlay the interval
recursion bounds a_i <= K <= b_i at h = 1/10.
"""
from fractions import Fraction

import numpy as np

from bowlcert.bounds import certify_a34, envelope_table
from bowlcert.profile import K_at, solve_profile

prof = solve_profile(r_max=60.0, tol=1e-10)
print("midpoint ODE residual:", prof.residual_bound)

# K runs from 1/2 at the tip to 1 far out
for r in (0.1, 1.0, 2.2, 3.9, 10.0, 50.0):
    print(f"K({r:5}) = {K_at(prof, r):.10f}")

# the two asymptotic regimes
print("(K - 1/2)/r^2 at 0.1:", (K_at(prof, 0.1) - 0.5) / 0.01, " vs 1/32 =", 1 / 32)
print("r^2 (1 - K) at 50:  ", 2500 * (1 - K_at(prof, 50.0)))

table = envelope_table(Fraction(1, 10), 40)
print(table.to_csv().splitlines()[:6])

cert = certify_a34()
print(cert.to_dict())

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    plt = None

if plt is not None:
    r = np.linspace(0.001, 4.0, 2000)
    ri = np.array([table.r_value(i) for i in range(41)])
    a = np.array([table.a_lo(i) for i in range(41)])
    b = np.array([table.b_hi(i) for i in range(41)])
    plt.plot(r, K_at(prof, r), label="K")
    plt.step(ri, a, where="post", label="a_i")
    plt.step(ri, b, where="pre", label="b_i")
    plt.xlabel("r")
    plt.legend()
    plt.savefig("figure_K.png", dpi=120)
    print("wrote figure_K.png")
