"""
The delta coefficient and the tail bounds
=========================================

delta(r) must stay above 1/100 on (0, 4].  At cell width 1/10 the
K bracket is too wide near r = 2.6 to certify this; at 1/200 it works.
"""
from fractions import Fraction

import numpy as np

from bowlcert.bounds import certify_delta, tail_channel_certificates
from bowlcert.profile import coefficients_at, solve_profile

prof = solve_profile(r_max=10.0)

r = np.arange(1, 4001) * 1e-3
delta = coefficients_at(prof, r).delta
print("delta near 0:", delta[0], " min on grid:", delta.min(), "at r =", r[delta.argmin()])

for h in (Fraction(1, 10), Fraction(1, 50), Fraction(1, 200)):
    cert = certify_delta(h, raise_on_fail=False)
    print(f"h = {h}: {cert.verdict}, min lower bound {cert.details['min_lower_bound']:.4f},"
          f" failing cells {len(cert.details['failing_cells'])}")

# sensitivity of delta to K at a fixed radius
from bowlcert.profile import coefficients_from_K

dk = (coefficients_from_K(2.6, 0.84 + 1e-6).delta - coefficients_from_K(2.6, 0.84).delta) / 1e-6
print("d delta / dK at r = 2.6:", dk)

for c in tail_channel_certificates():
    print(c.name, c.verdict, round(c.margin, 5))
