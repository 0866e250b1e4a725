"""
Barrier on the bowl
===================

Glue the quadratic p1 to the Gaussian-tail p2, flatten far out, scale
by 400 and check L0'[p] <= -1/r^2 on a grid.
"""
import numpy as np

from bowlcert.barrier import (
    WindowViolation,
    build_barrier,
    evaluate_operator,
    one_third_check,
    tail_closed_form,
    tail_integral,
    verify_supersolution,
)
from bowlcert.profile import solve_profile

print("tail integral at 3.9: quad", tail_integral(3.9), " erfcx", tail_closed_form(3.9))
print("one-third quantity:", one_third_check())

bar = build_barrier()
print(bar)
print("junction", bar.junction, " window offset", bar.window_offset, " limit c", bar.c)

try:
    build_barrier(delta=0.05)
except WindowViolation as exc:
    print("delta = 0.05 rejected:", exc)

prof = solve_profile(r_max=35.0)
for target in ("p", "p1", "p2", "pbar", "const"):
    cert = verify_supersolution(bar, prof, target=target)
    print(f"{target:5} {cert.verdict} margin {cert.margin:.4f} worst r {cert.details['worst_r']:.4f}")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    plt = None

if plt is not None:
    r = np.linspace(0.01, 30.0, 6000)
    r, f, lf, bound = evaluate_operator(bar, prof, r, "p")
    fig, ax = plt.subplots(2, 1, sharex=True)
    ax[0].plot(r, f)
    ax[0].set_ylabel("p")
    ax[1].plot(r, r**2 * lf, label="r^2 L0'[p]")
    ax[1].axhline(-1.0, color="k", lw=0.5)
    ax[1].set_ylim(-2500, 10)
    ax[1].set_xlabel("r")
    ax[1].legend()
    fig.savefig("figure_barrier.png", dpi=120)
    print("wrote figure_barrier.png")
