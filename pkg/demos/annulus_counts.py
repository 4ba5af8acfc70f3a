"""Lattice points in thin annuli on an anisotropic 2-torus.

Run with ``python3 demos/annulus_counts.py``.
"""

# %% The quadratic form of a rectangular torus
import numpy as np

from tdl import (QuadraticForm, TorusGeometry, count_annulus, exponential_sum, fit_power_law,
                 form_from_torus, sums_of_squares, sup_annulus_count)

g = TorusGeometry((1.0, 1.3))
Q = form_from_torus(g)
print("theta =", Q.theta)

# %% The busiest unit-width annulus inside the box [-N, N]^2
samples = []
for N in (16, 32, 64, 128, 256):
    res = sup_annulus_count(Q, N)
    samples.append((N, res.count))
    print(f"N={N:4d}  sup count={res.count:4d}  at ell={res.ell_star:.3f}")

fit = fit_power_law(samples)
print(f"fitted exponent {fit.slope:.3f}  (the bound allows 2/3)")

# %% Square torus, for contrast: integer values pile up on sums of two squares
sq = QuadraticForm((1.0, 1.0))
print("square form, N=64:", sup_annulus_count(sq, 64).count)
r2 = sums_of_squares(2, 50)
print("r_2(m), m <= 50:", r2.tolist())
print("count at ell=25:", count_annulus(sq, 64, 25.0).count, "= r2(24)+r2(25)+r2(26) =", r2[24:27].sum())

# %% The Weyl sum behind the counting bound
ts = np.linspace(0.01, 0.5, 6)
for t in ts:
    print(f"t={t:.3f}  |S_N(t)| / (2N+1)^2 = {abs(exponential_sum(Q, 64, t)) / 129**2:.4f}")
