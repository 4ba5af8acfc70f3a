"""Defocusing cubic NLS on a 2-torus: conservation and Sobolev norms.

Run with ``python3 demos/nls_evolution.py`` (under a minute).
"""

# %%
import numpy as np

from tdl import SimulationConfig, TorusGeometry, growth_fit, picard_iteration, run_simulation, smooth_random_field

g = TorusGeometry((1.0, 1.3))
u0 = smooth_random_field(g, 16, np.random.default_rng(0), h1_norm=2.0)

# %% Integrate to t = 20 and look at the invariants
cfg = SimulationConfig(g, 16, dt=2e-3, t_end=20.0, record_stride=250)
tr = run_simulation(cfg, u0).trace
mass, energy = tr.column("mass"), tr.column("energy")
print(f"mass drift   {np.ptp(mass) / mass[0]:.2e}")
print(f"energy drift {np.ptp(energy) / energy[0]:.2e}")
print(f"momentum drift {np.abs(tr.momentum() - tr.momentum()[0]).max():.2e}")

# %% H^2 norm over time and its power-law slope
for t, h in list(zip(tr.times, tr.hs(2.0)))[::8]:
    print(f"t={t:6.2f}  ||u||_H2={h:.4f}")
print(f"slope of ||u||_H2 against t over t >= 2: {growth_fit(tr, 2.0, 2.0).slope:.3f}")

# %% Picard iterates of the Duhamel formula for small data
small = smooth_random_field(TorusGeometry((1.0,)), 8, np.random.default_rng(1), h1_norm=0.1)
deltas = picard_iteration(small, T=0.05, iters=5, n_time=51, precision_bits=160)
print("successive distances:", ["%.2e" % d for d in deltas])
