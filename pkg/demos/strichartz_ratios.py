"""Searching for band-limited data with a large L^4 space-time norm.

Run with ``python3 demos/strichartz_ratios.py`` (about a minute).
"""

# %%
import numpy as np

from tdl import QuadratureSpec, TorusGeometry, gaussian_field, maximize_ratio, single_mode, strichartz_ratio
from tdl.fields import frequency_shift

g = TorusGeometry((1.0, 1.3))

# %% A single mode saturates nothing: its ratio is (T / vol)^(1/4)
print("single mode:", strichartz_ratio(single_mode(g, 4, (1, 2))), "vs", (1 / 1.3) ** 0.25)

# %% Random data, and the same data after a Galilean boost
f = gaussian_field(g, 6, np.random.default_rng(0))
print("random data:", strichartz_ratio(f))
print("boosted:    ", strichartz_ratio(frequency_shift(f, (3, -2))))

# %% Maximize over the unit sphere of modes in [-N, N]^2
for N in (2, 4, 8):
    r = maximize_ratio(N, g, trials=4, max_iters=25, seed=N)
    print(f"N={N}: best ratio {r.best_ratio:.4f} after {r.evaluations} evaluations "
          f"({r.quadrature.n_time} time nodes, grid {r.quadrature.spatial_grid})")

# %% The maximizer concentrates in a few modes
mass = np.abs(r.argmax.coeffs) ** 2
top = np.argsort(mass.ravel())[::-1][:5]
print("largest |c|^2 at modes", [tuple(int(k) - N for k in np.unravel_index(i, mass.shape)) for i in top])

# %% Shorter windows cost fewer time nodes
print("T=0.1:", maximize_ratio(4, g, trials=2, max_iters=20, quad=QuadratureSpec(t_end=0.1)).best_ratio)
