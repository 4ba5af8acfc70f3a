"""How spread out must three non-collinear points on a thin ellipse be?

Run with ``python3 demos/simplex_diameters.py``.
"""

# %%
import numpy as np

from tdl import TorusGeometry, annulus_points, form_from_torus, geometric_bound_sweep, min_noncoplanar_diameter
from tdl.geometry import snap_levels

Q = form_from_torus(TorusGeometry((1.0, 1.3)))

# %% One annulus in detail
X = snap_levels(Q, [5e4])[0]
pts = annulus_points(Q, X)
D, diag = min_noncoplanar_diameter(pts)
print(f"X={X:.2f}: {len(pts)} points, smallest triangle diameter {D:.3f}")
print("vertices:\n", diag.vertices, "\ndeterminant", diag.determinant)

# %% A sweep over twenty levels between 1e2 and 1e6
levels = snap_levels(Q, np.geomspace(1e2, 1e6, 20), distinct=True)
sweep = geometric_bound_sweep(Q, levels)
for s in sweep.samples[::4]:
    print(f"X={s.X:10.1f}  points={s.n_points:3d}  D={s.D:8.2f}  D/X^(1/6)={s.ratio:.3f}")
print(f"lower-envelope slope {sweep.fit.slope:.3f}; the bound needs at least 1/6")
