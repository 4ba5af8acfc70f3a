"""Numerical experiments on flat rectangular tori.

Lattice-point counts in thin annuli of diagonal quadratic forms, minimal
diameters of lattice simplices on those annuli, L^4 Strichartz and bilinear
ratios of band-limited free Schrodinger evolutions, and a spectral Galerkin
integrator for the defocusing cubic NLS.
"""

from .errors import (AliasError, CombinatorialBudgetExceeded, ConfigError, EmptySweep, InsufficientSamples,
                     NoNonDegenerateSimplex, NonFiniteDetected, NonPositiveSample, ResourceBudgetExceeded,
                     TdlError, ZeroFieldError)
from .exponents import TABLE, ExponentTable
from .fields import (SpectralField, analyze, dump_field, evolve_field, frequency_shift, gaussian_field,
                     load_field, single_mode, smooth_random_field, synthesize)
from .fitting import PowerLawFit, Verdict, compare_to_table, fit_power_law
from .geometry import (annulus_points, geometric_bound_sweep, max_collinear, min_noncoplanar_diameter,
                       snap_levels)
from .lattice import (QuadraticForm, TorusGeometry, count_annulus, eval_form, exponential_sum,
                      form_from_torus, pair_level, sums_of_squares, sup_annulus_count)
from .nls import (FieldState, NormTrace, SimulationConfig, StrangSolver, growth_fit, invariants_of,
                  picard_iteration, run_simulation, sobolev_norm, strang_step)
from .strichartz import (QuadratureSpec, SpaceTimeSpectrum, bilinear_ratio, l4_spacetime_norm,
                         maximize_bilinear, maximize_ratio, space_time_spectrum, strichartz_ratio, xsb_norm)

__version__ = "0.1.0"
