"""Diffractive geometrical optics for plane-polarized gravitational waves.

Submodules
----------
grid
    Characteristic grids, stencils, quadrature, order estimation, CSV snapshots.
go_solvers
    Transport, Hunter–Saxton and diffractive (parabolic) wave solvers.
einstein
    Reduced diffractive Einstein system, colliding plane waves, diagnostics.
variational
    Leading-order action and its first variations.
ricci
    Metric expansions, Christoffel and Ricci orders, brute-force oracle.
classify
    Genuine nonlinearity of variational wave systems.
studies, profiles, cli
    Refinement studies, named data profiles, command-line front end.
"""

from .errors import BlowupError, NonConvergenceError, SolverError, StabilityError
from .grid import ConvergenceReport, Grid3, GridFunction, build_grid, estimate_order

__version__ = "0.1.0"

__all__ = [
    "BlowupError",
    "ConvergenceReport",
    "Grid3",
    "GridFunction",
    "NonConvergenceError",
    "SolverError",
    "StabilityError",
    "build_grid",
    "estimate_order",
    "__version__",
]
