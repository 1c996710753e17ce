"""Numerical laboratory for phase-field interfaces on warped geometries."""

__version__ = "0.1.0"

from .analysis import (DecompositionReport, NodalSet, decay_fit, decompose,
                       hausdorff_to_slice, morse_index, multiplicity_estimate,
                       nodal_set, round_multiplicity)
from .barriers import (BarrierAssembler, BarrierResult, TrapReport,
                       assemble_barrier, compute_lambda, invert_at_infinity,
                       invert_orthogonal, sliding_trap)
from .discretization import (Field, Grid, energy, quadrature,
                             weighted_inner, weighted_laplacian)
from .errors import (AnalysisError, GeometryError, LabError, ResolutionError,
                     SolverError)
from .geometry import (CmcFamily, Slice, WarpedGeometry, cmc_slice,
                       find_minimal_slices, mean_curvature, signed_distance)
from .profiles import (INTERFACE_ENERGY, SQRT2, CutoffProfile, MomentTable,
                       QuarticWell, SpectralReport, WELL, apply_linearized_1d,
                       compute_moments, eval_cutoff, eval_psi, psi_prime,
                       psi_second, spectral_gap)
from .solver import (Solution, SolverConfig, gradient_flow, minimize_dirichlet,
                     newton_solve, residual)

__all__ = [name for name in dir() if not name.startswith("_")]
