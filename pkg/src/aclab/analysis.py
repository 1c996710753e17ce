"""Post-processing of computed solutions: nodal sets, multiplicity, decay,
Morse index, and the orthogonal (shift, remainder) decomposition."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse.linalg as spla
from scipy.linalg import eigvalsh_tridiagonal

from .discretization import Field
from .errors import AnalysisError
from .geometry import Slice, signed_distance
from .profiles import INTERFACE_ENERGY, WELL, CutoffProfile
from .solver import Solution

#: Multiplicity estimates farther than this from an integer are flagged
#: ambiguous instead of rounded.
ROUNDING_THRESHOLD = 0.25


@dataclass
class NodalSet:
    """Interpolated zero crossings of a field, sorted by position."""

    crossings: list
    count: int


@dataclass
class DecompositionReport:
    """Interface shift and orthogonal remainder of a single-interface state."""

    xi: float
    phi_sup: float
    orthogonality_residual: float
    secant_slope: float  # d/dxi of the projection functional, approx sigma2


def nodal_set(u: Field) -> NodalSet:
    """Zero crossings by linear interpolation; exact zeros counted once."""
    vals = u.values
    t = u.grid.nodes
    h = u.grid.h
    n = u.grid.size
    crossings = []
    wrap = u.grid.bc == "periodic"
    last = n if wrap else n - 1
    for i in range(last):
        j = (i + 1) % n
        a, b = vals[i], vals[j]
        if a == 0.0:
            crossings.append(float(t[i]))
        elif a * b < 0.0:
            crossings.append(float(t[i] + h * a / (a - b)))
    if not wrap and vals[-1] == 0.0:
        crossings.append(float(t[-1]))
    return NodalSet(sorted(crossings), len(crossings))


def hausdorff_to_slice(nodal: NodalSet, slc: Slice, geom) -> float:
    """Max over crossings of the (periodic) distance to the slice.

    In the rotationally symmetric class the one-sided distance from the
    nodal set to the slice equals the two-sided Hausdorff distance.
    """
    if nodal.count == 0:
        raise AnalysisError("no interface: empty nodal set")
    return max(abs(signed_distance(geom, slc, c)) for c in nodal.crossings)


def multiplicity_estimate(u: Solution, slc: Slice) -> float:
    """Energy of u divided by (interface energy constant) * (slice area).

    The normalization is the heteroclinic line energy 2*sigma0 = int sqrt(2W),
    so a clean k-sheet state returns approximately the integer k.  Callers
    round via :func:`round_multiplicity` and keep the raw ratio.
    """
    if not u.converged:
        raise AnalysisError("multiplicity asked for a non-converged solution")
    return u.energy / (INTERFACE_ENERGY * slc.area)


def round_multiplicity(ratio):
    """Nearest integer, or None when the ratio is ambiguous."""
    k = round(ratio)
    if abs(ratio - k) > ROUNDING_THRESHOLD:
        return None
    return int(k)


def decay_fit(u: Solution, slc: Slice, collar) -> float:
    """Least-squares slope of log(1 - |u|) against dist/eps over the collar.

    collar = (r1, r2) in physical units; every sample must sit above the
    floating-point floor 1 - |u| > 1e-14.
    """
    r1, r2 = collar
    grid = u.field.grid
    d = np.abs(grid.offset(slc.position))
    mask = (d >= r1) & (d <= r2)
    if not np.any(mask):
        raise AnalysisError("collar contains no grid points")
    gap = 1.0 - np.abs(u.field.values[mask])
    if np.min(gap) <= 1e-14:
        raise AnalysisError(
            "1 - |u| at the floating-point floor inside the collar")
    x = d[mask] / u.epsilon
    slope = np.polyfit(x, np.log(gap), 1)[0]
    return float(slope)


def morse_index(u: Solution, zero_tol=0.0) -> int:
    """Number of negative eigenvalues of -(eps^2 Delta_w) + W''(u).

    The operator is symmetrized by the quadrature weight.  On bounded grids
    the count is exact via the Sturm (LDL^T pivot) sequence; on periodic
    grids a shift-invert eigensolve is escalated until a nonnegative
    eigenvalue is seen.
    """
    if not u.converged:
        raise AnalysisError("Morse index asked for a non-converged solution")
    grid = u.field.grid
    main, off, corner = grid.symmetrized_tridiag(
        u.epsilon, WELL.second(u.field.values))
    if corner is None:
        return _sturm_negative_count(main, off, zero_tol)
    return _cyclic_negative_count(grid, u, zero_tol)


def _cyclic_negative_count(grid, u, zero_tol):
    import scipy.sparse as sp

    mat = -grid.operator_matrix(u.epsilon, -WELL.second(u.field.values))
    s = np.sqrt(grid.quad_weight)
    sym = sp.diags(s) @ mat @ sp.diags(1.0 / s)
    sym = (sym + sym.T) * 0.5
    if grid.size <= 1024:
        vals = np.linalg.eigvalsh(sym.toarray())
        return int(np.sum(vals < -zero_tol))
    # shift below the spectrum so shift-invert returns the contiguous
    # bottom; escalate k until a nonnegative eigenvalue shows up
    lower = float(np.min(sym.diagonal()
                         - np.abs(sym).sum(axis=1).A1 + np.abs(sym.diagonal())))
    sigma = lower - 1.0
    k = 8
    while True:
        k = min(k, grid.size - 2)
        vals = np.sort(spla.eigsh(sym.tocsc(), k=k, sigma=sigma, which="LM",
                                  return_eigenvectors=False,
                                  v0=np.ones(grid.size)))
        neg = int(np.sum(vals < -zero_tol))
        if np.any(vals >= -zero_tol) or k == grid.size - 2:
            return neg
        k *= 2


def _sturm_negative_count(main, off, zero_tol):
    count = 0
    d = main[0]
    if d < -zero_tol:
        count += 1
    for i in range(1, len(main)):
        d = main[i] - off[i - 1] ** 2 / d
        if d < -zero_tol:
            count += 1
    return count


def lowest_eigenvalues(u: Solution, k=4):
    """Ascending low spectrum of the linearized operator at u."""
    grid = u.field.grid
    main, off, corner = grid.symmetrized_tridiag(
        u.epsilon, WELL.second(u.field.values))
    if corner is None:
        return eigvalsh_tridiagonal(main, off, select="i",
                                    select_range=(0, k - 1))
    mat = -grid.operator_matrix(u.epsilon, -WELL.second(u.field.values))
    vals = spla.eigsh(mat, k=k, sigma=0.0, which="LM",
                      return_eigenvectors=False, v0=np.ones(grid.size))
    return np.sort(vals)


def decompose(u: Solution, slc: Slice, epsilon,
              profile: CutoffProfile | None = None,
              bracket_halfwidth=0.2) -> DecompositionReport:
    """Orthogonal decomposition u = omega_xi + phi against the profile kernel.

    The shift xi is the root of F(xi) = eps * int (u - omega_xi) omega'_xi dt
    (plain dt along the axis, not the manifold measure), found by bracketed
    secant/bisection inside the CMC collar.  Reports |F| at the root, the
    measured dF/dxi (approximately sigma2), and phi_sup = sup|u - omega_xi|.
    """
    if not u.converged:
        raise AnalysisError("decompose asked for a non-converged solution")
    prof = profile or CutoffProfile(epsilon)
    grid = u.field.grid
    vals = u.field.values

    def F(xi):
        d = grid.offset(xi)
        om = prof.omega(d)
        omp = prof.omega_prime(d)
        return epsilon * grid.line_integral((vals - om) * omp)

    a = slc.position - bracket_halfwidth
    b = slc.position + bracket_halfwidth
    fa, fb = F(a), F(b)
    if fa * fb > 0:
        raise AnalysisError(
            f"interface outside collar: no bracketing root in "
            f"[{a:.4f}, {b:.4f}] (F = {fa:.3e}, {fb:.3e})")
    # secant slope near the root, for the derivative diagnostic
    tol = max(1e-12 * epsilon, 64 * np.finfo(float).eps * max(abs(a), abs(b)))
    xi, f_xi = _secant_bisect(F, a, b, fa, fb, tol)
    dxi = max(1e-7 * epsilon, tol)
    slope = (F(xi + dxi) - F(xi - dxi)) / (2.0 * dxi)
    d = grid.offset(xi)
    phi_sup = float(np.max(np.abs(vals - prof.omega(d))))
    return DecompositionReport(xi=float(xi), phi_sup=phi_sup,
                               orthogonality_residual=abs(f_xi),
                               secant_slope=float(slope))


def _secant_bisect(F, a, b, fa, fb, tol):
    """Bracketed secant with bisection fallback."""
    x0, f0, x1, f1 = a, fa, b, fb
    for _ in range(200):
        if f1 != f0:
            x2 = x1 - f1 * (x1 - x0) / (f1 - f0)
        else:
            x2 = 0.5 * (a + b)
        if not a < x2 < b:
            x2 = 0.5 * (a + b)
        f2 = F(x2)
        if f2 == 0.0 or (b - a) < tol:
            return x2, f2
        if (f2 < 0) == (fa < 0):
            a, fa = x2, f2
        else:
            b, fb = x2, f2
        x0, f0, x1, f1 = x1, f1, x2, f2
    return 0.5 * (a + b), F(0.5 * (a + b))


def normalized_energy_defect(u: Solution, slc: Slice) -> float:
    """|E(u) - e1 * area| / (e1 * area) with e1 the interface constant."""
    target = INTERFACE_ENERGY * slc.area
    return abs(u.energy - target) / target
