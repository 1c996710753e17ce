"""Barrier family construction and the sliding trap.

For each admissible mean curvature H the barrier is v = omega_H + phi1 + phi2:
omega_H is the cutoff profile centered on the CMC slice of curvature H, the
counterterm eps*lambda makes the leading residual orthogonal to the profile
kernel, phi1 inverts the coercive operator eps^2 Delta_w - 2 globally, and
phi2 inverts the kernel-orthogonal part on the collar through a bordered
(Lagrange multiplier) solve.  The certified property is a uniform sign:
sgn Q(v) = -sgn H at every grid node, checked exhaustively.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import quad

from .discretization import Field, Grid
from .errors import GeometryError, SolverError
from .geometry import (STRICTLY_STABLE, CmcFamily, Slice, WarpedGeometry,
                       mean_curvature, signed_distance)
from .profiles import WELL, CutoffProfile, eval_psi, psi_prime
from .solver import Solution

DEFAULT_K = 5.0
DEFAULT_COLLAR = 0.7
_QUAD_TOL = 1e-12
_RESCALED_SPAN = 45.0  # profile tails are below 1e-27 past this many widths


@dataclass
class BarrierResult:
    H: float
    lam: float
    v: Field
    phi_norm: float
    sign_uniform: bool
    min_abs_residual: float
    margin: float                  # min over nodes of -sgn(H) * Q(v)
    nodal_position: float
    center: float
    orthogonality_residual: float
    discarded_norm: float
    tail_norm: float
    offending_nodes: list = dc_field(default_factory=list)


@dataclass
class OrthogonalInversion:
    field: Field
    discarded_norm: float
    tail_norm: float
    multiplier: float


@dataclass
class TrapRung:
    H: float
    gap_above: float     # min(v_H - u)
    gap_below: float     # min(u - v_{-H})
    margin_pos: float
    margin_neg: float
    sign_ok: bool


@dataclass
class TrapReport:
    applicable: bool
    trapped: bool
    rungs: list
    violation: str | None
    collar_over_eps: float
    nodal_distance_over_eps: float


def default_profile(geom: WarpedGeometry, base: Slice, epsilon) -> CutoffProfile:
    """Collar profile for barrier work: radius 0.7 capped by the domain.

    At desk-scale epsilon the eps^0.5 collar is only a few layer widths, so
    its truncation tail would not be negligible against the O(eps^2) margins;
    the wider default keeps the tail below round-off.
    """
    a, b = geom.domain
    room = min(base.position - a, b - base.position)
    if geom.periodic:
        room = geom.period / 2.0
    radius = min(DEFAULT_COLLAR, 0.85 * room)
    radius = max(radius, min(8.0 * epsilon, 0.99))
    return CutoffProfile.with_radius(epsilon, radius)


def compute_lambda(geom: WarpedGeometry, base: Slice, H, epsilon,
                   profile: CutoffProfile | None = None,
                   family: CmcFamily | None = None):
    """Counterterm lambda making Q(omega_H) + eps*lambda orthogonal to omega'.

    In rescaled units s = (t - c)/eps with g(s) = eps * omega'(eps s):

        lambda = [ int H(c) g^2 + int (H(c + eps s) - H(c)) g^2 ] / int g,

    the second integral being the Taylor remainder of the slice curvature
    along the Fermi line, integrated by adaptive quadrature.
    """
    prof = profile or default_profile(geom, base, epsilon)
    if H == 0.0:
        c = base.position  # minimal slice; no CMC family needed
    else:
        fam = family or CmcFamily(geom, base)
        c = fam.position(H)
    L = min(prof.radius / epsilon, _RESCALED_SPAN)

    def g(s):
        return epsilon * prof.omega_prime(epsilon * s)

    i1, s1 = _profile_line_moments(prof)
    pts = [-L / 2.0, 0.0, L / 2.0]
    iR = quad(lambda s: (float(mean_curvature(geom, c + epsilon * s)) - H)
              * g(s) ** 2, -L, L, epsabs=_QUAD_TOL, epsrel=_QUAD_TOL,
              limit=200, points=pts)[0]
    return (H * i1 + iR) / s1


@lru_cache(maxsize=64)
def _profile_line_moments(prof: CutoffProfile):
    """( int (eps om')^2 ds, int eps om' ds ) for a frozen profile."""
    eps = prof.epsilon
    L = min(prof.radius / eps, _RESCALED_SPAN)
    pts = [-L / 2.0, 0.0, L / 2.0]

    def g(s):
        return eps * prof.omega_prime(eps * s)

    i1 = quad(lambda s: g(s) ** 2, -L, L, epsabs=_QUAD_TOL, epsrel=_QUAD_TOL,
              limit=200, points=pts)[0]
    s1 = quad(g, -L, L, epsabs=_QUAD_TOL, epsrel=_QUAD_TOL, limit=200,
              points=pts)[0]
    return i1, s1


def orthogonality_residual(geom, center, H, epsilon, profile, lam):
    """| int (Q(omega_H) + eps lambda) omega' dt | by direct quadrature.

    Q(omega_H) is evaluated in closed form along the axis, including the
    cutoff residual eps^2 omega'' - W'(omega) that the counterterm derivation
    drops as an exact boundary term.
    """
    L = min(profile.radius / epsilon, _RESCALED_SPAN)

    def integrand(s):
        t = center + epsilon * s
        om = profile.omega(epsilon * s)
        omp = profile.omega_prime(epsilon * s)
        ompp = profile.omega_second(epsilon * s)
        Q = (epsilon ** 2 * ompp - WELL.prime(om)
             - epsilon ** 2 * float(mean_curvature(geom, t)) * omp)
        return (Q + epsilon * lam) * omp * epsilon  # dt = eps ds

    pts = [-L / 2.0, 0.0, L / 2.0]
    val = quad(integrand, -L, L, epsabs=_QUAD_TOL, epsrel=_QUAD_TOL,
               limit=200, points=pts)[0]
    # outside the collar omega' = 0, so the truncated range is exact
    return abs(val)


def _arrow_solve(M, rhs):
    """Pivot-free LU of a (tridiagonal + border) arrow matrix, O(n) fill,
    with one step of iterative refinement to recover the pivots' accuracy."""
    lu = spla.splu(M, permc_spec="NATURAL",
                   options=dict(DiagPivotThresh=0.0, SymmetricMode=True))
    x = lu.solve(rhs)
    x += lu.solve(rhs - M @ x)
    if not np.all(np.isfinite(x)):
        raise RuntimeError("arrow factorization produced non-finite values")
    return x


def invert_at_infinity(f: Field, epsilon, profile: CutoffProfile | None = None,
                       center: float | None = None) -> Field:
    """Solve (eps^2 Delta_w - 2) v = -f; project out the omega' direction.

    Without a profile/center the raw solution v is returned (useful for the
    coercivity checks); with them, the returned field is v minus its omega'
    component in the plain-dt inner product.
    """
    grid = f.grid
    grid.check_resolution(epsilon)
    solver = grid.shifted_solver(epsilon, -2.0)
    v = solver.solve(-f.values)
    if not np.all(np.isfinite(v)):
        raise SolverError("coercive solve produced non-finite values")
    if profile is None or center is None:
        return f.new_like(v)
    omp = profile.omega_prime(grid.offset(center))
    coef = (grid.line_integral(v * omp) / grid.line_integral(omp * omp))
    return f.new_like(v - coef * omp)


def invert_orthogonal(g: Field, epsilon, center,
                      profile: CutoffProfile | None = None) -> OrthogonalInversion:
    """Bordered solve of the flat collar operator on the kernel complement.

    Solves eps^2 v'' - W''(psi((t-center)/eps)) v = g with the constraint
    int v psi' dt = 0 through a symmetric Lagrange-multiplier system.  If g
    itself is not orthogonal to psi', it is projected first and the discarded
    component's sup norm reported.  The result is cut to the collar by the
    smooth cutoff; the cut tail's sup norm is reported as well.
    """
    grid = g.grid
    grid.check_resolution(epsilon)
    prof = profile or CutoffProfile(epsilon)
    d = grid.offset(center)
    basis = psi_prime(d / epsilon)
    lw = grid.line_weight
    coef = float(np.sum(g.values * basis * lw) / np.sum(basis * basis * lw))
    gperp = g.values - coef * basis
    discarded = abs(coef) * float(np.max(np.abs(basis)))

    # The solve is restricted to a window slightly wider than the collar:
    # outside it both the data and the solution are below round-off, and the
    # truncation keeps the bordered (arrow) matrix free of dense fill.
    window = np.abs(d) <= min(prof.radius * 1.15 + 6.0 * epsilon,
                              0.5 * (grid.b - grid.a))
    idx = np.nonzero(window)[0]
    lo_i, hi_i = int(idx[0]), int(idx[-1]) + 1
    dw = d[lo_i:hi_i]
    gw = gperp[lo_i:hi_i]
    bw = (basis * lw)[lo_i:hi_i]
    nw = hi_i - lo_i
    e2h2 = epsilon ** 2 / grid.h ** 2
    main = -2.0 * e2h2 - WELL.second(eval_psi(dw / epsilon))
    off = np.full(nw - 1, e2h2)
    A = sp.diags([off, main, off], [-1, 0, 1], format="csc")
    M = sp.bmat([[A, sp.csc_matrix(bw[:, None])],
                 [sp.csc_matrix(bw[None, :]), None]], format="csc")
    rhs = np.concatenate([gw, [0.0]])
    try:
        sol = _arrow_solve(M, rhs)
    except RuntimeError as exc:
        sv = spla.eigsh((M.T @ M).tocsc(), k=1, which="SM",
                        return_eigenvectors=False)[0] ** 0.5
        raise SolverError(
            f"bordered system singular (lowest singular value {sv:.3e})"
        ) from exc
    v = np.zeros(grid.size)
    v[lo_i:hi_i] = sol[:-1]
    mu = float(sol[-1])
    cut = prof.chi(d) * v
    tail = float(np.max(np.abs(v - cut)))
    return OrthogonalInversion(g.new_like(cut), discarded, tail, mu)


class BarrierAssembler:
    """Caches the grid operators shared by every rung of a barrier ladder."""

    def __init__(self, geom: WarpedGeometry, base: Slice, epsilon,
                 grid: Grid | None = None,
                 profile: CutoffProfile | None = None,
                 family: CmcFamily | None = None,
                 K=DEFAULT_K, refine=16):
        self.geom = geom
        self.base = base
        self.epsilon = float(epsilon)
        self.K = float(K)
        self.grid = grid or Grid.interval(geom, epsilon, refine=refine)
        self.grid.check_resolution(epsilon)
        self.profile = profile or default_profile(geom, base, epsilon)
        self.family = family or CmcFamily(geom, base)
        self._linf = self.grid.shifted_solver(epsilon, -2.0)

    @property
    def tau(self):
        return self.family.tau

    def assemble(self, H) -> BarrierResult:
        eps = self.epsilon
        if abs(H) < self.K * eps * (1.0 - 1e-12):
            raise GeometryError(
                f"|H| = {abs(H):.4g} below the admissible floor K*eps = "
                f"{self.K * eps:.4g}")
        grid, prof = self.grid, self.profile
        c = self.family.position(H)
        d = grid.offset(c)
        om = prof.omega(d)
        omp = prof.omega_prime(d)
        lam = compute_lambda(self.geom, self.base, H, eps, prof, self.family)
        ortho = orthogonality_residual(self.geom, c, H, eps, prof, lam)

        f = grid.lap(om, eps) - WELL.prime(om) + eps * lam
        v1 = self._linf.solve(-f)
        lw = grid.line_weight
        coef = float(np.sum(v1 * omp * lw) / np.sum(omp * omp * lw))
        phi1 = v1 - coef * omp
        g = f + grid.lap(phi1, eps) - WELL.second(om) * phi1
        inv = invert_orthogonal(grid.field(-g), eps, c, prof)
        phi2 = inv.field.values

        v = om + phi1 + phi2
        Qv = grid.lap(v, eps) - WELL.prime(v)
        target = -np.sign(H)
        sign_ok = bool(np.all(np.sign(Qv) == target))
        offending = [] if sign_ok else [
            int(i) for i in np.nonzero(np.sign(Qv) != target)[0][:32]]
        crossings = np.nonzero(v[:-1] * v[1:] < 0)[0]
        if len(crossings):
            i = int(crossings[0])
            nodal = float(grid.nodes[i]
                          + grid.h * v[i] / (v[i] - v[i + 1]))
        else:
            nodal = float("nan")
        return BarrierResult(
            H=float(H), lam=float(lam), v=grid.field(v),
            phi_norm=float(np.max(np.abs(phi1 + phi2))),
            sign_uniform=sign_ok,
            min_abs_residual=float(np.min(np.abs(Qv))),
            margin=float(np.min(target * Qv)),
            nodal_position=nodal, center=float(c),
            orthogonality_residual=ortho,
            discarded_norm=inv.discarded_norm, tail_norm=inv.tail_norm,
            offending_nodes=offending)


def assemble_barrier(geom, base, H, epsilon, grid=None, profile=None,
                     family=None, K=DEFAULT_K) -> BarrierResult:
    """One barrier at curvature H; see :class:`BarrierAssembler`."""
    return BarrierAssembler(geom, base, epsilon, grid=grid, profile=profile,
                            family=family, K=K).assemble(H)


def sliding_trap(u: Solution, geom, base: Slice, epsilon, K=DEFAULT_K,
                 tau=None, rungs=8, assembler: BarrierAssembler | None = None
                 ) -> TrapReport:
    """Slide barriers from +-tau down to +-K*eps and verify v_{-H} < u < v_H.

    Every rung is checked pointwise on the whole grid.  The report carries
    the collar radius implied by the last rung's nodal positions and the
    measured distance of u's nodal set to the base slice, both in units of
    epsilon.  Inputs without an interface are reported as not applicable.
    """
    if not u.converged:
        raise SolverError("sliding trap needs a converged solution")
    if base.stability != STRICTLY_STABLE:
        raise GeometryError("sliding trap requires a strictly stable base")
    asm = assembler or BarrierAssembler(geom, base, epsilon,
                                        grid=u.field.grid, K=K)
    vals = u.field.values
    has_interface = bool(np.any(vals[:-1] * vals[1:] < 0))
    if not has_interface:
        return TrapReport(applicable=False, trapped=False, rungs=[],
                          violation="no interface: trap check not applicable",
                          collar_over_eps=float("nan"),
                          nodal_distance_over_eps=float("nan"))
    tau = min(tau if tau is not None else asm.tau, asm.tau)
    if tau <= K * epsilon:
        raise GeometryError(
            f"ladder empty: tau = {tau:.4g} <= K*eps = {K * epsilon:.4g}")
    ladder = np.linspace(tau, K * epsilon, rungs)
    out = []
    violation = None
    trapped = True
    last_pos = last_neg = None
    for H in ladder:
        bp = asm.assemble(+H)
        bm = asm.assemble(-H)
        gap_above = float(np.min(bp.v.values - vals))
        gap_below = float(np.min(vals - bm.v.values))
        ok = (bp.sign_uniform and bm.sign_uniform
              and gap_above > 0 and gap_below > 0)
        out.append(TrapRung(float(H), gap_above, gap_below,
                            bp.margin, bm.margin, ok))
        if not ok and violation is None:
            trapped = False
            violation = (f"rung H = {H:.5g}: gap_above = {gap_above:.3e}, "
                         f"gap_below = {gap_below:.3e}, sign_uniform = "
                         f"{bp.sign_uniform and bm.sign_uniform}")
        last_pos, last_neg = bp, bm
    collar = max(abs(last_pos.nodal_position - base.position),
                 abs(last_neg.nodal_position - base.position))
    crossings = []
    t, h = u.field.grid.nodes, u.field.grid.h
    for i in np.nonzero(vals[:-1] * vals[1:] < 0)[0]:
        crossings.append(t[i] + h * vals[i] / (vals[i] - vals[i + 1]))
    dist = max(abs(signed_distance(geom, base, c)) for c in crossings)
    return TrapReport(applicable=True, trapped=trapped, rungs=out,
                      violation=violation,
                      collar_over_eps=collar / epsilon,
                      nodal_distance_over_eps=dist / epsilon)
