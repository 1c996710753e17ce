"""Canonical double-well potential, heteroclinic profile, cutoff, moments, 1-D spectra.

Everything here is closed-form or 1-D quadrature; no grids are involved except
in :func:`apply_linearized_1d` and :func:`spectral_gap`, which discretize the
1-D linearized operator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.linalg import eigvalsh_tridiagonal

from .errors import ResolutionError

SQRT2 = math.sqrt(2.0)

#: Half-width (in rescaled units s = t/eps) beyond which profile tails are
#: below 3e-25 and integrals are truncated.
TAIL_HALFWIDTH = 40.0

DEFAULT_QUAD_TOL = 1e-12


class QuarticWell:
    """The double-well potential W(u) = (1 - u^2)^2 / 4 and its derivatives."""

    @staticmethod
    def value(u):
        u = np.asarray(u, dtype=float)
        return (1.0 - u * u) ** 2 / 4.0

    @staticmethod
    def prime(u):
        u = np.asarray(u, dtype=float)
        return u * u * u - u

    @staticmethod
    def second(u):
        u = np.asarray(u, dtype=float)
        return 3.0 * u * u - 1.0

    #: Curvature of the well at the minima u = +-1; also the essential
    #: spectrum edge of the 1-D linearized operator.
    ESSENTIAL_EDGE = 2.0


WELL = QuarticWell()


def eval_psi(t):
    """Heteroclinic profile tanh(t / sqrt(2)); the increasing entire solution
    of psi'' = W'(psi) joining -1 to +1."""
    return np.tanh(np.asarray(t, dtype=float) / SQRT2)


def psi_prime(t):
    c = np.cosh(np.asarray(t, dtype=float) / SQRT2)
    return 1.0 / (SQRT2 * c * c)


def psi_second(t):
    u = eval_psi(t)
    return u * u * u - u


# ---------------------------------------------------------------------------
# smoothstep mollifier
# ---------------------------------------------------------------------------

def _bump_exp(s):
    """exp(-1/s) for s > 0, extended by 0; building block of the smoothstep."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    pos = s > 1e-12
    out[pos] = np.exp(-1.0 / s[pos])
    return out


def _bump_exp_p(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    pos = s > 1e-12
    out[pos] = np.exp(-1.0 / s[pos]) / s[pos] ** 2
    return out


def _bump_exp_pp(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    pos = s > 1e-12
    sp = s[pos]
    out[pos] = np.exp(-1.0 / sp) * (1.0 - 2.0 * sp) / sp ** 4
    return out


def _descalar(result, arg):
    if np.ndim(arg) == 0:
        return float(result[0])
    return result


def mollifier(s):
    """C-infinity smoothstep: 1 for s <= 0, 0 for s >= 1, strictly monotone
    between, built from the standard exp(-1/s) bump."""
    arg = s
    s = np.atleast_1d(np.asarray(s, dtype=float))
    g, gb = _bump_exp(s), _bump_exp(1.0 - s)
    den = g + gb
    safe = den > 0
    r = np.zeros_like(s)
    r[safe] = gb[safe] / den[safe]
    r[s <= 0] = 1.0
    r[s >= 1] = 0.0
    return _descalar(r, arg)


def mollifier_prime(s):
    arg = s
    s = np.atleast_1d(np.asarray(s, dtype=float))
    g, gb = _bump_exp(s), _bump_exp(1.0 - s)
    gp, gbp = _bump_exp_p(s), -_bump_exp_p(1.0 - s)
    den = g + gb
    safe = (den > 0) & (s > 0) & (s < 1)
    r = np.zeros_like(s)
    r[safe] = (gbp[safe] * g[safe] - gb[safe] * gp[safe]) / den[safe] ** 2
    return _descalar(r, arg)


def mollifier_second(s):
    arg = s
    s = np.atleast_1d(np.asarray(s, dtype=float))
    g, gb = _bump_exp(s), _bump_exp(1.0 - s)
    gp, gbp = _bump_exp_p(s), -_bump_exp_p(1.0 - s)
    gpp, gbpp = _bump_exp_pp(s), _bump_exp_pp(1.0 - s)
    den = g + gb
    safe = (den > 0) & (s > 0) & (s < 1)
    r = np.zeros_like(s)
    D = gbp * g - gb * gp
    Dp = gbpp * g - gb * gpp
    r[safe] = (Dp[safe] / den[safe] ** 2
               - 2.0 * D[safe] * (gp[safe] + gbp[safe]) / den[safe] ** 3)
    return _descalar(r, arg)


# ---------------------------------------------------------------------------
# cutoff profile
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CutoffProfile:
    """Profile omega: the rescaled heteroclinic glued to +-1 outside a collar.

    omega(t) = psi(t/eps) for |t| <= radius/2 and sgn(t) for |t| >= radius,
    with radius = eps**delta and a smooth mollifier transition in between.
    """

    epsilon: float
    delta: float = 0.5

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")

    @classmethod
    def with_radius(cls, epsilon, radius):
        """Profile whose collar has the given physical radius (eps**delta)."""
        if not epsilon < radius < 1.0:
            raise ValueError("radius must lie in (epsilon, 1)")
        return cls(epsilon, math.log(radius) / math.log(epsilon))

    @property
    def radius(self):
        return self.epsilon ** self.delta

    def chi(self, t):
        return mollifier(2.0 * np.abs(np.asarray(t, dtype=float)) / self.radius - 1.0)

    def chi_prime(self, t):
        t = np.asarray(t, dtype=float)
        arg = 2.0 * np.abs(t) / self.radius - 1.0
        return mollifier_prime(arg) * (2.0 / self.radius) * np.sign(t)

    def chi_second(self, t):
        t = np.asarray(t, dtype=float)
        arg = 2.0 * np.abs(t) / self.radius - 1.0
        return mollifier_second(arg) * (2.0 / self.radius) ** 2

    def omega(self, t):
        t = np.asarray(t, dtype=float)
        ch = self.chi(t)
        return eval_psi(t / self.epsilon) * ch + (1.0 - ch) * np.sign(t)

    def omega_prime(self, t):
        t = np.asarray(t, dtype=float)
        return (psi_prime(t / self.epsilon) / self.epsilon * self.chi(t)
                + (eval_psi(t / self.epsilon) - np.sign(t)) * self.chi_prime(t))

    def omega_second(self, t):
        t = np.asarray(t, dtype=float)
        tail = eval_psi(t / self.epsilon) - np.sign(t)
        return (psi_second(t / self.epsilon) / self.epsilon ** 2 * self.chi(t)
                + 2.0 * psi_prime(t / self.epsilon) / self.epsilon * self.chi_prime(t)
                + tail * self.chi_second(t))


def eval_cutoff(t, profile: CutoffProfile):
    """Evaluate the cutoff profile omega at t."""
    return profile.omega(t)


# ---------------------------------------------------------------------------
# moments
# ---------------------------------------------------------------------------

@dataclass
class MomentTable:
    """Profile constants and cutoff cross moments at a fixed epsilon.

    sigma0 is int_{-1}^{1} sqrt(W/2); sigma1 = int psi'; sigma2 = int (psi')^2.
    cross_moments maps (k, m) to int d^k omega d^m omega dt, which scales like
    c_{k,m} eps^(1-k-m) and vanishes for k, m of opposite parity.
    """

    epsilon: float
    sigma0: float
    sigma1: float
    sigma2: float
    cross_moments: dict = field(default_factory=dict)
    quadrature_error: float = 0.0

    def to_record(self):
        """Flat key = value text serialization."""
        lines = [
            f"epsilon = {self.epsilon:.17g}",
            f"sigma0 = {self.sigma0:.17g}",
            f"sigma1 = {self.sigma1:.17g}",
            f"sigma2 = {self.sigma2:.17g}",
            f"quadrature_error = {self.quadrature_error:.3e}",
        ]
        for (k, m), v in sorted(self.cross_moments.items()):
            lines.append(f"cross_{k}_{m} = {v:.17g}")
        return "\n".join(lines) + "\n"


def _quad_checked(fn, a, b, tol, what, **kw):
    val, err = quad(fn, a, b, epsabs=tol, epsrel=0.0, limit=500, **kw)
    if err > max(tol * 100.0, 1e-10 * max(1.0, abs(val))):
        raise ArithmeticError(
            f"quadrature for {what} did not converge: value {val!r}, "
            f"reported error {err:.3e} exceeds tolerance {tol:.1e}")
    return val, err


def compute_moments(epsilon, quadrature_tol=DEFAULT_QUAD_TOL, delta=0.5):
    """Moment table at the given epsilon via adaptive quadrature.

    Cross moments are integrated in rescaled units over the cutoff collar so
    the integrand stays O(1); accumulated quadrature error is reported.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    prof = CutoffProfile(epsilon, delta)

    total_err = 0.0
    s0, e = _quad_checked(lambda s: math.sqrt(WELL.value(s) / 2.0), -1.0, 1.0,
                          quadrature_tol, "sigma0")
    total_err += e
    s1, e = _quad_checked(psi_prime, -TAIL_HALFWIDTH, TAIL_HALFWIDTH,
                          quadrature_tol, "sigma1")
    total_err += e
    s2, e = _quad_checked(lambda s: psi_prime(s) ** 2, -TAIL_HALFWIDTH,
                          TAIL_HALFWIDTH, quadrature_tol, "sigma2")
    total_err += e

    # cross moments in s = t/eps units: int d^k om d^m om dt
    #   = eps^(1-k-m) * int [eps^k om^(k)](eps s) [eps^m om^(m)](eps s) ds
    L = min(prof.radius / epsilon * 1.05, 2.0 * TAIL_HALFWIDTH)
    deriv = {1: prof.omega_prime, 2: prof.omega_second}
    cross = {}
    for k in (1, 2):
        for m in (1, 2):
            if m < k:
                cross[(k, m)] = cross[(m, k)]
                continue

            def integrand(s, k=k, m=m):
                return (epsilon ** k * deriv[k](epsilon * s)
                        * epsilon ** m * deriv[m](epsilon * s))

            val, e = _quad_checked(integrand, -L, L, quadrature_tol,
                                   f"cross moment ({k},{m})",
                                   points=[-prof.radius / epsilon / 2, 0.0,
                                           prof.radius / epsilon / 2])
            total_err += e
            cross[(k, m)] = val * epsilon ** (1 - k - m)
    return MomentTable(epsilon, s0, s1, s2, cross, total_err)


#: Energy of the heteroclinic per unit interface area under
#: E = int eps |grad u|^2 / 2 + W(u)/eps.  By equipartition this equals
#: int_{-1}^{1} sqrt(2 W) = sigma2 = 2 * sigma0.
INTERFACE_ENERGY = 2.0 * SQRT2 / 3.0


# ---------------------------------------------------------------------------
# 1-D linearized operator
# ---------------------------------------------------------------------------

def apply_linearized_1d(phi, epsilon, use_cutoff, center=0.0, delta=0.5):
    """Apply eps^2 phi'' - W''(q) phi with q = psi((t-center)/eps), or the
    cutoff profile when use_cutoff is set, by central differences.

    `phi` is a Field; the flat 1-D model operator is used regardless of the
    grid's geometry weight.  Refuses grids with h > eps/4 (layer unresolved).
    """
    grid = phi.grid
    if grid.h > epsilon / 4.0 * (1.0 + 1e-12):
        raise ResolutionError(
            f"grid spacing {grid.h:.3e} exceeds eps/4 = {epsilon / 4:.3e}; "
            "transition layer unresolved")
    d = grid.nodes - center
    if use_cutoff:
        q = CutoffProfile(epsilon, delta).omega(d)
    else:
        q = eval_psi(d / epsilon)
    second = grid.flat_second_difference(phi.values)
    return phi.new_like(epsilon ** 2 * second - WELL.second(q) * phi.values)


@dataclass
class SpectralReport:
    """Low spectrum of -d^2/ds^2 + W''(psi(s)) on a Dirichlet-truncated line."""

    halfwidth: float
    points: int
    eigenvalues: np.ndarray
    kernel_residual: float
    gap: float
    essential_edge: float = QuarticWell.ESSENTIAL_EDGE

    def to_record(self):
        lines = [
            f"halfwidth = {self.halfwidth:.17g}",
            f"points = {self.points}",
            f"kernel_residual = {self.kernel_residual:.17g}",
            f"gap = {self.gap:.17g}",
            f"essential_edge = {self.essential_edge:.17g}",
        ]
        for i, ev in enumerate(self.eigenvalues):
            lines.append(f"lambda_{i} = {float(ev):.17g}")
        return "\n".join(lines) + "\n"


def spectral_gap(domain_halfwidth, points, n_eigenvalues=6):
    """Ascending low eigenvalues of the rescaled 1-D linearized operator.

    Symmetric tridiagonal discretization of -d^2/ds^2 + W''(psi(s)) with
    Dirichlet truncation at +-halfwidth.  The first eigenvalue approximates
    the kernel (psi' direction); the second is the spectral gap.
    """
    if domain_halfwidth < 15.0:
        raise ValueError("domain halfwidth must be >= 15 rescaled units")
    points = int(points)
    if points < 1024:
        raise ValueError("need at least 1024 points")
    h = 2.0 * domain_halfwidth / (points + 1)
    s = -domain_halfwidth + h * np.arange(1, points + 1)
    diag = 2.0 / h ** 2 + WELL.second(eval_psi(s))
    off = np.full(points - 1, -1.0 / h ** 2)
    try:
        vals = eigvalsh_tridiagonal(diag, off, select="i",
                                    select_range=(0, n_eigenvalues - 1))
    except Exception as exc:  # pragma: no cover - LAPACK failure path
        raise ArithmeticError(f"tridiagonal eigensolver failed: {exc}") from exc
    return SpectralReport(domain_halfwidth, points, vals,
                          kernel_residual=abs(float(vals[0])),
                          gap=float(vals[1]))
