"""Rotationally symmetric closed geometries reduced to a 1-D warp.

The metric is dt^2 + w(t)^2 (fiber metric); every slice {t = c} is a copy of
the fiber with area w(c)^(n-1) * fiber_volume.  The Laplacian on symmetric
functions is u'' + (n-1) (w'/w) u', i.e. the drift coefficient is -H(t) with
H(t) = -(n-1) w'(t)/w(t), which fixes the mean-curvature sign convention used
everywhere in this package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GeometryError

TWO_PI = 2.0 * math.pi

STRICTLY_STABLE = "strictly_stable"
UNSTABLE = "unstable"
DEGENERATE = "degenerate"

_POLE_TOL = 1e-9
_DEGENERATE_TOL = 1e-8


class WarpedGeometry:
    """A warped product geometry described by its 1-D warp factor.

    Use the constructors :meth:`torus`, :meth:`sphere`,
    :meth:`projective_sphere` or :meth:`tabulated`.
    """

    def __init__(self, kind, n, warp, warp_prime, warp_second, domain,
                 fiber_volume, periodic, poles=(), params=None):
        if n < 2:
            raise ValueError("fiber dimension requires n >= 2")
        self.kind = kind
        self.n = int(n)
        self._w = warp
        self._wp = warp_prime
        self._wpp = warp_second
        self.domain = (float(domain[0]), float(domain[1]))
        self.fiber_volume = float(fiber_volume)
        self.periodic = bool(periodic)
        self.poles = tuple(poles)
        self.params = dict(params or {})

    # -- warp and derived quantities ------------------------------------

    def warp(self, t):
        return self._w(np.asarray(t, dtype=float))

    def warp_prime(self, t):
        return self._wp(np.asarray(t, dtype=float))

    def warp_second(self, t):
        return self._wpp(np.asarray(t, dtype=float))

    def weight(self, t):
        """Volume weight w(t)^(n-1)."""
        return self.warp(t) ** (self.n - 1)

    @property
    def period(self):
        if not self.periodic:
            raise GeometryError(f"{self.kind} geometry is not periodic")
        return self.domain[1] - self.domain[0]

    @property
    def span(self):
        return self.domain[1] - self.domain[0]

    def volume(self, quad_points=20001):
        """Total volume by composite trapezoid over the warp."""
        t = np.linspace(self.domain[0], self.domain[1], quad_points)
        return float(np.trapezoid(self.weight(t), t)) * self.fiber_volume

    def _check_away_from_poles(self, t):
        if not self.poles:
            return
        t = np.atleast_1d(np.asarray(t, dtype=float))
        for p in self.poles:
            if np.any(np.abs(t - p) < _POLE_TOL):
                raise GeometryError(
                    f"mean curvature undefined at coordinate pole t = {p}")

    def slice_at(self, c):
        """Slice data at position c (no minimality assumed)."""
        c = float(c)
        w = float(self.warp(c))
        wpp = float(self.warp_second(c))
        jac = (self.n - 1) * wpp / w
        wp = float(self.warp_prime(c))
        if abs(wp) > _DEGENERATE_TOL:
            stability = DEGENERATE  # not a critical point; tag is meaningless
        elif jac > _DEGENERATE_TOL:
            stability = STRICTLY_STABLE
        elif jac < -_DEGENERATE_TOL:
            stability = UNSTABLE
        else:
            stability = DEGENERATE
        return Slice(position=c,
                     area=w ** (self.n - 1) * self.fiber_volume,
                     mean_curvature=float(mean_curvature(self, c)),
                     stability=stability,
                     jacobi_eigenvalue=jac)

    # -- constructors -----------------------------------------------------

    @classmethod
    def torus(cls, a=0.3, n=2, period=TWO_PI, fiber_volume=TWO_PI):
        """Warped torus with w(t) = 1 + a cos(2 pi t / period)."""
        if not 0 <= a < 1:
            raise ValueError("need 0 <= a < 1 for a positive warp")
        k = TWO_PI / period
        return cls(
            kind="warped_torus", n=n,
            warp=lambda t: 1.0 + a * np.cos(k * t),
            warp_prime=lambda t: -a * k * np.sin(k * t),
            warp_second=lambda t: -a * k * k * np.cos(k * t),
            domain=(0.0, period), fiber_volume=fiber_volume,
            periodic=True, params={"a": a, "period": period})

    @classmethod
    def sphere(cls, n=2):
        """Round unit sphere, w(theta) = sin(theta) on [0, pi]."""
        fiber = TWO_PI if n == 2 else _unit_sphere_area(n - 1)
        return cls(
            kind="sphere", n=n,
            warp=np.sin, warp_prime=np.cos,
            warp_second=lambda t: -np.sin(t),
            domain=(0.0, math.pi), fiber_volume=fiber,
            periodic=False, poles=(0.0, math.pi))

    @classmethod
    def projective_sphere(cls, n=2):
        """Fundamental domain [0, pi/2] of the antipodal quotient; the even
        matching condition at pi/2 is a zero-flux end."""
        fiber = TWO_PI if n == 2 else _unit_sphere_area(n - 1)
        return cls(
            kind="projective_sphere", n=n,
            warp=np.sin, warp_prime=np.cos,
            warp_second=lambda t: -np.sin(t),
            domain=(0.0, math.pi / 2.0), fiber_volume=fiber,
            periodic=False, poles=(0.0,))

    @classmethod
    def tabulated(cls, positions, warp_values, n=2, fiber_volume=TWO_PI,
                  periodic=True):
        """Warp sampled on a uniform grid, evaluated by linear interpolation.

        Derivatives come from centered differences of the table, so slice
        classification inherits the table's resolution.
        """
        t0 = np.asarray(positions, dtype=float)
        w0 = np.asarray(warp_values, dtype=float)
        if t0.ndim != 1 or t0.shape != w0.shape or len(t0) < 4:
            raise ValueError("need matching 1-D tables with >= 4 samples")
        if np.any(w0 <= 0):
            raise ValueError("warp must be positive everywhere")
        step = t0[1] - t0[0]
        if not np.allclose(np.diff(t0), step):
            raise ValueError("tabulated warp requires a uniform grid")
        period = t0[-1] - t0[0] + step if periodic else None

        def _wrap(t):
            t = np.asarray(t, dtype=float)
            if periodic:
                return t0[0] + np.mod(t - t0[0], period)
            return t

        wp0 = np.gradient(w0, step, edge_order=2)
        wpp0 = np.gradient(wp0, step, edge_order=2)
        dom = (t0[0], t0[0] + period) if periodic else (t0[0], t0[-1])
        return cls(
            kind="tabulated", n=n,
            warp=lambda t: np.interp(_wrap(t), t0, w0, period=period),
            warp_prime=lambda t: np.interp(_wrap(t), t0, wp0, period=period),
            warp_second=lambda t: np.interp(_wrap(t), t0, wpp0, period=period),
            domain=dom, fiber_volume=fiber_volume, periodic=periodic,
            params={"samples": len(t0)})

    def describe(self):
        bits = [self.kind, f"n={self.n}"] + [f"{k}={v}" for k, v in self.params.items()]
        return " ".join(bits)


def _unit_sphere_area(d):
    return 2.0 * math.pi ** ((d + 1) / 2.0) / math.gamma((d + 1) / 2.0)


@dataclass(frozen=True)
class Slice:
    """One vertical slice {t = position} with its stability data."""

    position: float
    area: float
    mean_curvature: float
    stability: str
    jacobi_eigenvalue: float

    @property
    def minimal(self):
        return abs(self.mean_curvature) < _DEGENERATE_TOL


def mean_curvature(geom: WarpedGeometry, t):
    """H(t) = -(n-1) w'(t)/w(t); sign fixed by the drift term -H d/dt."""
    geom._check_away_from_poles(t)
    return -(geom.n - 1) * geom.warp_prime(t) / geom.warp(t)


def mean_curvature_prime(geom: WarpedGeometry, t):
    geom._check_away_from_poles(t)
    w = geom.warp(t)
    wp = geom.warp_prime(t)
    return -(geom.n - 1) * (geom.warp_second(t) / w - (wp / w) ** 2)


def find_minimal_slices(geom: WarpedGeometry, scan_points=4096,
                        tol=_DEGENERATE_TOL):
    """All roots of w' on one period (or span interior), classified.

    strictly_stable iff w''(c) > 0 (area has a local minimum there); a flat
    warp is recognized and reported as a single degenerate representative.
    """
    a, b = geom.domain
    if geom.poles:
        pad = geom.span / scan_points
        a, b = a + pad, b - pad
    t = np.linspace(a, b, scan_points, endpoint=not geom.periodic)
    wp = np.asarray(geom.warp_prime(t))
    if np.max(np.abs(wp)) < tol:
        return [geom.slice_at(0.5 * (a + b))]

    roots = []
    n = len(t)
    last = n if geom.periodic else n - 1
    for i in range(last):
        j = (i + 1) % n
        fa, fb = wp[i], wp[j]
        if fa == 0.0:
            roots.append(t[i])
            continue
        if fa * fb < 0:
            lo, hi = t[i], t[i] + (t[1] - t[0])
            flo = fa
            for _ in range(100):
                mid = 0.5 * (lo + hi)
                fm = float(geom.warp_prime(mid))
                if fm == 0.0 or hi - lo < 1e-14:
                    break
                if (fm < 0) == (flo < 0):
                    lo, flo = mid, fm
                else:
                    hi = mid
            roots.append(0.5 * (lo + hi))
    if geom.periodic:
        P = geom.period
        roots = [geom.domain[0] + ((r - geom.domain[0]) % P) for r in roots]
    dedup = []
    for r in roots:
        sep = (lambda x, y: abs(signed_distance(geom, x, y))) if geom.periodic             else (lambda x, y: abs(x - y))
        if not any(sep(r, other) < 1e-6 for other in dedup):
            dedup.append(r)
    return [geom.slice_at(r) for r in sorted(dedup)]


class CmcFamily:
    """Constant-mean-curvature slices near a non-degenerate minimal slice.

    Positions c(H) solve mean_curvature(c) = H on the monotone branch through
    the base slice; tau is the largest |H| reachable by the bracketing scan.
    """

    def __init__(self, geom: WarpedGeometry, base: Slice, scan_points=512):
        if base.stability == DEGENERATE:
            raise GeometryError("CMC family requires a non-degenerate base")
        self.geom = geom
        self.base = base
        half = _branch_halfwidth(geom, base)
        cs = base.position + np.linspace(-half, half, scan_points)
        Hs = np.asarray(mean_curvature(geom, cs))
        dH = mean_curvature_prime(geom, base.position)
        # keep the maximal monotone window around the base
        i0 = np.argmin(np.abs(cs - base.position))
        lo = i0
        while lo > 0 and (Hs[lo - 1] - Hs[lo]) * dH < 0:
            lo -= 1
        hi = i0
        while hi < len(cs) - 1 and (Hs[hi + 1] - Hs[hi]) * dH > 0:
            hi += 1
        self._c_lo, self._c_hi = cs[lo], cs[hi]
        self.tau = 0.95 * min(abs(Hs[lo] - Hs[i0]), abs(Hs[hi] - Hs[i0]))

    def position(self, H):
        if abs(H) > self.tau:
            raise GeometryError(
                f"H = {H:.4g} outside CMC neighborhood (tau = {self.tau:.4g})")
        c = self.base.position
        for _ in range(100):
            r = float(mean_curvature(self.geom, c)) - H
            step = -r / float(mean_curvature_prime(self.geom, c))
            c += step
            if not self._c_lo <= c <= self._c_hi:
                raise GeometryError(
                    f"Newton left the CMC bracket at H = {H:.4g}")
            if abs(step) < 1e-14:
                break
        return c


def _branch_halfwidth(geom, base):
    if geom.periodic:
        return geom.period / 2.0 * 0.999
    a, b = geom.domain
    return 0.999 * min(base.position - a, b - base.position)


def cmc_slice(geom: WarpedGeometry, base: Slice, H, family: CmcFamily | None = None):
    """The unique CMC slice of mean curvature H near the base minimal slice."""
    fam = family or CmcFamily(geom, base)
    return geom.slice_at(fam.position(H))


def signed_distance(geom: WarpedGeometry, slice_or_position, t):
    """Signed offset t - c, wrapped to (-P/2, P/2] on periodic geometries."""
    c = getattr(slice_or_position, "position", slice_or_position)
    d = np.asarray(t, dtype=float) - c
    if geom.periodic:
        P = geom.period
        d = d - P * np.floor(d / P + 0.5)
        d = np.where(d == -P / 2.0, P / 2.0, d)
    if d.ndim == 0:
        return float(d)
    return d
