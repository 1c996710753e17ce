"""Uniform grids, discrete fields, and the weighted Laplacian in flux form.

Three layouts cover the boundary conditions:

* ``periodic``       -- nodes 0..N-1 on a full period, cyclic stencil;
* ``neumann_zero``   -- nodes 0..N including both ends, zero-flux ends,
                        trapezoid quadrature;
* ``dirichlet_zero`` / ``pole_regular`` -- cell centers with the Dirichlet
  value imposed at the bounding faces via reflected ghosts.  At a coordinate
  pole the face weight w^(n-1) vanishes, so the same assembly degenerates to
  the regular zero-flux condition there.

The flux form makes the operator self-adjoint in the weighted inner product
sum(u v w^(n-1) h), which is what makes the discrete Morse counts trustworthy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.linalg import solve_banded

from .errors import ResolutionError, SolverError
from .geometry import WarpedGeometry
from .profiles import WELL

RESOLUTION_FACTOR = 8.0

NODE_LAYOUTS = ("periodic", "neumann_zero")
CELL_LAYOUTS = ("dirichlet_zero", "pole_regular")


def _points_for(span, epsilon, refine):
    n = 1
    while span / n > epsilon / refine:
        n *= 2
    return n


class Grid:
    """Uniform 1-D grid over a warped geometry with a boundary-condition tag."""

    def __init__(self, geom: WarpedGeometry, a, b, n_cells, bc, epsilon):
        if bc not in NODE_LAYOUTS + CELL_LAYOUTS:
            raise ValueError(f"unknown boundary condition {bc!r}")
        self.geom = geom
        self.bc = bc
        self.a, self.b = float(a), float(b)
        self.h = (self.b - self.a) / n_cells
        self.epsilon = float(epsilon)  # the eps this grid was built to serve
        if bc == "periodic":
            self.nodes = self.a + self.h * np.arange(n_cells)
        elif bc == "neumann_zero":
            self.nodes = np.linspace(self.a, self.b, n_cells + 1)
        else:
            self.nodes = self.a + self.h * (0.5 + np.arange(n_cells))
        self.size = len(self.nodes)

        nm1 = geom.n - 1
        self.node_weight = geom.warp(self.nodes) ** nm1
        if bc == "periodic":
            self.face_weight = geom.warp(self.nodes + self.h / 2.0) ** nm1
        elif bc == "neumann_zero":
            self.face_weight = geom.warp(self.nodes[:-1] + self.h / 2.0) ** nm1
        else:
            self.face_weight = geom.warp(self.a + self.h * np.arange(n_cells + 1)) ** nm1

        q = self.node_weight * self.h
        if bc == "neumann_zero":
            q[0] *= 0.5
            q[-1] *= 0.5
        self.quad_weight = q * geom.fiber_volume

        line = np.full(self.size, self.h)
        if bc == "neumann_zero":
            line[0] *= 0.5
            line[-1] *= 0.5
        self.line_weight = line  # plain-dt integration along the axis

    # -- constructors ----------------------------------------------------

    @classmethod
    def periodic(cls, geom, epsilon, refine=RESOLUTION_FACTOR):
        n = _points_for(geom.period, epsilon, refine)
        return cls(geom, geom.domain[0], geom.domain[1], n, "periodic", epsilon)

    @classmethod
    def interval(cls, geom, epsilon, a=None, b=None, bc="neumann_zero",
                 refine=RESOLUTION_FACTOR):
        a = geom.domain[0] if a is None else float(a)
        b = geom.domain[1] if b is None else float(b)
        if not a < b:
            raise ValueError("need a < b")
        n = _points_for(b - a, epsilon, refine)
        return cls(geom, a, b, n, bc, epsilon)

    def subinterval(self, a, b, bc="dirichlet_zero"):
        """Sub-grid over (a, b) at this grid's resolution (cell layout)."""
        n = max(4, int(round((b - a) / self.h)))
        return Grid(self.geom, a, b, n, bc, self.epsilon)

    # -- contracts --------------------------------------------------------

    def check_resolution(self, epsilon, factor=RESOLUTION_FACTOR):
        if self.h > epsilon / factor * (1.0 + 1e-12):
            raise ResolutionError(
                f"h = {self.h:.4e} violates the resolution contract "
                f"h <= eps/{factor:g} for eps = {epsilon:.4e}")

    def field(self, values):
        return Field(self, np.asarray(values, dtype=float))

    def sample(self, fn):
        return Field(self, np.asarray(fn(self.nodes), dtype=float))

    def zeros(self):
        return Field(self, np.zeros(self.size))

    # -- weighted Laplacian -----------------------------------------------

    def lap(self, u, epsilon):
        """Apply eps^2 Delta_w in flux form to a value array."""
        h2 = self.h * self.h
        e2 = epsilon * epsilon
        if self.bc == "periodic":
            am = np.roll(self.face_weight, 1)
            return e2 * (self.face_weight * (np.roll(u, -1) - u)
                         - am * (u - np.roll(u, 1))) / (self.node_weight * h2)
        if self.bc == "neumann_zero":
            out = np.empty_like(u)
            flux = self.face_weight * (u[1:] - u[:-1])
            out[1:-1] = (flux[1:] - flux[:-1]) / (self.node_weight[1:-1] * h2)
            out[0] = 2.0 * flux[0] / (self.node_weight[0] * h2)
            out[-1] = -2.0 * flux[-1] / (self.node_weight[-1] * h2)
            return e2 * out
        # cell layout: Dirichlet faces via odd ghosts; pole faces have zero weight
        flux = np.empty(self.size + 1)
        flux[1:-1] = self.face_weight[1:-1] * (u[1:] - u[:-1])
        flux[0] = self.face_weight[0] * 2.0 * u[0]
        flux[-1] = -self.face_weight[-1] * 2.0 * u[-1]
        return e2 * (flux[1:] - flux[:-1]) / (self.node_weight * h2)

    def lap_tridiag(self, epsilon):
        """(lower, diagonal, upper) bands of eps^2 Delta_w.

        For periodic grids the two cyclic corner entries are returned as a
        third element; band solvers must go through :meth:`shifted_solver`.
        """
        h2 = self.h * self.h
        e2 = epsilon * epsilon
        n = self.size
        lo = np.zeros(n)
        di = np.zeros(n)
        up = np.zeros(n)
        if self.bc == "periodic":
            am = np.roll(self.face_weight, 1)
            di = -e2 * (self.face_weight + am) / (self.node_weight * h2)
            up = e2 * self.face_weight / (self.node_weight * h2)
            lo = e2 * am / (self.node_weight * h2)
            corners = (lo[0], up[-1])  # A[0, n-1], A[n-1, 0]
            return lo, di, up, corners
        if self.bc == "neumann_zero":
            a = self.face_weight
            di[1:-1] = -e2 * (a[1:] + a[:-1]) / (self.node_weight[1:-1] * h2)
            up[1:-1] = e2 * a[1:] / (self.node_weight[1:-1] * h2)
            lo[1:-1] = e2 * a[:-1] / (self.node_weight[1:-1] * h2)
            di[0] = -2.0 * e2 * a[0] / (self.node_weight[0] * h2)
            up[0] = 2.0 * e2 * a[0] / (self.node_weight[0] * h2)
            di[-1] = -2.0 * e2 * a[-1] / (self.node_weight[-1] * h2)
            lo[-1] = 2.0 * e2 * a[-1] / (self.node_weight[-1] * h2)
            return lo, di, up, None
        f = self.face_weight
        di = -e2 * (f[:-1] + f[1:]) / (self.node_weight * h2)
        di[0] = -e2 * (2.0 * f[0] + f[1]) / (self.node_weight[0] * h2)
        di[-1] = -e2 * (f[-2] + 2.0 * f[-1]) / (self.node_weight[-1] * h2)
        up[:-1] = e2 * f[1:-1] / (self.node_weight[:-1] * h2)
        lo[1:] = e2 * f[1:-1] / (self.node_weight[1:] * h2)
        return lo, di, up, None

    def shifted_solver(self, epsilon, shift):
        """Factorized solver for (eps^2 Delta_w + diag(shift)) x = rhs."""
        lo, di, up, corners = self.lap_tridiag(epsilon)
        di = di + np.broadcast_to(np.asarray(shift, dtype=float), di.shape)
        if corners is None:
            ab = np.zeros((3, self.size))
            ab[0, 1:] = up[:-1]
            ab[1, :] = di
            ab[2, :-1] = lo[1:]

            class _Banded:
                def solve(self_inner, rhs):
                    return solve_banded((1, 1), ab, rhs)

            return _Banded()
        mat = self._cyclic_matrix(lo, di, up, corners)
        try:
            lu = spla.splu(mat)
        except RuntimeError as exc:
            raise SolverError(f"factorization failed: {exc}") from exc

        class _Cyclic:
            def solve(self_inner, rhs):
                return lu.solve(rhs)

        return _Cyclic()

    def symmetrized_tridiag(self, epsilon, potential):
        """Bands of D^(1/2) (-eps^2 Delta_w + diag(potential)) D^(-1/2).

        D is the quadrature weight, so this matrix is genuinely symmetric and
        congruent to the weighted operator pencil.  Returns (main, off,
        corner) where corner is the cyclic entry or None.
        """
        lo, di, up, corners = self.lap_tridiag(epsilon)
        main = -di + np.asarray(potential, dtype=float)
        s = np.sqrt(self.quad_weight)
        off = -up[:-1] * s[:-1] / s[1:]
        corner = None
        if corners is not None:
            corner = -corners[1] * s[-1] / s[0]  # A[n-1,0] symmetrized
        return main, off, corner

    def operator_matrix(self, epsilon, shift):
        """Sparse matrix of eps^2 Delta_w + diag(shift)."""
        lo, di, up, corners = self.lap_tridiag(epsilon)
        di = di + np.broadcast_to(np.asarray(shift, dtype=float), di.shape)
        if corners is None:
            return sp.diags([lo[1:], di, up[:-1]], [-1, 0, 1], format="csc")
        return self._cyclic_matrix(lo, di, up, corners)

    def _cyclic_matrix(self, lo, di, up, corners):
        n = self.size
        rows = np.concatenate([np.arange(n), np.arange(n - 1),
                               np.arange(1, n), [0, n - 1]])
        cols = np.concatenate([np.arange(n), np.arange(1, n),
                               np.arange(n - 1), [n - 1, 0]])
        vals = np.concatenate([di, up[:-1], lo[1:], corners])
        return sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsc()

    # -- flat helpers -----------------------------------------------------

    def flat_second_difference(self, u):
        """Plain u'' by central differences with this grid's ghost rules."""
        h2 = self.h * self.h
        if self.bc == "periodic":
            return (np.roll(u, -1) - 2.0 * u + np.roll(u, 1)) / h2
        out = np.empty_like(u)
        out[1:-1] = (u[2:] - 2.0 * u[1:-1] + u[:-2]) / h2
        if self.bc == "neumann_zero":
            out[0] = 2.0 * (u[1] - u[0]) / h2
            out[-1] = 2.0 * (u[-2] - u[-1]) / h2
        else:
            out[0] = (u[1] - 3.0 * u[0]) / h2
            out[-1] = (u[-2] - 3.0 * u[-1]) / h2
        return out

    def gradient(self, u):
        """Central-difference gradient with this grid's ghost rules."""
        if self.bc == "periodic":
            return (np.roll(u, -1) - np.roll(u, 1)) / (2.0 * self.h)
        out = np.empty_like(u)
        out[1:-1] = (u[2:] - u[:-2]) / (2.0 * self.h)
        if self.bc == "neumann_zero":
            out[0] = 0.0
            out[-1] = 0.0
        else:
            out[0] = (u[1] + u[0]) / (2.0 * self.h)
            out[-1] = -(u[-1] + u[-2]) / (2.0 * self.h)
        return out

    def line_integral(self, values):
        """Unweighted integral along the axis (plain dt)."""
        return float(np.sum(values * self.line_weight))

    def offset(self, center):
        """Signed node offsets from center: plain differences on bounded
        grids, wrapped to (-P/2, P/2] on periodic ones."""
        if self.bc == "periodic":
            from .geometry import signed_distance
            return signed_distance(self.geom, center, self.nodes)
        return self.nodes - center


@dataclass
class Field:
    """A discrete real function on a grid; arithmetic requires grid identity."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.size,):
            raise ValueError("value array does not match the grid")

    def new_like(self, values):
        return Field(self.grid, values)

    def copy(self):
        return Field(self.grid, self.values.copy())

    def _coerce(self, other):
        if isinstance(other, Field):
            if other.grid is not self.grid:
                raise ValueError("fields live on different grids")
            return other.values
        return other

    def __add__(self, other):
        return Field(self.grid, self.values + self._coerce(other))

    def __sub__(self, other):
        return Field(self.grid, self.values - self._coerce(other))

    def __mul__(self, other):
        return Field(self.grid, self.values * self._coerce(other))

    __radd__ = __add__
    __rmul__ = __mul__

    def __neg__(self):
        return Field(self.grid, -self.values)

    @property
    def sup_norm(self):
        return float(np.max(np.abs(self.values)))

    def to_csv(self, path):
        """Serialize as (t_i, value) CSV columns."""
        arr = np.column_stack([self.grid.nodes, self.values])
        np.savetxt(path, arr, delimiter=",", header="t,value", comments="",
                   fmt="%.17g")


def weighted_laplacian(u: Field, epsilon) -> Field:
    """eps^2 Delta_w u in flux (divergence) form; symmetric in the weighted
    inner product by construction."""
    u.grid.check_resolution(epsilon)
    return u.new_like(u.grid.lap(u.values, epsilon))


def quadrature(f: Field) -> float:
    """Weighted integral over the manifold: sum f w^(n-1) h * fiber_volume."""
    return float(np.sum(f.values * f.grid.quad_weight))


def energy(u: Field, epsilon) -> float:
    """E(u) = int eps |grad u|^2 / 2 + W(u)/eps over the geometry."""
    u.grid.check_resolution(epsilon)
    g = u.grid.gradient(u.values)
    integrand = epsilon * g * g / 2.0 + WELL.value(u.values) / epsilon
    return float(np.sum(integrand * u.grid.quad_weight))


def weighted_inner(u: Field, v: Field) -> float:
    if u.grid is not v.grid:
        raise ValueError("fields live on different grids")
    return float(np.sum(u.values * v.values * u.grid.quad_weight))
