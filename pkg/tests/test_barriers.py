import math

import numpy as np
import pytest

from aclab import (BarrierAssembler, CmcFamily, CutoffProfile, Grid, SQRT2,
                   WarpedGeometry, assemble_barrier, compute_lambda,
                   eval_psi, find_minimal_slices, invert_at_infinity,
                   invert_orthogonal, newton_solve, sliding_trap)
from aclab.barriers import orthogonality_residual
from aclab.errors import GeometryError
from aclab.profiles import WELL, psi_prime
from aclab.solver import SolverConfig, Solution, residual
from aclab.discretization import energy


@pytest.fixture(scope="module")
def assembler(torus, stable_base):
    eps = 0.02
    grid = Grid.interval(torus, eps, bc="neumann_zero", refine=16)
    return BarrierAssembler(torus, stable_base, eps, grid=grid, K=5.0)


class TestLambda:
    def test_flat_geometry_zero(self):
        flat = WarpedGeometry.torus(a=0.0)
        base = find_minimal_slices(flat)[0]
        assert compute_lambda(flat, base, 0.0, 0.05) == 0.0

    def test_leading_order_ratio(self, torus, stable_base):
        # sigma2 / sigma1 = (2 sqrt2 / 3) / 2 = sqrt2 / 3, reached as eps -> 0
        H = 0.01
        fam = CmcFamily(torus, stable_base)
        lam = compute_lambda(torus, stable_base, H, 0.005,
                             CutoffProfile.with_radius(0.005, 0.7), fam)
        assert abs(lam / H - SQRT2 / 3.0) < 1e-3

    def test_defining_orthogonality(self, torus, stable_base):
        # independent quadrature of int (Q(omega_H) + eps lambda) omega' dt
        eps, H = 0.02, 0.05
        prof = CutoffProfile.with_radius(eps, 0.7)
        fam = CmcFamily(torus, stable_base)
        lam = compute_lambda(torus, stable_base, H, eps, prof, fam)
        res = orthogonality_residual(torus, fam.position(H), H, eps, prof,
                                     lam)
        assert res < 1e-8


class TestInvertAtInfinity:
    def test_zero_maps_to_zero(self, torus):
        grid = Grid.interval(torus, 0.05, bc="neumann_zero", refine=8)
        out = invert_at_infinity(grid.zeros(), 0.05)
        assert out.sup_norm == 0.0

    def test_constant_halves(self, torus):
        # (eps^2 lap - 2) v = -c has v = c/2 before any projection
        grid = Grid.interval(torus, 0.05, bc="neumann_zero", refine=8)
        c = 0.34
        out = invert_at_infinity(grid.sample(lambda t: np.full_like(t, c)),
                                 0.05)
        assert np.max(np.abs(out.values - c / 2.0)) < 1e-12

    @pytest.mark.parametrize("eps", [0.05, 0.025])
    def test_coercivity_constant(self, torus, eps):
        # max principle gives ||v|| <= ||f|| / 2; measure C <= 0.6
        grid = Grid.interval(torus, eps, bc="neumann_zero", refine=8)
        rng = np.random.default_rng(13)
        worst = 0.0
        for _ in range(5):
            f = grid.field(rng.standard_normal(grid.size))
            v = invert_at_infinity(f, eps)
            worst = max(worst, v.sup_norm / f.sup_norm)
        assert worst <= 0.6

    def test_projection_removes_kernel_component(self, torus, stable_base):
        eps = 0.02
        grid = Grid.interval(torus, eps, bc="neumann_zero", refine=16)
        prof = CutoffProfile.with_radius(eps, 0.7)
        f = grid.sample(lambda t: np.cos(t))
        out = invert_at_infinity(f, eps, profile=prof,
                                 center=stable_base.position)
        omp = prof.omega_prime(grid.offset(stable_base.position))
        overlap = grid.line_integral(out.values * omp)
        assert abs(overlap) < 1e-10 * grid.line_integral(np.abs(omp))


class TestInvertOrthogonal:
    def test_round_trip(self, torus, stable_base):
        # manufactured orthogonal rho; apply the same discrete operator,
        # invert, and recover rho to better than 1e-6 relative
        eps = 0.02
        grid = Grid.interval(torus, eps, bc="neumann_zero", refine=16)
        c = stable_base.position
        d = grid.offset(c)
        rho = (d / eps) * psi_prime(d / eps)  # odd: orthogonal to psi'
        g = eps ** 2 * grid.flat_second_difference(rho) \
            - WELL.second(eval_psi(d / eps)) * rho
        # collar wide enough that the support cut does not clip rho itself
        inv = invert_orthogonal(grid.field(g), eps, c,
                                CutoffProfile.with_radius(eps, 0.7))
        err = np.max(np.abs(inv.field.values - rho)) / np.max(np.abs(rho))
        assert err < 1e-6
        assert inv.discarded_norm < 1e-9

    def test_kernel_direction_discarded(self, torus, stable_base):
        eps = 0.02
        grid = Grid.interval(torus, eps, bc="neumann_zero", refine=16)
        c = stable_base.position
        g = grid.field(psi_prime(grid.offset(c) / eps))
        inv = invert_orthogonal(g, eps, c)
        assert inv.field.sup_norm < 1e-9
        assert inv.discarded_norm > 0.9 * g.sup_norm

    @pytest.mark.parametrize("eps", [0.05, 0.025])
    def test_inverse_bound_stable(self, torus, stable_base, eps):
        grid = Grid.interval(torus, eps, bc="neumann_zero", refine=8)
        c = stable_base.position
        d = grid.offset(c)
        g = np.exp(-(d / (4 * eps)) ** 2) * np.sin(d / eps)
        inv = invert_orthogonal(grid.field(g), eps, c)
        ratio = inv.field.sup_norm / np.max(np.abs(g))
        # continuum bound ||v|| <= C ||g||; the constant is order 1/gap
        assert ratio < 2.0


class TestAssembleBarrier:
    @pytest.mark.parametrize("sign", [+1, -1])
    def test_sign_certificate(self, assembler, sign):
        res = assembler.assemble(sign * 0.1)
        assert res.sign_uniform
        assert res.margin > 0
        assert res.min_abs_residual == res.margin
        assert res.offending_nodes == []
        assert res.orthogonality_residual < 1e-8

    def test_mirror_symmetry(self, assembler):
        bp = assembler.assemble(+0.1)
        bm = assembler.assemble(-0.1)
        assert abs(bp.margin - bm.margin) < 1e-10
        assert abs(bp.lam + bm.lam) < 1e-12
        assert abs((bp.center - math.pi) + (bm.center - math.pi)) < 1e-9

    def test_phi_norm_scaling(self, torus, stable_base):
        # || phi || = O(eps H): the ratio is bounded within a factor 3
        ratios = []
        for eps in (0.04, 0.02, 0.01):
            H = 5.0 * eps
            grid = Grid.interval(torus, eps, bc="neumann_zero", refine=16)
            res = assemble_barrier(torus, stable_base, H, eps, grid=grid)
            ratios.append(res.phi_norm / (eps * H))
        assert max(ratios) / min(ratios) < 3.0

    def test_nodal_position_tracks_cmc(self, assembler, torus, stable_base):
        res = assembler.assemble(0.1)
        fam = CmcFamily(torus, stable_base)
        assert abs(res.nodal_position - fam.position(0.1)) < 0.02

    def test_monotone_in_curvature(self, assembler):
        ladder = (0.1, 0.14, 0.2)
        fields = [assembler.assemble(H).v.values for H in ladder]
        assert np.all(fields[1] - fields[0] > -1e-10)
        assert np.all(fields[2] - fields[1] > -1e-10)

    def test_floor_and_ceiling(self, assembler):
        with pytest.raises(GeometryError):
            assembler.assemble(0.01)  # below K eps
        with pytest.raises(GeometryError):
            assembler.assemble(0.9)   # beyond the CMC family


class TestSlidingTrap:
    def test_traps_interface_state(self, torus, stable_base, t0_solution):
        rep = sliding_trap(t0_solution, torus, stable_base, 0.02, K=5.0,
                           tau=0.25)
        assert rep.applicable and rep.trapped
        assert rep.violation is None
        assert rep.nodal_distance_over_eps <= 3.0
        assert all(r.sign_ok for r in rep.rungs)
        assert all(r.gap_above > 0 and r.gap_below > 0 for r in rep.rungs)
        assert rep.collar_over_eps < 15.0

    def test_no_interface_not_applicable(self, torus, stable_base):
        eps = 0.02
        grid = Grid.interval(torus, eps, bc="neumann_zero", refine=16)
        u = grid.sample(np.ones_like)
        sol = Solution(u, eps, 0.0, energy(u, eps), True, 0)
        rep = sliding_trap(sol, torus, stable_base, eps, K=5.0, tau=0.25)
        assert not rep.applicable
        assert "not applicable" in rep.violation

    def test_negative_control_pair_at_unstable(self, torus, stable_base):
        # a two-interface state hugging the unstable slice is NOT trapped
        eps = 0.02
        grid = Grid.interval(torus, eps, bc="neumann_zero", refine=16)
        t = grid.nodes
        d0 = 3.8 * eps
        seed = np.clip(-eval_psi((t - d0) / eps)
                       * eval_psi((t - (2 * math.pi - d0)) / eps), -1, 1)
        sol = newton_solve(grid.field(seed), eps,
                           SolverConfig(max_newton_iters=800))
        assert sol.converged
        rep = sliding_trap(sol, torus, stable_base, eps, K=5.0, tau=0.25)
        assert rep.applicable and not rep.trapped
        assert "rung H" in rep.violation

    def test_requires_stable_base(self, torus, unstable_base, t0_solution):
        with pytest.raises(GeometryError):
            sliding_trap(t0_solution, torus, unstable_base, 0.02)
