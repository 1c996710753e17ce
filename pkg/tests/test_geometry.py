import math

import numpy as np
import pytest

from aclab import (CmcFamily, WarpedGeometry, cmc_slice, find_minimal_slices,
                   mean_curvature, signed_distance)
from aclab.errors import GeometryError
from aclab.geometry import DEGENERATE, STRICTLY_STABLE, UNSTABLE

TWO_PI = 2.0 * math.pi


class TestMeanCurvature:
    def test_flat_warp_zero(self):
        flat = WarpedGeometry.torus(a=0.0)
        t = np.linspace(0, TWO_PI, 33)
        assert np.allclose(mean_curvature(flat, t), 0.0)

    def test_critical_point(self, torus):
        assert abs(mean_curvature(torus, math.pi)) < 1e-14

    def test_hand_evaluated_value(self, torus):
        # -(n-1) w'(pi/2) / w(pi/2) = -(1)(-0.3)/1 = 0.3
        assert abs(mean_curvature(torus, math.pi / 2) - 0.3) < 1e-14

    def test_pole_refusal(self, sphere):
        with pytest.raises(GeometryError):
            mean_curvature(sphere, 0.0)
        with pytest.raises(GeometryError):
            mean_curvature(sphere, math.pi)

    def test_period_integral_vanishes(self, torus):
        # integral of H w^(n-1) over a period is -(w^(n-1))' integrated = 0
        t = np.linspace(0.0, TWO_PI, 20001)
        integrand = mean_curvature(torus, t) * torus.weight(t)
        assert abs(np.trapezoid(integrand, t)) < 1e-10


class TestMinimalSlices:
    def test_torus_slices(self, torus):
        slices = find_minimal_slices(torus)
        assert len(slices) == 2
        unstable, stable = slices
        assert abs(unstable.position - 0.0) < 1e-9
        assert unstable.stability == UNSTABLE
        assert abs(stable.position - math.pi) < 1e-9
        assert stable.stability == STRICTLY_STABLE
        assert abs(stable.area - TWO_PI * 0.7) < 1e-8
        assert abs(unstable.area - TWO_PI * 1.3) < 1e-8

    def test_stability_matches_area_second_difference(self, torus):
        # strictly stable iff the slice area has a local minimum
        for s in find_minimal_slices(torus):
            d = 1e-3
            a0 = torus.weight(s.position)
            curv = (torus.weight(s.position + d) - 2 * a0
                    + torus.weight(s.position - d)) / d ** 2
            assert (curv > 0) == (s.stability == STRICTLY_STABLE)

    def test_sphere_equator(self, sphere):
        slices = find_minimal_slices(sphere)
        assert len(slices) == 1
        eq = slices[0]
        assert abs(eq.position - math.pi / 2) < 1e-9
        assert eq.stability == UNSTABLE
        # oracle: second variation of the parallel length L = 2 pi sin(theta)
        # gives L''(pi/2)/L(pi/2) = -1
        d = 1e-4
        num = (math.sin(math.pi / 2 + d) - 2.0 + math.sin(math.pi / 2 - d))
        assert abs(eq.jacobi_eigenvalue - num / d ** 2) < 1e-6
        assert abs(eq.jacobi_eigenvalue + 1.0) < 1e-12

    def test_flat_warp_degenerate(self):
        flat = WarpedGeometry.torus(a=0.0)
        slices = find_minimal_slices(flat)
        assert len(slices) == 1
        assert slices[0].stability == DEGENERATE

    def test_torus_jacobi_values(self, torus):
        unstable, stable = find_minimal_slices(torus)
        assert abs(stable.jacobi_eigenvalue - 0.3 / 0.7) < 1e-9
        assert abs(unstable.jacobi_eigenvalue + 0.3 / 1.3) < 1e-9


class TestCmcSlices:
    def test_zero_curvature_fixed_point(self, torus, stable_base):
        out = cmc_slice(torus, stable_base, 0.0)
        assert abs(out.position - stable_base.position) < 1e-12

    def test_against_bisection_oracle(self, torus, stable_base):
        H = 0.01
        out = cmc_slice(torus, stable_base, H)
        lo, hi = math.pi - 0.2, math.pi
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if mean_curvature(torus, mid) - H > 0:
                lo = mid
            else:
                hi = mid
        assert abs(out.position - 0.5 * (lo + hi)) < 1e-10
        # first-order expansion: c = pi - H w(pi) / ((n-1) w''(pi)) + O(H^2)
        assert abs(out.position - (math.pi - H * 0.7 / 0.3)) < 2e-4

    def test_monotone_in_curvature(self, torus, stable_base):
        fam = CmcFamily(torus, stable_base)
        Hs = np.linspace(-0.05, 0.05, 11)
        cs = [fam.position(H) for H in Hs]
        assert np.all(np.diff(cs) < 0)

    def test_carries_slice_data(self, torus, stable_base):
        out = cmc_slice(torus, stable_base, 0.05)
        assert abs(out.mean_curvature - 0.05) < 1e-10
        assert out.area == torus.weight(out.position) * torus.fiber_volume

    def test_out_of_range(self, torus, stable_base):
        fam = CmcFamily(torus, stable_base)
        with pytest.raises(GeometryError):
            fam.position(2.0 * fam.tau)

    def test_degenerate_base_rejected(self):
        flat = WarpedGeometry.torus(a=0.0)
        base = find_minimal_slices(flat)[0]
        with pytest.raises(GeometryError):
            CmcFamily(flat, base)

    def test_area_minimal_at_stable_base(self, torus, stable_base,
                                         unstable_base):
        fam = CmcFamily(torus, stable_base)
        areas = [torus.weight(fam.position(H)) for H in (-0.02, 0.0, 0.02)]
        assert areas[1] < areas[0] and areas[1] < areas[2]
        fam_u = CmcFamily(torus, unstable_base)
        areas_u = [torus.weight(fam_u.position(H)) for H in (-0.02, 0.0, 0.02)]
        assert areas_u[1] > areas_u[0] and areas_u[1] > areas_u[2]


class TestSignedDistance:
    def test_zero_at_slice(self, torus, stable_base):
        assert abs(signed_distance(torus, stable_base, math.pi)) < 1e-12

    def test_boundary_convention(self, torus):
        # antipodal point resolves to +P/2 exactly
        assert signed_distance(torus, math.pi, 0.0) == math.pi

    def test_plain_offset(self, torus, stable_base):
        assert abs(signed_distance(torus, stable_base, math.pi + 0.3)
                   - 0.3) < 1e-14

    def test_wrapping(self, torus):
        assert abs(signed_distance(torus, 0.1, TWO_PI - 0.1) + 0.2) < 1e-12

    def test_non_periodic_plain(self, sphere):
        assert abs(signed_distance(sphere, 1.0, 2.5) - 1.5) < 1e-14


class TestTabulated:
    def test_matches_analytic_torus(self, torus):
        t = np.linspace(0.0, TWO_PI, 4097)[:-1]
        tab = WarpedGeometry.tabulated(t, torus.warp(t))
        probe = np.linspace(0.1, 6.0, 57)
        assert np.max(np.abs(tab.warp(probe) - torus.warp(probe))) < 1e-5
        assert np.max(np.abs(mean_curvature(tab, probe)
                             - mean_curvature(torus, probe))) < 1e-4
        slices = find_minimal_slices(tab)
        assert len(slices) == 2
        stable = [s for s in slices if s.stability == STRICTLY_STABLE]
        unstable = [s for s in slices if s.stability == UNSTABLE]
        assert len(stable) == 1 and len(unstable) == 1
        assert abs(signed_distance(tab, math.pi, stable[0].position)) < 1e-3
        assert abs(signed_distance(tab, 0.0, unstable[0].position)) < 1e-3

    def test_rejects_bad_tables(self):
        with pytest.raises(ValueError):
            WarpedGeometry.tabulated([0, 1, 2], [1, 1, 1])
        with pytest.raises(ValueError):
            WarpedGeometry.tabulated([0, 1, 2, 4], [1, 1, 1, 1])
        with pytest.raises(ValueError):
            WarpedGeometry.tabulated([0, 1, 2, 3], [1, 1, -1, 1])


class TestVolume:
    def test_torus_volume(self, torus):
        # Vol = int 2 pi (1 + 0.3 cos t) dt = 4 pi^2
        assert abs(torus.volume() - 4 * math.pi ** 2) < 1e-6

    def test_sphere_area(self, sphere):
        # |S^2| = 4 pi: int 2 pi sin = 4 pi
        assert abs(sphere.volume() - 4 * math.pi) < 1e-6
