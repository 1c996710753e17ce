"""End-to-end experiment pipelines and their persisted records.

Every pipeline returns a list of :class:`StudyRecord` whose CSV columns are
frozen (see ``CSV_HEADER``); anything experiment-specific travels in the
non-serialized ``extra`` dict.  Field data is persisted through an
:class:`OutputSink` so that each record's claims can be re-derived from the
saved solutions by the analysis module alone.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (decay_fit, decompose, hausdorff_to_slice, morse_index,
                       multiplicity_estimate, nodal_set)
from .barriers import BarrierAssembler, sliding_trap
from .config import RunConfig
from .discretization import Field, Grid, energy
from .errors import GeometryError, LabError, SolverError
from .geometry import (STRICTLY_STABLE, CmcFamily, WarpedGeometry,
                       find_minimal_slices, signed_distance)
from .profiles import INTERFACE_ENERGY, CutoffProfile, eval_psi
from .solver import (Solution, SolverConfig, gradient_flow, minimize_dirichlet,
                     newton_solve, residual)

CSV_HEADER = ("experiment,epsilon,geometry,energy,mult_ratio,"
              "hausdorff_over_eps,decay_slope,index,xi,phi_sup,"
              "barrier_margin_pos,barrier_margin_neg,wall_time_s")


@dataclass
class StudyRecord:
    """One (epsilon, experiment) result row with the frozen CSV schema."""

    experiment: str
    epsilon: float
    geometry: str = ""
    energy: float | None = None
    mult_ratio: float | None = None
    hausdorff_over_eps: float | None = None
    decay_slope: float | None = None
    index: int | None = None
    xi: float | None = None
    phi_sup: float | None = None
    barrier_margin_pos: float | None = None
    barrier_margin_neg: float | None = None
    wall_time_s: float | None = None
    extra: dict = dc_field(default_factory=dict)

    def to_csv_row(self):
        def fmt(v):
            if v is None:
                return ""
            if isinstance(v, bool):
                return str(int(v))
            if isinstance(v, (int, np.integer)):
                return str(int(v))
            return format(float(v), ".12g")

        cols = [self.experiment, fmt(self.epsilon), self.geometry,
                fmt(self.energy), fmt(self.mult_ratio),
                fmt(self.hausdorff_over_eps), fmt(self.decay_slope),
                fmt(self.index), fmt(self.xi), fmt(self.phi_sup),
                fmt(self.barrier_margin_pos), fmt(self.barrier_margin_neg),
                fmt(self.wall_time_s)]
        return ",".join(cols)


def geometry_hash(geom: WarpedGeometry) -> str:
    return hashlib.sha256(geom.describe().encode()).hexdigest()[:12]


def _atomic_write(path: Path, text: str):
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


class OutputSink:
    """Accumulates records and field files under one output directory."""

    def __init__(self, out_dir, force=False):
        self.dir = Path(out_dir)
        self.csv_path = self.dir / "study.csv"
        if self.csv_path.exists() and not force:
            raise FileExistsError(
                f"{self.csv_path} exists; pass --force to overwrite")
        (self.dir / "fields").mkdir(parents=True, exist_ok=True)
        self.records = []
        self.timings = {}
        self._t0 = time.perf_counter()

    def save_field(self, name, fld: Field):
        fld.to_csv(self.dir / "fields" / f"{name}.csv")

    def save_solution(self, name, sol: Solution):
        sol.save(self.dir / "fields", name)

    def add(self, *records):
        self.records.extend(records)

    def time_block(self, name):
        sink = self

        class _Timer:
            def __enter__(self):
                self.t = time.perf_counter()

            def __exit__(self, *exc):
                sink.timings[name] = sink.timings.get(name, 0.0) + (
                    time.perf_counter() - self.t)

        return _Timer()

    def finalize(self, cfg: RunConfig | None = None):
        rows = [CSV_HEADER] + [r.to_csv_row() for r in self.records]
        _atomic_write(self.csv_path, "\n".join(rows) + "\n")
        manifest = {
            "version": __version__,
            "numpy": np.__version__,
            "scipy": __import__("scipy").__version__,
            "config": cfg.echo() if cfg is not None else {},
            "timings_s": {k: round(v, 3) for k, v in self.timings.items()},
            "records": len(self.records),
            "total_wall_s": round(time.perf_counter() - self._t0, 3),
        }
        _atomic_write(self.dir / "manifest.json",
                      json.dumps(manifest, indent=2, sort_keys=True))
        return self.csv_path


def loglog_slope(xs, ys):
    """Least-squares slope of log(y) against log(x)."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


# ---------------------------------------------------------------------------
# shared torus pipeline pieces
# ---------------------------------------------------------------------------

def stable_slice(geom):
    for s in find_minimal_slices(geom):
        if s.stability == STRICTLY_STABLE:
            return s
    raise GeometryError("geometry has no strictly stable minimal slice")


def unstable_slice(geom):
    for s in find_minimal_slices(geom):
        if s.stability == "unstable":
            return s
    raise GeometryError("geometry has no unstable minimal slice")


def solve_single_interface(geom, epsilon, cfg: RunConfig, rng=None,
                           refine=None) -> tuple:
    """Newton solution with one interface at the stable slice, on the
    zero-flux fundamental interval (a 1-crossing periodic field cannot
    exist, so these studies run on the interval cut at the unstable slice)."""
    base = stable_slice(geom)
    refine = refine or cfg.refine_for(epsilon)
    grid = Grid.interval(geom, epsilon, bc="neumann_zero", refine=refine)
    seed = eval_psi((grid.nodes - base.position) / epsilon)
    if rng is not None and cfg.noise > 0:
        seed = seed + cfg.noise * rng.standard_normal(grid.size)
    sol = newton_solve(grid.field(seed), epsilon,
                       SolverConfig(newton_tol=cfg.newton_tol))
    if not sol.converged:
        raise SolverError(f"interface solve failed at eps = {epsilon}")
    return grid, sol, base


def _pair_state_at_unstable(geom, epsilon, cfg: RunConfig):
    """Two-interface state over the unstable slice, by even reduction.

    The state is even across the unstable slice, so it is solved as a single
    interface on the half interval with zero-flux ends and mirrored onto the
    periodic grid, where it satisfies the discrete equation exactly.
    A coarse energy scan over the interface offset seeds Newton at the
    (energy-maximizing) separation, which is where the saddle sits.
    """
    t1 = unstable_slice(geom)
    t0 = stable_slice(geom)
    half_span = abs(signed_distance(geom, t1, t0.position))
    refine = cfg.refine_for(epsilon)
    half = Grid.interval(geom, epsilon, a=t1.position,
                         b=t1.position + half_span, bc="neumann_zero",
                         refine=refine)

    def seed_values(d):
        return eval_psi((d - (half.nodes - t1.position)) / epsilon)

    offsets = np.linspace(2 * epsilon, 12 * epsilon, 81)
    energies = [energy(half.field(seed_values(d)), epsilon) for d in offsets]
    d0 = offsets[int(np.argmax(energies))]
    # the breathing coordinate of the pair is soft (its eigenvalue is the
    # unstable one), so the damped iteration creeps before the quadratic
    # finish; the budget reflects that
    sol = newton_solve(half.field(seed_values(d0)), epsilon,
                       SolverConfig(newton_tol=cfg.newton_tol,
                                    max_newton_iters=800))
    if not sol.converged:
        raise SolverError("pair state solve failed on the half interval")

    full = Grid.periodic(geom, epsilon, refine=refine)
    n_half = half.size - 1
    if full.size != 2 * n_half or abs(full.h - half.h) > 1e-15:
        raise LabError("half and periodic grids are misaligned")
    vals = np.empty(full.size)
    vals[:n_half + 1] = sol.field.values
    vals[n_half + 1:] = sol.field.values[-2:0:-1]
    fld = full.field(vals)
    rn = residual(fld, epsilon).sup_norm
    mirrored = Solution(fld, epsilon, rn, energy(fld, epsilon),
                        rn <= cfg.newton_tol * 10, sol.iterations)
    if not mirrored.converged:
        raise SolverError(
            f"mirrored pair state residual too large: {rn:.3e}")
    return mirrored, t1


# ---------------------------------------------------------------------------
# sphere pipeline (example 1)
# ---------------------------------------------------------------------------

def _face_derivative_left(grid, values):
    # one-sided second-order estimate at the left Dirichlet face
    return (9.0 * values[0] - values[1]) / (3.0 * grid.h)


def _face_derivative_right(grid, values):
    return -(9.0 * values[-1] - values[-2]) / (3.0 * grid.h)


def _cap_band_solutions(geom, tau, epsilon, cfg, refine):
    theta_c = float(np.arccos(tau))
    scfg = SolverConfig(newton_tol=cfg.newton_tol, flow_max_steps=300)
    cap_grid = Grid.interval(geom, epsilon, a=0.0, b=theta_c,
                             bc="pole_regular", refine=refine)
    cap = minimize_dirichlet(cap_grid, "negative", epsilon, scfg)
    band_grid = Grid.interval(geom, epsilon, a=theta_c, b=np.pi - theta_c,
                              bc="dirichlet_zero", refine=refine)
    band = minimize_dirichlet(band_grid, "positive", epsilon, scfg)
    return theta_c, cap_grid, cap, band_grid, band


def _derivative_mismatch(geom, tau, epsilon, cfg, refine):
    theta_c, cgrid, cap, bgrid, band = _cap_band_solutions(
        geom, tau, epsilon, cfg, refine)
    if not np.any(cap.field.values) or not np.any(band.field.values):
        return None
    return (_face_derivative_left(bgrid, band.field.values)
            - _face_derivative_right(cgrid, cap.field.values))


def _shoot_tau(geom, epsilon, cfg, refine, scan_points=32, tol=1e-8):
    """Scan then bisect the cap/band outer-derivative mismatch over tau."""
    taus = np.linspace(0.5 * epsilon, 12.0 * epsilon, scan_points)
    mism = [_derivative_mismatch(geom, t, epsilon, cfg, refine) for t in taus]
    bracket = None
    for i in range(scan_points - 1):
        a, b = mism[i], mism[i + 1]
        if a is not None and b is not None and a < 0.0 <= b:
            bracket = (taus[i], taus[i + 1])
            break
    if bracket is None:
        curve = ", ".join("None" if m is None else f"{t:.4g}:{m:+.3g}"
                          for t, m in zip(taus, mism))
        raise GeometryError(
            f"no matching tau in scan; derivative-mismatch curve: {curve}")
    lo, hi = bracket
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        m = _derivative_mismatch(geom, mid, epsilon, cfg, refine)
        if m is None or m < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _glued_sphere_solution(geom, tau0, epsilon, cfg, refine):
    theta_c, cgrid, cap, bgrid, band = _cap_band_solutions(
        geom, tau0, epsilon, cfg, refine)
    full = Grid.interval(geom, epsilon, bc="pole_regular", refine=refine)
    vals = np.empty(full.size)
    for i, th in enumerate(full.nodes):
        if th < theta_c:
            vals[i] = np.interp(th, cgrid.nodes, cap.field.values)
        elif th <= np.pi - theta_c:
            vals[i] = np.interp(th, bgrid.nodes, band.field.values)
        else:
            vals[i] = np.interp(np.pi - th, cgrid.nodes, cap.field.values)
    sol = newton_solve(full.field(vals), epsilon,
                       SolverConfig(newton_tol=cfg.newton_tol))
    if not sol.converged:
        raise SolverError("full-sphere polish did not converge")
    return full, sol


def run_example1(cfg: RunConfig, sink: OutputSink | None = None):
    """Antipodally even two-parallel states on the round sphere.

    Per epsilon: shoot on the partition height tau so the cap and band
    minimizers match outer derivatives, glue, polish on the full sphere, and
    record the parallels.  The parallels' distance to the equator must shrink
    as epsilon descends (checked by the caller/acceptance, recorded here).
    """
    geom = cfg.build_geometry()
    if geom.kind != "sphere":
        raise GeometryError("example 1 runs on the sphere")
    equator = find_minimal_slices(geom)[0]
    records = []
    for epsilon in cfg.epsilons:
        t_start = time.perf_counter()
        refine = cfg.refine_base
        tau0 = _shoot_tau(geom, epsilon, cfg, refine)
        grid, sol = _glued_sphere_solution(geom, tau0, epsilon, cfg, refine)
        ns = nodal_set(sol.field)
        if ns.count != 2:
            raise LabError(f"expected 2 parallels, found {ns.count}")
        mid = 0.5 * (ns.crossings[0] + ns.crossings[1])
        asym = abs(mid - np.pi / 2.0)
        if asym > grid.h:
            raise LabError(f"parallels not antipodally symmetric: {asym:.3e}")
        dist = hausdorff_to_slice(ns, equator, geom)
        rec = StudyRecord(
            experiment="example1", epsilon=epsilon,
            geometry=geometry_hash(geom), energy=sol.energy,
            mult_ratio=multiplicity_estimate(sol, equator),
            hausdorff_over_eps=dist / epsilon,
            index=morse_index(sol),
            wall_time_s=time.perf_counter() - t_start,
            extra={"tau0": tau0, "crossings": ns.crossings,
                   "parallel_distance": dist, "solution": sol,
                   "energy_ratio_two_sheets":
                       sol.energy / (2.0 * INTERFACE_ENERGY * equator.area)})
        records.append(rec)
        if sink is not None:
            sink.save_solution(f"example1_eps{epsilon:g}", sol)
            sink.add(rec)
    return records


def run_example2(cfg: RunConfig, sink: OutputSink | None = None):
    """Antipodal quotient bookkeeping of example 1.

    The sphere solutions are even under theta -> pi - theta, so they descend
    to the quotient; the quotient field is the restriction to [0, pi/2] and
    its energy is exactly half.  Multiplicity is recorded against the
    quotient slice, whose area is half the equator's.
    """
    sphere_cfg = cfg.with_overrides(geometry="sphere")
    geom = sphere_cfg.build_geometry()
    equator = find_minimal_slices(geom)[0]
    quotient_area = equator.area / 2.0
    records = []
    for rec1 in run_example1(sphere_cfg):
        epsilon = rec1.epsilon
        t_start = time.perf_counter()
        sol = rec1.extra["solution"]
        grid = sol.field.grid
        half = grid.size // 2
        g = grid.gradient(sol.field.values)
        integrand = (epsilon * g * g / 2.0
                     + (1.0 - sol.field.values ** 2) ** 2 / 4.0 / epsilon)
        e_half = float(np.sum((integrand * grid.quad_weight)[:half]))
        if abs(e_half - sol.energy / 2.0) > 1e-8:
            raise LabError(
                f"quotient energy is not half the cover's: "
                f"{e_half!r} vs {sol.energy / 2.0!r}")
        ns = nodal_set(sol.field)
        quot_cross = [c for c in ns.crossings if c <= np.pi / 2.0]
        rec = StudyRecord(
            experiment="example2", epsilon=epsilon,
            geometry=geometry_hash(geom) + ":quotient",
            energy=e_half,
            mult_ratio=e_half / (INTERFACE_ENERGY * quotient_area),
            hausdorff_over_eps=abs(quot_cross[0] - np.pi / 2.0) / epsilon,
            wall_time_s=time.perf_counter() - t_start,
            extra={"cover_energy": sol.energy, "crossings": quot_cross,
                   "restriction_values": sol.field.values[:half]})
        records.append(rec)
        if sink is not None:
            sink.add(rec)
    return records


def run_example3(cfg: RunConfig, sink: OutputSink | None = None):
    """Foliation dichotomy on the warped torus, three runs per epsilon.

    (i) a two-interface state over the unstable slice (multiplicity two);
    (ii) a two-interface seed hugging the stable slice, relaxed by the flow:
    the interfaces must leave the collar |t - stable| <= 0.1 (annihilation
    counts; a surviving pair inside the collar is recorded as falsifying);
    (iii) the single-interface state at the stable slice with its trap.
    """
    geom = cfg.build_geometry()
    if not geom.periodic:
        raise GeometryError("example 3 runs on the warped torus")
    t0_slice = stable_slice(geom)
    t1_slice = unstable_slice(geom)
    records = []
    for epsilon in cfg.epsilons:
        rng = np.random.default_rng(cfg.seed)
        # (i) pair over the unstable slice
        t_start = time.perf_counter()
        pair, t1 = _pair_state_at_unstable(geom, epsilon, cfg)
        ns = nodal_set(pair.field)
        rec_i = StudyRecord(
            experiment="example3_i", epsilon=epsilon,
            geometry=geometry_hash(geom), energy=pair.energy,
            mult_ratio=multiplicity_estimate(pair, t1),
            hausdorff_over_eps=hausdorff_to_slice(ns, t1, geom) / epsilon,
            index=morse_index(pair),
            wall_time_s=time.perf_counter() - t_start,
            extra={"crossings": ns.crossings, "solution": pair})
        # (ii) escape from the stable slice
        t_start = time.perf_counter()
        esc = _escape_run(geom, t0_slice, epsilon, cfg)
        rec_ii = esc
        rec_ii.geometry = geometry_hash(geom)
        rec_ii.wall_time_s = time.perf_counter() - t_start
        # (iii) trapped single interface
        t_start = time.perf_counter()
        rec_iii = _single_interface_record(geom, epsilon, cfg, rng,
                                           experiment="example3_iii")
        rec_iii.wall_time_s = time.perf_counter() - t_start
        records.extend([rec_i, rec_ii, rec_iii])
        if sink is not None:
            sink.save_solution(f"example3_i_eps{epsilon:g}", pair)
            sink.add(rec_i, rec_ii, rec_iii)
    return records


def _escape_run(geom, t0_slice, epsilon, cfg: RunConfig) -> StudyRecord:
    grid = Grid.periodic(geom, epsilon, refine=cfg.refine_base)
    c = t0_slice.position
    d0 = 4.0 * epsilon
    t = grid.nodes
    seed = np.clip(eval_psi((t - (c - d0)) / epsilon)
                   * (-eval_psi((t - (c + d0)) / epsilon)), -1.0, 1.0)
    flow_cfg = SolverConfig(flow_step=cfg.escape_flow_step,
                            flow_max_steps=cfg.escape_flow_max_steps,
                            flow_tol=cfg.flow_tol)
    relaxed = gradient_flow(grid.field(seed), epsilon, flow_cfg)
    sol = relaxed
    if not relaxed.converged:
        sol = newton_solve(relaxed.field, epsilon,
                           SolverConfig(newton_tol=cfg.newton_tol))
    ns = nodal_set(sol.field)
    dists = [abs(signed_distance(geom, t0_slice, x)) for x in ns.crossings]
    falsifying = ns.count >= 2 and max(dists) <= 0.1
    return StudyRecord(
        experiment="example3_ii", epsilon=epsilon,
        energy=sol.energy,
        mult_ratio=sol.energy / (INTERFACE_ENERGY * t0_slice.area),
        hausdorff_over_eps=(max(dists) / epsilon) if dists else None,
        extra={"crossings": ns.crossings, "escaped": not falsifying,
               "falsifying": falsifying, "flow_steps": relaxed.iterations,
               "solution": sol})


def _single_interface_record(geom, epsilon, cfg: RunConfig, rng,
                             experiment="study") -> StudyRecord:
    grid, sol, base = solve_single_interface(geom, epsilon, cfg, rng)
    profile = CutoffProfile.with_radius(
        epsilon, min(cfg.collar_radius, 0.85 * min(
            base.position - grid.a, grid.b - base.position)))
    family = CmcFamily(geom, base)
    tau_used = min(cfg.tau, 0.98 * family.tau)
    # the ladder needs headroom above its floor K*eps at every rung
    k_eff = min(cfg.barrier_k, 0.6 * tau_used / epsilon)
    asm = BarrierAssembler(geom, base, epsilon, grid=grid, profile=profile,
                           family=family, K=k_eff)
    bp = asm.assemble(+k_eff * epsilon)
    bm = asm.assemble(-k_eff * epsilon)
    trap = sliding_trap(sol, geom, base, epsilon, K=k_eff,
                        tau=tau_used, rungs=cfg.trap_rungs, assembler=asm)
    ns = nodal_set(sol.field)
    rep = decompose(sol, base, epsilon, profile)
    return StudyRecord(
        experiment=experiment, epsilon=epsilon,
        geometry=geometry_hash(geom), energy=sol.energy,
        mult_ratio=multiplicity_estimate(sol, base),
        hausdorff_over_eps=hausdorff_to_slice(ns, base, geom) / epsilon,
        decay_slope=decay_fit(sol, base, (3 * epsilon, 8 * epsilon)),
        index=morse_index(sol),
        xi=rep.xi - base.position,
        phi_sup=rep.phi_sup,
        barrier_margin_pos=bp.margin, barrier_margin_neg=bm.margin,
        extra={"trap": trap, "orthogonality_residual":
               rep.orthogonality_residual, "secant_slope": rep.secant_slope,
               "k_eff": k_eff, "solution": sol,
               "sign_uniform": bp.sign_uniform and bm.sign_uniform,
               "barrier_pos": bp, "barrier_neg": bm})


def run_convergence_study(cfg: RunConfig, sink: OutputSink | None = None):
    """Ladder study at the stable slice: solve, decompose, trap, fit scalings.

    Aborts on the first rung whose contract fails, leaving the partial CSV
    intact in the sink.  Log-log slopes over the ladder are attached to the
    last record's extra under 'fits'.
    """
    if len(cfg.epsilons) < 4:
        raise ValueError("convergence study needs a ladder of >= 4 epsilons")
    geom = cfg.build_geometry()
    records = []
    for i, epsilon in enumerate(cfg.epsilons):
        rng = np.random.default_rng(cfg.seed + i)
        t_start = time.perf_counter()
        try:
            rec = _single_interface_record(geom, epsilon, cfg, rng,
                                           experiment="study")
        except LabError:
            if sink is not None:
                sink.add(*records)
                sink.finalize(cfg)
            raise
        trap = rec.extra["trap"]
        if not (trap.applicable and trap.trapped and
                rec.extra["sign_uniform"]):
            if sink is not None:
                sink.add(*records)
                sink.finalize(cfg)
            raise LabError(
                f"study rung eps = {epsilon} failed its contract: "
                f"{trap.violation or 'barrier sign not uniform'}")
        rec.wall_time_s = time.perf_counter() - t_start
        records.append(rec)
        if sink is not None:
            sink.save_solution(f"study_eps{epsilon:g}",
                               rec.extra["solution"])
    eps = [r.epsilon for r in records]
    fits = {
        "phi_sup_slope": loglog_slope(eps, [r.phi_sup for r in records]),
        "hausdorff_slope": _guarded_slope(
            eps, [r.hausdorff_over_eps * r.epsilon for r in records]),
        "energy_defects": [
            abs(r.energy - INTERFACE_ENERGY * stable_slice(geom).area)
            / (INTERFACE_ENERGY * stable_slice(geom).area) for r in records],
    }
    records[-1].extra["fits"] = fits
    if sink is not None:
        sink.add(*records)
    return records


def _guarded_slope(xs, ys):
    if min(ys) <= 0 or min(ys) < 1e-13:
        return None  # distances at round-off; a log fit would be noise
    return loglog_slope(xs, ys)


def run_barriers(cfg: RunConfig, sink: OutputSink | None = None):
    """One barrier certificate row per (epsilon, +-K eps)."""
    geom = cfg.build_geometry()
    base = stable_slice(geom)
    records = []
    for epsilon in cfg.epsilons:
        family = CmcFamily(geom, base)
        grid = Grid.interval(geom, epsilon, bc="neumann_zero",
                             refine=cfg.refine_base)
        profile = CutoffProfile.with_radius(epsilon, cfg.collar_radius)
        asm = BarrierAssembler(geom, base, epsilon, grid=grid,
                               profile=profile, family=family,
                               K=cfg.barrier_k)
        for H in (+cfg.barrier_k * epsilon, -cfg.barrier_k * epsilon):
            t_start = time.perf_counter()
            res = asm.assemble(H)
            rec = StudyRecord(
                experiment=f"barrier_{H:+.6g}", epsilon=epsilon,
                geometry=geometry_hash(geom),
                xi=res.nodal_position - base.position,
                phi_sup=res.phi_norm,
                barrier_margin_pos=res.margin if H > 0 else None,
                barrier_margin_neg=res.margin if H < 0 else None,
                wall_time_s=time.perf_counter() - t_start,
                extra={"result": res})
            records.append(rec)
            if sink is not None:
                sink.add(rec)
                sink.save_field(f"barrier_eps{epsilon:g}_H{H:+g}", res.v)
    return records
