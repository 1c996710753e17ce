"""Run configuration: flat key = value text with sections (configparser)."""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, replace

from .geometry import WarpedGeometry


@dataclass
class RunConfig:
    """Everything an experiment run needs; parsed from INI-style config files.

    The epsilon ladder must be strictly descending.  Per-rung grid refinement
    follows `refine_base` at `refine_anchor` and doubles as epsilon halves
    (capped), which keeps the discretization floor a fixed small fraction of
    the O(eps^2) quantities the studies measure.
    """

    geometry: str = "warped_torus"
    amplitude: float = 0.3
    dim: int = 2
    period: float = 2.0 * math.pi
    warp_table: str = ""       # two-column (t, w) file for kind = tabulated
    epsilons: tuple = (0.08, 0.04, 0.02, 0.01)
    collar_radius: float = 0.7
    delta: float = 0.5
    barrier_k: float = 5.0
    tau: float = 0.25
    trap_rungs: int = 8
    refine_base: int = 16
    refine_anchor: float = 0.08
    refine_cap: int = 128
    newton_tol: float = 1e-11
    flow_tol: float = 1e-9
    escape_flow_step: float = 0.25
    escape_flow_max_steps: int = 60000
    seed: int = 2024
    noise: float = 0.01
    experiment: str = ""
    out_dir: str = ""
    force: bool = False

    def __post_init__(self):
        eps = tuple(float(e) for e in self.epsilons)
        if any(e <= 0 for e in eps):
            raise ValueError("epsilons must be positive")
        if any(a <= b for a, b in zip(eps, eps[1:])):
            raise ValueError("epsilon ladder must be strictly descending")
        self.epsilons = eps

    def refine_for(self, epsilon):
        r = self.refine_base
        while epsilon < self.refine_anchor / 1.0000001 and r < self.refine_cap:
            r *= 2
            epsilon *= 2.0
        return min(r, self.refine_cap)

    def build_geometry(self) -> WarpedGeometry:
        if self.geometry == "warped_torus":
            return WarpedGeometry.torus(a=self.amplitude, n=self.dim,
                                        period=self.period)
        if self.geometry == "sphere":
            return WarpedGeometry.sphere(n=self.dim)
        if self.geometry == "projective_sphere":
            return WarpedGeometry.projective_sphere(n=self.dim)
        if self.geometry == "tabulated":
            import numpy as np
            if not self.warp_table:
                raise ValueError("tabulated geometry needs warp_table")
            data = np.loadtxt(self.warp_table, delimiter=",")
            return WarpedGeometry.tabulated(data[:, 0], data[:, 1],
                                            n=self.dim)
        raise ValueError(f"unknown geometry kind {self.geometry!r}")

    def with_overrides(self, **kw):
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw)

    def echo(self):
        """Stable dict of every knob, for the run manifest."""
        return {k: (list(v) if isinstance(v, tuple) else v)
                for k, v in vars(self).items()}


_SECTIONS = {
    "geometry": ("geometry", "amplitude", "dim", "period", "warp_table"),
    "run": ("epsilons", "collar_radius", "delta", "barrier_k", "tau",
            "trap_rungs", "refine_base", "refine_anchor", "refine_cap",
            "seed", "noise"),
    "solver": ("newton_tol", "flow_tol", "escape_flow_step",
               "escape_flow_max_steps"),
}

_INT_KEYS = {"dim", "trap_rungs", "refine_base", "refine_cap", "seed",
             "escape_flow_max_steps"}
_FLOAT_KEYS = {"amplitude", "period", "collar_radius", "delta", "barrier_k",
               "tau", "refine_anchor", "newton_tol", "flow_tol",
               "escape_flow_step", "noise"}


def parse_config(path) -> RunConfig:
    """Read a config file; unknown keys are an error, sections are fixed."""
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise OSError(f"config file {path} is unreadable")
    kw = {}
    for section in parser.sections():
        if section not in _SECTIONS:
            raise ValueError(f"unknown config section [{section}]")
        for key, raw in parser.items(section):
            if key == "kind" and section == "geometry":
                key = "geometry"
            if key not in _SECTIONS[section]:
                raise ValueError(f"unknown key {key!r} in [{section}]")
            if key == "epsilons":
                kw[key] = tuple(float(x) for x in raw.split())
            elif key in _INT_KEYS:
                kw[key] = int(raw)
            elif key in _FLOAT_KEYS:
                kw[key] = float(raw)
            else:
                kw[key] = raw
    return RunConfig(**kw)


def write_example_config(path):
    text = """\
[geometry]
kind = warped_torus
amplitude = 0.3
dim = 2

[run]
epsilons = 0.08 0.04 0.02 0.01
collar_radius = 0.7
barrier_k = 3.5
tau = 0.2
seed = 2024

[solver]
newton_tol = 1e-11
"""
    with open(path, "w") as fh:
        fh.write(text)
