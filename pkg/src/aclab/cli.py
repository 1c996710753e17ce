"""Command-line front door.

Exit codes: 0 success, 1 contract failure (solver/geometry/collision), 2
usage errors (argparse's native behavior).
"""

from __future__ import annotations

import argparse
import sys

from .config import RunConfig, parse_config, write_example_config
from .errors import LabError
from .experiments import (OutputSink, run_barriers, run_convergence_study,
                          run_example1, run_example2, run_example3)
from .profiles import compute_moments, spectral_gap

_EXPERIMENT_DEFAULTS = {
    "example1": {"geometry": "sphere", "epsilons": (0.08, 0.04, 0.02)},
    "example2": {"geometry": "projective_sphere",
                 "epsilons": (0.08, 0.04, 0.02)},
    "example3": {"geometry": "warped_torus", "epsilons": (0.02,)},
    "study": {"geometry": "warped_torus",
              "epsilons": (0.08, 0.04, 0.02, 0.01)},
    "barrier": {"geometry": "warped_torus", "epsilons": (0.04, 0.02)},
}


def build_parser():
    p = argparse.ArgumentParser(
        prog="aclab",
        description="desk-scale phase-field interface laboratory")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="INI config file")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--force", action="store_true",
                        help="overwrite an existing study.csv")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--epsilon", type=float, nargs="+",
                        help="override the epsilon ladder")

    sp = sub.add_parser("profile", help="moment table record")
    sp.add_argument("--epsilon", type=float, default=0.05)
    sp.add_argument("--delta", type=float, default=0.5)
    sp.add_argument("--out")

    sp = sub.add_parser("spectrum", help="1-D linearized spectrum record")
    sp.add_argument("--halfwidth", type=float, default=20.0)
    sp.add_argument("--points", type=int, default=4096)
    sp.add_argument("--out")

    sp = sub.add_parser("solve", help="one Newton solve, serialized")
    common(sp)
    sp.add_argument("--init", default="interface",
                    choices=["interface", "pair", "bubble", "zero"])
    sp.add_argument("--domain", default="interval",
                    choices=["interval", "periodic"])

    for name in ("barrier", "example1", "example2", "example3", "study"):
        sp = sub.add_parser(name)
        common(sp)
    sub.add_parser("init-config", help="write an example config file") \
        .add_argument("path")
    return p


def _load_config(args, command) -> RunConfig:
    cfg = parse_config(args.config) if args.config else RunConfig(
        **_EXPERIMENT_DEFAULTS.get(command, {}))
    overrides = {"experiment": command}
    if getattr(args, "epsilon", None):
        overrides["epsilons"] = tuple(args.epsilon)
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "out", None):
        overrides["out_dir"] = args.out
    if getattr(args, "force", False):
        overrides["force"] = True
    if args.config and command in _EXPERIMENT_DEFAULTS:
        overrides.setdefault("geometry",
                             _EXPERIMENT_DEFAULTS[command].get("geometry",
                                                               cfg.geometry))
    return cfg.with_overrides(**overrides)


def _print_records(records):
    for r in records:
        bits = [f"{r.experiment}", f"eps={r.epsilon:g}"]
        for name in ("energy", "mult_ratio", "hausdorff_over_eps",
                     "decay_slope", "index", "phi_sup",
                     "barrier_margin_pos", "barrier_margin_neg"):
            v = getattr(r, name)
            if v is not None:
                bits.append(f"{name}={v:.6g}")
        print("  ".join(bits))


def cli_main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _run(args)
    except FileExistsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (LabError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _run(args) -> int:
    cmd = args.command
    if cmd == "init-config":
        write_example_config(args.path)
        print(f"wrote {args.path}")
        return 0
    if cmd == "profile":
        record = compute_moments(args.epsilon, delta=args.delta).to_record()
        print(record, end="")
        if args.out:
            _write_record(args.out, "profile.txt", record)
        return 0
    if cmd == "spectrum":
        record = spectral_gap(args.halfwidth, args.points).to_record()
        print(record, end="")
        if args.out:
            _write_record(args.out, "spectrum.txt", record)
        return 0

    cfg = _load_config(args, cmd)
    sink = OutputSink(cfg.out_dir, force=cfg.force) if cfg.out_dir else None
    if cmd == "solve":
        return _solve_command(args, cfg, sink)
    runner = {"barrier": run_barriers, "example1": run_example1,
              "example2": run_example2, "example3": run_example3,
              "study": run_convergence_study}[cmd]
    with (sink.time_block(cmd) if sink else _null_context()):
        records = runner(cfg, sink)
    _print_records(records)
    if cmd == "study":
        fits = records[-1].extra.get("fits", {})
        for k, v in fits.items():
            print(f"fit {k} = {v}")
    if sink is not None:
        path = sink.finalize(cfg)
        print(f"wrote {path}")
    return 0


def _solve_command(args, cfg: RunConfig, sink) -> int:
    import numpy as np

    from .discretization import Grid
    from .experiments import (_pair_state_at_unstable, solve_single_interface,
                              stable_slice)
    from .profiles import eval_psi
    from .solver import SolverConfig, newton_solve

    geom = cfg.build_geometry()
    epsilon = cfg.epsilons[0]
    if args.init == "interface" and args.domain == "interval":
        _, sol, _ = solve_single_interface(
            geom, epsilon, cfg, np.random.default_rng(cfg.seed))
    elif args.init == "pair":
        # the genuine two-interface state lives over the unstable slice
        sol, _ = _pair_state_at_unstable(geom, epsilon, cfg)
    else:
        grid = (Grid.periodic(geom, epsilon, refine=cfg.refine_base)
                if args.domain == "periodic"
                else Grid.interval(geom, epsilon, refine=cfg.refine_base))
        c = stable_slice(geom).position
        t = grid.nodes
        if args.init == "zero":
            seed = np.zeros(grid.size)
        elif args.init == "bubble":
            d0 = 4.0 * epsilon
            seed = np.clip(eval_psi((t - (c - d0)) / epsilon)
                           * (-eval_psi((t - (c + d0)) / epsilon)), -1, 1)
        else:
            seed = eval_psi((t - c) / epsilon)
        sol = newton_solve(grid.field(seed), epsilon,
                           SolverConfig(newton_tol=cfg.newton_tol))
    print(f"converged={sol.converged} iterations={sol.iterations} "
          f"residual={sol.residual_norm:.3e} energy={sol.energy:.8g}")
    if sink is not None:
        sink.save_solution("solve", sol)
        sink.finalize(cfg)
    return 0 if sol.converged else 1


class _null_context:
    def __enter__(self):
        return self

    def __exit__(self, *exc):
        return False


def _write_record(out_dir, name, record):
    from pathlib import Path

    from .experiments import _atomic_write
    d = Path(out_dir)
    d.mkdir(parents=True, exist_ok=True)
    _atomic_write(d / name, record)


def main():  # console entry point
    raise SystemExit(cli_main())


if __name__ == "__main__":
    main()
