import numpy as np
import pytest

from aclab import (Grid, SolverConfig, WarpedGeometry, eval_psi,
                   find_minimal_slices, newton_solve)
from aclab.config import RunConfig
from aclab.experiments import (run_convergence_study, run_example1,
                               run_example3)


@pytest.fixture(scope="session")
def torus():
    return WarpedGeometry.torus()


@pytest.fixture(scope="session")
def flat_strip():
    # w = 1 on [0, 2] with unit fiber: the 1-D model problem
    return WarpedGeometry.torus(a=0.0, period=2.0, fiber_volume=1.0)


@pytest.fixture(scope="session")
def sphere():
    return WarpedGeometry.sphere()


@pytest.fixture(scope="session")
def stable_base(torus):
    return [s for s in find_minimal_slices(torus)
            if s.stability == "strictly_stable"][0]


@pytest.fixture(scope="session")
def unstable_base(torus):
    return [s for s in find_minimal_slices(torus)
            if s.stability == "unstable"][0]


@pytest.fixture(scope="session")
def t0_solution(torus):
    """Converged single-interface state at the stable slice, eps = 0.02."""
    eps = 0.02
    grid = Grid.interval(torus, eps, bc="neumann_zero", refine=16)
    seed = grid.sample(lambda t: eval_psi((t - np.pi) / eps))
    sol = newton_solve(seed, eps, SolverConfig())
    assert sol.converged
    return sol


@pytest.fixture(scope="session")
def study_records():
    """The pinned acceptance ladder, shared by the acceptance criteria."""
    return run_convergence_study(RunConfig())


@pytest.fixture(scope="session")
def example1_records():
    return run_example1(RunConfig(geometry="sphere",
                                  epsilons=(0.08, 0.04, 0.02)))


@pytest.fixture(scope="session")
def example3_records():
    return run_example3(RunConfig(geometry="warped_torus", epsilons=(0.02,)))
