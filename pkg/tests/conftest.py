import numpy as np
import pytest

from qglab import fixedpoint as fp
from qglab.grids import EvenFn, make_grid
from qglab.invariants import candidate_member


@pytest.fixture(scope="session")
def default_grid():
    return make_grid(8.0, 1025)


@pytest.fixture(scope="session")
def ones_fn(default_grid):
    # constant extension: a tail rate this small is exactly 1.0 in double
    # precision over any representable distance
    return EvenFn(default_grid, np.ones(default_grid.n_points), 1e-30)


@pytest.fixture(scope="session")
def candidate(default_grid):
    return candidate_member(0.5, 0.6, 2.0, default_grid)


@pytest.fixture(scope="session")
def pipeline_solution():
    """The balanced profile located over the admissible initial-value range."""
    nu_star = fp.find_nu(0.5, 1.2, 1e-14)
    return fp.march_limit_ode(nu_star)


@pytest.fixture(scope="session")
def fitted_hat(pipeline_solution):
    fit = fp.fit_hat_parameters(pipeline_solution)
    return fp.refine_hat_parameters(fit)
