import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import logger as solver_logger


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture(autouse=True)
def quiet_logger():
    """Every test starts from the disabled global logger."""
    previous = solver_logger.get_logger()
    solver_logger.set_logger(solver_logger.SolverLogger(enabled=False))
    yield
    solver_logger.set_logger(previous)
