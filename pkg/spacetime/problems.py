"""
Built-in test problems: constant and variable coefficient heat equations
on the unit square and a recirculating convection-diffusion flow.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from logger import get_logger

from .discretization import (
    AllAtOnceSystem,
    Grid2D,
    SpatialPair,
    assemble,
    bdf_stencil,
    build_convdiff,
    build_heat_fd,
    build_heat_q1,
)
from .errors import ConfigError

HEAT_DIFFUSIVITY = 1e-5
CONVDIFF_VISCOSITY = 1.0 / 200.0
SCHEME_ORDERS = {"bdf1": 1, "bdf2": 2}


def _bubble(x, y):
    return x * (1 - x) * y * (1 - y)


def variable_diffusivity(x, y):
    return HEAT_DIFFUSIVITY * np.sin(np.pi * x * y)


def variable_heat_exact(x, y, t):
    return np.exp(-t) * _bubble(x, y)


def variable_heat_source(x, y, t, amplitude: float = HEAT_DIFFUSIVITY):
    """u_t - div(a grad u) for u = exp(-t) x(1-x)y(1-y), a = amplitude*sin(pi x y)."""
    s, c = np.sin(np.pi * x * y), np.cos(np.pi * x * y)
    return np.exp(-t) * (
        -_bubble(x, y)
        + 2 * amplitude * s * (x * (1 - x) + y * (1 - y))
        - amplitude * np.pi * c * (y**2 * (1 - y) * (1 - 2 * x) + x**2 * (1 - x) * (1 - 2 * y))
    )


def circulating_wind(x, y):
    return 2 * y * (1 - x**2), -2 * x * (1 - y**2)


def hot_wall(x, y, t):
    """Dirichlet data ramping up to 1 on the wall x = 1, zero elsewhere."""
    return (1 - np.exp(-10 * t)) * np.isclose(x, 1.0).astype(float)


@dataclass(frozen=True)
class ExampleProblem:
    name: str
    bounds: tuple[tuple[float, float], tuple[float, float]]
    discretizations: tuple[str, ...]
    build_pair: Callable[[Grid2D, str], SpatialPair]
    initial: Callable
    source: Optional[Callable] = None
    boundary: Optional[Callable] = None
    exact: Optional[Callable] = None
    # V-cycles per block solve when the run leaves mg_cycles unset
    mg_cycles: int = 1

    def resolve_discretization(self, requested: str) -> str:
        if requested == "auto":
            return self.discretizations[0]
        if requested not in self.discretizations:
            raise ConfigError(
                f"problem '{self.name}' supports discretization {list(self.discretizations)}, got '{requested}'"
            )
        return requested

    def exact_solution(self, grid: Grid2D, times: np.ndarray) -> Optional[np.ndarray]:
        """Exact values at interior nodes for t_1..t_N, stacked by time step."""
        if self.exact is None:
            return None
        x, y = grid.interior_nodes()
        return np.concatenate([self.exact(x, y, t) for t in times])


def _heat_const_pair(grid: Grid2D, kind: str) -> SpatialPair:
    if kind == "q1":
        return build_heat_q1(grid, HEAT_DIFFUSIVITY)
    return build_heat_fd(grid, HEAT_DIFFUSIVITY)


EXAMPLES: dict[str, ExampleProblem] = {
    "heat-const": ExampleProblem(
        name="heat-const",
        bounds=((0.0, 1.0), (0.0, 1.0)),
        discretizations=("q1", "fd"),
        build_pair=_heat_const_pair,
        initial=_bubble,
    ),
    "heat-var": ExampleProblem(
        name="heat-var",
        bounds=((0.0, 1.0), (0.0, 1.0)),
        discretizations=("fd",),
        build_pair=lambda grid, kind: build_heat_fd(grid, variable_diffusivity),
        initial=_bubble,
        source=variable_heat_source,
        exact=variable_heat_exact,
    ),
    "convdiff": ExampleProblem(
        name="convdiff",
        bounds=((-1.0, 1.0), (-1.0, 1.0)),
        discretizations=("fd",),
        build_pair=lambda grid, kind: build_convdiff(grid, CONVDIFF_VISCOSITY, circulating_wind),
        initial=lambda x, y: np.zeros_like(x),
        boundary=hot_wall,
        mg_cycles=3,
    ),
}


def get_example(name: str) -> ExampleProblem:
    if name not in EXAMPLES:
        raise ConfigError(f"unknown problem '{name}'; expected one of {sorted(EXAMPLES)}")
    return EXAMPLES[name]


def build_system(config) -> tuple[AllAtOnceSystem, Optional[np.ndarray]]:
    """
    Assemble the all-at-once system described by a RunConfig.

    Returns:
        (system, exact space-time solution or None)
    """
    problem = get_example(config.problem)
    if config.scheme not in SCHEME_ORDERS:
        raise ConfigError(f"unknown scheme '{config.scheme}'")
    kind = problem.resolve_discretization(config.discretization)
    grid = Grid2D(config.m, problem.bounds)
    pair = problem.build_pair(grid, kind)
    system = assemble(
        grid, pair, bdf_stencil(SCHEME_ORDERS[config.scheme]), config.T, config.N,
        source=problem.source, boundary=problem.boundary, initial=problem.initial,
        time_path=config.time_path,
    )
    get_logger().setup("AllAtOnceSystem", {
        "problem": problem.name, "discretization": kind, "scheme": config.scheme,
        "N": config.N, "J": grid.J, "dof": system.size,
    })
    return system, problem.exact_solution(grid, system.times)
