"""Greedy and random-basis function approximation on [0,1], and the
high-dimensional measure-concentration estimates behind them."""

__version__ = "0.3.0"

from .errors import (  # noqa: E402
    BasisApproxError,
    ConfigError,
    DomainError,
    EmptyBasisError,
    GridMismatchError,
    InequalityViolation,
    NonFiniteSampleError,
)
from .greedy import GreedyConfig, run_greedy  # noqa: E402
from .numerics import GridFunction, least_squares_fit, make_grid_function  # noqa: E402
from .random_basis import RandomBasisConfig, run_constant_blowup, run_random_basis  # noqa: E402
