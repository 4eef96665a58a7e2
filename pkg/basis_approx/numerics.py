"""Grid-sampled functions on [0,1], midpoint quadrature, basis families and
rank-revealing least squares.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence, Union

import numpy as np
import scipy.linalg

from .config import REL_TOL
from .errors import (
    BasisApproxError,
    DomainError,
    EmptyBasisError,
    GridMismatchError,
    NonFiniteSampleError,
)

logger = logging.getLogger(__name__)


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    arr.flags.writeable = False
    return arr


# =========================================================
# GRID FUNCTIONS
# =========================================================

@lru_cache(maxsize=32)
def midpoints(grid_size: int) -> np.ndarray:
    """x_k = (k + 1/2) / grid_size, k = 0..grid_size-1 (read-only, cached)."""
    if grid_size < 2:
        raise DomainError(f"grid_size must be >= 2, got {grid_size}")
    return _frozen((np.arange(grid_size) + 0.5) / grid_size)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """A real function on [0,1] stored as its samples on the midpoint grid."""

    values: np.ndarray

    def __post_init__(self) -> None:
        arr = _frozen(self.values)
        if arr.ndim != 1:
            raise BasisApproxError(f"GridFunction values must be 1-D, got shape {arr.shape}")
        if arr.size < 2:
            raise DomainError(f"grid_size must be >= 2, got {arr.size}")
        bad = np.flatnonzero(~np.isfinite(arr))
        if bad.size:
            k = int(bad[0])
            raise NonFiniteSampleError(float(midpoints(arr.size)[k]), float(arr[k]))
        object.__setattr__(self, "values", arr)

    @property
    def grid_size(self) -> int:
        return int(self.values.size)

    def _check(self, other: "GridFunction") -> None:
        if other.grid_size != self.grid_size:
            raise GridMismatchError(self.grid_size, other.grid_size)

    def __add__(self, other: "GridFunction") -> "GridFunction":
        self._check(other)
        return GridFunction(self.values + other.values)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        self._check(other)
        return GridFunction(self.values - other.values)

    def __neg__(self) -> "GridFunction":
        return GridFunction(-self.values)

    def __mul__(self, scalar: float) -> "GridFunction":
        return GridFunction(float(scalar) * self.values)

    __rmul__ = __mul__

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GridFunction):
            return NotImplemented
        return self.grid_size == other.grid_size and bool(np.array_equal(self.values, other.values))

    __hash__ = None  # type: ignore[assignment]


def make_grid_function(evaluator: Callable[[float], float], grid_size: int) -> GridFunction:
    """Sample ``evaluator`` at the midpoints of a uniform grid on [0,1]."""
    xs = midpoints(grid_size)
    values = np.empty(grid_size)
    for k, x in enumerate(xs):
        v = float(evaluator(float(x)))
        if not math.isfinite(v):
            raise NonFiniteSampleError(float(x), v)
        values[k] = v
    return GridFunction(values)


def zeros(grid_size: int) -> GridFunction:
    return GridFunction(np.zeros(grid_size))


def constant(value: float, grid_size: int) -> GridFunction:
    return GridFunction(np.full(grid_size, float(value)))


def three_bump_target() -> Callable[[float], float]:
    """f(x) = 0.2 e^{-(10x-4)^2} + 0.5 e^{-(80x-40)^2} + 0.3 e^{-(80x-20)^2}"""

    def f(x: float) -> float:
        return (
            0.2 * math.exp(-((10.0 * x - 4.0) ** 2))
            + 0.5 * math.exp(-((80.0 * x - 40.0) ** 2))
            + 0.3 * math.exp(-((80.0 * x - 20.0) ** 2))
        )

    return f


def sign_changes(f: GridFunction) -> int:
    """Number of sign changes across the grid, skipping exact zeros."""
    s = np.sign(f.values)
    s = s[s != 0]
    if s.size < 2:
        return 0
    return int(np.count_nonzero(s[1:] != s[:-1]))


# =========================================================
# QUADRATURE
# =========================================================

def l2_inner(f: GridFunction, g: GridFunction) -> float:
    """Midpoint quadrature of the integral of f*g over [0,1]."""
    if f.grid_size != g.grid_size:
        raise GridMismatchError(f.grid_size, g.grid_size)
    return float(np.dot(f.values, g.values)) / f.grid_size


def l2_norm_sq(f: GridFunction) -> float:
    return l2_inner(f, f)


def normalized_error(residual_sq: float, target_norm_sq: float) -> float:
    if target_norm_sq <= 0:
        raise DomainError("normalized error undefined for a target with zero norm")
    if residual_sq < 0:
        raise DomainError(f"residual_sq must be >= 0, got {residual_sq}")
    return residual_sq / target_norm_sq


# =========================================================
# BASIS FAMILIES
# =========================================================

@dataclass(frozen=True)
class Gaussian:
    """x -> exp(-(w x + b)^2)"""

    w: float
    b: float

    def sample(self, xs: np.ndarray) -> np.ndarray:
        return np.exp(-((self.w * xs + self.b) ** 2))


@dataclass(frozen=True)
class Indicator:
    """x -> 1 on the closed interval [a - sigma/2, a + sigma/2], else 0."""

    a: float
    sigma: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.a <= 1.0):
            raise DomainError(f"indicator center a must lie in [0,1], got {self.a}")
        if not (0.0 <= self.sigma <= 1.0):
            raise DomainError(f"indicator width sigma must lie in [0,1], got {self.sigma}")

    def sample(self, xs: np.ndarray) -> np.ndarray:
        lo = self.a - self.sigma / 2
        hi = self.a + self.sigma / 2
        return ((xs >= lo) & (xs <= hi)).astype(np.float64)


BasisElement = Union[Gaussian, Indicator]


def eval_basis(e: BasisElement, grid_size: int) -> GridFunction:
    return GridFunction(e.sample(midpoints(grid_size)))


def design_matrix(basis: Sequence[BasisElement], grid_size: int) -> np.ndarray:
    """Columns are the sampled basis functions scaled by sqrt(1/grid_size),
    so that ||A c - y||^2 is the quadrature L2 norm."""
    xs = midpoints(grid_size)
    cols = np.empty((grid_size, len(basis)))
    for i, e in enumerate(basis):
        cols[:, i] = e.sample(xs)
    return cols * math.sqrt(1.0 / grid_size)


# =========================================================
# LEAST SQUARES
# =========================================================

@dataclass(frozen=True, eq=False)
class ApproxModel:
    """f_N = sum_i coeffs[i] * basis[i], with its fit diagnostics.

    ``cond`` is NaN when no design matrix was factored (the empty model, or a
    convex-combination model built by the greedy iteration before its final
    diagnostic pass).
    """

    basis: tuple
    coeffs: np.ndarray
    residual_sq: float
    cond: float = math.nan
    rank: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "basis", tuple(self.basis))
        coeffs = _frozen(self.coeffs)
        if coeffs.shape != (len(self.basis),):
            raise BasisApproxError(
                f"{len(self.basis)} basis elements but {coeffs.shape[0]} coefficients"
            )
        object.__setattr__(self, "coeffs", coeffs)
        if self.residual_sq < 0:
            raise BasisApproxError(f"residual_sq must be >= 0, got {self.residual_sq}")

    def __len__(self) -> int:
        return len(self.basis)

    def evaluate(self, grid_size: int) -> GridFunction:
        if not self.basis:
            return zeros(grid_size)
        xs = midpoints(grid_size)
        values = np.zeros(grid_size)
        for c, e in zip(self.coeffs, self.basis):
            values += c * e.sample(xs)
        return GridFunction(values)

    def residual(self, target: GridFunction) -> GridFunction:
        """f - f_N on the target's grid."""
        return target - self.evaluate(target.grid_size)


def empty_model(target: GridFunction) -> ApproxModel:
    """The f_0 = 0 starting point."""
    return ApproxModel(basis=(), coeffs=np.zeros(0), residual_sq=l2_norm_sq(target))


def _truncated_svd(a: np.ndarray, rel_tol: float):
    u, s, vh = scipy.linalg.svd(a, full_matrices=False, lapack_driver="gesvd")
    if s.size == 0 or s[0] == 0.0:
        return u[:, :0], s[:0], vh[:0], s
    keep = s >= rel_tol * s[0]
    r = int(np.count_nonzero(keep))
    return u[:, :r], s[:r], vh[:r], s


def _condition(s_kept: np.ndarray, s_all: np.ndarray) -> float:
    if s_kept.size == 0 or s_kept.size < s_all.size:
        return math.inf
    return float(s_kept[0] / s_kept[-1])


def design_diagnostics(
    basis: Sequence[BasisElement], grid_size: int, rel_tol: float = REL_TOL
) -> tuple[float, int]:
    """(cond, rank) of the weighted design matrix; (NaN, 0) for an empty basis."""
    if not basis:
        return math.nan, 0
    _, s_kept, _, s_all = _truncated_svd(design_matrix(basis, grid_size), rel_tol)
    return _condition(s_kept, s_all), int(s_kept.size)


def design_condition(basis: Sequence[BasisElement], grid_size: int, rel_tol: float = REL_TOL) -> float:
    return design_diagnostics(basis, grid_size, rel_tol)[0]


def least_squares_fit(
    basis: Sequence[BasisElement],
    target: GridFunction,
    rel_tol: float = REL_TOL,
) -> ApproxModel:
    """
    Minimum-norm coefficients minimizing the quadrature L2 norm of
    target - sum c_i basis_i.

    - SVD of the weighted design matrix; singular values below
      rel_tol * s_max are dropped.
    - cond = s_max / s_min over the retained spectrum, or +inf when any
      singular value was dropped.
    """
    basis = tuple(basis)
    if not basis:
        raise EmptyBasisError("least squares fit needs at least one basis element")

    n = target.grid_size
    a = design_matrix(basis, n)
    y = target.values * math.sqrt(1.0 / n)

    u, s, vh, s_all = _truncated_svd(a, rel_tol)
    if s.size:
        coeffs = vh.T @ ((u.T @ y) / s)
    else:
        coeffs = np.zeros(len(basis))
    cond = _condition(s, s_all)
    if math.isinf(cond):
        logger.debug("design of %d columns is rank deficient (rank %d)", len(basis), s.size)

    resid = y - a @ coeffs
    residual_sq = float(np.dot(resid, resid))
    return ApproxModel(basis=basis, coeffs=coeffs, residual_sq=residual_sq, cond=cond, rank=int(s.size))
