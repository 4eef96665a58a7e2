"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class BasisApproxError(ValueError):
    """Base class for all errors raised on invalid numerical input."""


class GridMismatchError(BasisApproxError):
    def __init__(self, left: int, right: int) -> None:
        super().__init__(f"grid size mismatch: {left} vs {right}")
        self.left = left
        self.right = right


class NonFiniteSampleError(BasisApproxError):
    def __init__(self, x: float, value: float) -> None:
        super().__init__(f"evaluator returned non-finite value {value!r} at x_k={x!r}")
        self.x = x
        self.value = value


class EmptyBasisError(BasisApproxError):
    pass


class DomainError(BasisApproxError):
    """Numeric input outside the range where a formula or estimate is defined."""


class InequalityViolation(BasisApproxError):
    """A closed-form ordering that should hold strictly failed numerically."""


class ConfigError(BasisApproxError):
    pass
