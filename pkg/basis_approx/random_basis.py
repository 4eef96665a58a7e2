"""Randomized-basis approximation: nonlinear parameters drawn at random and
kept fixed, linear weights refit by least squares after every draw.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Literal, Optional, Sequence

import numpy as np

from . import config
from .errors import ConfigError, DomainError
from .greedy import ErrorTrace
from .numerics import (
    ApproxModel,
    BasisElement,
    Gaussian,
    GridFunction,
    Indicator,
    constant,
    empty_model,
    l2_norm_sq,
    least_squares_fit,
)
from .rng import make_stream

logger = logging.getLogger(__name__)

Family = Literal["gaussian", "indicator"]


@dataclass(frozen=True)
class RandomBasisConfig:
    family: Family = "gaussian"
    w_range: tuple = config.RANDOM_W_RANGE
    b_range: tuple = config.RANDOM_B_RANGE
    a_range: tuple = config.INDICATOR_RANGE
    sigma_range: tuple = config.INDICATOR_RANGE
    n_steps: int = 100
    grid_size: int = config.GRID_SIZE
    seed: int = 0
    cond_limit: Optional[float] = None
    rel_tol: float = config.REL_TOL

    def __post_init__(self) -> None:
        for name in ("w_range", "b_range", "a_range", "sigma_range"):
            bounds = tuple(float(v) for v in getattr(self, name))
            config.check_interval(name, bounds)
            object.__setattr__(self, name, bounds)
        if self.family not in ("gaussian", "indicator"):
            raise ConfigError(f"unknown basis family {self.family!r}")
        if self.family == "indicator":
            for name in ("a_range", "sigma_range"):
                lo, hi = getattr(self, name)
                if lo < 0.0 or hi > 1.0:
                    raise ConfigError(f"{name} must lie inside [0,1], got {(lo, hi)}")
        if self.n_steps < 1:
            raise ConfigError(f"n_steps must be >= 1, got {self.n_steps}")
        if self.grid_size < 2:
            raise ConfigError(f"grid_size must be >= 2, got {self.grid_size}")
        if self.cond_limit is not None and not self.cond_limit > 0:
            raise ConfigError(f"cond_limit must be positive, got {self.cond_limit}")


@dataclass(frozen=True)
class RvflStep:
    model: ApproxModel
    discarded: bool = False


@dataclass(frozen=True)
class RandomBasisRun:
    trace: ErrorTrace
    model: ApproxModel


@dataclass(frozen=True)
class BlowupRun:
    trace: ErrorTrace
    model: ApproxModel
    snapshots: dict  # step N -> residual GridFunction f* - f_N


def draw_basis_element(cfg: RandomBasisConfig, rng: np.random.Generator) -> BasisElement:
    if cfg.family == "gaussian":
        w = rng.uniform(*cfg.w_range)
        b = rng.uniform(*cfg.b_range)
        return Gaussian(w=float(w), b=float(b))
    a = rng.uniform(*cfg.a_range)
    sigma = rng.uniform(*cfg.sigma_range)
    return Indicator(a=float(a), sigma=float(sigma))


def rvfl_step(
    basis: Sequence[BasisElement],
    new_element: BasisElement,
    target: GridFunction,
    cond_limit: Optional[float] = None,
    previous: Optional[ApproxModel] = None,
    rel_tol: float = config.REL_TOL,
) -> RvflStep:
    """
    Refit the whole pool with ``new_element`` appended.

    With cond_limit set, a fit whose cond exceeds it is thrown away and the
    previous model (the empty model if none) comes back flagged as discarded.
    """
    fit = least_squares_fit(tuple(basis) + (new_element,), target, rel_tol=rel_tol)
    if cond_limit is not None and not fit.cond <= cond_limit:
        if previous is None:
            previous = least_squares_fit(basis, target, rel_tol=rel_tol) if basis else empty_model(target)
        return RvflStep(model=previous, discarded=True)
    return RvflStep(model=fit)


# =========================================================
# RUNS
# =========================================================

def _run(target: GridFunction, cfg: RandomBasisConfig, snapshot_steps=()):
    if target.grid_size != cfg.grid_size:
        raise ConfigError(f"target grid {target.grid_size} does not match config grid {cfg.grid_size}")
    norm_sq = l2_norm_sq(target)
    if norm_sq <= 0:
        raise DomainError("random-basis approximation needs a target with nonzero norm")

    rng = make_stream(cfg.seed)
    model = empty_model(target)
    raw, conds, discarded = [norm_sq], [math.nan], [False]
    snapshots = {}

    for step in range(1, cfg.n_steps + 1):
        element = draw_basis_element(cfg, rng)
        result = rvfl_step(
            model.basis, element, target,
            cond_limit=cfg.cond_limit, previous=model, rel_tol=cfg.rel_tol,
        )
        if result.discarded:
            logger.debug("seed %d step %d: element discarded (ill-conditioned)", cfg.seed, step)
        model = result.model
        raw.append(model.residual_sq)
        conds.append(model.cond)
        discarded.append(result.discarded)
        if step in snapshot_steps:
            snapshots[step] = model.residual(target)

    n_discarded = sum(discarded)
    if n_discarded:
        logger.info("seed %d: %d of %d elements discarded", cfg.seed, n_discarded, cfg.n_steps)

    trace = ErrorTrace(
        raw_sq=tuple(raw),
        normalized=tuple(e / norm_sq for e in raw),
        conds=tuple(conds),
        discarded=tuple(discarded),
    )
    return trace, model, snapshots


def run_random_basis(target: GridFunction, cfg: RandomBasisConfig) -> RandomBasisRun:
    trace, model, _ = _run(target, cfg)
    return RandomBasisRun(trace=trace, model=model)


def run_constant_blowup(
    cfg: RandomBasisConfig,
    snapshot_steps: Sequence[int] = config.SNAPSHOT_STEPS,
) -> BlowupRun:
    """Approximate f* = 1 with random indicators, exporting f* - f_N at the
    snapshot steps that fall inside the run."""
    if cfg.family != "indicator":
        raise ConfigError("the constant-function experiment uses the indicator family")
    target = constant(1.0, cfg.grid_size)
    trace, model, snapshots = _run(target, cfg, snapshot_steps=frozenset(snapshot_steps))
    return BlowupRun(trace=trace, model=model, snapshots=snapshots)
