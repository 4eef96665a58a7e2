"""Jones/Barron greedy approximation with randomized candidate search.

f_{N+1} = (1 - alpha_N) f_N + alpha_N g_N,  alpha_N = e_N^2 / (M''^2 + e_N^2),

where g_N = exp(-(w x + b)^2) is the first uniformly drawn candidate that
satisfies the acceptance test in force (see ``selection_threshold``).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Literal, Optional, Union

import numpy as np
import pandas as pd

from . import config
from .errors import ConfigError, DomainError, GridMismatchError
from .numerics import (
    ApproxModel,
    Gaussian,
    GridFunction,
    design_diagnostics,
    l2_norm_sq,
    midpoints,
)
from .rng import make_stream

logger = logging.getLogger(__name__)

SelectionRule = Literal["mixed", "jones", "eps"]


@dataclass(frozen=True)
class GreedyConfig:
    m_prime: float = config.M_PRIME
    m_dprime: float = config.M_DPRIME
    sel_eps: float = config.SEL_EPS
    w_range: tuple = config.GREEDY_W_RANGE
    b_range: tuple = config.GREEDY_B_RANGE
    max_draws: int = config.MAX_DRAWS
    grid_size: int = config.GRID_SIZE
    seed: int = 0
    selection_rule: SelectionRule = "mixed"
    batch_size: int = config.DRAW_BATCH

    def __post_init__(self) -> None:
        object.__setattr__(self, "w_range", tuple(float(v) for v in self.w_range))
        object.__setattr__(self, "b_range", tuple(float(v) for v in self.b_range))
        if not (self.m_dprime > self.m_prime > 0):
            raise ConfigError(f"need m_dprime > m_prime > 0, got {self.m_dprime}, {self.m_prime}")
        if self.sel_eps <= 0:
            raise ConfigError(f"sel_eps must be > 0, got {self.sel_eps}")
        if self.max_draws < 1 or self.batch_size < 1:
            raise ConfigError("max_draws and batch_size must be >= 1")
        if self.grid_size < 2:
            raise ConfigError(f"grid_size must be >= 2, got {self.grid_size}")
        for name in ("w_range", "b_range"):
            config.check_interval(name, getattr(self, name))
        if self.selection_rule not in ("mixed", "jones", "eps"):
            raise ConfigError(f"unknown selection_rule {self.selection_rule!r}")


@dataclass(frozen=True)
class SelectionFailure:
    """Candidate search gave up after ``attempts`` draws."""

    attempts: int


@dataclass(frozen=True)
class ErrorTrace:
    """Per-step errors of one approximation run; index N = 0 is f_0 = 0.

    ``bound_sq``/``guaranteed_sq``/``alphas`` are empty for schemes without a
    deterministic guarantee; ``conds``/``discarded`` are empty for schemes
    that never factor a design matrix.
    """

    raw_sq: tuple
    normalized: tuple
    bound_sq: tuple = ()
    guaranteed_sq: tuple = ()
    alphas: tuple = ()
    conds: tuple = ()
    discarded: tuple = ()
    stalled: bool = False
    stall_attempts: int = 0

    def __len__(self) -> int:
        return len(self.raw_sq)

    def to_frame(self) -> pd.DataFrame:
        steps = len(self.raw_sq)

        def column(values):
            return list(values) if len(values) == steps else [None] * steps

        return pd.DataFrame(
            {
                "step": range(steps),
                "raw_sq": list(self.raw_sq),
                "normalized": list(self.normalized),
                "bound_sq": column(self.bound_sq),
                "alpha": column(self.alphas),
                "cond": column(self.conds),
            }
        )


@dataclass(frozen=True)
class GreedyRun:
    trace: ErrorTrace
    model: ApproxModel


# =========================================================
# ITERATION PIECES
# =========================================================

def greedy_alpha(err_sq: float, m_dprime: float) -> float:
    if err_sq < 0:
        raise DomainError(f"err_sq must be >= 0, got {err_sq}")
    if m_dprime <= 0:
        raise DomainError(f"m_dprime must be > 0, got {m_dprime}")
    return err_sq / (m_dprime * m_dprime + err_sq)


def greedy_bound_sq(n: int, e0_sq: float, m: float) -> float:
    """M^2 e_0^2 / (N e_0^2 + M^2)"""
    return m * m * e0_sq / (n * e0_sq + m * m)


def selection_threshold(err_sq: float, step: int, cfg: GreedyConfig) -> float:
    """Right-hand side of the acceptance test <f_N - f, g - f> < threshold."""
    use_eps = cfg.selection_rule == "eps" or (cfg.selection_rule == "mixed" and step == 0)
    if use_eps:
        return cfg.sel_eps
    mp2, mdp2 = cfg.m_prime ** 2, cfg.m_dprime ** 2
    return (mdp2 - mp2) * err_sq / (2.0 * mdp2)


def select_candidate(
    state_residual: GridFunction,
    target: GridFunction,
    cfg: GreedyConfig,
    rng: np.random.Generator,
    step: int = 0,
) -> Union[Gaussian, SelectionFailure]:
    """
    Draw (w, b) uniformly until <f_N - f, g - f> < threshold.

    state_residual is f_N - f. Draws come in batches of cfg.batch_size
    (w's first, then b's), truncated so at most cfg.max_draws are used.
    """
    if state_residual.grid_size != target.grid_size:
        raise GridMismatchError(state_residual.grid_size, target.grid_size)
    err_sq = l2_norm_sq(state_residual)
    if err_sq <= 0:
        raise DomainError("candidate search needs a nonzero residual")

    n = target.grid_size
    xs = midpoints(n)
    r = state_residual.values
    # <r, g - f> = (r.g - r.f) / n
    r_dot_f = float(np.dot(r, target.values))
    threshold = selection_threshold(err_sq, step, cfg)

    drawn = 0
    while drawn < cfg.max_draws:
        size = min(cfg.batch_size, cfg.max_draws - drawn)
        ws = rng.uniform(cfg.w_range[0], cfg.w_range[1], size)
        bs = rng.uniform(cfg.b_range[0], cfg.b_range[1], size)
        g = np.exp(-((np.outer(xs, ws) + bs) ** 2))
        lhs = (r @ g - r_dot_f) / n
        hits = np.flatnonzero(lhs < threshold)
        if hits.size:
            k = int(hits[0])
            logger.debug("step %d: candidate accepted after %d draws", step, drawn + k + 1)
            return Gaussian(w=float(ws[k]), b=float(bs[k]))
        drawn += size

    return SelectionFailure(attempts=drawn)


def jones_step(
    model: ApproxModel,
    candidate: Gaussian,
    err_sq: float,
    cfg: GreedyConfig,
    target: Optional[GridFunction] = None,
) -> ApproxModel:
    """
    Scale existing coefficients by (1 - alpha) and append the candidate
    with coefficient alpha.

    With ``target`` given, residual_sq is that of the new model against it.
    Without a target, residual_sq is the input model's value and is stale
    for the returned model.
    """
    alpha = greedy_alpha(err_sq, cfg.m_dprime)
    coeffs = np.append(model.coeffs * (1.0 - alpha), alpha)
    stepped = ApproxModel(
        basis=model.basis + (candidate,),
        coeffs=coeffs,
        residual_sq=model.residual_sq,
    )
    if target is None:
        return stepped
    return ApproxModel(
        basis=stepped.basis,
        coeffs=stepped.coeffs,
        residual_sq=l2_norm_sq(stepped.residual(target)),
    )


# =========================================================
# FULL RUN
# =========================================================

def run_greedy(target: GridFunction, n_steps: int, cfg: GreedyConfig) -> GreedyRun:
    """
    Run the greedy iteration from f_0 = 0 for n_steps steps.

    Stops early when e_N^2 <= 1e-16 or when candidate search fails; a failed
    search marks the trace as stalled.
    """
    if n_steps < 1:
        raise ConfigError(f"n_steps must be >= 1, got {n_steps}")
    if target.grid_size != cfg.grid_size:
        raise GridMismatchError(target.grid_size, cfg.grid_size)
    e0_sq = l2_norm_sq(target)
    if e0_sq <= 0:
        raise DomainError("greedy approximation needs a target with nonzero norm")

    rng = make_stream(cfg.seed)
    xs = midpoints(target.grid_size)

    f_n = np.zeros(target.grid_size)
    err_sq = e0_sq
    model = ApproxModel(basis=(), coeffs=np.zeros(0), residual_sq=e0_sq)

    raw, alphas = [e0_sq], [0.0]
    stalled, attempts = False, 0

    for step in range(n_steps):
        if err_sq <= config.STOP_ERR_SQ:
            break
        picked = select_candidate(GridFunction(f_n - target.values), target, cfg, rng, step=step)
        if isinstance(picked, SelectionFailure):
            logger.warning(
                "seed %d: no candidate after %d draws at step %d; trial stalled",
                cfg.seed, picked.attempts, step,
            )
            stalled, attempts = True, picked.attempts
            break

        alpha = greedy_alpha(err_sq, cfg.m_dprime)
        model = jones_step(model, picked, err_sq, cfg)
        f_n = (1.0 - alpha) * f_n + alpha * picked.sample(xs)
        diff = f_n - target.values
        err_sq = float(np.dot(diff, diff)) / target.grid_size

        raw.append(err_sq)
        alphas.append(alpha)

    steps = range(len(raw))
    trace = ErrorTrace(
        raw_sq=tuple(raw),
        normalized=tuple(e / e0_sq for e in raw),
        bound_sq=tuple(greedy_bound_sq(n, e0_sq, cfg.m_prime) for n in steps),
        guaranteed_sq=tuple(greedy_bound_sq(n, e0_sq, cfg.m_dprime) for n in steps),
        alphas=tuple(alphas),
        stalled=stalled,
        stall_attempts=attempts,
    )
    cond, rank = design_diagnostics(model.basis, target.grid_size)
    final = ApproxModel(
        basis=model.basis, coeffs=model.coeffs, residual_sq=err_sq, cond=cond, rank=rank
    )
    return GreedyRun(trace=trace, model=final)
