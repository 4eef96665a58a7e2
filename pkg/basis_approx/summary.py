"""Box-plot statistics across seeded trials.

Boxes span the 25-75% quantiles and whiskers the 12.5-87.5% quantiles, so a
box holds half of the trials and the whiskers three quarters; anything beyond
the whiskers is an outlier.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
import pandas as pd

from .concentration import BoundQuery, evaluate_bounds
from .config import BOX_QUANTILES, WHISKER_QUANT

SUMMARY_COLUMNS = [
    "step", "trials", "median", "mean", "q1", "q3", "whisker_lo", "whisker_hi", "outliers",
]


def box_stats(values) -> dict:
    """Median, mean, quartile box, whisker limits and outliers of one sample."""
    v = np.asarray(values, dtype=np.float64)
    v = v[np.isfinite(v)]
    if v.size == 0:
        nan = float("nan")
        return dict(trials=0, median=nan, mean=nan, q1=nan, q3=nan,
                    whisker_lo=nan, whisker_hi=nan, fliers=np.empty(0))
    q1, med, q3 = np.quantile(v, [BOX_QUANTILES[0], 0.5, BOX_QUANTILES[1]])
    lo, hi = np.quantile(v, WHISKER_QUANT)
    fliers = v[(v < lo) | (v > hi)]
    return dict(
        trials=int(v.size),
        median=float(med),
        mean=float(np.mean(v)),
        q1=float(q1),
        q3=float(q3),
        whisker_lo=float(lo),
        whisker_hi=float(hi),
        fliers=fliers,
    )


@dataclass(frozen=True, eq=False)
class TrialSummary:
    seeds: tuple
    table: pd.DataFrame  # one row per step, SUMMARY_COLUMNS

    def column(self, name: str) -> np.ndarray:
        return self.table[name].to_numpy(dtype=np.float64)

    def iqr(self, step: int) -> float:
        row = self.table.loc[self.table["step"] == step].iloc[0]
        return float(row["q3"] - row["q1"])


def per_step_values(series: Sequence[Sequence[float]]) -> list:
    """Transpose ragged per-trial series into per-step samples; a trial that
    stopped early contributes nothing past its last step."""
    steps = max((len(s) for s in series), default=0)
    return [np.array([s[k] for s in series if len(s) > k], dtype=np.float64) for k in range(steps)]


def summarize(series_by_seed: Mapping[int, Sequence[float]]) -> TrialSummary:
    seeds = tuple(series_by_seed)
    rows = []
    for step, values in enumerate(per_step_values([series_by_seed[s] for s in seeds])):
        stats = box_stats(values)
        stats["outliers"] = int(stats.pop("fliers").size)
        rows.append({"step": step, **stats})
    return TrialSummary(seeds=seeds, table=pd.DataFrame(rows, columns=SUMMARY_COLUMNS))


def summarize_frames(frames: Mapping[int, pd.DataFrame], column: str = "normalized") -> TrialSummary:
    """Summary of per-trial tables, as written to or read back from disk."""
    return summarize({seed: frame[column].tolist() for seed, frame in frames.items()})


# =========================================================
# CONCENTRATION TABLES
# =========================================================

BOUND_COLUMNS = [
    "n", "eps", "theta", "conservative", "refined", "conservative_log", "refined_log",
    "n_eval", "probability", "probability_lower", "log_p_lower", "log_p_upper",
]


def bounds_table(ns, eps_values, theta_values) -> pd.DataFrame:
    """One row of quasi-orthogonality bounds per (n, eps, theta)."""
    rows = []
    for n, eps, theta in itertools.product(ns, eps_values, theta_values):
        r = evaluate_bounds(BoundQuery(n=n, eps=eps, theta=theta))
        rows.append({
            "n": n, "eps": eps, "theta": theta,
            "conservative": r.conservative, "refined": r.refined,
            "conservative_log": r.conservative_log, "refined_log": r.refined_log,
            "n_eval": r.n_eval, "probability": r.probability,
            "probability_lower": r.probability_lower,
            "log_p_lower": r.log_p_lower, "log_p_upper": r.log_p_upper,
        })
    table = pd.DataFrame(rows, columns=BOUND_COLUMNS)
    table["n_eval"] = table["n_eval"].astype("Int64")
    return table


def chain_summary(lengths: pd.DataFrame, ns, tol: float, theta: float) -> pd.DataFrame:
    """Box statistics of chain lengths per dimension next to both bounds at
    eps = sin(tol)."""
    eps = math.sin(tol)
    rows = []
    for n in ns:
        stats = box_stats(lengths.loc[lengths["n"] == n, "length"].to_numpy(dtype=np.float64))
        stats["outliers"] = int(stats.pop("fliers").size)
        bound = evaluate_bounds(BoundQuery(n=n, eps=eps, theta=theta))
        rows.append({"n": n, **stats, "conservative": bound.conservative, "refined": bound.refined})
    return pd.DataFrame(rows, columns=["n", *SUMMARY_COLUMNS[1:], "conservative", "refined"])
