"""Quasi-orthogonal chains of random hypercube vectors and angle statistics."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from . import config
from .errors import DomainError
from .rng import make_stream

logger = logging.getLogger(__name__)

# slack on |cos| when a finished chain is re-checked with a fresh Gram matrix
VERIFY_SLACK = 1e-12


def _check_tol(tol):
    if not (0.0 < tol < math.pi / 2):
        raise DomainError(f"angle tolerance must lie in (0, pi/2), got {tol}")


def _frozen(arr):
    arr = np.array(arr, dtype=np.float64)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class ChainResult:
    n: int
    tol: float
    length: int
    seed: int
    capped: bool
    vectors: np.ndarray  # length x n, rows normalized

    @property
    def cos_limit(self) -> float:
        """|angle - pi/2| <= tol  <=>  |cos| <= sin(tol)"""
        return math.sin(self.tol)


@dataclass(frozen=True, eq=False)
class AngleHistogram:
    n: int
    edges: np.ndarray
    counts: np.ndarray
    angles: np.ndarray

    @property
    def count(self) -> int:
        return int(self.angles.size)

    def fraction_abs_cos_le(self, c: float) -> float:
        return float(np.mean(np.abs(np.cos(self.angles)) <= c))

    def mode_bin(self) -> tuple:
        k = int(np.argmax(self.counts))
        return float(self.edges[k]), float(self.edges[k + 1])


def sample_hypercube(n: int, rng: np.random.Generator) -> np.ndarray:
    """One point uniform on [-1, 1]^n."""
    if n < 1:
        raise DomainError(f"dimension must be >= 1, got {n}")
    return rng.uniform(-1.0, 1.0, n)


def cos_angle(x, y) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    nx = float(np.linalg.norm(x))
    ny = float(np.linalg.norm(y))
    if nx == 0.0 or ny == 0.0:
        raise DomainError("angle undefined for a zero vector")
    return min(1.0, max(-1.0, float(np.dot(x, y)) / (nx * ny)))


def grow_chain(
    n: int,
    tol: float,
    rng: np.random.Generator,
    max_length: int = config.MAX_CHAIN_LENGTH,
    seed: int = 0,
) -> ChainResult:
    """
    Draw hypercube vectors until one falls outside the band pi/2 +- tol
    against some retained vector; the first rejection ends the chain.

    Each candidate is checked against the retained vectors only. Growth stops
    with ``capped`` set once max_length vectors are retained.
    """
    _check_tol(tol)
    if max_length < 1:
        raise DomainError(f"max_length must be >= 1, got {max_length}")
    limit = math.sin(tol)

    rows = np.empty((min(max_length, 64), n))
    length = 0
    capped = False
    while True:
        v = sample_hypercube(n, rng)
        norm = float(np.linalg.norm(v))
        if norm == 0.0:
            continue
        u = v / norm
        if length and np.any(np.abs(rows[:length] @ u) > limit):
            break
        if length == rows.shape[0]:
            grown = np.empty((min(max_length, 2 * length), n))
            grown[:length] = rows
            rows = grown
        rows[length] = u
        length += 1
        if length >= max_length:
            capped = True
            logger.warning("chain n=%d seed %d hit max_length=%d", n, seed, max_length)
            break

    return ChainResult(
        n=n, tol=tol, length=length, seed=seed, capped=capped, vectors=_frozen(rows[:length])
    )


def run_chain(n: int, tol: float, seed: int, max_length: int = config.MAX_CHAIN_LENGTH) -> ChainResult:
    """One chain on the stream keyed by (seed, n)."""
    return grow_chain(n, tol, make_stream(seed, n), max_length=max_length, seed=seed)


def verify_chain(vectors, tol: float) -> bool:
    """Re-check that every pair of ``vectors`` lies within the band."""
    _check_tol(tol)
    v = np.asarray(vectors, dtype=np.float64)
    if v.ndim != 2:
        raise DomainError(f"expected a length x n array, got shape {v.shape}")
    if v.shape[0] < 2:
        return True
    v = v / np.linalg.norm(v, axis=1, keepdims=True)
    gram = v @ v.T
    np.fill_diagonal(gram, 0.0)
    return bool(np.max(np.abs(gram)) <= math.sin(tol) + VERIFY_SLACK)


def angle_histogram(n: int, count: int, bins: int, rng: np.random.Generator) -> AngleHistogram:
    """Angles between one reference hypercube vector and ``count`` further
    draws, binned over [0, pi]."""
    if count < 2:
        raise DomainError(f"count must be >= 2, got {count}")
    if bins < 1:
        raise DomainError(f"bins must be >= 1, got {bins}")
    ref = sample_hypercube(n, rng)
    ref_norm = float(np.linalg.norm(ref))
    if ref_norm == 0.0:
        raise DomainError("reference vector is zero")
    ref = ref / ref_norm

    chunk = max(1, (1 << 20) // n)
    angles = np.empty(count)
    done = 0
    while done < count:
        size = min(chunk, count - done)
        x = rng.uniform(-1.0, 1.0, (size, n))
        cosines = (x @ ref) / np.linalg.norm(x, axis=1)
        angles[done:done + size] = np.arccos(np.clip(cosines, -1.0, 1.0))
        done += size

    counts, edges = np.histogram(angles, bins=bins, range=(0.0, math.pi))
    return AngleHistogram(n=n, edges=_frozen(edges), counts=counts, angles=_frozen(angles))
