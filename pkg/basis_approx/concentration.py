"""
Measure concentration in high dimension: shell and waist fractions, ball
volumes, Stirling's formula with its remainder bound, pairwise
quasi-orthogonality probabilities and bounds, almost linear (in)dependence,
and the geodesic neighbourhood of a subspace.

All probability and volume formulas are evaluated in log space with
log1p/expm1 kernels so dimensions in the millions do not overflow.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import mpmath
import numpy as np
import scipy.linalg
from scipy.special import gammaln

from .errors import DomainError, InequalityViolation

logger = logging.getLogger(__name__)

# largest number of factors multiplied out directly by pairwise_orthogonality_probability
MAX_PRODUCT_TERMS = 10_000_000
# floats per Monte-Carlo chunk
MC_CHUNK = 1 << 20


def _check_dim(n, minimum=1):
    if int(n) != n or n < minimum:
        raise DomainError(f"dimension must be an integer >= {minimum}, got {n}")
    return int(n)


def _check_open_unit(name, t):
    if not (0.0 < t < 1.0):
        raise DomainError(f"{name} must lie in (0,1), got {t}")
    return float(t)


def _log1p_plus_x(t):
    """log(1 - t) + t for 0 < t < 1, accurate for small t."""
    if t > 1e-3:
        return math.log1p(-t) + t
    # -(t^2/2 + t^3/3 + ...)
    total, term, k = 0.0, t * t, 2
    while term > 1e-18 * total or k == 2:
        total += term / k
        term *= t
        k += 1
    return -total


def _safe_exp(x):
    return math.inf if x > 709.0 else math.exp(x)


# =========================================================
# SHELLS AND WAISTS
# =========================================================

def shell_fraction_exact(n: int, delta_over_r: float) -> float:
    """1 - (1 - delta/R)^n, the volume fraction of the outer shell of width delta."""
    n = _check_dim(n)
    t = _check_open_unit("delta_over_r", delta_over_r)
    return -math.expm1(n * math.log1p(-t))


def shell_fraction_lower_bound(n: int, delta_over_r: float) -> float:
    """1 - exp(-n delta/R)"""
    n = _check_dim(n)
    t = _check_open_unit("delta_over_r", delta_over_r)
    return -math.expm1(-n * t)


def shell_fraction_log_gap(n: int, delta_over_r: float) -> float:
    """log(exact - lower bound) = -n t + log(1 - exp(n (log(1-t) + t))).

    Finite for every valid input, so the strict inequality can be checked
    where both fractions round to 1.
    """
    n = _check_dim(n)
    t = _check_open_unit("delta_over_r", delta_over_r)
    return -n * t + math.log(-math.expm1(n * _log1p_plus_x(t)))


def exp_inequality_check(x: float) -> tuple:
    """
    ((1-x)/e, (1-x)^(1/x), 1/e), required to be strictly increasing.

    Both gaps shrink like x/2, below double resolution once x <= 1e-16, so
    the ordering is decided in log space at a precision that scales with
    -log10(x). The returned floats may tie for such x.
    """
    x = _check_open_unit("x", x)
    with mpmath.workdps(30 + math.ceil(-math.log10(x))):
        mx = mpmath.mpf(x)
        log_middle = mpmath.log1p(-mx) / mx
        # log(middle) - log(lower) and log(upper) - log(middle)
        lower_gap = log_middle - (mpmath.log1p(-mx) - 1)
        upper_gap = -1 - log_middle
        ordered = lower_gap > 0 and upper_gap > 0
        lower = float((1 - mx) * mpmath.exp(-1))
        middle = float(mpmath.exp(log_middle))
        upper = float(mpmath.exp(-1))
    if not ordered:
        raise InequalityViolation(f"ordering fails at x={x!r}: {lower!r}, {middle!r}, {upper!r}")
    return lower, middle, upper


def waist_fraction_bound(n: int, delta_over_r: float) -> float:
    """exp(-n (delta/R)^2 / 2), bounding the volume fraction outside the
    delta-thickening of an equatorial disc."""
    n = _check_dim(n)
    t = _check_open_unit("delta_over_r", delta_over_r)
    return math.exp(-0.5 * n * t * t)


def waist_fraction_volume_bound(n: int, delta_over_r: float) -> float:
    """(1 - (delta/R)^2)^(n/2): the same fraction bounded by the volume of the
    ball of radius sqrt(R^2 - delta^2). Always below waist_fraction_bound."""
    n = _check_dim(n)
    t = _check_open_unit("delta_over_r", delta_over_r)
    return math.exp(0.5 * n * math.log1p(-t * t))


# =========================================================
# VOLUMES AND STIRLING
# =========================================================

def ball_volume_log(n: int, r: float) -> float:
    """log V_n(r) = (n/2) log pi - log Gamma(n/2 + 1) + n log r; V_0 = 1."""
    n = _check_dim(n, minimum=0)
    if not r > 0:
        raise DomainError(f"radius must be > 0, got {r}")
    return 0.5 * n * math.log(math.pi) - float(gammaln(0.5 * n + 1.0)) + n * math.log(r)


def ball_volume_stirling_log(n: int, r: float) -> float:
    """log of V_n(r) ~ (n pi)^(-1/2) (2 pi e / n)^(n/2) r^n."""
    n = _check_dim(n)
    if not r > 0:
        raise DomainError(f"radius must be > 0, got {r}")
    return -0.5 * math.log(n * math.pi) + 0.5 * n * math.log(2.0 * math.pi * math.e / n) + n * math.log(r)


def volume_recurrence_residuals(n: int, r: float) -> tuple:
    """
    Log-form residuals of the two volume recurrences:

    - V_n = (2 pi r^2 / n) V_{n-2}
    - V_n = r sqrt(pi) Gamma((n+1)/2) / Gamma((n+1)/2 + 1/2) V_{n-1}
    """
    n = _check_dim(n, minimum=2)
    log_vn = ball_volume_log(n, r)
    two_step = log_vn - (math.log(2.0 * math.pi * r * r / n) + ball_volume_log(n - 2, r))
    h = 0.5 * (n + 1)
    one_step = log_vn - (
        math.log(r) + 0.5 * math.log(math.pi) + float(gammaln(h)) - float(gammaln(h + 0.5))
        + ball_volume_log(n - 1, r)
    )
    return two_step, one_step


@dataclass(frozen=True)
class StirlingEstimate:
    x: float
    log_core: float       # log of x^(x-1/2) e^(-x) sqrt(2 pi)
    value: float          # core * (1 + 1/(12x)); inf once it leaves double range
    bound: float          # (1 + pi^2/6) / (2 pi^3 x^2)
    remainder: float      # Gamma(x)/core - (1 + 1/(12x)), from the 40-digit reference


def stirling_gamma_with_bound(x: float) -> StirlingEstimate:
    """Two-term Stirling approximation of Gamma(x) with the guaranteed
    remainder bound, checked against a 40-digit log-gamma."""
    if not x > 0:
        raise DomainError(f"Stirling's formula needs x > 0, got {x}")
    x = float(x)
    bound = (1.0 + math.pi ** 2 / 6.0) / (2.0 * math.pi ** 3 * x * x)
    with mpmath.workdps(40):
        mx = mpmath.mpf(x)
        log_core = (mx - mpmath.mpf("0.5")) * mpmath.log(mx) - mx + mpmath.log(2 * mpmath.pi) / 2
        correction = 1 + 1 / (12 * mx)
        remainder = mpmath.exp(mpmath.loggamma(mx) - log_core) - correction
        value = _safe_exp(float(log_core)) * float(correction)
        remainder_f = float(remainder)
        within = abs(remainder) <= mpmath.mpf(bound)
    if not within:
        raise InequalityViolation(f"Stirling remainder {remainder_f!r} exceeds bound {bound!r} at x={x!r}")
    return StirlingEstimate(x=x, log_core=float(log_core), value=value, bound=bound, remainder=remainder_f)


# =========================================================
# PAIRWISE QUASI-ORTHOGONALITY
# =========================================================

@dataclass(frozen=True)
class BoundQuery:
    n: int
    eps: float
    theta: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "n", _check_dim(self.n))
        _check_open_unit("eps", self.eps)
        _check_open_unit("theta", self.theta)


@dataclass(frozen=True)
class BoundResult:
    query: BoundQuery
    conservative: float
    refined: float
    conservative_log: float
    refined_log: float
    n_eval: Optional[int]           # floor(conservative) when small enough to multiply out
    probability: float              # P(eps, n_eval), NaN when undefined
    probability_lower: float        # (1 - n_eval r)^n_eval, NaN when undefined
    log_p_lower: float              # J(n_eval + 1)
    log_p_upper: float              # J(n_eval)


def _pair_rate(n, eps):
    """r = exp(-n eps^2 / 2)"""
    return math.exp(-0.5 * n * eps * eps)


def pairwise_orthogonality_probability(n: int, eps: float, N: int) -> float:
    """P(eps, N) = prod_{k=1..N} (1 - k exp(-n eps^2/2))."""
    n = _check_dim(n)
    N = _check_dim(N, minimum=0)
    if N == 0:
        return 1.0
    r = _pair_rate(n, eps)
    if N * r >= 1.0:
        k = max(1, math.ceil(1.0 / r)) if r > 0 else N
        raise DomainError(f"factor k={k} of P(eps, N) is nonpositive (N={N}, n={n}, eps={eps})")
    if N > MAX_PRODUCT_TERMS:
        raise DomainError(
            f"N={N} too large to multiply out; use pairwise_orthogonality_log_bounds"
        )
    log_p = 0.0
    for start in range(1, N + 1, 1_000_000):
        ks = np.arange(start, min(N, start + 999_999) + 1, dtype=np.float64)
        log_p += float(np.sum(np.log1p(-ks * r)))
    return math.exp(log_p)


def pairwise_orthogonality_lower_bound(n: int, eps: float, N: int) -> float:
    """(1 - N exp(-n eps^2/2))^N, which P(eps, N) never falls below."""
    n = _check_dim(n)
    N = _check_dim(N, minimum=0)
    r = _pair_rate(n, eps)
    if N * r >= 1.0:
        raise DomainError(f"lower bound needs N exp(-n eps^2/2) < 1 (N={N}, n={n}, eps={eps})")
    return math.exp(N * math.log1p(-N * r)) if N else 1.0


def _j_integral(z, r):
    """J(z) = integral_0^z log(1 - x r) dx = z h(rz),
    h(u) = (u - 1) log(1 - u) / u - 1 = -sum_k u^k / (k (k+1))."""
    u = r * z
    if u == 0.0:
        return 0.0
    if u >= 1.0:
        return -z
    if u > 0.1:
        return z * ((u - 1.0) * math.log1p(-u) / u - 1.0)
    total, term, k = 0.0, u, 1
    while term > 1e-18 * max(total, 1e-300):
        total += term / (k * (k + 1))
        term *= u
        k += 1
    return -z * total


def pairwise_orthogonality_log_bounds(n: int, eps: float, N: int) -> tuple:
    """(J(N+1), J(N)), bracketing log P(eps, N) from below and above."""
    n = _check_dim(n)
    N = _check_dim(N, minimum=1)
    r = _pair_rate(n, eps)
    if r * (N + 1) > 1.0:
        raise DomainError(f"integral bracket needs (N+1) exp(-n eps^2/2) <= 1 (N={N}, n={n}, eps={eps})")
    return _j_integral(N + 1, r), _j_integral(N, r)


def quasiortho_bound_conservative_log(q: BoundQuery) -> float:
    return 0.25 * q.eps * q.eps * q.n + 0.5 * math.log(-math.log1p(-q.theta))


def quasiortho_bound_conservative(q: BoundQuery) -> float:
    """N <= exp(eps^2 n / 4) sqrt(log(1 / (1 - theta)))"""
    return _safe_exp(quasiortho_bound_conservative_log(q))


def quasiortho_bound_refined_log(q: BoundQuery) -> float:
    """log of sqrt(log^2(1-theta)/4 + 2 log(1/(1-theta)) e^{n eps^2/2}) + log(1-theta)/2"""
    big_l = math.log1p(-q.theta)  # negative
    a = -2.0 * big_l
    x = 0.5 * q.n * q.eps * q.eps
    log_s = 0.5 * (math.log(a) + x + math.log1p(big_l * big_l / (4.0 * a) * math.exp(-x)))
    s = _safe_exp(log_s)
    if math.isinf(s):
        return log_s
    return log_s + math.log1p(big_l / (2.0 * s))


def quasiortho_bound_refined(q: BoundQuery) -> float:
    return _safe_exp(quasiortho_bound_refined_log(q))


def evaluate_bounds(q: BoundQuery) -> BoundResult:
    """Both bounds plus P(eps, N) and its brackets at N = floor(conservative)."""
    cons_log = quasiortho_bound_conservative_log(q)
    ref_log = quasiortho_bound_refined_log(q)
    cons = _safe_exp(cons_log)

    nan = math.nan
    n_eval = None
    probability = lower = log_lo = log_hi = nan
    if cons <= MAX_PRODUCT_TERMS:
        n_eval = int(math.floor(cons))
        r = _pair_rate(q.n, q.eps)
        if n_eval * r < 1.0:
            probability = pairwise_orthogonality_probability(q.n, q.eps, n_eval)
            lower = pairwise_orthogonality_lower_bound(q.n, q.eps, n_eval)
        if n_eval >= 1 and (n_eval + 1) * r <= 1.0:
            log_lo, log_hi = pairwise_orthogonality_log_bounds(q.n, q.eps, n_eval)

    return BoundResult(
        query=q,
        conservative=cons,
        refined=_safe_exp(ref_log),
        conservative_log=cons_log,
        refined_log=ref_log,
        n_eval=n_eval,
        probability=probability,
        probability_lower=lower,
        log_p_lower=log_lo,
        log_p_upper=log_hi,
    )


# =========================================================
# ALMOST LINEAR (IN)DEPENDENCE
# =========================================================

def _as_matrix(h) -> np.ndarray:
    mat = np.asarray(h, dtype=np.float64)
    if mat.ndim == 1:
        mat = mat[:, None]
    if mat.ndim != 2 or mat.size == 0:
        raise DomainError(f"expected a non-empty n x m matrix, got shape {mat.shape}")
    if not np.all(np.isfinite(mat)):
        raise DomainError("matrix has non-finite entries")
    return mat


def min_gain(h) -> float:
    """min over unit x of ||H x||: the smallest singular value of H, reported
    as exactly 0 below the usual numerical-rank tolerance."""
    mat = _as_matrix(h)
    n, m = mat.shape
    if m > n:
        return 0.0
    s = scipy.linalg.svdvals(mat)
    tol = s[0] * max(n, m) * np.finfo(np.float64).eps
    return 0.0 if s[-1] <= tol else float(s[-1])


def sphere_sample(n: int, samples: int, rng: np.random.Generator) -> np.ndarray:
    """``samples`` uniform points on the unit sphere in R^n (normalized Gaussians)."""
    g = rng.standard_normal((samples, n))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def _gain_counts(mat, eps, samples, rng):
    """(count with ||Hx|| >= eps, count with ||Hx|| <= eps) over uniform x."""
    m = mat.shape[1]
    chunk = max(1, MC_CHUNK // max(m, mat.shape[0]))
    above = below = 0
    done = 0
    while done < samples:
        size = min(chunk, samples - done)
        x = sphere_sample(m, size, rng)
        gains = np.linalg.norm(x @ mat.T, axis=1)
        above += int(np.count_nonzero(gains >= eps))
        below += int(np.count_nonzero(gains <= eps))
        done += size
    return above, below


def almost_independence_fraction(h, eps: float, samples: int, rng: np.random.Generator) -> float:
    """Monte-Carlo estimate of mu({x on S^{m-1} : ||H x|| >= eps})."""
    if samples < 1:
        raise DomainError(f"samples must be >= 1, got {samples}")
    above, _ = _gain_counts(_as_matrix(h), eps, samples, rng)
    return above / samples


def almost_dependence_fraction(h, eps: float, samples: int, rng: np.random.Generator) -> float:
    """Monte-Carlo estimate of mu({x on S^{m-1} : ||H x|| <= eps})."""
    if samples < 1:
        raise DomainError(f"samples must be >= 1, got {samples}")
    _, below = _gain_counts(_as_matrix(h), eps, samples, rng)
    return below / samples


def is_almost_independent(h, eps, theta, samples, rng) -> bool:
    """(eps, theta)-almost linear independence of the columns of H."""
    return almost_independence_fraction(h, eps, samples, rng) >= 1.0 - theta


def is_almost_dependent(h, eps, theta, samples, rng) -> bool:
    return almost_dependence_fraction(h, eps, samples, rng) >= 1.0 - theta


# =========================================================
# NEIGHBOURHOOD OF A SUBSPACE
# =========================================================

@dataclass(frozen=True)
class SubspaceQuery:
    n: int
    lambda_: float
    eps_geo: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "n", _check_dim(self.n, minimum=2))
        _check_open_unit("lambda", self.lambda_)
        if not (0.0 < self.eps_geo < math.pi / 2):
            raise DomainError(f"eps_geo must lie in (0, pi/2), got {self.eps_geo}")
        k = self.k
        if not (1 <= k < self.n):
            raise DomainError(f"k = round(lambda n) = {k} must satisfy 1 <= k < n={self.n}")

    @property
    def k(self) -> int:
        return int(math.floor(self.lambda_ * self.n + 0.5))


@dataclass(frozen=True)
class ArtsteinEstimate:
    regime: str         # "near_one" when sin^2 eps > 1 - lambda, else "near_zero"
    u: float
    prefactor: float
    printed: float      # the asymptotic formula with its exponent as printed
    flipped: float      # the same with exponent -(n/2) u


def artstein_u(lambda_: float, eps_geo: float) -> float:
    """u = (1-lambda) log((1-lambda)/sin^2 eps) + lambda log(lambda/cos^2 eps)"""
    lam = _check_open_unit("lambda", lambda_)
    if not (0.0 < eps_geo < math.pi / 2):
        raise DomainError(f"eps_geo must lie in (0, pi/2), got {eps_geo}")
    s2 = math.sin(eps_geo) ** 2
    c2 = math.cos(eps_geo) ** 2
    if math.isclose(s2, 1.0 - lam, rel_tol=1e-12, abs_tol=1e-15):
        raise DomainError("asymptotic regime undefined at sin^2 eps = 1 - lambda")
    return (1.0 - lam) * math.log((1.0 - lam) / s2) + lam * math.log(lam / c2)


def artstein_asymptotic(q: SubspaceQuery) -> ArtsteinEstimate:
    """Large-n asymptotics of mu((E_k)_eps), in both exponent-sign variants."""
    lam, n = q.lambda_, q.n
    u = artstein_u(lam, q.eps_geo)
    s2 = math.sin(q.eps_geo) ** 2
    root = math.sqrt(lam * (1.0 - lam)) / math.sqrt(n * math.pi)
    if s2 > 1.0 - lam:
        pref = root / (s2 - (1.0 - lam))
        return ArtsteinEstimate(
            regime="near_one",
            u=u,
            prefactor=pref,
            printed=1.0 - pref * _safe_exp(0.5 * n * u),
            flipped=1.0 - pref * math.exp(-0.5 * n * u),
        )
    pref = root / ((1.0 - lam) - s2)
    return ArtsteinEstimate(
        regime="near_zero",
        u=u,
        prefactor=pref,
        printed=pref,
        flipped=pref * math.exp(-0.5 * n * u),
    )


def subspace_neighborhood_mc(q: SubspaceQuery, samples: int, rng: np.random.Generator) -> float:
    """Fraction of uniform unit vectors whose first-k block has norm >= cos eps
    (geodesic distance to E_k = span(e_1..e_k) at most eps)."""
    if samples < 1:
        raise DomainError(f"samples must be >= 1, got {samples}")
    n, k = q.n, q.k
    cos2 = math.cos(q.eps_geo) ** 2
    chunk = max(1, MC_CHUNK // n)
    hits = done = 0
    while done < samples:
        size = min(chunk, samples - done)
        g = rng.standard_normal((size, n))
        sq = g * g
        head = sq[:, :k].sum(axis=1)
        total = head + sq[:, k:].sum(axis=1)
        hits += int(np.count_nonzero(head >= cos2 * total))
        done += size
    return hits / samples
