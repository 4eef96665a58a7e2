import math

import mpmath
import numpy as np
import pytest

from basis_approx.concentration import (
    BoundQuery,
    SubspaceQuery,
    almost_dependence_fraction,
    almost_independence_fraction,
    artstein_asymptotic,
    artstein_u,
    ball_volume_log,
    ball_volume_stirling_log,
    evaluate_bounds,
    exp_inequality_check,
    is_almost_dependent,
    is_almost_independent,
    min_gain,
    pairwise_orthogonality_log_bounds,
    pairwise_orthogonality_lower_bound,
    pairwise_orthogonality_probability,
    quasiortho_bound_conservative,
    quasiortho_bound_conservative_log,
    quasiortho_bound_refined,
    quasiortho_bound_refined_log,
    shell_fraction_exact,
    shell_fraction_log_gap,
    shell_fraction_lower_bound,
    sphere_sample,
    stirling_gamma_with_bound,
    subspace_neighborhood_mc,
    volume_recurrence_residuals,
    waist_fraction_bound,
    waist_fraction_volume_bound,
)
from basis_approx.errors import DomainError
from basis_approx.rng import make_stream

# Settings
mc_samples = 200_000
mc_sigmas = 4.0


def test_shell_fraction_values():
    assert shell_fraction_exact(1, 0.5) == pytest.approx(0.5)
    with mpmath.workdps(30):
        oracle = float(1 - mpmath.mpf("0.99") ** 100)
    assert shell_fraction_exact(100, 0.01) == pytest.approx(oracle, rel=1e-12)
    assert shell_fraction_exact(100, 0.01) == pytest.approx(0.633968, abs=1e-6)
    assert shell_fraction_lower_bound(100, 0.01) == pytest.approx(1.0 - math.exp(-1.0), rel=1e-14)
    assert shell_fraction_lower_bound(100, 0.01) < shell_fraction_exact(100, 0.01)
    assert shell_fraction_exact(5, 1.0 - 1e-12) == pytest.approx(1.0)
    for bad in (0.0, 1.0, -0.1):
        with pytest.raises(DomainError):
            shell_fraction_exact(3, bad)


def test_shell_inequality_is_strict_on_grid():
    ns = np.unique(np.geomspace(1, 10_000, 100).astype(int))
    ts = np.linspace(0.005, 0.995, 100)
    for n in ns:
        for t in ts:
            gap = shell_fraction_log_gap(int(n), float(t))
            assert math.isfinite(gap)
            assert shell_fraction_exact(int(n), float(t)) >= shell_fraction_lower_bound(int(n), float(t))


def test_shell_log_gap_matches_direct_difference():
    exact = shell_fraction_exact(100, 0.01)
    bound = shell_fraction_lower_bound(100, 0.01)
    assert shell_fraction_log_gap(100, 0.01) == pytest.approx(math.log(exact - bound), rel=1e-9)


def test_exp_inequality():
    lo, mid, hi = exp_inequality_check(0.5)
    assert (lo, mid, hi) == pytest.approx((0.18394, 0.25, 0.36788), abs=1e-5)
    exp_inequality_check(0.9)
    for x in make_stream(1).uniform(1e-6, 1.0 - 1e-6, 10_000):
        exp_inequality_check(float(x))
    with pytest.raises(DomainError):
        exp_inequality_check(1.0)


@pytest.mark.parametrize("x", [1e-16, 1e-17, 1e-30, 1e-300, 5e-324])
def test_exp_inequality_tiny_x(x):
    lo, mid, hi = exp_inequality_check(x)
    assert lo <= mid <= hi
    assert mid == pytest.approx(1.0 / math.e, rel=1e-15)


def test_waist_bounds():
    assert waist_fraction_bound(1920, 0.1) == pytest.approx(math.exp(-9.6), rel=1e-14)
    assert waist_fraction_bound(1920, 0.1) == pytest.approx(6.77e-5, rel=1e-3)
    assert waist_fraction_bound(100, 0.1) > waist_fraction_bound(200, 0.1)
    for n in (1, 10, 1000):
        for t in (0.01, 0.3, 0.9):
            assert waist_fraction_volume_bound(n, t) < waist_fraction_bound(n, t)


def test_ball_volumes():
    assert ball_volume_log(0, 1.0) == 0.0
    assert ball_volume_log(2, 1.0) == pytest.approx(math.log(math.pi), rel=1e-14)
    assert ball_volume_log(3, 1.0) == pytest.approx(math.log(4.0 * math.pi / 3.0), rel=1e-14)
    assert ball_volume_log(3, 2.0) == pytest.approx(math.log(32.0 * math.pi / 3.0), rel=1e-14)
    # Stirling form is asymptotic: relative error O(1/n) in the volume
    for n in (100, 1000, 10_000):
        assert abs(ball_volume_stirling_log(n, 1.0) - ball_volume_log(n, 1.0)) < 1.0 / n
    with pytest.raises(DomainError):
        ball_volume_log(3, 0.0)


@pytest.mark.parametrize("n", [2, 3, 10, 101, 1000, 10_000])
@pytest.mark.parametrize("r", [0.5, 1.0, 2.0])
def test_volume_recurrences(n, r):
    two_step, one_step = volume_recurrence_residuals(n, r)
    assert abs(two_step) < 1e-10
    assert abs(one_step) < 1e-10


def test_stirling_bound():
    est = stirling_gamma_with_bound(10.0)
    assert est.bound == pytest.approx((1.0 + math.pi ** 2 / 6.0) / (200.0 * math.pi ** 3), rel=1e-14)
    five = stirling_gamma_with_bound(5.0)
    assert abs(five.value / 24.0 - 1.0) < 1e-3
    assert abs(five.remainder) <= five.bound
    assert stirling_gamma_with_bound(1e6).bound < 1e-12
    for x in make_stream(2).uniform(1.0, 1000.0, 100):
        est = stirling_gamma_with_bound(float(x))
        assert abs(est.remainder) <= est.bound
    with pytest.raises(DomainError):
        stirling_gamma_with_bound(0.0)


def test_pairwise_probability():
    r = math.exp(-5.0)
    assert pairwise_orthogonality_probability(1000, 0.1, 0) == 1.0
    p = pairwise_orthogonality_probability(1000, 0.1, 3)
    assert p == pytest.approx((1 - r) * (1 - 2 * r) * (1 - 3 * r), rel=1e-14)
    assert round(p, 3) == 0.960
    assert pairwise_orthogonality_probability(1000, 0.1, 4) < p
    assert pairwise_orthogonality_probability(2000, 0.1, 3) > p
    with pytest.raises(DomainError, match="k="):
        pairwise_orthogonality_probability(1, 0.1, 2)


@pytest.mark.parametrize("n,eps,N", [(1000, 0.1, 3), (400, 0.1, 5), (3000, 0.05, 20), (1920, 0.0581, 2)])
def test_probability_brackets(n, eps, N):
    p = pairwise_orthogonality_probability(n, eps, N)
    assert p >= pairwise_orthogonality_lower_bound(n, eps, N)
    lo, hi = pairwise_orthogonality_log_bounds(n, eps, N)
    assert lo <= math.log(p) <= hi


def test_quasiortho_bound_values():
    q = BoundQuery(n=1000, eps=0.1, theta=0.1)
    with mpmath.workdps(40):
        L = mpmath.log(1 - mpmath.mpf("0.1"))
        cons = mpmath.exp(mpmath.mpf("2.5")) * mpmath.sqrt(-L)
        ref = mpmath.sqrt(L ** 2 / 4 + 2 * (-L) * mpmath.exp(5)) + L / 2
    assert quasiortho_bound_conservative(q) == pytest.approx(float(cons), rel=1e-12)
    assert quasiortho_bound_refined(q) == pytest.approx(float(ref), rel=1e-12)
    assert quasiortho_bound_conservative(q) == pytest.approx(3.954, abs=1e-3)
    assert quasiortho_bound_refined(q) == pytest.approx(5.540, abs=1e-3)


def test_quasiortho_bounds_large_n():
    eps, theta = 0.1, 0.1
    a = BoundQuery(n=100_000, eps=eps, theta=theta)
    b = BoundQuery(n=1_000_000, eps=eps, theta=theta)
    for log_bound in (quasiortho_bound_conservative_log, quasiortho_bound_refined_log):
        slope = (log_bound(b) - log_bound(a)) / (b.n - a.n)
        assert slope == pytest.approx(eps * eps / 4.0, abs=1e-6)
    ratio = math.exp(quasiortho_bound_refined_log(a) - quasiortho_bound_conservative_log(a))
    assert ratio == pytest.approx(math.sqrt(2.0), rel=1e-6)
    assert math.isinf(quasiortho_bound_conservative(b))
    assert quasiortho_bound_conservative(BoundQuery(n=1, eps=eps, theta=1e-12)) < 1e-5


def test_query_validation():
    with pytest.raises(DomainError):
        BoundQuery(n=0, eps=0.1, theta=0.1)
    with pytest.raises(DomainError):
        BoundQuery(n=10, eps=1.0, theta=0.1)
    with pytest.raises(DomainError):
        SubspaceQuery(n=3, lambda_=0.1, eps_geo=0.5)


def test_evaluate_bounds_gathers_diagnostics():
    res = evaluate_bounds(BoundQuery(n=1000, eps=0.1, theta=0.1))
    assert res.n_eval == 3
    assert res.probability == pytest.approx(pairwise_orthogonality_probability(1000, 0.1, 3))
    assert res.probability_lower <= res.probability
    assert res.log_p_lower <= math.log(res.probability) <= res.log_p_upper
    assert res.refined > res.conservative


def test_min_gain():
    assert min_gain(np.eye(5)[:, :3]) == pytest.approx(1.0)
    h = np.array([1.0, 2.0, 2.0]) / 3.0
    assert min_gain(np.column_stack([h, h])) == 0.0
    a = np.eye(4)[:, :3].copy()
    a[:, 2] = (a[:, 0] + a[:, 1]) / math.sqrt(2.0)
    assert min_gain(a) == 0.0
    with pytest.raises(DomainError):
        min_gain(np.empty((0, 0)))


def test_min_gain_matches_sphere_sampling():
    gen = make_stream(3)
    h = gen.standard_normal((5, 3))
    h /= np.linalg.norm(h, axis=0)
    x = sphere_sample(3, 1_000_000, gen)
    brute = float(np.min(np.linalg.norm(x @ h.T, axis=1)))
    assert brute >= min_gain(h) - 1e-12
    assert brute == pytest.approx(min_gain(h), abs=1e-3)


def test_independence_fractions():
    rng = make_stream(4)
    q = np.linalg.qr(rng.standard_normal((6, 3)))[0]
    assert almost_independence_fraction(q, 0.5, 1000, rng) == 1.0
    assert almost_independence_fraction(q, 1.5, 1000, rng) == 0.0
    assert is_almost_independent(q, 0.5, 0.1, 1000, rng)
    assert not is_almost_dependent(q, 0.5, 0.1, 1000, rng)


def test_duplicated_column_arc_measure():
    h = np.array([0.6, 0.8])
    mat = np.column_stack([h, h])
    eps = 0.1
    # |x1 + x2| >= eps on the unit circle misses an arc of measure (2/pi) asin(eps / sqrt(2))
    expected = 1.0 - (2.0 / math.pi) * math.asin(eps / math.sqrt(2.0))
    se = 0.5 / math.sqrt(mc_samples)
    got = almost_independence_fraction(mat, eps, mc_samples, make_stream(5))
    assert abs(got - expected) < mc_sigmas * se
    dep = almost_dependence_fraction(mat, eps, mc_samples, make_stream(5))
    assert got + dep == pytest.approx(1.0, abs=1e-12)


def test_artstein_u():
    assert artstein_u(0.5, 1.0) == pytest.approx(0.0951, abs=1e-4)
    for lam, eps in ((0.3, 0.4), (0.7, 1.2), (0.1, 0.2)):
        assert artstein_u(lam, eps) == pytest.approx(artstein_u(1.0 - lam, math.pi / 2 - eps), rel=1e-12)
    with pytest.raises(DomainError):
        artstein_u(0.5, math.pi / 4)


def test_artstein_asymptotic_reports_both_signs():
    near_one = artstein_asymptotic(SubspaceQuery(n=200, lambda_=0.5, eps_geo=1.0))
    assert near_one.regime == "near_one"
    assert near_one.u > 0
    assert near_one.flipped < 1.0
    assert near_one.printed < near_one.flipped
    near_zero = artstein_asymptotic(SubspaceQuery(n=200, lambda_=0.5, eps_geo=0.3))
    assert near_zero.regime == "near_zero"
    assert near_zero.printed == near_zero.prefactor
    assert near_zero.flipped < near_zero.printed


def test_subspace_band_measure():
    q = SubspaceQuery(n=3, lambda_=2.0 / 3.0, eps_geo=math.pi / 4)
    assert q.k == 2
    got = subspace_neighborhood_mc(q, mc_samples, make_stream(6))
    se = 0.5 / math.sqrt(mc_samples)
    assert abs(got - math.sin(math.pi / 4)) < mc_sigmas * se


def test_subspace_measure_nondecreasing_in_eps():
    values = [
        subspace_neighborhood_mc(SubspaceQuery(n=20, lambda_=0.5, eps_geo=e), 5000, make_stream(8))
        for e in (0.3, 0.6, 0.9, 1.2, 1.5)
    ]
    assert values == sorted(values)
    assert values[-1] > 0.99


def test_sphere_sample_is_unit():
    x = sphere_sample(7, 100, make_stream(0))
    np.testing.assert_allclose(np.linalg.norm(x, axis=1), 1.0, rtol=1e-14)
