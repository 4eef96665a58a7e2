import math

import numpy as np
import pytest

from basis_approx.chains import (
    angle_histogram,
    cos_angle,
    grow_chain,
    run_chain,
    sample_hypercube,
    verify_chain,
)
from basis_approx.concentration import BoundQuery, quasiortho_bound_conservative
from basis_approx.config import CHAIN_TOL, CHAIN_THETA
from basis_approx.errors import DomainError
from basis_approx.rng import make_stream

# Settings
chains_per_n = 20
low_dim_seeds = 1000


def test_hypercube_samples():
    rng = make_stream(1)
    x = sample_hypercube(100_000, rng)
    assert x.min() >= -1.0 and x.max() <= 1.0
    assert abs(x.mean()) < 0.02
    assert not np.array_equal(sample_hypercube(10, rng), sample_hypercube(10, rng))


def test_cos_angle():
    e1, e2 = np.eye(2)
    assert cos_angle(e1, e2) == 0.0
    x = np.array([0.3, -1.2, 2.0])
    assert cos_angle(x, x) == pytest.approx(1.0, abs=1e-15)
    assert cos_angle(x, -x) == pytest.approx(-1.0, abs=1e-15)
    with pytest.raises(DomainError):
        cos_angle(x, np.zeros(3))


def test_chain_is_pairwise_within_band():
    chain = run_chain(400, CHAIN_TOL, seed=7)
    assert chain.length >= 1
    assert chain.vectors.shape == (chain.length, 400)
    assert verify_chain(chain.vectors, CHAIN_TOL)
    assert not chain.capped


def test_chain_is_seeded():
    a = run_chain(200, CHAIN_TOL, seed=3)
    b = run_chain(200, CHAIN_TOL, seed=3)
    assert a.length == b.length
    np.testing.assert_array_equal(a.vectors, b.vectors)


def test_chain_cap_is_reported():
    chain = grow_chain(50, 1.5, make_stream(0), max_length=5)
    assert chain.capped
    assert chain.length == 5


def test_verify_chain_rejects_parallel_pair():
    assert not verify_chain(np.array([[1.0, 0.0], [1.0, 0.1]]), CHAIN_TOL)
    assert verify_chain(np.array([[1.0, 0.0], [0.0, 2.0]]), CHAIN_TOL)


def test_two_dimensional_chains_are_short():
    lengths = np.array([run_chain(2, CHAIN_TOL, seed=s).length for s in range(low_dim_seeds)])
    # a third vector near-orthogonal to two near-orthogonal vectors cannot exist in the plane
    assert lengths.max() <= 2
    assert np.median(lengths) <= 2


def test_chain_length_grows_with_dimension():
    small = np.median([run_chain(100, CHAIN_TOL, seed=s).length for s in range(chains_per_n)])
    large = np.median([run_chain(1600, CHAIN_TOL, seed=s).length for s in range(chains_per_n)])
    assert large > small


def test_angle_histogram_mass():
    hist = angle_histogram(30, 500, 12, make_stream(5))
    assert int(hist.counts.sum()) == 500
    assert hist.count == 500
    assert hist.edges[0] == 0.0 and hist.edges[-1] == pytest.approx(math.pi)
    with pytest.raises(DomainError):
        angle_histogram(30, 1, 12, make_stream(5))


def test_angles_concentrate_in_high_dimension():
    hist = angle_histogram(1920, 10_000, 60, make_stream(6))
    assert hist.fraction_abs_cos_le(0.1) >= 0.999
    lo, hi = hist.mode_bin()
    assert lo <= math.pi / 2 <= hi


def test_angles_spread_in_the_plane():
    hist = angle_histogram(2, 10_000, 60, make_stream(7))
    assert hist.fraction_abs_cos_le(0.1) < 0.2


@pytest.mark.slow
def test_chains_exceed_conservative_bound():
    eps = math.sin(CHAIN_TOL)
    medians = []
    for n in (400, 800, 1600):
        lengths = [run_chain(n, CHAIN_TOL, seed=s).length for s in range(chains_per_n)]
        median = float(np.median(lengths))
        assert median > quasiortho_bound_conservative(BoundQuery(n=n, eps=eps, theta=CHAIN_THETA))
        medians.append(median)
    assert medians == sorted(medians)
