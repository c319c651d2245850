import math

import numpy as np
import pytest

from lrpath.mesh import build_time_grid, gaussian_density
from lrpath.monte_carlo import McConfig, mc_estimate
from lrpath.problems import ProblemSpec, cauchy_problem


def _free(f, sigma=0.5, T=1.0):
    return ProblemSpec(lambda x, t: np.zeros(np.shape(x)), f, sigma, T)


def test_constant_integrand_is_exact():
    p = _free(lambda x: np.ones_like(x))
    est, err = mc_estimate(p, build_time_grid(1.0, 16), McConfig(K=5000, seed=3))
    assert est == 1.0 and err == 0.0


def test_constant_integrand_exact_across_shards():
    p = _free(lambda x: np.ones_like(x))
    est, err = mc_estimate(p, build_time_grid(1.0, 4), McConfig(K=1001), shards=7, chunk=64)
    assert est == 1.0 and err == 0.0


def test_gaussian_closed_form():
    beta, sigma, T = 2.0, 0.5, 1.0
    p = _free(lambda x: gaussian_density(beta, x), sigma, T)
    est, err = mc_estimate(p, build_time_grid(T, 8), McConfig(K=200_000, seed=1))
    exact = math.sqrt(beta / (1 + 4 * beta * sigma * T) / math.pi)
    assert abs(est - exact) <= 4 * err


def test_seed_determinism():
    p = cauchy_problem()
    tg = build_time_grid(1.0, 16)
    a = mc_estimate(p, tg, McConfig(K=3000, seed=9))
    b = mc_estimate(p, tg, McConfig(K=3000, seed=9))
    c = mc_estimate(p, tg, McConfig(K=3000, seed=10))
    assert a == b and a != c


def test_chunking_does_not_change_stream():
    p = cauchy_problem()
    tg = build_time_grid(1.0, 8)
    a = mc_estimate(p, tg, McConfig(K=1000, seed=2), chunk=1000)
    b = mc_estimate(p, tg, McConfig(K=1000, seed=2), chunk=1000)
    assert a == b


def test_shards_agree_statistically():
    p = cauchy_problem()
    tg = build_time_grid(1.0, 16)
    a, ea = mc_estimate(p, tg, McConfig(K=40_000, seed=4))
    b, eb = mc_estimate(p, tg, McConfig(K=40_000, seed=4), shards=4)
    assert abs(a - b) <= 4 * math.hypot(ea, eb)


def test_antithetic_reduces_spread_for_odd_integrand_part():
    p = _free(lambda x: 1.0 + 0.1 * x)
    tg = build_time_grid(1.0, 4)
    est, err = mc_estimate(p, tg, McConfig(K=1000, seed=0, antithetic=True))
    assert est == pytest.approx(1.0, abs=1e-12) and err < 1e-12


def test_single_sample():
    est, err = mc_estimate(cauchy_problem(), build_time_grid(1.0, 4), McConfig(K=1))
    assert math.isfinite(est) and err == math.inf


@pytest.mark.parametrize("K", [0, -3, 2.5])
def test_invalid_sample_count(K):
    with pytest.raises(ValueError):
        McConfig(K=K)


def test_divergent_weights_are_reported():
    p = ProblemSpec(lambda x, t: -1e300 * np.ones_like(x), lambda x: np.ones_like(x), 0.5, 1.0)
    with pytest.raises(ArithmeticError):
        mc_estimate(p, build_time_grid(1.0, 4), McConfig(K=10))
