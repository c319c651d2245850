import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from lrpath.mesh import (RECTANGLE, TRAPEZOID, CapacityError, build_grid_stack, build_kernel,
                         build_time_grid, gaussian_density)


def test_trapezoid_weights_four_steps():
    tg = build_time_grid(1.0, 4)
    assert tg.dt == 0.25
    np.testing.assert_array_equal(tg.w, [0.5, 1, 1, 1, 0.5])


def test_single_step_weights():
    np.testing.assert_array_equal(build_time_grid(1.0, 1).w, [0.5, 0.5])


def test_oscillator_time_step():
    assert build_time_grid(10.0, 100).dt == pytest.approx(0.1, rel=1e-15)


def test_rectangle_rule_drops_last_weight():
    tg = build_time_grid(2.0, 5, RECTANGLE)
    np.testing.assert_array_equal(tg.w, [1, 1, 1, 1, 1, 0])


def test_weights_are_read_only():
    tg = build_time_grid(1.0, 3)
    with pytest.raises(ValueError):
        tg.w[0] = 3.0


@pytest.mark.parametrize("T,n", [(0.0, 4), (-1.0, 4), (1.0, 0)])
def test_time_grid_rejects_bad_arguments(T, n):
    with pytest.raises(ValueError):
        build_time_grid(T, n)


def test_time_grid_rejects_unknown_rule():
    with pytest.raises(ValueError):
        build_time_grid(1.0, 4, "simpson")


@given(st.floats(0.01, 100.0), st.integers(1, 5000))
def test_weight_sum_gives_horizon(T, n):
    tg = build_time_grid(T, n)
    assert math.fsum(tg.w) == n
    assert math.fsum(tg.w) * tg.dt == pytest.approx(T, rel=1e-13)


def test_large_scale_grid():
    g = build_grid_stack(2.0, 4000, 1)
    assert g.h_x == 5e-4
    assert g.M == 8000
    assert g.domain(1) == (-2.0, 2.0)
    x = g.points(1)
    assert x[0] == -2.0 and x.size == 8000 and x[-1] < 2.0


def test_hand_enumerable_level():
    g = build_grid_stack(1.0, 1, 3)
    np.testing.assert_array_equal(g.points(3), [-3, -2, -1, 0, 1, 2])


def test_deep_level_domain():
    g = build_grid_stack(2.0, 4000, 8192)
    assert g.domain(8192) == (-16384.0, 16384.0)
    assert g.size(8192) == 8192 * 8000


def test_partial_point_evaluation():
    g = build_grid_stack(2.0, 10, 5)
    idx = np.array([0, 7, 99])
    np.testing.assert_array_equal(g.points(5, idx), g.points(5)[idx])


@given(st.integers(1, 40), st.integers(1, 6), st.data())
def test_nesting_identity_is_exact(N_x, k, data):
    g = build_grid_stack(2.0, N_x, k + 1)
    i = data.draw(st.integers(0, k * g.M - 1))
    j = data.draw(st.integers(0, g.M - 1))
    lhs = g.points(k + 1, np.array([i + j]))[0]
    xi = g.xi()[j]
    # the identity is exact in index arithmetic; floats agree to one rounding
    assert lhs == pytest.approx(g.points(k, np.array([i]))[0] + xi, abs=1e-12 * (k + 1))
    assert lhs == -(k + 1) * 2.0 + (i + j) * g.h_x


@pytest.mark.parametrize("a_x,N_x", [(0.0, 10), (2.0, 0)])
def test_grid_rejects_bad_arguments(a_x, N_x):
    with pytest.raises(ValueError):
        build_grid_stack(a_x, N_x, 4)


def test_capacity_error_on_overflow():
    with pytest.raises(CapacityError):
        build_grid_stack(2.0, 2**40, 2**30)


def test_kernel_lambda():
    g = build_grid_stack(2.0, 4000, 100)
    assert build_kernel(0.25, 0.1, g).lam == pytest.approx(10.0, rel=1e-15)


def test_kernel_mass_against_erf():
    g = build_grid_stack(2.0, 4000, 32)
    kern = build_kernel(0.5, 0.03125, g)
    lam = kern.lam
    exact = float(mpmath.erf(2 * mpmath.sqrt(lam)))
    assert abs(math.fsum(kern.p) - exact) < 1e-12
    assert abs(math.fsum(kern.p) - 1.0) < 1e-12


def test_two_point_kernel():
    g = build_grid_stack(1.0, 1, 1)
    kern = build_kernel(1.0, 1.0, g)
    assert kern.p.shape == (2,)
    np.testing.assert_array_equal(kern.p_rev, kern.p[::-1])


def test_kernel_symmetric_and_nonnegative():
    g = build_grid_stack(2.0, 50, 1)
    p = build_kernel(0.3, 0.2, g).p
    assert np.all(p >= 0)
    # xi_0 = -a_x has no mirror on the semi-open mesh
    np.testing.assert_allclose(p[1:], p[1:][::-1], rtol=1e-13)


def test_trapezoid_spatial_rule_halves_ends():
    g = build_grid_stack(2.0, 50, 1)
    rect = build_kernel(0.3, 0.2, g, RECTANGLE)
    trap = build_kernel(0.3, 0.2, g, TRAPEZOID)
    assert trap.p[0] == pytest.approx(0.5 * rect.p[0])
    assert trap.p[-1] == pytest.approx(0.5 * rect.p[-1])
    np.testing.assert_array_equal(trap.p[1:-1], rect.p[1:-1])


@pytest.mark.parametrize("sigma,dt", [(0.0, 0.1), (0.5, 0.0), (-1.0, 0.1)])
def test_kernel_rejects_bad_arguments(sigma, dt):
    with pytest.raises(ValueError):
        build_kernel(sigma, dt, build_grid_stack(2.0, 10, 1))


def test_gaussian_density_normalised():
    x = np.linspace(-20, 20, 400001)
    assert np.trapezoid(gaussian_density(0.7, x), x) == pytest.approx(1.0, abs=1e-12)
