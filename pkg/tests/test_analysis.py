import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lrpath.analysis import (UndefinedOrderError, convergence_table, eps_rank,
                             hermite_coefficients, hermite_function, hermite_functions,
                             hermite_rank_study, relative_error, richardson, richardson_error,
                             runge_order)

X = np.linspace(0, 1, 50)
U_STAR = np.sin(3 * X) + 2


def _family(n, p=2.0, c=0.7, d=0.0):
    h = 1.0 / n
    return U_STAR + c * h**p * np.cos(X) + d * h**(p + 2) * X


def test_relative_error_basics():
    assert relative_error([1.0, 2.0], [1.0, 2.0]) == 0.0
    assert relative_error([1.0, 1e-3], [1.0, 0.0]) == pytest.approx(1e-3)
    with pytest.raises(ZeroDivisionError):
        relative_error([1.0], [0.0])
    with pytest.raises(ValueError):
        relative_error([1.0, 2.0], [1.0])


@pytest.mark.parametrize("p_star", [1, 2, 3])
def test_runge_recovers_order(p_star):
    n = 256
    p = runge_order(_family(n, p_star), _family(n // 2, p_star), _family(n // 4, p_star))
    assert p == pytest.approx(p_star, abs=0.01)


def test_runge_undefined_for_identical_solutions():
    with pytest.raises(UndefinedOrderError):
        runge_order(U_STAR, U_STAR, U_STAR + 1)


def test_richardson_fixed_point():
    np.testing.assert_allclose(richardson(U_STAR, U_STAR), U_STAR, rtol=1e-15)
    with pytest.raises(ValueError):
        richardson(U_STAR, U_STAR, 0)


def test_richardson_removes_leading_term():
    n = 64
    ext = richardson(_family(n, d=1.0), _family(n // 2, d=1.0))
    # what remains is the h^4 term times (4 - 16)/3
    expected = U_STAR - 4.0 / n**4 * X
    np.testing.assert_allclose(ext, expected, atol=1e-14)


def test_richardson_lifts_order():
    ns = [32, 64, 128, 256]
    u = [_family(n, d=1.0) for n in ns]
    raw = runge_order(u[3], u[2], u[1])
    e = [richardson(u[i], u[i - 1]) for i in (1, 2, 3)]
    lifted = runge_order(e[2], e[1], e[0])
    assert lifted - raw >= 1.5


def test_richardson_error_formula():
    a, b = np.array([1.0, 1.0]), np.array([1.0, 1.3])
    assert richardson_error(a, b, 2) == pytest.approx(0.3 / (3 * math.sqrt(2)))
    assert richardson_error(a, b, 4) == pytest.approx(0.3 / (15 * math.sqrt(2)))


def test_convergence_table_columns():
    ns = [16, 32, 64, 128]
    tab = convergence_table(1.0, ns, [_family(n, d=1.0) for n in ns], ranks=[1, 2, 3, 4])
    r = tab.rows
    assert [row.n for row in r] == ns
    assert r[0].eps2 is None and r[1].p2 is None and r[2].p4 is None
    assert r[3].p2 == pytest.approx(2.0, abs=0.01)
    assert r[3].p4 == pytest.approx(4.0, abs=0.05)
    assert r[3].rank == 4 and r[3].wall_seconds is None
    assert r[1].dt == 1 / 32


def test_convergence_table_two_entries():
    tab = convergence_table(1.0, [8, 16], [_family(8), _family(16)])
    assert tab.rows[1].eps2 is not None
    assert all(row.p2 is None and row.p4 is None for row in tab.rows)


def test_convergence_table_requires_doubling():
    with pytest.raises(ValueError):
        convergence_table(1.0, [8, 12], [U_STAR, U_STAR])


def test_hermite_orthonormal():
    x = np.linspace(-30, 30, 20001)
    phi = hermite_functions(40, x)
    gram = np.trapezoid(phi[:, None, :] * phi[None, :, :], x, axis=-1)
    np.testing.assert_allclose(gram, np.eye(41), atol=1e-10)


def test_hermite_matches_factorial_formula():
    from numpy.polynomial.hermite import hermval
    x = np.linspace(-4, 4, 33)
    for l in (0, 1, 5, 12):
        c = np.zeros(l + 1)
        c[l] = 1
        ref = hermval(x, c) * np.exp(-x * x / 2) / math.sqrt(2**l * math.factorial(l)
                                                               * math.sqrt(math.pi))
        np.testing.assert_allclose(hermite_function(l, x), ref, rtol=1e-12, atol=1e-14)


def test_hermite_no_overflow_high_degree():
    x = np.linspace(-50, 50, 1001)
    assert np.all(np.isfinite(hermite_functions(60, x)))


def test_eps_rank():
    assert eps_rank([1.0, 0.1, 1e-9, 1e-12], 1e-8) == 2
    assert eps_rank([], 1e-8) == 0


def test_hermite_study_small_shape():
    rows = hermite_rank_study(l_max=4, nrows=800, ncols=64)
    assert [r.l for r in rows] == list(range(5))
    assert all(r.sv[0] > 0 for r in rows)
    assert rows[0].relative[1] == pytest.approx(0.96, abs=0.02)


def test_coefficients_of_basis_function():
    exp = hermite_coefficients(lambda x: hermite_function(3, x), 10)
    np.testing.assert_allclose(exp.coefficients, np.eye(11)[3], atol=1e-12)
    assert exp.l0 == 3


def test_coefficients_of_ground_state():
    exp = hermite_coefficients(lambda x: np.exp(-x * x / 2) / math.pi**0.25, 6)
    assert exp.coefficients[0] == pytest.approx(1.0, abs=1e-12)
    assert np.abs(exp.coefficients[1:]).max() < 1e-12


def test_coefficients_of_cauchy_density():
    f = lambda x: 1.0 / (math.pi * (x * x + 1))
    exp = hermite_coefficients(f, 400, eps1=1e-3, half_width=250, npts=2**19 + 1)
    x = np.linspace(-250, 250, 2**19 + 1)
    # direct quadrature oracle for a few coefficients
    for l in (0, 2, 10):
        ref = np.trapezoid(f(x) * hermite_function(l, x), x)
        assert exp.coefficients[l] == pytest.approx(ref, abs=1e-12)
    assert np.abs(exp.coefficients[1::2]).max() < 1e-12
    chi = exp.chi()
    assert np.all(np.diff(chi) <= 1e-15)
    assert exp.l0 is not None and chi[exp.l0] < 1e-3 * chi[0]
    # the algebraic tails of f keep the relative tail energy near 2.5e-4 for l in the thousands
    strict = hermite_coefficients(f, 400, eps1=1e-6, half_width=250, npts=2**19 + 1)
    assert strict.l0 is None


def test_coefficients_not_found():
    exp = hermite_coefficients(lambda x: 1.0 / (math.pi * (x * x + 1)), 3, eps1=1e-12)
    assert exp.l0 is None


@given(st.floats(0.5, 3.0))
def test_chi_nonincreasing(width):
    exp = hermite_coefficients(lambda x: np.exp(-(x / width) ** 2), 12, npts=4097)
    assert np.all(np.diff(exp.chi()) <= 1e-15)
