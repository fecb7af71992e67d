import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from relbouncer.errors import ConvergenceError
from relbouncer.numerics import (
    QuadratureSpec,
    adaptive_quad,
    airy_ai,
    airy_zeros,
    bisect,
    central_difference,
    composite_gauss_legendre,
    fd_step,
    golden_min,
)

# Reference zeros of Ai on the negative axis (standard tables, 16 digits)
AIRY_ZEROS_TABLE = [
    2.338107410459767, 4.087949444130971, 5.520559828095551, 6.786708090071759,
    7.944133587120853, 9.022650853340981, 10.04017434155809, 11.00852430373326,
    11.93601556323626, 12.82877675286576,
]


def test_airy_values_at_origin():
    assert airy_ai(0.0) == pytest.approx(0.3550280538878172, abs=1e-15)
    y, yp = airy_ai(0.0, with_derivative=True)
    assert yp == pytest.approx(-0.2588194037928068, abs=1e-15)


def test_airy_ode_residual():
    # Ai'' = x Ai; second differences carry an O(h^2 x^2 Ai) truncation error
    for x in (-7.3, -2.0, 0.4, 2.5):
        h = 1e-3
        second = (airy_ai(x + h) - 2 * airy_ai(x) + airy_ai(x - h)) / h ** 2
        assert second == pytest.approx(x * airy_ai(x), abs=1e-5)


def test_airy_zeros_match_table_and_residual():
    zeros = airy_zeros(10)
    np.testing.assert_allclose(zeros, AIRY_ZEROS_TABLE, rtol=0, atol=1e-12)
    for a in zeros:
        assert abs(airy_ai(-a)) <= 1e-10


def test_airy_zeros_first_three():
    a = airy_zeros(3)
    assert a == pytest.approx([2.33811, 4.08795, 5.52056], abs=5e-6)


@pytest.mark.parametrize("n", [0, 11])
def test_airy_zeros_range(n):
    with pytest.raises(ValueError):
        airy_zeros(n)


def test_gauss_legendre_composite_is_exact_for_polynomials():
    x, w = composite_gauss_legendre([-1.0, 0.2, 3.0], 15)
    assert np.dot(w, x ** 29) == pytest.approx((3.0 ** 30 - 1.0) / 30, rel=1e-13)


def test_adaptive_quad_oscillatory():
    r = adaptive_quad(lambda x: np.cos(100 * x), 0.0, 1.0, QuadratureSpec())
    assert r.value == pytest.approx(math.sin(100.0) / 100.0, abs=1e-13)


def test_adaptive_quad_endpoint_singularity():
    r = adaptive_quad(lambda x: 1.0 / np.sqrt(x), 0.0, 1.0, QuadratureSpec(abs_tol=1e-10, rel_tol=1e-10))
    assert r.value == pytest.approx(2.0, abs=1e-8)


def test_adaptive_quad_complex_and_reversed():
    r = adaptive_quad(lambda x: np.exp(1j * x), 1.0, 0.0, QuadratureSpec())
    assert r.value == pytest.approx(-(np.exp(1j) - 1) / 1j, abs=1e-14)


def test_adaptive_quad_budget():
    with pytest.raises(ConvergenceError):
        adaptive_quad(lambda x: np.sin(1.0 / (x + 1e-9)), 0.0, 1.0, QuadratureSpec(max_subdivisions=5))


def test_quadrature_spec_validation():
    with pytest.raises(ValueError):
        QuadratureSpec(abs_tol=-1.0)


def test_fd_step_scaling():
    assert fd_step(0.0) == fd_step(1.0)
    assert fd_step(100.0) == pytest.approx(100 * fd_step(1.0))


@settings(max_examples=30, deadline=None)
@given(st.floats(-3, 3))
def test_central_difference_on_sine(x):
    assert central_difference(np.sin, x) == pytest.approx(math.cos(x), abs=1e-9)


def test_bisect_and_golden():
    r = bisect(lambda x: x - 0.5, 0.0, 1.0, 1e-14)
    assert r.converged and r.location == pytest.approx(0.5, abs=1e-14)
    g = golden_min(lambda x: (x - 0.3) ** 2, 0.0, 1.0, 1e-10)
    assert g.converged and g.location == pytest.approx(0.3, abs=1e-7)


def test_bisect_requires_bracket():
    with pytest.raises(ValueError):
        bisect(lambda x: x * x + 1.0, -1.0, 1.0, 1e-10)


def test_bisect_on_airy_bracket():
    r = bisect(airy_ai, -2.5, -2.0, 1e-14)
    assert -r.location == pytest.approx(AIRY_ZEROS_TABLE[0], abs=1e-13)
