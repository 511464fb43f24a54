import math

import mpmath
import numpy as np
import pytest

from layerheat.quadrature import (QuadratureSpec, ToleranceWarning, abel_limit, bessel_j, composite_rule,
                                  gauss_legendre, integrate_finite, integrate_semiinfinite_damped,
                                  normalized_bessel, resolved_rule)


@pytest.mark.parametrize("order", [-0.5, 0.0, 0.5, 1.0, 1.5, 2.0, 3.5])
@pytest.mark.parametrize("z", [1e-6, 0.3, 1.0, 7.5, 42.0])
def test_bessel_j_against_mpmath(order, z):
    ref = float(mpmath.besselj(order, z))
    assert bessel_j(order, z) == pytest.approx(ref, rel=1e-12, abs=1e-14)


@pytest.mark.parametrize("order", [-0.5, 0.0, 0.5, 1.0, 1.5, 2.5])
def test_normalized_bessel_small_argument_limit(order):
    expected = 1.0 / (2**order * math.gamma(order + 1))
    assert normalized_bessel(order, 0.0) == pytest.approx(expected, rel=1e-14)
    z = np.array([1e-8, 0.2, 0.49, 0.51, 3.0])
    ref = [float(mpmath.besselj(order, t) / mpmath.mpf(t) ** order) for t in z]
    np.testing.assert_allclose(normalized_bessel(order, z), ref, rtol=1e-12)


def test_half_integer_orders_are_elementary():
    z = np.linspace(0.1, 20, 50)
    np.testing.assert_allclose(normalized_bessel(-0.5, z), math.sqrt(2 / math.pi) * np.cos(z), rtol=1e-14)
    np.testing.assert_allclose(normalized_bessel(0.5, z), math.sqrt(2 / math.pi) * np.sin(z) / z, rtol=1e-13)


def test_bessel_rejects_bad_input():
    with pytest.raises(ValueError):
        bessel_j(-1.0, 1.0)
    with pytest.raises(ValueError):
        normalized_bessel(0.0, -1.0)


def test_gauss_legendre_is_exact_for_polynomials():
    x, w = gauss_legendre(8)
    for p in range(16):
        exact = 0.0 if p % 2 else 2.0 / (p + 1)
        assert np.sum(w * x**p) == pytest.approx(exact, abs=1e-14)
    with pytest.raises(ValueError):
        x[0] = 1.0


def test_composite_and_resolved_rules():
    x, w = composite_rule(0.0, 3.0, 5, order=8)
    assert x.size == 40 and np.sum(w) == pytest.approx(3.0)
    x, w = resolved_rule(0.0, 50.0, 20.0, 16, 16)
    assert np.sum(w * np.cos(20.0 * x)) == pytest.approx(math.sin(1000.0) / 20.0, abs=1e-12)


def test_integrate_finite_vector_valued():
    res, info = integrate_finite(lambda t: np.stack([np.sin(t), t**2]), 0.0, math.pi, full_output=True)
    np.testing.assert_allclose(res, [2.0, math.pi**3 / 3], rtol=1e-13)
    assert info.converged


def test_integrate_finite_warns_when_budget_is_exhausted():
    spec = QuadratureSpec(max_panels=1, finite_nodes=4)
    with pytest.warns(ToleranceWarning):
        integrate_finite(lambda t: np.sqrt(t), 0.0, 1.0, spec)


def test_damped_semiinfinite_integral():
    val = integrate_semiinfinite_damped(lambda r: np.exp(-2.0 * r) * np.cos(r), 2.0)
    assert val == pytest.approx(2.0 / 5.0, rel=1e-10)
    with pytest.raises(ValueError):
        integrate_semiinfinite_damped(lambda r: r, 0.0)


def test_abel_limit_recovers_conditionally_convergent_integral():
    # int_0^inf e^{-tau r} cos r dr = tau / (1 + tau^2) -> 0, and sin -> 1
    fam = lambda tau: np.array([tau / (1 + tau**2), 1 / (1 + tau**2)])  # noqa: E731
    val, info = abel_limit(fam, full_output=True)
    np.testing.assert_allclose(val, [0.0, 1.0], atol=1e-10)
    assert info["method"] == "rational"


def test_abel_limit_methods_and_validation():
    fam = lambda tau: math.exp(tau)  # noqa: E731
    assert abel_limit(fam, method="polynomial") == pytest.approx(1.0, abs=1e-8)
    with pytest.raises(ValueError):
        abel_limit(fam, (0.1, 0.2, 0.05))
    with pytest.raises(ValueError):
        abel_limit(fam, (0.2, 0.1))
    with pytest.raises(FloatingPointError):
        abel_limit(lambda tau: float("nan"))


def test_spec_validation():
    with pytest.raises(ValueError):
        QuadratureSpec(tau_schedule=(0.1, 0.2))
    with pytest.raises(ValueError):
        QuadratureSpec(rho_nodes=1)
    assert QuadratureSpec().replace(rho_nodes=80).rho_nodes == 80
