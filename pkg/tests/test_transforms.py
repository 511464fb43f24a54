import math

import numpy as np
import pytest

from layerheat.eigen import spectral_pair
from layerheat.media import LayeredMedium, TwoLayerIdealParams
from layerheat.quadrature import gauss_legendre
from layerheat.transforms import (CalibrationError, GaussianBump, LayerFunction, ScalarField, SpectralWeightMode,
                                  StraddleError, apply_B, calibrate_weight, classic_direct, classic_inverse,
                                  direct_1d, direct_nd, inverse_1d, inverse_nd, mirror_field, round_trip_nd,
                                  theorem1_residual)


def radial_gauss(eta):
    return np.exp(-0.5 * np.sum(eta**2, axis=-1))


BOX2 = ((-8.0, -8.0), (8.0, 8.0))


# -- classical pair ---------------------------------------------------------


def test_classic_direct_hankel_identity():
    lam = np.array([0.3, 1.0, 2.5])
    np.testing.assert_allclose(classic_direct(radial_gauss, [0.0, 0.0], lam, BOX2), np.exp(-lam**2 / 2),
                               rtol=1e-12)


def test_classic_direct_small_lambda_and_translation():
    val = classic_direct(radial_gauss, [0.4, -0.2], 1e-9, BOX2)
    assert val == pytest.approx(2 * math.pi / (2 * math.pi), rel=1e-9)
    shift = np.array([0.7, -1.1])
    a = classic_direct(radial_gauss, [0.3, 0.2], 1.4, BOX2)
    b = classic_direct(lambda e: radial_gauss(e - shift), np.array([0.3, 0.2]) + shift, 1.4,
                       (np.array(BOX2[0]) + shift, np.array(BOX2[1]) + shift))
    assert a == pytest.approx(b, rel=1e-12)


@pytest.mark.parametrize("y,expected", [((0.0, 0.0), 1.0), ((0.6, 0.8), math.exp(-0.5))])
def test_classic_round_trip(y, expected):
    fhat = lambda yy, lam: classic_direct(radial_gauss, yy, lam, BOX2)  # noqa: E731
    assert classic_inverse(fhat, np.array(y), 2, lam_max=9.0) == pytest.approx(expected, abs=1e-3)


def test_classic_inverse_moment_oracle():
    # fhat = exp(-lam^2): int_0^inf lam^{m/2} e^{-lam^2} d lam = Gamma((m/2 + 1)/2) / 2
    for m in (1, 2, 3):
        got = classic_inverse(lambda y, lam: np.exp(-lam**2), None, m, lam_max=9.0)
        assert got == pytest.approx(math.gamma((m / 2 + 1) / 2) / 2, rel=1e-8)


# -- one-dimensional pair ---------------------------------------------------


def test_direct_1d_gaussian():
    med = LayeredMedium.homogeneous(1.0)
    lam = np.array([-2.0, 0.5, 3.0])
    got = direct_1d(lambda x: np.exp(-x**2), lam, med, None, (-9, 9))
    np.testing.assert_allclose(got, math.sqrt(math.pi) * np.exp(-lam**2 / 4), rtol=1e-12, atol=1e-15)
    assert direct_1d(lambda x: 0 * x, 1.0, med, None, (-9, 9)) == 0


def test_direct_1d_support_in_second_layer():
    p = TwoLayerIdealParams(1.0, 2.0, 1.5)
    med, cpl = p.medium(), p.coupling()
    g = lambda x: np.exp(-(x - 1.5) ** 2 / 0.1)  # noqa: E731
    both = direct_1d(g, [0.7, 1.9], med, cpl, (0.0, 4.0))
    only2 = direct_1d([None, g], [0.7, 1.9], med, cpl, (0.0, 4.0))
    np.testing.assert_allclose(both, only2, rtol=1e-14)


def test_inverse_1d_homogeneous_round_trip():
    med = LayeredMedium.homogeneous(1.0)
    mode = SpectralWeightMode.calibrated(0)
    fhat = lambda lam: direct_1d(lambda x: np.exp(-x**2), lam, med, None, (-9, 9))  # noqa: E731
    assert abs(inverse_1d(fhat, 0.0, 1, med, None, mode) - 1.0) <= 1e-4
    assert inverse_1d(lambda lam: 0 * lam, 0.3, 1, med, None, mode) == 0


def test_inverse_1d_two_layer_round_trip():
    p = TwoLayerIdealParams(1.0, 2.0, 1.5)
    med, cpl = p.medium(), p.coupling()
    g = lambda x: np.exp(-((x + 1.5) ** 2) / (2 * 0.3**2))  # noqa: E731
    mode = SpectralWeightMode.calibrated(0)
    fhat = lambda lam: direct_1d(g, lam, med, cpl, (-4.0, 0.0))  # noqa: E731
    for x, k in ((-1.5, 1), (-1.2, 1), (0.5, 2)):
        assert abs(inverse_1d(fhat, x, k, med, cpl, mode).real - (g(x) if k == 1 else 0.0)) <= 1e-3


def test_literal_one_sided_weight_fails_the_round_trip():
    med = LayeredMedium.homogeneous(1.0)
    mode = SpectralWeightMode.literal(0)
    fhat = lambda lam: direct_1d(lambda x: np.exp(-x**2), lam, med, None, (-9, 9))  # noqa: E731
    assert abs(inverse_1d(fhat, 0.0, 1, med, None, mode) - 1.0) > 0.1


# -- multidimensional pair ----------------------------------------------------


@pytest.mark.parametrize("m", [1, 2])
def test_direct_nd_separability(m):
    """For one medium the kernel factorises; compare with classic_direct x direct_1d."""
    med = LayeredMedium.homogeneous(1.3, m)
    c = (0.2,) + (-0.1,) * m
    sx, sy = 0.4, 0.5
    f = ScalarField.from_bumps(med, [GaussianBump(1, c, (sx, sy))])
    x, y, lam = 0.5, np.full(m, 0.3), 2.0
    X = lambda xi: np.exp(-0.5 * ((xi - c[0]) / sx) ** 2)  # noqa: E731
    Y = lambda eta: np.exp(-0.5 * np.sum((eta - np.array(c[1:])) ** 2, axis=-1) / sy**2)  # noqa: E731
    t, w = gauss_legendre(200)
    al = (t + 1) * math.pi / 2
    w = w * math.pi / 2
    beta = lam * np.cos(al)
    Xh = direct_1d(X, beta, med, None, (c[0] - 8 * sx, c[0] + 8 * sx))
    phi, _, _ = spectral_pair(med, None, beta)
    box = (np.array(c[1:]) - 8 * sy, np.array(c[1:]) + 8 * sy)
    C = classic_direct(Y, y, lam * np.sin(al), box)
    oracle = np.sum(w * np.sin(al) ** (m / 2) * phi.layer(1, x) * Xh * C)
    assert abs(direct_nd(f, x, y, lam) - oracle) <= 1e-8 * abs(oracle)


def test_direct_nd_linearity_and_zero():
    p = TwoLayerIdealParams(1.0, 2.0, 1.5)
    med, cpl = p.medium(1), p.coupling()
    f = ScalarField.from_bumps(med, [GaussianBump(1, (-1.2, 0.0), (0.3, 0.4))])
    g = ScalarField.from_bumps(med, [GaussianBump(2, (1.5, 0.2), (0.4, 0.3))])
    lam = np.array([0.5, 1.7])
    Ff = direct_nd(f, -0.4, [0.1], lam, cpl)
    Fg = direct_nd(g, -0.4, [0.1], lam, cpl)
    np.testing.assert_allclose(direct_nd(f + g.scaled(-0.7), -0.4, [0.1], lam, cpl), Ff - 0.7 * Fg, rtol=1e-12)
    np.testing.assert_array_equal(direct_nd(f.scaled(2.0), -0.4, [0.1], lam, cpl), 2 * Ff)
    np.testing.assert_array_equal(direct_nd(ScalarField.zero(med), -0.4, [0.1], lam, cpl), 0)


def test_inverse_nd_homogeneous_round_trip():
    med = LayeredMedium.homogeneous(1.0, 1)
    f = ScalarField.from_bumps(med, [GaussianBump(1, (0.1, -0.2), (0.5, 0.5))])
    mode = SpectralWeightMode.calibrated(1)
    F = lambda x, y, rho: direct_nd(f, x, y, rho)  # noqa: E731
    for x, y in ((0.1, -0.2), (0.4, 0.1), (-0.5, -0.6)):
        got = inverse_nd(F, x, [y], mode, rho_max=15.0).real
        assert abs(got - f(x, y)) <= 1e-3
    assert inverse_nd(lambda x, y, rho: 0 * rho, 0.0, [0.0], mode) == 0


def test_round_trip_two_layer_near_interface():
    p = TwoLayerIdealParams(1.0, 2.0, 1.5)
    med, cpl = p.medium(1), p.coupling()
    f = ScalarField.from_bumps(med, [GaussianBump(1, (-0.8, 0.0), (0.3, 0.4)),
                                     GaussianBump(2, (1.2, 0.3), (0.5, 0.4), 0.6)])
    probes = np.array([[-0.5, 0.1], [0.5, 0.2], [-1.0, 0.0], [1.4, 0.3], [0.9, -0.1]])
    got = round_trip_nd(f, cpl, probes, SpectralWeightMode.calibrated(1))
    np.testing.assert_allclose(got, f(probes[:, 0], probes[:, 1:]), atol=5e-3)


def test_calibration_report():
    for dim, p in ((0, 0.0), (1, 1.5), (2, 2.0)):
        rep = calibrate_weight(dim)
        assert rep.passed and rep.exponent == p
        assert rep.constant.real == pytest.approx(1 / (2 * math.pi), rel=1e-5)
        assert not any(c["passes"] for c in rep.literal)
        assert rep.lines()[0].startswith(f"dim={dim}")


def test_mode_validation():
    with pytest.raises(CalibrationError):
        SpectralWeightMode("calibrated", 1, 1.5, 1.0)
    with pytest.raises(ValueError):
        SpectralWeightMode.literal(2, "other")
    assert SpectralWeightMode.literal(2, "unscaled").exponent == 2.0
    assert SpectralWeightMode.calibrated(2).metadata()["mode"] == "calibrated"


# -- operator B and the transform identity -------------------------------------


@pytest.mark.parametrize("m", [1, 2, 3])
def test_apply_B_hand_differentiated(m):
    med = LayeredMedium.homogeneous(1.0, m)
    f = ScalarField.from_bumps(med, [GaussianBump(1, (0.0,) * (1 + m), (math.sqrt(0.5),) * 2)])
    assert apply_B(f, 0.0, np.zeros(m)) == pytest.approx(-2 - 2 * m, rel=1e-5)


def test_apply_B_linear_field_and_layer_factor():
    p = TwoLayerIdealParams(1.0, 2.0, 1.0)
    med = p.medium(1)
    lin = ScalarField(med, functions=[LayerFunction(1, lambda x, y: 2 * x + 3 * y[..., 0], -3, 0, -3, 3)])
    assert abs(apply_B(lin, -1.0, [0.5])) <= 1e-8
    quad = ScalarField(med, functions=[LayerFunction(1, lambda x, y: x**2 + 0 * y[..., 0], -3, 0, -3, 3),
                                       LayerFunction(2, lambda x, y: x**2 + 0 * y[..., 0], 0, 3, -3, 3)])
    eps = 1e-2
    assert apply_B(quad, -eps, [0.0], h=1e-3) == pytest.approx(2 * p.a1**2, rel=1e-6)
    assert apply_B(quad, eps, [0.0], h=1e-3) == pytest.approx(2 * p.a2**2, rel=1e-6)
    with pytest.raises(StraddleError):
        apply_B(quad, -eps, [0.0], h=2e-2)


def test_mirror_field_obeys_ideal_contact():
    p = TwoLayerIdealParams(1.0, 2.0, 2.0)
    med, cpl = p.medium(1), p.coupling()
    f = mirror_field(med, cpl, (-0.8, 0.1), (0.3, 0.4))
    y = np.array([[0.1]])
    u1 = f.layer_value(1, np.array([0.0]), y)
    u2 = f.layer_value(2, np.array([0.0]), y)
    h = 1e-6
    d1 = (f.layer_value(1, np.array([h]), y) - f.layer_value(1, np.array([-h]), y)) / (2 * h)
    d2 = (f.layer_value(2, np.array([h]), y) - f.layer_value(2, np.array([-h]), y)) / (2 * h)
    assert u1 == pytest.approx(u2, rel=1e-14)
    assert d1 == pytest.approx(p.nu * d2, rel=1e-6)


def test_theorem1_homogeneous():
    med = LayeredMedium.homogeneous(1.0, 2)
    f = ScalarField.from_bumps(med, [GaussianBump(1, (0.1, 0.0, 0.2), (0.4, 0.5))])
    assert theorem1_residual(f, 1.0, 0.3, [0.1, -0.2]) <= 1e-4
    assert theorem1_residual(ScalarField.zero(med), 1.0, 0.3, [0.1, -0.2]) == 0


@pytest.mark.parametrize("lam", [0.5, 1.0, 2.0])
def test_theorem1_two_layer_mirror(lam):
    p = TwoLayerIdealParams(1.0, 2.0, 2.0)
    med, cpl = p.medium(1), p.coupling()
    f = mirror_field(med, cpl, (-0.8, 0.1), (0.3, 0.4))
    for x in (-0.6, 0.7):
        assert theorem1_residual(f, lam, x, [0.0], cpl) <= 1e-3


def test_theorem1_needs_coupling_compliance():
    # a bump that ends abruptly at the interface violates the hypotheses
    p = TwoLayerIdealParams(1.0, 2.0, 2.0)
    med, cpl = p.medium(1), p.coupling()
    f = ScalarField.from_bumps(med, [GaussianBump(1, (-0.2, 0.0), (0.3, 0.4))])
    assert theorem1_residual(f, 1.0, -0.6, [0.0], cpl) > 1e-2
