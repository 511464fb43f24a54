import math

import numpy as np
import pytest

from layerheat.eigen import (EigenConstructionError, build_dual, build_primal, closed_form_two_layer,
                             coupling_residual, orthogonality_weights, spectral_pair)
from layerheat.media import InterfaceCoupling, LayeredMedium, TwoLayerIdealParams, ideal_contact

from oracles import ode_residual

LAMS = np.geomspace(0.1, 50.0, 20)
THREE = LayeredMedium((-0.5, 0.7), (1.0, 2.0, 0.6), 1)


def _general_coupling():
    alpha = np.array([[[0.2, 0.1], [1.0, 1.7]], [[0.0, 0.3], [1.0, 0.8]]])
    beta = np.array([[[1.0, 1.3], [0.1, 0.0]], [[1.0, 0.9], [0.0, 0.2]]])
    return InterfaceCoupling(alpha, beta)


@pytest.mark.parametrize("coupling", [ideal_contact(1.7, 2), _general_coupling()], ids=["ideal", "general"])
def test_coupling_residuals_on_log_grid(coupling):
    p = build_primal(THREE, coupling, LAMS)
    d = build_dual(THREE, coupling, LAMS)
    assert coupling_residual(p, coupling) <= 1e-12
    assert coupling_residual(d, coupling, "adjoint") <= 1e-12
    phi, phi_star, _ = spectral_pair(THREE, coupling, np.concatenate([-LAMS, LAMS]))
    assert coupling_residual(phi, coupling) <= 1e-12
    assert coupling_residual(phi_star, coupling, "adjoint") <= 1e-12


@pytest.mark.parametrize("j,x", [(1, -1.3), (1, -0.6), (2, 0.0), (2, 0.6), (3, 0.8), (3, 2.5)])
def test_ode_residual_in_every_layer(j, x):
    assert ode_residual(build_primal(THREE, ideal_contact(1.7, 2), LAMS), j, x) <= 1e-6
    assert ode_residual(build_dual(THREE, ideal_contact(1.7, 2), LAMS), j, x) <= 1e-6


def _ratio_spread(num, den):
    r = num / den
    return float(np.max(np.abs(r - r.mean())) / abs(r.mean())), complex(r.mean())


@pytest.mark.parametrize("a1,a2,nu", [(1.0, 2.0, 1.0), (1.0, 2.0, 1.5), (0.7, 0.4, 3.0)])
def test_transfer_matrix_matches_closed_forms(a1, a2, nu):
    params = TwoLayerIdealParams(a1, a2, nu)
    med, cpl = params.medium(), params.coupling()
    d0 = params.delta0
    xs = {1: np.linspace(-3.0, -0.05, 17), 2: np.linspace(0.05, 3.0, 17)}
    cp = closed_form_two_layer(params, "primal", LAMS)
    cd = closed_form_two_layer(params, "dual", LAMS)
    tp = build_primal(med, cpl, LAMS, last=(cp.A[1], cp.B[1]))
    td = build_dual(med, cpl, LAMS, last=(cd.A[1], cd.B[1]))
    phi, phi_star, _ = spectral_pair(med, cpl, LAMS)
    for j, x in xs.items():
        spread, ratio = _ratio_spread(tp.layer(j, x), cp.layer(j, x))
        assert spread <= 1e-10 and ratio == pytest.approx(1.0, rel=1e-12)
        spread, ratio = _ratio_spread(td.layer(j, x), cd.layer(j, x))
        assert spread <= 1e-10 and ratio == pytest.approx(1.0, rel=1e-12)
        spread, ratio = _ratio_spread(phi.layer(j, x), cp.layer(j, x))
        assert spread <= 1e-10 and ratio == pytest.approx(1 / (1 + d0), rel=1e-12)
        spread, ratio = _ratio_spread(phi_star.layer(j, x), cd.layer(j, x))
        assert spread <= 1e-10 and ratio == pytest.approx(2 / (1 + d0) ** 2, rel=1e-12)


def test_closed_form_flux_condition_is_exact():
    params = TwoLayerIdealParams(1.3, 0.8, 2.2)
    w = closed_form_two_layer(params, "primal", LAMS)
    assert coupling_residual(w, params.coupling()) <= 1e-14


def test_plain_dual_weighting_breaks_biorthogonality():
    # with a1 != a2 the unweighted dual conditions are not the adjoint ones
    params = TwoLayerIdealParams(1.0, 2.0, 1.5)
    cd = closed_form_two_layer(params, "dual", LAMS)
    assert coupling_residual(cd, params.coupling(), "adjoint") <= 1e-12
    assert coupling_residual(cd, params.coupling(), "plain") > 1e-2


def test_orthogonality_weights():
    params = TwoLayerIdealParams(1.0, 2.0, 1.5)
    w = orthogonality_weights(params.medium(), params.coupling())
    # proportional to the closed-form dual factors r_k
    assert w[1] / w[0] == pytest.approx(params.r2 / params.r1)
    assert w[0] == 1.0


def test_spectral_pair_symmetry_and_homogeneous_limit():
    med = LayeredMedium.homogeneous(1.5)
    beta = np.array([0.3, 2.0])
    phi, phi_star, n = spectral_pair(med, None, beta)
    phim, _, _ = spectral_pair(med, None, -beta)
    x = np.linspace(-2, 2, 5)
    np.testing.assert_allclose(phim.layer(1, x), np.conj(phi.layer(1, x)), atol=1e-14)
    # plane waves exp(i beta x / a) up to normalisation
    np.testing.assert_allclose(phi.layer(1, x), np.exp(1j * np.outer(x, beta) / 1.5), atol=1e-14)
    np.testing.assert_allclose(phi.layer(1, x) * phi_star.layer(1, x), np.full((5, 2), 1 / 1.5))


def test_lambda_zero_is_rejected():
    params = TwoLayerIdealParams(1.0, 2.0, 1.0)
    with pytest.raises(EigenConstructionError):
        build_primal(params.medium(), params.coupling(), [0.0, 1.0])
    with pytest.raises(ValueError):
        spectral_pair(params.medium(), None, 1.0)


def test_evaluate_picks_layers():
    params = TwoLayerIdealParams(1.0, 2.0, 1.0)
    w = closed_form_two_layer(params, "primal", 1.0)
    d0 = params.delta0
    assert w(-0.5) == pytest.approx((1 + d0) * (math.cos(0.5) - 1j * math.sin(0.5) / math.sqrt(d0)))
    assert w(0.0, side="left") == pytest.approx(w(0.0, side="right"))
