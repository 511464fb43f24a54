import warnings

import numpy as np
import pytest

from layerheat.fd import FdGrid, FdWarning, compare, fd_solve, two_layer_gaussian, widened_gaussian
from layerheat.heat import probe_grid
from layerheat.media import LayeredMedium, TwoLayerIdealParams, ideal_contact

from oracles import gaussian


def homogeneous_error(h, dt, t=0.1):
    med = LayeredMedium.homogeneous(1.0, 1)
    grid = FdGrid.auto(med, (0.0, 0.0, 0.0, 0.0, 0.3), h, dt, t)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", FdWarning)
        res = fd_solve(med, None, gaussian((0.0, 0.0), (0.3, 0.3)), grid, (t,))
    probes = probe_grid(np.linspace(-0.8, 0.8, 9), np.linspace(-0.8, 0.8, 9))
    ref = widened_gaussian(t, probes[:, 0], probes[:, 1:], (0.0, 0.0), (0.3, 0.3))
    return compare(res.sample(probes), ref).l2_rel


def test_startup_removes_undamped_modes():
    p = TwoLayerIdealParams(1.0, 2.0, 2.0)
    med = p.medium(1)
    g = gaussian((-0.6, 0.0), (0.2, 0.3))
    init = lambda X, Y: np.where(X <= 0, g(X, Y), 0.0)  # noqa: E731
    probes = probe_grid([-0.02, 0.0, 0.02], [0.0])
    ref = two_layer_gaussian(0.05, probes[:, 0], probes[:, 1:], p, (-0.6, 0.0), (0.2, 0.3))
    errs = {}
    for startup in (0, 2):
        grid = FdGrid.auto(med, (-0.6, -0.6, 0.0, 0.0, 0.3), 0.01, 0.0025, 0.05)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", FdWarning)
            res = fd_solve(med, p.coupling(), init, grid, (0.05,), startup=startup)
        errs[startup] = np.max(np.abs(res.sample(probes) - ref)) / np.max(ref)
    assert errs[0] > 1e-2 and errs[2] < 1e-3


def test_homogeneous_gaussian_matches_analytic():
    assert homogeneous_error(0.01, 1e-3) <= 1e-3


def test_second_order_convergence():
    errs = [homogeneous_error(h, h / 4) for h in (0.04, 0.02, 0.01)]
    ratios = [errs[i] / errs[i + 1] for i in range(2)]
    assert all(3 <= r <= 5 for r in ratios), ratios


def test_two_layer_against_image_solution():
    p = TwoLayerIdealParams(1.0, 2.0, 1.5)
    med = p.medium(1)
    g = gaussian((-0.8, 0.0), (0.2, 0.3))
    probes = probe_grid([-1.2, -0.8, -0.3, -0.05, 0.05, 0.4, 1.0], [-0.3, 0.0, 0.2])
    grid = FdGrid.auto(med, (-0.8, -0.8, 0.0, 0.0, 0.3), 0.01, 0.0025, 0.1)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", FdWarning)
        res = fd_solve(med, p.coupling(), lambda X, Y: np.where(X <= 0, g(X, Y), 0.0), grid, (0.1,))
    ref = two_layer_gaussian(0.1, probes[:, 0], probes[:, 1:], p, (-0.8, 0.0), (0.2, 0.3))
    assert compare(res.sample(probes), ref).l2_rel <= 1e-3


def test_interface_conditions_hold_to_second_order():
    """One-sided second-order flux estimates at the interface node converge like h^2."""
    p = TwoLayerIdealParams(1.0, 2.0, 2.0)
    med = p.medium(1)
    out = []
    for h in (0.02, 0.01, 0.005):
        grid = FdGrid.auto(med, (-0.6, -0.6, 0.0, 0.0, 0.3), h, h / 4, 0.05)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", FdWarning)
            res = fd_solve(med, p.coupling(), gaussian((-0.6, 0.0), (0.2, 0.3)), grid, (0.05,))
        u = res.fields[0]
        i = int(round(-grid.x_lo / h))
        # one-sided second-order derivatives on both sides of the interface node
        dl = (3 * u[i] - 4 * u[i - 1] + u[i - 2]) / (2 * h)
        dr = (-3 * u[i] + 4 * u[i + 1] - u[i + 2]) / (2 * h)
        out.append(np.max(np.abs(dl - p.nu * dr)) / np.max(np.abs(dl)))
    # the data ignores the flux condition at t = 0; the damped start must still give O(h^2)
    assert out[0] / out[1] > 3 and out[1] / out[2] > 3 and out[2] < 1e-3


def test_mass_conservation_equal_layers():
    med = LayeredMedium((0.0,), (1.0, 1.0), 1)
    grid = FdGrid.auto(med, (-0.3, -0.3, 0.0, 0.0, 0.25), 0.02, 0.005, 0.2, decay=1e-12)
    with pytest.warns(FdWarning, match="dt > hx"):
        res = fd_solve(med, ideal_contact(1.0, 1), gaussian((-0.3, 0.0), (0.25, 0.25)), grid, (0.2,))
    mass = np.asarray(res.mass)
    assert np.max(np.abs(np.diff(mass))) <= 1e-10 * mass[0]


def test_mass_conservation_layered():
    # k_j u_x continuous means the c-weighted mass is conserved for any contrast
    p = TwoLayerIdealParams(1.0, 2.0, 1.5)
    med = p.medium(1)
    grid = FdGrid.auto(med, (-0.3, -0.3, 0.0, 0.0, 0.25), 0.02, 0.005, 0.2, decay=1e-12)
    with pytest.warns(FdWarning, match="dt > hx"):
        res = fd_solve(med, p.coupling(), gaussian((-0.3, 0.0), (0.25, 0.25)), grid, (0.2,))
    mass = np.asarray(res.mass)
    assert np.max(np.abs(np.diff(mass))) <= 1e-10 * mass[0]


def test_two_transverse_dimensions():
    med = LayeredMedium.homogeneous(1.0, 2)
    grid = FdGrid.auto(med, (0.0, 0.0, (0.0, 0.0), (0.0, 0.0), 0.3), 0.04, 0.01, 0.05)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", FdWarning)
        res = fd_solve(med, None, gaussian((0.0, 0.0, 0.0), (0.3, 0.3)), grid, (0.05,))
    probes = probe_grid([-0.3, 0.0, 0.4], [-0.2, 0.1], [0.0, 0.3])
    ref = widened_gaussian(0.05, probes[:, 0], probes[:, 1:], (0.0, 0.0, 0.0), (0.3, 0.3))
    assert compare(res.sample(probes), ref).l2_rel <= 1e-2


def test_zero_data_and_warnings():
    med = LayeredMedium.homogeneous(1.0, 1)
    grid = FdGrid(-1.0, 1.0, 0.1, (-1.0,), (1.0,), 0.1, 0.05, 0.1)
    with pytest.warns(FdWarning):
        res = fd_solve(med, None, lambda X, Y: 0 * X, grid)
    assert np.all(res.fields[-1] == 0)
    with pytest.raises(ValueError):
        fd_solve(LayeredMedium.homogeneous(1.0, 3), None, lambda X, Y: 0 * X, grid)
    with pytest.raises(ValueError):
        FdGrid(1.0, 0.0, 0.1, (0,), (1,), 0.1, 0.1, 1.0)


def test_interface_off_grid_is_rejected():
    p = TwoLayerIdealParams(1.0, 2.0, 1.0)
    grid = FdGrid(-1.05, 1.0, 0.1, (-1.0,), (1.0,), 0.1, 0.001, 0.001)
    with pytest.raises(ValueError, match="not on a grid node"):
        fd_solve(p.medium(1), p.coupling(), lambda X, Y: 0 * X, grid)


def test_compare_report():
    ref = np.array([1.0, 2.0, -1.0, 0.5])
    rep = compare(ref, ref)
    assert rep.l2_rel == 0 and rep.linf_rel == 0
    rep = compare(ref + 0.1, ref, layers=[1, 1, 2, 2])
    assert rep.linf_rel == pytest.approx(0.1 / 2.0)
    assert set(rep.per_layer) == {1, 2}
    assert len(rep.lines()) == 3
    with pytest.raises(ValueError):
        compare(ref[:2], ref)
