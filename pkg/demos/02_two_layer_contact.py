"""Heat crossing an interface between a slow and a fast layer.

Layer 1 (x < 0) has a = 1, layer 2 has a = 2, and the contact condition is
u continuous with u'_1 = nu u'_2. We start from a bump in layer 1 and look at
three things: the value at a few points next to the interface, the two
one-sided derivatives, and agreement with the exact image solution and the
finite-difference oracle.
"""
import warnings

import numpy as np

from layerheat import GaussianBump, HeatScenario, ScalarField, TwoLayerIdealParams, probe_grid, solve_grid
from layerheat.fd import FdGrid, FdWarning, compare, fd_solve, two_layer_gaussian

params = TwoLayerIdealParams(a1=1.0, a2=2.0, nu=1.5)
medium, coupling = params.medium(1), params.coupling()
center, sigma, t = (-0.8, 0.0), (0.25, 0.4), 0.1
initial = ScalarField.from_bumps(medium, [GaussianBump(1, center, sigma)])
print(f"contrast d0 = a2/(nu a1) = {params.delta0:.4f}")

# one-sided values and derivatives from points hugging the interface
eps = 1e-4
pts = np.array([[-2 * eps, 0.0], [-eps, 0.0], [eps, 0.0], [2 * eps, 0.0]])
u = solve_grid(HeatScenario(medium, coupling, initial, (t,), pts)).values[0]
left = (u[1] - u[0]) / eps
right = (u[3] - u[2]) / eps
print(f"u just left {u[1]:.6f}, just right {u[2]:.6f}")
print(f"u'_1 = {left:.5f}, nu u'_2 = {params.nu * right:.5f}")

probes = probe_grid(np.linspace(-1.6, 1.4, 13) + 0.05, [-0.3, 0.0, 0.3])
spectral = solve_grid(HeatScenario(medium, coupling, initial, (t,), probes)).values[0]
exact = two_layer_gaussian(t, probes[:, 0], probes[:, 1:], params, center, sigma)
print("spectral vs exact:", compare(spectral, exact, np.where(probes[:, 0] < 0, 1, 2)).lines()[0])

g = lambda X, Y: np.where(X <= 0, np.exp(-0.5 * (X - center[0]) ** 2 / sigma[0] ** 2  # noqa: E731
                                          - 0.5 * (Y[..., 0] - center[1]) ** 2 / sigma[1] ** 2), 0.0)
for h in (0.04, 0.02, 0.01):
    grid = FdGrid.auto(medium, (center[0], center[0], 0.0, 0.0, 0.4), h, h / 4, t)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", FdWarning)
        fd = fd_solve(medium, coupling, g, grid, (t,)).sample(probes)
    print(f"finite differences h={h:<5g} vs exact: L2_rel={compare(fd, exact).l2_rel:.3e}")
