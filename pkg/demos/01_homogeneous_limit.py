"""A Gaussian spreading in a single medium.

With no interfaces the layered machinery must collapse to the textbook
result: a Gaussian of variance s^2 becomes one of variance s^2 + 2t in every
direction. We solve on a small probe grid and print the worst deviation at a
few times.
"""
import numpy as np

from layerheat import GaussianBump, HeatScenario, LayeredMedium, ScalarField, probe_grid, solve_grid
from layerheat.fd import widened_gaussian

medium = LayeredMedium.homogeneous(1.0, transverse_dim=1)
sigma = 0.5
initial = ScalarField.from_bumps(medium, [GaussianBump(1, (0.0, 0.0), (sigma, sigma))])

probes = probe_grid(np.linspace(-2, 2, 9), np.linspace(-2, 2, 9))
times = (0.05, 0.1, 0.5, 2.0)
result = solve_grid(HeatScenario(medium, None, initial, times, probes))

print(f"spectral weight: c={result.meta['weight_constant']} p={result.meta['weight_exponent']}")
print(f"radial nodes: {result.meta['rho_nodes']}, cutoff {result.meta['rho_max']:.2f}")
print(f"{'t':>6} {'u(t,0,0)':>12} {'exact':>12} {'max |error|':>12}")
centre = np.flatnonzero((probes == 0).all(axis=1))[0]
for it, t in enumerate(times):
    exact = widened_gaussian(t, probes[:, 0], probes[:, 1:], (0.0, 0.0), (sigma, sigma))
    err = np.max(np.abs(result.values[it] - exact))
    print(f"{t:6.2f} {result.values[it, centre]:12.8f} {exact[centre]:12.8f} {err:12.2e}")
