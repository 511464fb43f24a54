"""Heat conduction in piecewise-homogeneous layered media.

The solution is built from integral transforms whose eigenfunction kernels
jump across the layer planes; a finite-difference solver is included as an
independent reference.
"""
__version__ = "0.1.0"

from .eigen import (PiecewiseWave, build_dual, build_primal, closed_form_two_layer, coupling_residual,
                    orthogonality_weights, spectral_pair)
from .fd import FdGrid, compare, fd_solve, two_layer_gaussian, widened_gaussian
from .heat import HeatScenario, ScenarioError, probe_grid, reproduce_initial, solve_grid, solve_point
from .kernels import KernelQuery, phi_kj_closed_two_layer, phi_kj_integral
from .media import (InterfaceCoupling, LayeredMedium, TwoLayerIdealParams, ideal_contact, layer_index,
                    validate)
from .quadrature import QuadratureSpec, abel_limit, bessel_j, normalized_bessel
from .transforms import (GaussianBump, ScalarField, SpectralWeightMode, apply_B, calibrate_weight,
                         classic_direct, classic_inverse, direct_1d, direct_nd, inverse_1d, inverse_nd,
                         mirror_field, theorem1_residual)

__all__ = [
    "PiecewiseWave", "build_primal", "build_dual", "spectral_pair", "orthogonality_weights",
    "closed_form_two_layer", "coupling_residual",
    "FdGrid", "fd_solve", "compare", "widened_gaussian", "two_layer_gaussian",
    "HeatScenario", "ScenarioError", "probe_grid", "solve_grid", "solve_point", "reproduce_initial",
    "KernelQuery", "phi_kj_integral", "phi_kj_closed_two_layer",
    "LayeredMedium", "InterfaceCoupling", "TwoLayerIdealParams", "ideal_contact", "layer_index", "validate",
    "QuadratureSpec", "abel_limit", "bessel_j", "normalized_bessel",
    "GaussianBump", "ScalarField", "SpectralWeightMode", "calibrate_weight", "classic_direct",
    "classic_inverse", "direct_1d", "inverse_1d", "direct_nd", "inverse_nd", "apply_B", "mirror_field",
    "theorem1_residual",
]
