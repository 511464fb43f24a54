"""Non-separated-variable kernels ``phi_kj(rho, x, xi, s)``.

The kernel is the polar-angle integral

    phi_kj = int_0^pi sin^{m/2}(a) J_nu(rho sin(a) s)/s^nu
             * phi_k(x, rho cos a) phi*_j(xi, rho cos a) da,   nu = (m-2)/2,

taken over the spectral eigenfunction pair. For two layers in ideal contact
it has closed forms built from ``J_{(m-1)/2}(rho R)/R^{(m-1)/2}``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .eigen import spectral_pair
from .media import InterfaceCoupling, LayeredMedium, TwoLayerIdealParams
from .quadrature import QuadratureSpec, bessel_j, normalized_bessel, resolved_rule

__all__ = [
    "KernelQuery",
    "transverse_factor",
    "phi_kj_integral",
    "phi_kj_closed_two_layer",
    "closed_form_scale",
    "plane_wave_identity_check",
    "laplacian_eigen_check",
    "kernel_table",
]


@dataclass(frozen=True)
class KernelQuery:
    rho: float
    x: float
    xi: float
    s: float
    k: int
    j: int
    m: int

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError("rho must be positive")
        if self.s < 0:
            raise ValueError("transverse distance s must be >= 0")
        if self.m < 1:
            raise ValueError("m must be >= 1")


def transverse_factor(m: int, kappa, s):
    """``J_nu(kappa s)/s^nu`` with ``nu = (m-2)/2``, regular at ``s = 0``."""
    nu = (m - 2) / 2
    kappa = np.asarray(kappa, dtype=float)
    return kappa**nu * normalized_bessel(nu, kappa * np.asarray(s, dtype=float))


def _alpha_rule(q: KernelQuery, medium: LayeredMedium, spec: QuadratureSpec):
    a_min = min(medium.diffusivity_coeffs)
    reach = (abs(q.x) + abs(q.xi) + 2 * sum(abs(l) for l in medium.interfaces)) / a_min + q.s
    return resolved_rule(0.0, math.pi, q.rho * reach, spec.alpha_nodes, spec.finite_nodes)


def phi_kj_integral(q: KernelQuery, medium: LayeredMedium, coupling: InterfaceCoupling | None,
                    spec: QuadratureSpec | None = None) -> complex:
    """Kernel by Gauss-Legendre quadrature of the polar-angle integral.

    ``k`` and ``j`` select the layer formulas of the primal and dual
    eigenfunctions; ``x`` and ``xi`` are normally inside those layers.
    """
    spec = spec or QuadratureSpec()
    if not (1 <= q.k <= medium.n_layers and 1 <= q.j <= medium.n_layers):
        raise ValueError("k and j must be valid layer ids")
    alpha, w = _alpha_rule(q, medium, spec)
    beta = q.rho * np.cos(alpha)
    phi, phi_star, _ = spectral_pair(medium, coupling, beta)
    nu = (q.m - 2) / 2
    weight = q.rho**nu * np.sin(alpha) ** (q.m - 1) * normalized_bessel(nu, q.rho * np.sin(alpha) * q.s)
    vals = phi.layer(q.k, q.x) * phi_star.layer(q.j, q.xi)
    return complex(np.sum(w * weight * vals))


def _radial(m, rho, X, s):
    # J_{(m-1)/2}(rho R) / R^{(m-1)/2}
    mu = (m - 1) / 2
    R = np.sqrt(np.asarray(X, dtype=float) ** 2 + np.asarray(s, dtype=float) ** 2)
    return rho**mu * normalized_bessel(mu, rho * R)


def phi_kj_closed_two_layer(q: KernelQuery, params: TwoLayerIdealParams, variant: str = "literal"):
    """Closed-form two-layer kernels in the closed-form eigenfunction normalisation.

    ``variant='literal'`` gives every kernel a direct plus image term, with
    ``sqrt(d0)`` prefactors on the cross kernels. ``variant='derived'`` is what the polar-angle integral of the closed
    form eigenfunctions actually gives: a single transmitted term for the
    cross kernels and image coefficient ``+(1 - d0)`` in layer 2. Multiply by
    :func:`closed_form_scale` to compare with :func:`phi_kj_integral`.
    """
    a1, a2, d0 = params.a1, params.a2, params.delta0
    x, xi, s, m, rho = q.x, q.xi, q.s, q.m, q.rho
    G = lambda X: _radial(m, rho, X, s)  # noqa: E731
    key = (q.k, q.j)
    if key not in {(1, 1), (1, 2), (2, 1), (2, 2)}:
        raise ValueError("k and j must be 1 or 2")
    if key == (1, 1):
        return float((1 + d0) / a1 * G((x - xi) / a1) - (1 - d0) / a1 * G((x + xi) / a1))
    if variant == "literal":
        sd = math.sqrt(d0)
        if key == (1, 2):
            return float((1 + d0) / (a2 * sd) * G(x / a2 - xi / a1) + (1 - d0) / (a2 * sd) * G(x / a2 + xi / a1))
        if key == (2, 1):
            return float(sd * (1 + d0) / a1 * G(x / a1 - xi / a2) + sd * (1 - d0) / a1 * G(x / a1 + xi / a2))
        return float((1 + d0) / (a2 * d0) * G((x - xi) / a2) - (1 - d0) / (a2 * d0) * G((x + xi) / a2))
    if variant == "derived":
        if key == (1, 2):
            return float(2.0 / a2 * G(x / a1 - xi / a2))
        if key == (2, 1):
            return float(2.0 * d0 / a1 * G(x / a2 - xi / a1))
        return float((1 + d0) / a2 * G((x - xi) / a2) + (1 - d0) / a2 * G((x + xi) / a2))
    raise ValueError("variant must be 'literal' or 'derived'")


def closed_form_scale(rho: float, params: TwoLayerIdealParams) -> float:
    """Factor turning the closed-form normalisation into :func:`phi_kj_integral`'s.

    The angular integral contributes ``sqrt(2 pi / rho)``; the spectral pair
    is the closed-form pair times ``2/(1 + d0)^3``, which together with the
    ``(1 + d0)^2/2`` the closed forms absorb leaves ``1/(1 + d0)``.
    """
    return math.sqrt(2 * math.pi / rho) / (1 + params.delta0)


def plane_wave_identity_check(rho: float, y, spec: QuadratureSpec | None = None):
    """Both sides of ``rho^{m/2} J_nu(rho|y|)/|y|^nu = (2pi)^{-m/2} int_{S_rho} e^{i<y,k>} dS``.

    The sphere integral is done by the periodic trapezoid rule (m = 2) or a
    Gauss-Legendre x trapezoid product grid (m = 3).
    """
    spec = spec or QuadratureSpec()
    y = np.atleast_1d(np.asarray(y, dtype=float))
    m = y.size
    r = float(np.linalg.norm(y))
    if r == 0:
        raise ValueError("|y| must be positive")
    nu = (m - 2) / 2
    lhs = rho ** (m / 2) * bessel_j(nu, rho * r) / r**nu
    phase = rho * r
    n_phi = max(64, 2 * math.ceil(phase) + 64)
    phis = 2 * math.pi * np.arange(n_phi) / n_phi
    if m == 2:
        pts = rho * np.stack([np.cos(phis), np.sin(phis)], axis=-1)
        surf = np.sum(np.exp(1j * pts @ y)) * (2 * math.pi / n_phi) * rho
    elif m == 3:
        cos_t, w_t = resolved_rule(-1.0, 1.0, phase, 64, spec.finite_nodes)
        sin_t = np.sqrt(1 - cos_t**2)
        pts = rho * np.stack([sin_t[:, None] * np.cos(phis)[None, :],
                              sin_t[:, None] * np.sin(phis)[None, :],
                              np.broadcast_to(cos_t[:, None], (cos_t.size, n_phi))], axis=-1)
        vals = np.exp(1j * pts @ y)
        surf = np.sum(vals * w_t[:, None]) * (2 * math.pi / n_phi) * rho**2
    else:
        raise ValueError("plane_wave_identity_check supports m = 2 and m = 3")
    rhs = surf / (2 * math.pi) ** (m / 2)
    return float(lhs), float(rhs.real)


def laplacian_eigen_check(rho: float, alpha: float, y, eta, m: int | None = None, h: float = 1e-3) -> float:
    """``|Lap_eta K + rho^2 sin^2(alpha) K|`` for ``K = J_nu(rho sin(alpha)|y-eta|)/|y-eta|^nu``.

    The Laplacian is the (2m+1)-point central-difference stencil with step h.
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    eta = np.atleast_1d(np.asarray(eta, dtype=float))
    m = y.size if m is None else m
    kappa = rho * math.sin(alpha)

    def K(e):
        return float(transverse_factor(m, kappa, np.linalg.norm(y - e)))

    center = K(eta)
    lap = 0.0
    for i in range(m):
        step = np.zeros(m)
        step[i] = h
        lap += (K(eta + step) - 2 * center + K(eta - step)) / h**2
    return abs(lap + kappa**2 * center)


def kernel_table(medium: LayeredMedium, coupling: InterfaceCoupling | None, rhos, xs, xis, ss,
                 spec: QuadratureSpec | None = None) -> list:
    """Rows ``(rho, x, xi, s, k, j, re, im)`` of ``phi_kj`` on a product grid.

    ``k`` and ``j`` are the layers containing ``x`` and ``xi``.
    """
    from .media import layer_index

    spec = spec or QuadratureSpec()
    m = medium.transverse_dim
    rows = []
    for rho in rhos:
        for x in xs:
            k = layer_index(medium, x)
            for xi in xis:
                j = layer_index(medium, xi)
                for s in ss:
                    val = phi_kj_integral(KernelQuery(rho, x, xi, s, k, j, m), medium, coupling, spec)
                    rows.append((float(rho), float(x), float(xi), float(s), k, j, val.real, val.imag))
    return rows
