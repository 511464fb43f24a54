"""Piecewise exponential eigenfunctions of ``a_j^2 u'' + lambda^2 u = 0`` on a
layered axis.

Two constructions live here.

* :func:`build_primal` / :func:`build_dual` fix the amplitudes in the last
  layer (``e^{+i lam x/a}`` for the primal, ``e^{-i lam x/a}`` for the dual)
  and propagate backwards through the interfaces.
* :func:`spectral_pair` builds the biorthogonal family actually used by the
  transforms: ``phi = C + iS`` with ``C`` and ``S`` real, orthogonal and of
  equal spectral norm, and ``phi* = (pi/N) w conj(phi)``. With it the
  expansion ``f(x) = (1/2pi) int_R phi(x, b) [int phi*(xi, b) f(xi) dxi] db``
  holds for every medium. In two layers with ideal contact ``phi`` is the
  closed form of :func:`closed_form_two_layer` divided by ``1 + delta0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .media import (InterfaceCoupling, LayeredMedium, TwoLayerIdealParams, layer_index,
                    validate)

__all__ = [
    "PiecewiseWave",
    "EigenConstructionError",
    "build_primal",
    "build_dual",
    "spectral_pair",
    "orthogonality_weights",
    "closed_form_two_layer",
    "coupling_residual",
    "evaluate",
]


class EigenConstructionError(ValueError):
    pass


@dataclass(frozen=True)
class PiecewiseWave:
    """``phi_j(x) = A_j e^{i lam x/a_j} + B_j e^{-i lam x/a_j}`` in layer ``j``.

    ``A`` and ``B`` have shape ``(n_layers,) + shape(lam)`` so one wave can
    carry a whole batch of spectral values.
    """

    medium: LayeredMedium
    lam: np.ndarray
    A: np.ndarray
    B: np.ndarray
    kind: str = "primal"

    def layer(self, j: int, x, derivative: int = 0):
        """Evaluate layer ``j``'s formula at ``x`` (any x, no layer check).

        Result shape is ``shape(x) + shape(lam)``.
        """
        x = np.asarray(x, dtype=float)
        lam = np.asarray(self.lam, dtype=float)
        a = self.medium.diffusivity_coeffs[j - 1]
        k = lam / a
        xx = x.reshape(x.shape + (1,) * lam.ndim)
        ep = np.exp(1j * k * xx)
        A = self.A[j - 1]
        B = self.B[j - 1]
        if derivative == 0:
            return A * ep + B / ep
        if derivative == 1:
            return 1j * k * (A * ep - B / ep)
        if derivative == 2:
            return -(k**2) * (A * ep + B / ep)
        raise ValueError("derivative must be 0, 1 or 2")

    def __call__(self, x, side: str | None = None, derivative: int = 0):
        return evaluate(self, x, side=side, derivative=derivative)


def evaluate(wave: PiecewiseWave, x, side: str | None = None, derivative: int = 0):
    """Evaluate ``wave`` at ``x`` using the layer that contains each point."""
    x = np.asarray(x, dtype=float)
    j = np.asarray(layer_index(wave.medium, x, side=side))
    out = np.zeros(x.shape + np.shape(wave.lam), dtype=complex)
    for layer in np.unique(j):
        mask = j == layer
        out[mask] = wave.layer(int(layer), x[mask], derivative)
    return out[()] if out.ndim == 0 else out


def _values(a, lam, x, A, B):
    k = lam / a
    ep = np.exp(1j * k * x)
    return A * ep + B / ep, 1j * k * (A * ep - B / ep)


def _amplitudes(a, lam, x, u, du):
    k = lam / a
    ep = np.exp(1j * k * x)
    d = du / (1j * k)
    return 0.5 * (u + d) / ep, 0.5 * (u - d) * ep


def _check(medium, coupling, lam):
    problems = validate(medium, coupling)
    if problems:
        raise ValueError("; ".join(problems))
    lam = np.asarray(lam, dtype=float)
    if np.any(lam == 0):
        raise EigenConstructionError("lambda = 0 is excluded (degenerate spectral point)")
    return lam


def _side_scales(medium, coupling, k, weighting):
    if weighting is None:
        return 1.0, 1.0
    d1, d2 = coupling.determinants()[k]
    if weighting == "adjoint":
        a = medium.diffusivity_coeffs
        return a[k] ** 2 / d1, a[k + 1] ** 2 / d2
    if weighting == "plain":
        return 1.0 / d1, 1.0 / d2
    raise ValueError("weighting must be 'adjoint' or 'plain'")


def _backward(medium, coupling, lam, last, weighting):
    n = medium.n_interfaces
    a = medium.diffusivity_coeffs
    shape = (medium.n_layers,) + lam.shape
    A = np.zeros(shape, dtype=complex)
    B = np.zeros(shape, dtype=complex)
    A[n] = last[0]
    B[n] = last[1]
    for k in range(n - 1, -1, -1):
        x = medium.interfaces[k]
        sl, sr = _side_scales(medium, coupling, k, weighting)
        cl = sl * coupling.side_matrix(k, 0)
        cr = sr * coupling.side_matrix(k, 1)
        if abs(np.linalg.det(cl)) < 1e-300:
            raise EigenConstructionError(f"singular interface system at interface {k + 1}")
        m = np.linalg.solve(cl, cr)
        u, du = _values(a[k + 1], lam, x, A[k + 1], B[k + 1])
        ul = m[0, 0] * u + m[0, 1] * du
        dul = m[1, 0] * u + m[1, 1] * du
        A[k], B[k] = _amplitudes(a[k], lam, x, ul, dul)
    return A, B


def build_primal(medium: LayeredMedium, coupling: InterfaceCoupling, lam, last=(1.0, 0.0)) -> PiecewiseWave:
    """Primal eigenfunction normalised by ``phi_{n+1} = e^{i lam x/a_{n+1}}``.

    ``last`` overrides the amplitudes ``(A_{n+1}, B_{n+1})`` of the last layer.
    """
    lam = _check(medium, coupling, lam)
    A, B = _backward(medium, coupling, lam, last, None)
    return PiecewiseWave(medium, lam, A, B, "primal")


def build_dual(medium: LayeredMedium, coupling: InterfaceCoupling, lam, last=(0.0, 1.0),
               weighting: str = "adjoint") -> PiecewiseWave:
    """Dual eigenfunction normalised by ``phi*_{n+1} = e^{-i lam x/a_{n+1}}``.

    ``weighting='adjoint'`` imposes ``(a_k^2/D_1k)[..]phi*_k = (a_{k+1}^2/D_2k)[..]phi*_{k+1}``,
    the conditions of the formal adjoint of ``a_j^2 d^2/dx^2``;
    ``weighting='plain'`` drops the ``a^2`` factors (not biorthogonal when ``a_k != a_{k+1}``).
    """
    lam = _check(medium, coupling, lam)
    A, B = _backward(medium, coupling, lam, last, weighting)
    return PiecewiseWave(medium, lam, A, B, "dual")


def orthogonality_weights(medium: LayeredMedium, coupling: InterfaceCoupling) -> np.ndarray:
    """Layer weights ``w_j`` making the problem self-adjoint; ``w_1 = 1/a_1^2``."""
    a = medium.a
    w = np.empty(medium.n_layers)
    w[0] = 1.0 / a[0] ** 2
    if medium.n_interfaces:
        dets = coupling.determinants()
        for k in range(medium.n_interfaces):
            w[k + 1] = w[k] * a[k] ** 2 * dets[k, 1] / (a[k + 1] ** 2 * dets[k, 0])
    if np.any(w <= 0):
        raise ValueError("coupling admits no positive orthogonality weight (Delta_1k * Delta_2k < 0)")
    return w


def _forward(medium, coupling, lam, u0, du0):
    # real solution with (u, u') = (u0, du0) at l_1 from the left
    a = medium.diffusivity_coeffs
    shape = (medium.n_layers,) + lam.shape
    A = np.zeros(shape, dtype=complex)
    B = np.zeros(shape, dtype=complex)
    x0 = medium.interfaces[0] if medium.n_interfaces else 0.0
    A[0], B[0] = _amplitudes(a[0], lam, x0, u0, du0)
    for k in range(medium.n_interfaces):
        x = medium.interfaces[k]
        m = np.linalg.solve(coupling.side_matrix(k, 1), coupling.side_matrix(k, 0))
        u, du = _values(a[k], lam, x, A[k], B[k])
        ur = m[0, 0] * u + m[0, 1] * du
        dur = m[1, 0] * u + m[1, 1] * du
        A[k + 1], B[k + 1] = _amplitudes(a[k + 1], lam, x, ur, dur)
    return A, B


def _gram(w, a, first, last):
    def g(u, v):
        total = 0.0
        for o in (first, last):
            total = total + w[o] * a[o] * np.real(u[0][o] * np.conj(v[0][o]) + u[1][o] * np.conj(v[1][o]))
        return math.pi * total

    return g


def spectral_pair(medium: LayeredMedium, coupling: InterfaceCoupling | None, beta):
    """Complete biorthogonal eigenfunction family for signed ``beta != 0``.

    Returns ``(phi, phi_star, N)`` with ``N`` the common spectral norm of the
    real parts ``C`` and ``S``. ``phi(x, -b) = conj(phi(x, b))``.
    """
    if coupling is None:
        if medium.n_interfaces:
            raise ValueError("coupling is required for layered media")
        coupling = InterfaceCoupling(np.zeros((0, 2, 2)), np.zeros((0, 2, 2)))
    beta = _check(medium, coupling, beta)
    a = medium.a
    w = orthogonality_weights(medium, coupling)
    ones = np.ones_like(beta)
    Cc = _forward(medium, coupling, beta, ones, 0.0 * beta)
    S0 = _forward(medium, coupling, beta, 0.0 * beta, beta / a[0])
    g = _gram(w, a, 0, medium.n_layers - 1)
    n_cc = g(Cc, Cc)
    proj = g(Cc, S0) / n_cc
    S1 = (S0[0] - proj * Cc[0], S0[1] - proj * Cc[1])
    scale = np.sqrt(n_cc / g(S1, S1))
    A = Cc[0] + 1j * scale * S1[0]
    B = Cc[1] + 1j * scale * S1[1]
    factor = (math.pi / n_cc) * w.reshape((-1,) + (1,) * beta.ndim)
    phi = PiecewiseWave(medium, beta, A, B, "primal")
    phi_star = PiecewiseWave(medium, beta, factor * np.conj(B), factor * np.conj(A), "dual")
    return phi, phi_star, n_cc


def closed_form_two_layer(params: TwoLayerIdealParams, which: str, lam) -> PiecewiseWave:
    """Two-layer ideal-contact eigenfunctions with the interface at x = 0.

    ``phi_1 = (1+d0)(cos(lam x/a1) + i d0^{-1/2} sin(lam x/a1))``,
    ``phi_2 = (1+d0)(cos(lam x/a2) + i d0^{1/2} sin(lam x/a2))`` and
    ``phi*_k = r_k conj(phi_k)``.
    """
    lam = np.asarray(lam, dtype=float)
    d0 = params.delta0
    q = np.array([1.0 / math.sqrt(d0), math.sqrt(d0)])
    A = (1 + d0) * 0.5 * (1 + q)
    B = (1 + d0) * 0.5 * (1 - q)
    shape = (2,) + lam.shape
    A = np.broadcast_to(A.reshape((2,) + (1,) * lam.ndim), shape).astype(complex)
    B = np.broadcast_to(B.reshape((2,) + (1,) * lam.ndim), shape).astype(complex)
    medium = params.medium()
    if which == "primal":
        return PiecewiseWave(medium, lam, A, B, "primal")
    if which == "dual":
        r = np.array([params.r1, params.r2]).reshape((2,) + (1,) * lam.ndim)
        return PiecewiseWave(medium, lam, r * np.conj(B), r * np.conj(A), "dual")
    raise ValueError("which must be 'primal' or 'dual'")


def coupling_residual(wave: PiecewiseWave, coupling: InterfaceCoupling, weighting: str | None = None):
    """Largest relative violation of the interface conditions by ``wave``.

    ``weighting`` is ``None`` for primal conditions or the dual weighting used
    in :func:`build_dual`.
    """
    medium = wave.medium
    worst = 0.0
    for k in range(medium.n_interfaces):
        x = medium.interfaces[k]
        sl, sr = _side_scales(medium, coupling, k, weighting)
        ul = wave.layer(k + 1, x)
        dul = wave.layer(k + 1, x, 1)
        ur = wave.layer(k + 2, x)
        dur = wave.layer(k + 2, x, 1)
        for m in range(2):
            lhs = sl * (coupling.alpha[k, m, 0] * dul + coupling.beta[k, m, 0] * ul)
            rhs = sr * (coupling.alpha[k, m, 1] * dur + coupling.beta[k, m, 1] * ur)
            scale = np.maximum(np.abs(lhs) + np.abs(rhs), 1e-300)
            worst = max(worst, float(np.max(np.abs(lhs - rhs) / scale)))
    return worst
