"""Layered media along x and the coupling conditions at the interfaces."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "LayeredMedium",
    "InterfaceCoupling",
    "TwoLayerIdealParams",
    "AmbiguousPointError",
    "layer_index",
    "ideal_contact",
    "validate",
]


class AmbiguousPointError(ValueError):
    """A point lies exactly on an interface and no side was chosen."""


@dataclass(frozen=True)
class LayeredMedium:
    """Parallel layers separated by the planes ``x = l_k``.

    Layer ``j`` (1-based) occupies ``(l_{j-1}, l_j)`` with ``l_0 = -inf`` and
    ``l_{n+1} = +inf``; its x-diffusivity is ``a_j**2``. The transverse
    Laplacian has unit coefficient in every layer.
    """

    interfaces: tuple
    diffusivity_coeffs: tuple
    transverse_dim: int = 1

    def __post_init__(self):
        object.__setattr__(self, "interfaces", tuple(float(v) for v in self.interfaces))
        object.__setattr__(self, "diffusivity_coeffs", tuple(float(v) for v in self.diffusivity_coeffs))
        object.__setattr__(self, "transverse_dim", int(self.transverse_dim))

    @classmethod
    def homogeneous(cls, a: float = 1.0, transverse_dim: int = 1) -> "LayeredMedium":
        return cls((), (a,), transverse_dim)

    @property
    def n_interfaces(self) -> int:
        return len(self.interfaces)

    @property
    def n_layers(self) -> int:
        return len(self.diffusivity_coeffs)

    @property
    def a(self) -> np.ndarray:
        return np.asarray(self.diffusivity_coeffs, dtype=float)

    def bounds(self, j: int) -> tuple:
        """``(l_{j-1}, l_j)`` for 1-based layer ``j``."""
        edges = (-math.inf,) + self.interfaces + (math.inf,)
        return edges[j - 1], edges[j]


@dataclass(frozen=True)
class InterfaceCoupling:
    """Coefficients of ``[alpha_m1 d/dx + beta_m1] u_k = [alpha_m2 d/dx + beta_m2] u_{k+1}``.

    ``alpha`` and ``beta`` have shape ``(n, 2, 2)`` indexed ``[k, m, i]`` with
    interface ``k`` (0-based), condition ``m`` and side ``i`` (0 = left,
    1 = right).
    """

    alpha: np.ndarray
    beta: np.ndarray
    kind: str = "explicit"
    nu: float | None = None

    def __post_init__(self):
        alpha = np.array(self.alpha, dtype=float).reshape(-1, 2, 2)
        beta = np.array(self.beta, dtype=float).reshape(-1, 2, 2)
        if alpha.shape != beta.shape:
            raise ValueError("alpha and beta must have the same shape")
        alpha.setflags(write=False)
        beta.setflags(write=False)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)

    @property
    def n_interfaces(self) -> int:
        return self.alpha.shape[0]

    def determinants(self) -> np.ndarray:
        """``Delta[k, i] = alpha_1i beta_2i - alpha_2i beta_1i``."""
        a, b = self.alpha, self.beta
        return a[:, 0, :] * b[:, 1, :] - a[:, 1, :] * b[:, 0, :]

    def side_matrix(self, k: int, side: int) -> np.ndarray:
        """2x2 matrix acting on ``(u, u')`` for condition rows m = 1, 2."""
        return np.array([[self.beta[k, 0, side], self.alpha[k, 0, side]],
                         [self.beta[k, 1, side], self.alpha[k, 1, side]]])


@dataclass(frozen=True)
class TwoLayerIdealParams:
    """Two layers in ideal contact at ``x = 0`` with conductivity ratio ``nu``."""

    a1: float
    a2: float
    nu: float

    def __post_init__(self):
        if not (self.a1 > 0 and self.a2 > 0 and self.nu > 0):
            raise ValueError("a1, a2 and nu must be positive")

    @property
    def delta0(self) -> float:
        return self.a2 / (self.nu * self.a1)

    @property
    def r1(self) -> float:
        return self.a2 / (self.nu * self.a1**2)

    @property
    def r2(self) -> float:
        return 1.0 / self.a2

    def medium(self, transverse_dim: int = 1) -> LayeredMedium:
        return LayeredMedium((0.0,), (self.a1, self.a2), transverse_dim)

    def coupling(self) -> InterfaceCoupling:
        return ideal_contact(self.nu, 1)


def layer_index(medium: LayeredMedium, x, side: str | None = None):
    """1-based layer id of ``x``.

    Points exactly on an interface raise :class:`AmbiguousPointError` unless
    ``side`` is ``'left'`` or ``'right'``.
    """
    x_arr = np.asarray(x, dtype=float)
    edges = np.asarray(medium.interfaces, dtype=float)
    if edges.size == 0:
        out = np.ones(x_arr.shape, dtype=int)
        return int(out) if out.ndim == 0 else out
    on_edge = np.isin(x_arr, edges)
    if side is None and np.any(on_edge):
        bad = x_arr[on_edge] if x_arr.ndim else x_arr
        raise AmbiguousPointError(f"x={np.ravel(bad)[0]:g} lies on an interface; choose a side")
    if side in (None, "right"):
        out = np.searchsorted(edges, x_arr, side="right") + 1
    elif side == "left":
        out = np.searchsorted(edges, x_arr, side="left") + 1
    else:
        raise ValueError("side must be 'left', 'right' or None")
    return int(out) if np.ndim(out) == 0 else out


def ideal_contact(nu: float, interface_count: int) -> InterfaceCoupling:
    """Value continuity plus ``u'_left = nu * u'_right`` at every interface."""
    if not nu > 0:
        raise ValueError("nu must be positive")
    alpha = np.zeros((interface_count, 2, 2))
    beta = np.zeros((interface_count, 2, 2))
    beta[:, 0, :] = 1.0
    alpha[:, 1, 0] = 1.0
    alpha[:, 1, 1] = nu
    return InterfaceCoupling(alpha, beta, kind="ideal", nu=float(nu))


def validate(medium: LayeredMedium, coupling: InterfaceCoupling | None = None) -> list:
    """Every violated invariant as a human-readable string; empty when valid."""
    problems = []
    l = np.asarray(medium.interfaces, dtype=float)
    if l.size > 1 and np.any(np.diff(l) <= 0):
        k = int(np.argmax(np.diff(l) <= 0)) + 1
        problems.append(f"interfaces must be strictly increasing (l_{k} >= l_{k + 1})")
    if not np.all(np.isfinite(l)):
        problems.append("interfaces must be finite")
    if medium.n_layers != medium.n_interfaces + 1:
        problems.append(f"layer count {medium.n_layers} != interface count + 1 ({medium.n_interfaces + 1})")
    for j, a in enumerate(medium.diffusivity_coeffs, start=1):
        if not a > 0:
            problems.append(f"layer {j}: diffusivity must be positive (a={a:g})")
    if medium.transverse_dim < 1:
        problems.append("transverse_dim must be >= 1")
    if coupling is not None:
        if coupling.n_interfaces != medium.n_interfaces:
            problems.append(f"coupling has {coupling.n_interfaces} interfaces, medium has {medium.n_interfaces}")
        dets = coupling.determinants()
        for k in range(dets.shape[0]):
            for i in range(2):
                if dets[k, i] == 0:
                    problems.append(f"interface {k + 1}: Delta_{i + 1},{k + 1} = 0")
    return problems
