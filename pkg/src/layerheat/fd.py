"""Finite-difference reference solver (Crank-Nicolson) for ideal-contact layers.

Shares only the medium types with the spectral code. In conservative form
the layered equation reads ``c_j u_t = (k_j u_x)_x + c_j Lap_y u`` with
``k_1 = 1``, ``k_{j+1} = nu k_j`` and ``c_j = k_j / a_j^2``, so that
``k_j u_x`` is continuous across each interface. Away from interfaces the
x-operator is the usual three-point Laplacian times ``a_j^2``. At an
interface node, writing the three-point stencil on each side with a ghost
value and eliminating both ghosts through the flux condition gives

    (c_L + c_R)/2 * u_t = [k_R (u_{i+1} - u_i) - k_L (u_i - u_{i-1})] / h^2
                          + (c_L + c_R)/2 * Lap_y u,

the same row as the finite-volume balance over the dual cell around the node.
The x- and y-operators commute, so each step is the product of two 1-D
Crank-Nicolson factors, each a banded solve.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded
from scipy.special import erf, erfc

from .media import InterfaceCoupling, LayeredMedium

__all__ = ["FdGrid", "FdResult", "FdWarning", "fd_solve", "compare", "CompareReport", "widened_gaussian",
           "two_layer_gaussian"]


class FdWarning(UserWarning):
    pass


@dataclass(frozen=True)
class FdGrid:
    """Uniform grid with every interface on a node."""

    x_lo: float
    x_hi: float
    hx: float
    y_lo: tuple
    y_hi: tuple
    hy: float
    dt: float
    t_end: float

    def __post_init__(self):
        object.__setattr__(self, "y_lo", tuple(float(v) for v in np.atleast_1d(self.y_lo)))
        object.__setattr__(self, "y_hi", tuple(float(v) for v in np.atleast_1d(self.y_hi)))
        if not (self.hx > 0 and self.hy > 0 and self.dt > 0 and self.t_end > 0):
            raise ValueError("steps and end time must be positive")
        if not self.x_lo < self.x_hi:
            raise ValueError("x_lo must be below x_hi")

    @property
    def x(self) -> np.ndarray:
        n = int(round((self.x_hi - self.x_lo) / self.hx))
        return self.x_lo + self.hx * np.arange(n + 1)

    @property
    def y_axes(self) -> list:
        out = []
        for lo, hi in zip(self.y_lo, self.y_hi):
            n = int(round((hi - lo) / self.hy))
            out.append(lo + self.hy * np.arange(n + 1))
        return out

    @classmethod
    def auto(cls, medium: LayeredMedium, bumps_extent, hx: float, dt: float, t_end: float,
             hy: float | None = None, decay: float = 1e-8) -> "FdGrid":
        """Grid wide enough that a Gaussian of the given spread stays below ``decay`` at the edges.

        ``bumps_extent`` is ``(x_lo, x_hi, y_lo, y_hi, sigma)`` of the initial data.
        """
        hy = hy or hx
        xl, xh, yl, yh, sigma = bumps_extent
        a_max = max(medium.diffusivity_coeffs)
        pad_x = math.sqrt(2 * math.log(1 / decay) * (sigma**2 + 2 * a_max**2 * t_end))
        pad_y = math.sqrt(2 * math.log(1 / decay) * (sigma**2 + 2 * t_end))
        # stretch the layer-2 side by the diffusivity ratio so both sides decay
        lo = xl - pad_x
        hi = xh + pad_x
        anchor = medium.interfaces[0] if medium.interfaces else 0.0
        lo = anchor - hx * math.ceil((anchor - lo) / hx)
        hi = anchor + hx * math.ceil((hi - anchor) / hx)
        ylo = np.atleast_1d(yl) - pad_y
        yhi = np.atleast_1d(yh) + pad_y
        ylo = hy * np.floor(ylo / hy)
        yhi = hy * np.ceil(yhi / hy)
        return cls(lo, hi, hx, tuple(ylo), tuple(yhi), hy, dt, t_end)


@dataclass
class FdResult:
    grid: FdGrid
    times: tuple
    fields: list  # arrays of shape (nx, ny_1, ..., ny_m)
    boundary_max: float
    mass: list

    def sample(self, probes, time_index: int = -1) -> np.ndarray:
        """Multilinear interpolation of the stored field at probe rows ``(x, y...)``."""
        from scipy.interpolate import RegularGridInterpolator

        axes = [self.grid.x] + self.grid.y_axes
        interp = RegularGridInterpolator(axes, self.fields[time_index], method="linear")
        return interp(np.atleast_2d(np.asarray(probes, dtype=float)))


def _layer_tables(medium: LayeredMedium, coupling: InterfaceCoupling | None, x: np.ndarray, hx: float):
    a = np.asarray(medium.diffusivity_coeffs, dtype=float)
    nu = 1.0 if coupling is None else coupling.nu
    if medium.n_interfaces and (coupling is None or coupling.kind != "ideal"):
        raise ValueError("the finite-difference oracle supports ideal contact only")
    k = nu ** np.arange(medium.n_layers)  # k_1 = 1, k_{j+1} = nu k_j
    c = k / a**2
    edges = np.asarray(medium.interfaces)
    node_layer = np.searchsorted(edges, x, side="right")  # 0-based
    iface_nodes = []
    for l in edges:
        idx = int(round((l - x[0]) / hx))
        if abs(x[idx] - l) > 1e-9 * max(1.0, abs(l)):
            raise ValueError(f"interface x={l:g} is not on a grid node")
        iface_nodes.append(idx)
    return a, k, c, node_layer, iface_nodes


def _x_operator_bands(medium, coupling, x, hx):
    """Tridiagonal ``L_x`` as (lower, diag, upper) with Dirichlet ends removed."""
    a, k, c, node_layer, iface_nodes = _layer_tables(medium, coupling, x, hx)
    coef = a[node_layer] ** 2 / hx**2
    lower = coef.copy()
    diag = -2 * coef
    upper = coef.copy()
    for idx, kk in zip(iface_nodes, range(len(iface_nodes))):
        kl, kr = k[kk], k[kk + 1]
        cm = 0.5 * (c[kk] + c[kk + 1])
        lower[idx] = kl / (cm * hx**2)
        upper[idx] = kr / (cm * hx**2)
        diag[idx] = -(kl + kr) / (cm * hx**2)
    return lower, diag, upper, c, node_layer, iface_nodes


def _apply_tridiag(lower, diag, upper, u, axis):
    u = np.moveaxis(u, axis, 0)
    out = diag.reshape((-1,) + (1,) * (u.ndim - 1)) * u
    out[1:] += lower[1:].reshape((-1,) + (1,) * (u.ndim - 1)) * u[:-1]
    out[:-1] += upper[:-1].reshape((-1,) + (1,) * (u.ndim - 1)) * u[1:]
    out[0] = 0.0
    out[-1] = 0.0
    return np.moveaxis(out, 0, axis)


def _cn_factor(lower, diag, upper, dt, theta=0.5):
    # banded (I - theta dt L); theta = 1/2 is Crank-Nicolson, 1 implicit Euler
    n = diag.size
    ab = np.zeros((3, n))
    ab[0, 1:] = -theta * dt * upper[:-1]
    ab[1] = 1 - theta * dt * diag
    ab[2, :-1] = -theta * dt * lower[1:]
    # Dirichlet rows
    ab[1, 0] = ab[1, -1] = 1.0
    ab[0, 1] = 0.0
    ab[2, -2] = 0.0
    return ab


def _cn_step(u, ops, dt, theta=0.5):
    # (I - theta dt L) u_new = (I + (1 - theta) dt L) u, one axis at a time
    for axis, (lower, diag, upper, ab) in enumerate(ops):
        rhs = u + (1 - theta) * dt * _apply_tridiag(lower, diag, upper, u, axis) if theta < 1 else u.copy()
        rhs = np.moveaxis(rhs, axis, 0)
        shape = rhs.shape
        rhs[0] = 0.0
        rhs[-1] = 0.0
        sol = solve_banded((1, 1), ab, rhs.reshape(shape[0], -1), check_finite=False)
        u = np.moveaxis(sol.reshape(shape), 0, axis)
    return u


def fd_solve(medium: LayeredMedium, coupling: InterfaceCoupling | None, initial, grid: FdGrid,
             times=None, startup: int = 2) -> FdResult:
    """Crank-Nicolson solution on ``grid``, stored at each requested time.

    ``initial(x, y)`` takes ``x`` of shape S and ``y`` of shape ``S + (m,)``;
    nodes on an interface take the left layer's value. Requested times are
    rounded to whole steps.

    The first ``startup`` steps are each done as two implicit-Euler half
    steps. Crank-Nicolson barely damps the stiffest modes once ``dt >> h^2``,
    and data that jumps at an interface or ignores the flux condition
    excites exactly those modes; the damped start removes them without
    losing second order.
    """
    m = medium.transverse_dim
    if m not in (1, 2):
        raise ValueError("the finite-difference oracle supports m = 1 or 2")
    if len(grid.y_lo) != m:
        raise ValueError("grid transverse dimension does not match the medium")
    x = grid.x
    yax = grid.y_axes
    lower, diag, upper, c, node_layer, iface_nodes = _x_operator_bands(medium, coupling, x, grid.hx)
    if grid.dt > grid.hx**2:
        warnings.warn("dt > hx^2: stable, but time error may dominate", FdWarning, stacklevel=2)
    bands = [(lower, diag, upper)]
    for yv in yax:
        cy = np.full(yv.size, 1.0 / grid.hy**2)
        bands.append((cy, -2 * cy, cy.copy()))
    ops = [b + (_cn_factor(*b, grid.dt),) for b in bands]
    ops_be = [b + (_cn_factor(*b, 0.5 * grid.dt, theta=1.0),) for b in bands]
    mesh = np.meshgrid(x, *yax, indexing="ij")
    pts_y = np.stack(mesh[1:], axis=-1)
    u = np.asarray(initial(mesh[0], pts_y), dtype=float)
    g_max = float(np.max(np.abs(u))) or 1.0
    # mass weights: c of the node's layer, averaged at interface nodes
    cw = c[node_layer].astype(float)
    for kk, idx in enumerate(iface_nodes):
        cw[idx] = 0.5 * (c[kk] + c[kk + 1])
    cw = cw.reshape((-1,) + (1,) * m) * grid.hx * grid.hy**m

    times = (grid.t_end,) if times is None else tuple(float(t) for t in times)
    steps = [int(round(t / grid.dt)) for t in times]
    fields, mass = [], [float(np.sum(cw * u))]
    boundary = 0.0
    done = 0
    for target in sorted(set(steps)):
        while done < target:
            if done < startup:
                u = _cn_step(_cn_step(u, ops_be, 0.5 * grid.dt, 1.0), ops_be, 0.5 * grid.dt, 1.0)
            else:
                u = _cn_step(u, ops, grid.dt)
            done += 1
            mass.append(float(np.sum(cw * u)))
            edge = max(np.max(np.abs(np.take(u, [1, -2], axis=ax))) for ax in range(u.ndim))
            boundary = max(boundary, float(edge) / g_max)
        fields.append((target, u.copy()))
    by_step = dict(fields)
    if boundary > 1e-8:
        warnings.warn(f"solution reached {boundary:.2e} of max|g| next to the truncated boundary",
                      FdWarning, stacklevel=2)
    return FdResult(grid, tuple(s * grid.dt for s in steps), [by_step[s] for s in steps], boundary, mass)


# ---------------------------------------------------------------------------
# analytic references


def widened_gaussian(t, x, y, center, sigma, a: float = 1.0, amplitude: float = 1.0):
    """Exact solution for a Gaussian in a single medium with x-diffusivity ``a^2``."""
    x = np.asarray(x, dtype=float)
    y = np.atleast_2d(np.asarray(y, dtype=float)) if np.ndim(y) > 1 else np.asarray(y, dtype=float)
    c = np.asarray(center, dtype=float)
    sx, sy = sigma
    vx = sx**2 + 2 * a**2 * t
    vy = sy**2 + 2 * t
    m = c.size - 1
    yy = np.asarray(y, dtype=float).reshape(x.shape + (m,)) if m else None
    r2 = np.sum((yy - c[1:]) ** 2, axis=-1)
    return (amplitude * math.sqrt(sx**2 / vx) * (sy**2 / vy) ** (m / 2)
            * np.exp(-((x - c[0]) ** 2) / (2 * vx) - r2 / (2 * vy)))


def _gauss_segment(P, Q, c, sigma, t, lo, hi):
    # int_lo^hi exp(-(P - Q xi)^2/(4t) - (xi - c)^2/(2 sigma^2)) d xi
    A = Q**2 / (4 * t) + 1 / (2 * sigma**2)
    B = P * Q / (2 * t) + c / sigma**2
    C = P**2 / (4 * t) + c**2 / (2 * sigma**2)
    mu = B / (2 * A)
    pref = np.exp(B**2 / (4 * A) - C) * 0.5 * math.sqrt(math.pi / A)
    s = math.sqrt(A)
    zl = s * (lo - mu)
    zh = s * (hi - mu)
    if lo == -math.inf:
        return pref * erfc(-zh)
    if hi == math.inf:
        return pref * erfc(zl)
    return pref * (erf(zh) - erf(zl))


def two_layer_gaussian(t, x, y, params, center, sigma, amplitude: float = 1.0, layer: int = 1):
    """Exact solution for two layers in ideal contact at ``x = 0``.

    The data is ``amplitude * exp(-(x-x0)^2/(2 sx^2) - |y-y0|^2/(2 sy^2))``
    restricted to ``layer`` (clipping at the interface included exactly).
    The x-part uses the image/transmission Green's function of the interface.
    """
    a1, a2, d0 = params.a1, params.a2, params.delta0
    x = np.asarray(x, dtype=float)
    c = np.asarray(center, dtype=float)
    sx, sy = sigma
    m = c.size - 1
    yy = np.asarray(y, dtype=float).reshape(x.shape + (m,))
    vy = sy**2 + 2 * t
    ypart = (sy**2 / vy) ** (m / 2) * np.exp(-np.sum((yy - c[1:]) ** 2, axis=-1) / (2 * vy))
    R = (d0 - 1) / (d0 + 1)
    norm = 1 / (2 * math.sqrt(math.pi * t))
    out = np.zeros_like(x)
    x0 = c[0]
    if layer == 1:
        # G(x, xi) for xi < 0; written in the scaled variables x/a, xi/a1
        left = x < 0
        xl = x[left]
        direct = _gauss_segment(xl / a1, 1 / a1, x0, sx, t, -math.inf, 0.0)
        image = _gauss_segment(-xl / a1, 1 / a1, x0, sx, t, -math.inf, 0.0)
        out[left] = norm / a1 * (direct + R * image)
        xr = x[~left]
        out[~left] = norm / a1 * (1 + R) * _gauss_segment(xr / a2, 1 / a1, x0, sx, t, -math.inf, 0.0)
    else:
        right = x > 0
        xr = x[right]
        direct = _gauss_segment(xr / a2, 1 / a2, x0, sx, t, 0.0, math.inf)
        image = _gauss_segment(-xr / a2, 1 / a2, x0, sx, t, 0.0, math.inf)
        out[right] = norm / a2 * (direct - R * image)
        xl = x[~right]
        out[~right] = norm / a2 * (1 - R) * _gauss_segment(xl / a1, 1 / a2, x0, sx, t, 0.0, math.inf)
    return amplitude * out * ypart


# ---------------------------------------------------------------------------
# comparison


@dataclass
class CompareReport:
    l2_rel: float
    linf_rel: float
    per_layer: dict  # layer -> (l2_rel, linf_rel, count)
    count: int

    def lines(self) -> list:
        out = [f"probes={self.count} L2_rel={self.l2_rel:.3e} Linf_rel={self.linf_rel:.3e}"]
        for j, (l2, li, n) in sorted(self.per_layer.items()):
            out.append(f"  layer {j}: probes={n} L2_rel={l2:.3e} Linf_rel={li:.3e}")
        return out


def compare(values, reference, layers=None) -> CompareReport:
    """Relative L2 and L-infinity errors of ``values`` against ``reference``.

    Per-layer entries are normalised by the global reference norms so they
    add up to the global picture.
    """
    v = np.asarray(values, dtype=float).ravel()
    r = np.asarray(reference, dtype=float).ravel()
    if v.shape != r.shape:
        raise ValueError(f"probe mismatch: {v.size} values vs {r.size} reference values")
    n2 = float(np.linalg.norm(r)) or 1.0
    ninf = float(np.max(np.abs(r))) if r.size else 1.0
    ninf = ninf or 1.0
    d = v - r
    layers = np.ones(v.size, dtype=int) if layers is None else np.asarray(layers).ravel()
    per = {}
    for j in np.unique(layers):
        sel = layers == j
        per[int(j)] = (float(np.linalg.norm(d[sel])) / n2, float(np.max(np.abs(d[sel]))) / ninf, int(sel.sum()))
    return CompareReport(float(np.linalg.norm(d)) / n2, float(np.max(np.abs(d))) / ninf if d.size else 0.0,
                         per, int(v.size))
