"""Bessel functions and the deterministic quadrature engines used by every
other module.

All rules are composite Gauss-Legendre with a fixed per-panel order, so a
given :class:`QuadratureSpec` always produces the same nodes and the same
numbers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy import special

__all__ = [
    "QuadratureSpec",
    "QuadInfo",
    "ToleranceWarning",
    "bessel_j",
    "normalized_bessel",
    "gauss_legendre",
    "composite_rule",
    "resolved_rule",
    "integrate_finite",
    "integrate_semiinfinite_damped",
    "abel_limit",
]

# phase advance (radians) one 16-point Gauss-Legendre panel integrates to ~1e-15
PANEL_PHASE = 8.0
GAUSS_TAIL_K = 6.0


class ToleranceWarning(UserWarning):
    """Quadrature budget exhausted before the requested tolerance was met."""


@dataclass(frozen=True)
class QuadratureSpec:
    """Node budgets, truncation and tolerances shared by the spectral code.

    ``rho_nodes`` and ``alpha_nodes`` are lower bounds: oscillatory
    integrals raise the count until every Gauss panel sees at most
    ``PANEL_PHASE`` radians of phase.
    """

    finite_nodes: int = 16
    rho_truncation: float = 40.0
    rho_nodes: int = 64
    alpha_nodes: int = 64
    spatial_nodes: int = 64
    tau_schedule: tuple = (0.2, 0.1, 0.05, 0.025, 0.0125)
    rel_tol: float = 1e-8
    abs_tol: float = 1e-12
    max_panels: int = 4096

    def __post_init__(self):
        object.__setattr__(self, "tau_schedule", tuple(float(t) for t in self.tau_schedule))
        for name in ("finite_nodes", "rho_nodes", "alpha_nodes", "spatial_nodes"):
            if int(getattr(self, name)) < 2:
                raise ValueError(f"{name} must be >= 2")
        if not self.rho_truncation > 0:
            raise ValueError("rho_truncation must be positive")
        taus = np.asarray(self.tau_schedule)
        if taus.size < 1 or np.any(taus <= 0) or np.any(np.diff(taus) >= 0):
            raise ValueError("tau_schedule must be strictly decreasing and positive")
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.max_panels < 1:
            raise ValueError("max_panels must be >= 1")

    def replace(self, **changes) -> "QuadratureSpec":
        from dataclasses import replace

        return replace(self, **changes)


@dataclass
class QuadInfo:
    error: float
    converged: bool
    panels: int
    evaluations: int
    notes: list = field(default_factory=list)


def bessel_j(order, z):
    """Bessel function of the first kind ``J_order(z)`` for real ``z >= 0``."""
    order = np.asarray(order, dtype=float)
    z = np.asarray(z, dtype=float)
    if np.any(order < -0.5):
        raise ValueError("bessel_j supports orders >= -1/2 only")
    if np.any(z < 0):
        raise ValueError("bessel_j requires z >= 0")
    out = special.jv(order, z)
    # jv(-1/2, 0) is infinite; keep scipy's value, callers use normalized_bessel
    return out[()] if out.ndim == 0 else out


def _series_normalized(nu: float, z: np.ndarray, terms: int = 12) -> np.ndarray:
    # J_nu(z)/z^nu = sum_k (-z^2/4)^k / (k! Gamma(nu+k+1) 2^nu)
    q = -0.25 * z * z
    term = np.full_like(z, 1.0 / (2.0**nu * math.gamma(nu + 1.0)))
    total = term.copy()
    for k in range(1, terms):
        term = term * q / (k * (nu + k))
        total = total + term
    return total


def normalized_bessel(order, z):
    """``J_order(z) / z**order`` with the removable singularity at 0 filled.

    Orders down to -1/2 are accepted; ``order = -1/2`` gives
    ``sqrt(2/pi) * cos(z)``.
    """
    nu = float(order)
    if nu < -0.5:
        raise ValueError("normalized_bessel supports orders >= -1/2 only")
    z = np.asarray(z, dtype=float)
    if np.any(z < 0):
        raise ValueError("normalized_bessel requires z >= 0")
    if nu == -0.5:
        out = math.sqrt(2.0 / math.pi) * np.cos(z)
    elif nu == 0.5:
        with np.errstate(invalid="ignore", divide="ignore"):
            out = math.sqrt(2.0 / math.pi) * np.where(z > 0, np.sin(z) / np.where(z > 0, z, 1.0), 1.0)
    else:
        small = z < 0.5
        with np.errstate(invalid="ignore", divide="ignore"):
            big = special.jv(nu, z) / np.where(small, 1.0, z) ** nu
        out = np.where(small, _series_normalized(nu, np.where(small, z, 0.0)), big)
    out = np.asarray(out, dtype=float)
    return out[()] if out.ndim == 0 else out


@lru_cache(maxsize=None)
def _leggauss(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(n: int):
    """Gauss-Legendre nodes and weights on [-1, 1] (cached, read-only)."""
    return _leggauss(int(n))


def composite_rule(a: float, b: float, panels: int, order: int = 16):
    """Nodes and weights of a composite Gauss-Legendre rule on [a, b]."""
    x, w = gauss_legendre(order)
    edges = np.linspace(a, b, int(panels) + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def resolved_rule(a: float, b: float, freq: float, min_nodes: int = 16, order: int = 16):
    """Composite rule on [a, b] fine enough for ``exp(i * freq * x)``."""
    span = abs(b - a)
    panels = max(math.ceil(span * abs(freq) / PANEL_PHASE), math.ceil(min_nodes / order), 1)
    return composite_rule(a, b, panels, order)


def integrate_finite(integrand: Callable, a: float, b: float, spec: QuadratureSpec | None = None,
                     full_output: bool = False):
    """Composite Gauss-Legendre with dyadic panel refinement.

    ``integrand`` is called with a 1-D array of nodes and may return values
    with extra leading axes (vector-valued integrands); convergence is judged
    in the max norm.
    """
    spec = spec or QuadratureSpec()
    if not a < b:
        raise ValueError("integrate_finite requires a < b")
    order = spec.finite_nodes
    panels = 1
    evaluations = 0
    prev = None
    err = math.inf
    while True:
        x, w = composite_rule(a, b, panels, order)
        vals = np.asarray(integrand(x))
        evaluations += x.size
        cur = vals @ w
        if prev is not None:
            err = float(np.max(np.abs(cur - prev)))
            scale = float(np.max(np.abs(cur)))
            if err <= spec.rel_tol * scale or err <= spec.abs_tol:
                converged = True
                break
        if 2 * panels > spec.max_panels:
            converged = False
            break
        prev = cur
        panels *= 2
    info = QuadInfo(error=err, converged=converged, panels=panels, evaluations=evaluations)
    if not converged:
        info.notes.append("tolerance not met within panel budget")
        import warnings

        warnings.warn(f"integrate_finite: tolerance not met (err={err:.3g})", ToleranceWarning, stacklevel=2)
    result = cur[()] if np.ndim(cur) == 0 else cur
    return (result, info) if full_output else result


def integrate_semiinfinite_damped(integrand: Callable, damping_scale: float,
                                  spec: QuadratureSpec | None = None, full_output: bool = False):
    """Integrate over [0, inf) an integrand carrying an ``exp(-c rho^2)`` factor.

    The range is cut at ``max(rho_truncation, 6/sqrt(damping_scale))``;
    beyond that the Gaussian tail is below 1e-15.
    """
    spec = spec or QuadratureSpec()
    if not damping_scale > 0:
        raise ValueError("damping_scale must be positive; use abel_limit for undamped integrals")
    upper = max(spec.rho_truncation, GAUSS_TAIL_K / math.sqrt(damping_scale))
    return integrate_finite(integrand, 0.0, upper, spec, full_output=full_output)


def _neville_at_zero(t: np.ndarray, v: np.ndarray):
    # tableau columns; returns final value and the previous-order estimate
    p = [complex(x) for x in v]
    n = len(p)
    last = p[-1]
    prev_best = p[-1]
    for m in range(1, n):
        for i in range(n - m):
            p[i] = (t[i + m] * p[i] - t[i] * p[i + 1]) / (t[i + m] - t[i])
        prev_best, last = last, p[n - m - 1]
    return last, prev_best


def _rational_at_zero(t: np.ndarray, v: np.ndarray):
    # Bulirsch-Stoer rational extrapolation to t = 0
    n = len(v)
    rows = [[complex(x)] for x in v]
    for k in range(1, n):
        for i in range(k, n):
            r1 = rows[i][k - 1]
            r0 = rows[i - 1][k - 1]
            r2 = rows[i - 1][k - 2] if k >= 2 else 0.0
            diff = r1 - r0
            if diff == 0:
                rows[i].append(r1)
                continue
            ratio = t[i - k] / t[i]
            den = r1 - r2
            if den == 0:
                rows[i].append(r1)
                continue
            denom = ratio * (1.0 - diff / den) - 1.0
            if denom == 0 or not np.isfinite(denom):
                raise ZeroDivisionError("rational extrapolation hit a pole")
            rows[i].append(r1 + diff / denom)
    best = rows[-1][-1]
    prev = rows[-1][-2] if n >= 2 else best
    return best, prev


def abel_limit(family: Callable, schedule: Sequence[float] | None = None, method: str = "rational",
               full_output: bool = False):
    """Extrapolate ``family(tau)`` to ``tau = 0`` from a decreasing schedule.

    ``method='rational'`` uses Bulirsch-Stoer rational extrapolation and falls
    back to polynomial (Neville) extrapolation if the rational tableau hits a
    pole; ``method='polynomial'`` uses Neville directly. The returned error
    estimate is the gap between the two highest-order tableau entries.
    """
    schedule = QuadratureSpec().tau_schedule if schedule is None else tuple(schedule)
    t = np.asarray(schedule, dtype=float)
    if t.size < 3:
        raise ValueError("abel_limit needs at least 3 schedule entries")
    if np.any(t <= 0) or np.any(np.diff(t) >= 0):
        raise ValueError("schedule must be strictly decreasing and positive")
    values = []
    for tau in t:
        val = family(float(tau))
        if not np.all(np.isfinite(val)):
            raise FloatingPointError(f"family value is not finite at tau={tau:g}")
        values.append(val)
    values = np.asarray(values)
    flat = values.reshape(len(t), -1)
    out = np.empty(flat.shape[1], dtype=complex)
    spread = np.empty(flat.shape[1])
    used = method
    for col in range(flat.shape[1]):
        if method == "rational":
            try:
                best, prev = _rational_at_zero(t, flat[:, col])
            except ZeroDivisionError:
                best, prev = _neville_at_zero(t, flat[:, col])
                used = "polynomial"
        elif method == "polynomial":
            best, prev = _neville_at_zero(t, flat[:, col])
        else:
            raise ValueError(f"unknown extrapolation method {method!r}")
        out[col] = best
        spread[col] = abs(best - prev)
    if not np.iscomplexobj(values):
        out = out.real
    out = out.reshape(values.shape[1:])
    result = out[()] if out.ndim == 0 else out
    if full_output:
        return result, {"spread": float(spread.max()), "method": used, "values": values}
    return result
