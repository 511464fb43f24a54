"""Heat equation in a layered medium by the spectral representation

    u(t, x, y) = c int_0^inf e^{-rho^2 t} rho^p F(rho; x, y) d rho,

where ``F`` is the multidimensional transform of the initial data. The
``rho`` integral is sampled once on a rule shared by every time and probe, so
a whole grid costs one transform of the data per distinct transverse probe
position.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .media import InterfaceCoupling, LayeredMedium, layer_index, validate
from .quadrature import GAUSS_TAIL_K, QuadratureSpec, abel_limit, resolved_rule
from .transforms import ScalarField, SpectralWeightMode, _phase_reach, spectral_values

__all__ = ["HeatScenario", "ScenarioError", "GridResult", "probe_grid", "solve_grid", "solve_point",
           "reproduce_initial"]


class ScenarioError(ValueError):
    """The scenario violates one or more invariants (listed in ``problems``)."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


def probe_grid(xs, *ys) -> np.ndarray:
    """Cartesian product of probe coordinates, x varying slowest."""
    axes = [np.atleast_1d(np.asarray(v, dtype=float)) for v in (xs,) + ys]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in mesh], axis=-1)


@dataclass
class HeatScenario:
    medium: LayeredMedium
    coupling: InterfaceCoupling | None
    initial: ScalarField
    times: tuple
    probes: np.ndarray
    mode: SpectralWeightMode | None = None
    spec: QuadratureSpec = field(default_factory=QuadratureSpec)

    def __post_init__(self):
        self.times = tuple(float(t) for t in np.atleast_1d(self.times))
        self.probes = np.atleast_2d(np.asarray(self.probes, dtype=float))
        problems = self.problems()
        if problems:
            raise ScenarioError(problems)
        if self.mode is None:
            self.mode = SpectralWeightMode.calibrated(self.medium.transverse_dim)

    def problems(self) -> list:
        out = list(validate(self.medium, self.coupling))
        if self.medium.n_interfaces and self.coupling is None:
            out.append("coupling is required when the medium has interfaces")
        if self.initial.medium != self.medium:
            out.append("initial data is defined on a different medium")
        if any(not t > 0 for t in self.times):
            out.append("all times must be positive (t = 0 is the reproducing identity)")
        m = self.medium.transverse_dim
        if self.probes.size and self.probes.shape[1] != 1 + m:
            out.append(f"probes need {1 + m} coordinates (x, y_1..y_{m})")
        elif self.probes.size:
            on = np.isin(self.probes[:, 0], np.asarray(self.medium.interfaces))
            for x in self.probes[on, 0]:
                out.append(f"probe x={x:g} lies on an interface")
        if self.mode is not None and self.mode.dim != m:
            out.append(f"weight mode is for dim={self.mode.dim}, medium has m={m}")
        return out


@dataclass
class GridResult:
    times: tuple
    probes: np.ndarray
    layers: np.ndarray
    values: np.ndarray  # (n_times, n_probes)
    meta: dict

    def rows(self):
        """``(t, x, y_1..y_m, layer, value)`` with t slowest, probes in input order."""
        for it, t in enumerate(self.times):
            for p, probe in enumerate(self.probes):
                yield (t, *probe.tolist(), int(self.layers[p]), float(self.values[it, p]))


def _radial_rule(sc: HeatScenario, t_min: float, reach: float):
    band = sc.initial.spectral_bandlimit()
    top = GAUSS_TAIL_K / math.sqrt(t_min)
    rmax = min(top, band)
    return resolved_rule(0.0, rmax, reach, sc.spec.rho_nodes, sc.spec.finite_nodes)


def _evaluate(sc: HeatScenario, times, probes):
    probes = np.atleast_2d(np.asarray(probes, dtype=float))
    times = np.asarray(times, dtype=float)
    layers = np.asarray(layer_index(sc.medium, probes[:, 0])).reshape(-1)
    if sc.initial.is_zero:
        return np.zeros((times.size, probes.shape[0])), layers, {"rho_nodes": 0, "rho_max": 0.0,
                                                                 "max_imag": 0.0}
    reach = _phase_reach(sc.initial, probes[:, 0], probes[:, 1:])
    rho, w = _radial_rule(sc, float(times.min()), reach)
    F = spectral_values(sc.initial, sc.coupling, probes, rho, sc.spec, reach)
    mode = sc.mode
    kernel = np.exp(-np.outer(times, rho**2)) * (w * rho**mode.exponent)
    vals = mode.constant * (kernel @ F.T)
    meta = {"rho_nodes": int(rho.size), "rho_max": float(rho.max() if rho.size else 0.0),
            "max_imag": float(np.max(np.abs(vals.imag))) if vals.size else 0.0}
    return vals.real, layers, meta


def solve_grid(sc: HeatScenario) -> GridResult:
    """Solution at every (time, probe) pair of the scenario."""
    vals, layers, meta = _evaluate(sc, sc.times, sc.probes)
    meta.update(sc.mode.metadata())
    return GridResult(sc.times, sc.probes, layers, vals, meta)


def solve_point(sc: HeatScenario, t: float, x: float, y) -> float:
    """Solution at one point; ``t > 0`` and ``x`` off the interfaces."""
    if not t > 0:
        raise ValueError("t must be positive")
    probe = np.concatenate([[float(x)], np.atleast_1d(np.asarray(y, dtype=float))])
    vals, _, _ = _evaluate(sc, [t], probe[None, :])
    return float(vals[0, 0])


def reproduce_initial(sc: HeatScenario, x=None, y=None, full_output: bool = False):
    """Limit ``t -> 0`` of the solution by extrapolation over ``0.1 * tau_schedule``.

    With ``x`` and ``y`` omitted every scenario probe is reconstructed.
    """
    if x is None:
        probes = sc.probes
    else:
        probes = np.concatenate([[float(x)], np.atleast_1d(np.asarray(y, dtype=float))])[None, :]
    schedule = tuple(0.1 * tau for tau in sc.spec.tau_schedule)
    vals, _, meta = _evaluate(sc, schedule, probes)
    lookup = dict(zip(schedule, vals))
    res, info = abel_limit(lambda t: lookup[t], schedule, full_output=True)
    res = np.asarray(res, dtype=float)
    info.update(meta)
    info["schedule"] = schedule
    out = float(res[0]) if x is not None else res
    return (out, info) if full_output else out
