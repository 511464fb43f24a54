"""Verification suites behind ``layerheat verify``.

Each suite returns rows ``(suite, case, value, tolerance, status)`` where
``status`` is ``pass``, ``FAIL`` or ``skip``.
"""
from __future__ import annotations

import numpy as np

from .config import ScenarioConfig
from .heat import HeatScenario, reproduce_initial
from .kernels import KernelQuery, closed_form_scale, phi_kj_closed_two_layer, phi_kj_integral
from .media import TwoLayerIdealParams
from .transforms import mirror_field, theorem1_residual

__all__ = ["SUITES", "run_suites", "roundtrip_suite", "theorem1_suite", "kernels_suite"]


def _row(suite, case, value, tol):
    return (suite, case, float(value), float(tol), "pass" if value <= tol else "FAIL")


def _default_probes(cfg: ScenarioConfig, per_layer: int = 5) -> np.ndarray:
    m = cfg.medium.transverse_dim
    rows = []
    for b in cfg.bumps:
        x0, sx = b.center[0], b.sigma[0]
        lo, hi = cfg.medium.bounds(b.layer)
        for k, off in enumerate(np.linspace(-1.0, 1.0, per_layer)):
            x = min(max(x0 + off * sx, lo + 0.25 * sx), hi - 0.25 * sx)
            y = np.asarray(b.center[1:]) + 0.5 * b.sigma[1] * off
            rows.append([x, *y])
    return np.asarray(rows, dtype=float).reshape(-1, 1 + m)


def roundtrip_suite(cfg: ScenarioConfig):
    """Abel-extrapolated ``t -> 0`` reconstruction of the initial data at the probes."""
    probes = cfg.probes if cfg.probes.size else _default_probes(cfg)
    if not cfg.bumps:
        return [("roundtrip", "no initial data", 0.0, 0.0, "skip")]
    sc = HeatScenario(cfg.medium, cfg.coupling, cfg.field(), (1.0,), probes, cfg.mode(), cfg.spec)
    got = reproduce_initial(sc)
    exact = sc.initial(probes[:, 0], probes[:, 1:])
    scale = float(np.max(np.abs(exact))) or 1.0
    tol = 1e-3 if cfg.medium.n_interfaces == 0 else 5e-3
    rows = []
    for p, g, e in zip(probes, got, exact):
        case = "probe(" + ",".join(f"{v:g}" for v in p) + ")"
        rows.append(_row("roundtrip", case, abs(g - e) / scale, tol))
    return rows


def _ideal_two_layer(cfg):
    c = cfg.coupling
    return cfg.medium.n_interfaces == 1 and c is not None and c.kind == "ideal"


def theorem1_suite(cfg: ScenarioConfig, lams=(0.5, 1.0, 2.0)):
    """Transform of ``B f`` against ``-lam^2`` times the transform of ``f`` for a mirror field."""
    med = cfg.medium
    m = med.transverse_dim
    if med.n_interfaces > 1 or (med.n_interfaces == 1 and not _ideal_two_layer(cfg)):
        return [("theorem1", "mirror fields need at most one ideal interface", 0.0, 0.0, "skip")]
    l = med.interfaces[0] if med.n_interfaces else 0.0
    center = (l - 0.8,) + (0.1,) * m
    f = mirror_field(med, cfg.coupling, center, (0.3, 0.4))
    probes = [(l - 0.6, (0.0,) * m), (l + 0.7, (0.3,) * m)]
    rows = []
    for lam in lams:
        for x, y in probes:
            r = theorem1_residual(f, lam, x, y, cfg.coupling, cfg.spec)
            rows.append(_row("theorem1", f"lam={lam:g} x={x:g}", r, 1e-3))
    return rows


def kernels_suite(cfg: ScenarioConfig, rhos=(0.5, 2.0)):
    """Polar-angle kernel against the two-layer closed forms on a 3x3x3 (x, xi, s) grid."""
    med = cfg.medium
    if med.n_interfaces == 0:
        a = med.diffusivity_coeffs[0]
        params = TwoLayerIdealParams(a, a, 1.0)
        xs = xis = (-0.9, 0.2, 1.1)
    elif _ideal_two_layer(cfg):
        a1, a2 = med.diffusivity_coeffs
        params = TwoLayerIdealParams(a1, a2, cfg.coupling.nu)
        l = med.interfaces[0]
        if l != 0.0:
            return [("kernels", "closed forms assume the interface at x = 0", 0.0, 0.0, "skip")]
        xs = (-0.9, -0.3, 0.6)
        xis = (-0.5, 0.4, 1.2)
    else:
        return [("kernels", "closed forms exist for two ideal layers only", 0.0, 0.0, "skip")]
    m = med.transverse_dim
    worst = {}
    for rho in rhos:
        for x in xs:
            for xi in xis:
                for s in (0.0, 0.5, 1.3):
                    k = 1 if x < 0 or med.n_interfaces == 0 else 2
                    j = 1 if xi < 0 or med.n_interfaces == 0 else 2
                    q = KernelQuery(rho, x, xi, s, k, j, m)
                    num = phi_kj_integral(q, med, cfg.coupling, cfg.spec)
                    ref = closed_form_scale(rho, params) * phi_kj_closed_two_layer(q, params, "derived")
                    err = abs(num - ref) / max(abs(ref), 1e-300) if abs(ref) > 1e-8 else abs(num - ref)
                    worst[(rho, k, j)] = max(worst.get((rho, k, j), 0.0), err)
    return [_row("kernels", f"rho={rho:g} phi{k}{j}", err, 1e-6) for (rho, k, j), err in sorted(worst.items())]


SUITES = {"roundtrip": roundtrip_suite, "theorem1": theorem1_suite, "kernels": kernels_suite}


def run_suites(cfg: ScenarioConfig, which: str = "all"):
    names = list(SUITES) if which == "all" else [which]
    rows = []
    for name in names:
        rows.extend(SUITES[name](cfg))
    return rows
