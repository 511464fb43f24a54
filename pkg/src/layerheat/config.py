"""Scenario files (TOML) and their validation.

A complete example::

    [medium]
    interfaces = [0.0]
    a = [1.0, 2.0]
    transverse_dim = 1

    [coupling]
    kind = "ideal"
    nu = 1.5

    [[initial]]
    layer = 1
    center = [-1.0, 0.0]
    sigma = [0.3, 0.4]
    amplitude = 1.0

    [probes]
    x = [-1.5, -0.5, 0.5, 1.5]
    y = [[-0.5, 0.0, 0.5]]

    [solve]
    times = [0.05, 0.1]
"""
from __future__ import annotations

import hashlib
import math
import re
import sys
from dataclasses import dataclass, field

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .media import InterfaceCoupling, LayeredMedium, ideal_contact, validate
from .quadrature import QuadratureSpec

__all__ = ["ConfigError", "ScenarioConfig", "parse_config", "load_config"]


class ConfigError(ValueError):
    """Every problem found in a scenario file, one message per entry."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("\n".join(self.problems))


@dataclass
class ScenarioConfig:
    medium: LayeredMedium
    coupling: InterfaceCoupling | None
    bumps: list
    times: tuple
    probes: np.ndarray
    spec: QuadratureSpec
    mode_kind: str = "calibrated"
    mode_weight: str | None = None
    output: str = "."
    fd: dict = field(default_factory=dict)
    digest: str = ""

    def field(self):
        from .transforms import ScalarField

        return ScalarField.from_bumps(self.medium, self.bumps)

    def mode(self):
        from .transforms import SpectralWeightMode

        m = self.medium.transverse_dim
        if self.mode_kind == "literal":
            return SpectralWeightMode.literal(m, self.mode_weight)
        return SpectralWeightMode.calibrated(m, self.spec)

    def scenario(self):
        from .heat import HeatScenario

        return HeatScenario(self.medium, self.coupling, self.field(), self.times, self.probes, self.mode(),
                            self.spec)


def _line_finder(text: str):
    lines = text.splitlines()

    def find(section: str, key: str | None = None) -> str:
        header = re.compile(r"^\s*\[\[?\s*" + re.escape(section) + r"\s*\]\]?\s*$")
        start = None
        for i, line in enumerate(lines, start=1):
            if header.match(line):
                start = i
                if key is None:
                    return f"line {i}"
            elif start is not None and key is not None:
                if re.match(r"^\s*\[", line):
                    break
                if re.match(r"^\s*" + re.escape(key) + r"\s*=", line):
                    return f"line {i}"
        return f"line {start}" if start is not None else "(missing section)"

    return find


def _floats(value, name, problems, where):
    try:
        arr = [float(v) for v in value]
    except (TypeError, ValueError):
        problems.append(f"{where}: {name} must be a list of numbers")
        return None
    if not all(math.isfinite(v) for v in arr):
        problems.append(f"{where}: {name} must be finite")
        return None
    return arr


_SPEC_KEYS = {"finite_nodes": int, "rho_truncation": float, "rho_nodes": int, "alpha_nodes": int,
              "spatial_nodes": int, "tau_schedule": tuple, "rel_tol": float, "abs_tol": float, "max_panels": int}


def parse_config(text: str) -> ScenarioConfig:
    """Parse and validate a scenario; raises :class:`ConfigError` listing every problem."""
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([f"syntax error: {exc}"]) from None
    where = _line_finder(text)
    problems: list = []

    med = data.get("medium")
    medium = None
    if not isinstance(med, dict):
        problems.append("(missing section): [medium] is required")
    else:
        interfaces = _floats(med.get("interfaces", []), "interfaces", problems, where("medium", "interfaces"))
        if "a" not in med:
            problems.append(f"{where('medium')}: [medium] needs 'a' (one coefficient per layer)")
        a = _floats(med.get("a", []), "a", problems, where("medium", "a"))
        m = med.get("transverse_dim", 1)
        if not isinstance(m, int) or isinstance(m, bool) or m < 1:
            problems.append(f"{where('medium', 'transverse_dim')}: transverse_dim must be an integer >= 1")
            m = None
        if interfaces is not None and a is not None and m is not None:
            medium = LayeredMedium(tuple(interfaces), tuple(a), m)
            for msg in validate(medium):
                problems.append(f"{where('medium')}: {msg}")

    coupling = None
    cp = data.get("coupling")
    if medium is not None and medium.n_interfaces:
        if not isinstance(cp, dict):
            problems.append("(missing section): [coupling] is required when the medium has interfaces")
        else:
            kind = cp.get("kind", "ideal")
            if kind == "ideal":
                if "nu" not in cp:
                    problems.append(f"{where('coupling')}: ideal coupling needs 'nu'")
                else:
                    try:
                        nu = float(cp["nu"])
                        if not nu > 0:
                            raise ValueError
                        coupling = ideal_contact(nu, medium.n_interfaces)
                    except (TypeError, ValueError):
                        problems.append(f"{where('coupling', 'nu')}: nu must be a positive number")
            elif kind == "explicit":
                try:
                    alpha = np.asarray(cp["alpha"], dtype=float).reshape(medium.n_interfaces, 2, 2)
                    beta = np.asarray(cp["beta"], dtype=float).reshape(medium.n_interfaces, 2, 2)
                    coupling = InterfaceCoupling(alpha, beta)
                    for msg in validate(medium, coupling):
                        problems.append(f"{where('coupling')}: {msg}")
                except KeyError as exc:
                    problems.append(f"{where('coupling')}: explicit coupling needs {exc.args[0]!r}")
                except (TypeError, ValueError):
                    problems.append(f"{where('coupling')}: alpha and beta must be {medium.n_interfaces}x2x2 arrays")
            else:
                problems.append(f"{where('coupling', 'kind')}: kind must be 'ideal' or 'explicit'")

    bumps = []
    init = data.get("initial", [])
    if not isinstance(init, list):
        problems.append(f"{where('initial')}: use [[initial]] tables, one per bump")
        init = []
    from .transforms import GaussianBump

    for n, b in enumerate(init, start=1):
        loc = f"{where('initial')} (bump {n})"
        try:
            layer = int(b["layer"])
            center = _floats(b["center"], "center", problems, loc)
            sigma = _floats(b["sigma"], "sigma", problems, loc)
            amp = float(b.get("amplitude", 1.0))
        except KeyError as exc:
            problems.append(f"{loc}: missing {exc.args[0]!r}")
            continue
        except (TypeError, ValueError):
            problems.append(f"{loc}: malformed bump")
            continue
        if center is None or sigma is None or medium is None:
            continue
        if not 1 <= layer <= medium.n_layers:
            problems.append(f"{loc}: layer {layer} does not exist")
            continue
        if len(center) != 1 + medium.transverse_dim:
            problems.append(f"{loc}: center needs {1 + medium.transverse_dim} coordinates")
            continue
        try:
            bumps.append(GaussianBump(layer, tuple(center), tuple(sigma), amp))
        except ValueError as exc:
            problems.append(f"{loc}: {exc}")

    times = ()
    sol = data.get("solve", {})
    if "times" in sol:
        tt = _floats(sol["times"], "times", problems, where("solve", "times"))
        if tt is not None:
            if any(t <= 0 for t in tt):
                problems.append(f"{where('solve', 'times')}: times must be positive")
            times = tuple(tt)

    probes = np.zeros((0, 1 + (medium.transverse_dim if medium else 1)))
    pr = data.get("probes")
    if isinstance(pr, dict) and medium is not None:
        m = medium.transverse_dim
        if "points" in pr:
            try:
                probes = np.asarray(pr["points"], dtype=float).reshape(-1, 1 + m)
            except (TypeError, ValueError):
                problems.append(f"{where('probes', 'points')}: points must be rows of {1 + m} numbers")
        else:
            xs = _floats(pr.get("x", []), "x", problems, where("probes", "x"))
            ys = pr.get("y", [[0.0]] * m)
            if not isinstance(ys, list) or len(ys) != m:
                problems.append(f"{where('probes', 'y')}: y must hold {m} coordinate list(s)")
            elif xs is not None:
                axes = [_floats(v, "y", problems, where("probes", "y")) for v in ys]
                if all(ax is not None for ax in axes):
                    from .heat import probe_grid

                    probes = probe_grid(xs, *axes)
        if probes.size:
            on = np.isin(probes[:, 0], np.asarray(medium.interfaces))
            if np.any(on):
                problems.append(f"{where('probes')}: probe x={probes[on, 0][0]:g} lies on an interface")

    spec = QuadratureSpec()
    q = data.get("quadrature", {})
    if q:
        kw = {}
        for k, v in q.items():
            if k not in _SPEC_KEYS:
                problems.append(f"{where('quadrature', k)}: unknown quadrature key {k!r}")
                continue
            try:
                kw[k] = tuple(float(x) for x in v) if _SPEC_KEYS[k] is tuple else _SPEC_KEYS[k](v)
            except (TypeError, ValueError):
                problems.append(f"{where('quadrature', k)}: bad value for {k}")
        try:
            spec = QuadratureSpec(**kw)
        except ValueError as exc:
            problems.append(f"{where('quadrature')}: {exc}")

    mode = data.get("mode", {})
    mode_kind = mode.get("kind", "calibrated")
    if mode_kind not in ("calibrated", "literal"):
        problems.append(f"{where('mode', 'kind')}: kind must be 'calibrated' or 'literal'")
    weight = mode.get("weight")
    if weight not in (None, "scaled", "unscaled"):
        problems.append(f"{where('mode', 'weight')}: weight must be 'scaled' or 'unscaled'")

    output = str(data.get("output", {}).get("path", "."))
    fd = dict(data.get("fd", {}))

    if problems:
        raise ConfigError(problems)
    digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
    return ScenarioConfig(medium, coupling, bumps, times, probes, spec, mode_kind, weight, output, fd, digest)


def load_config(path) -> ScenarioConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
