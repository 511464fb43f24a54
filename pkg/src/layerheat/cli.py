"""``layerheat`` command line: solve, verify, compare and kernels.

Exit codes: 0 success, 1 usage error, 2 invalid scenario, 3 a numerical
tolerance was not met.
"""
from __future__ import annotations

import argparse
import csv
import os
import platform
import sys

import numpy as np
import scipy

from . import __version__
from .config import ConfigError, ScenarioConfig, load_config
from .heat import ScenarioError, solve_grid
from .transforms import CalibrationError

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_TOLERANCE = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _num(v: float) -> str:
    return f"{v:.12e}"


def _header(cfg: ScenarioConfig, command: str, extra: dict | None = None) -> list:
    spec = cfg.spec
    meta = {
        "tool": f"layerheat {__version__}",
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "command": command,
        "config_sha256": cfg.digest,
        "medium": f"interfaces={list(cfg.medium.interfaces)} a={list(cfg.medium.diffusivity_coeffs)} "
                  f"m={cfg.medium.transverse_dim}",
        "coupling": "none" if cfg.coupling is None else (
            f"ideal nu={cfg.coupling.nu:g}" if cfg.coupling.kind == "ideal" else "explicit"),
        "quadrature": " ".join(f"{k}={getattr(spec, k)}" for k in
                               ("finite_nodes", "rho_truncation", "rho_nodes", "alpha_nodes", "spatial_nodes",
                                "rel_tol", "abs_tol", "max_panels")),
        "tau_schedule": " ".join(f"{t:g}" for t in spec.tau_schedule),
    }
    meta.update(extra or {})
    return [f"# {k}: {v}" for k, v in meta.items()]


def _write(path: str, header: list, columns: list, rows) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for line in header:
            fh.write(line + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_num(v) if isinstance(v, float) else v for v in r])


def cmd_solve(cfg: ScenarioConfig, args) -> int:
    if not cfg.times:
        raise ConfigError(["[solve] times is required for solve"])
    if not cfg.probes.size:
        raise ConfigError(["[probes] is required for solve"])
    sc = cfg.scenario()
    res = solve_grid(sc)
    m = cfg.medium.transverse_dim
    cols = ["t", "x"] + [f"y{i + 1}" for i in range(m)] + ["layer", "value", "mode"]
    rows = [r + (sc.mode.kind,) for r in res.rows()]
    out = os.path.join(args.out or cfg.output, "solution.csv")
    extra = dict(sc.mode.metadata())
    extra["rho_nodes"] = res.meta["rho_nodes"]
    extra["rho_max"] = f"{res.meta['rho_max']:.6g}"
    _write(out, _header(cfg, "solve", extra), cols, rows)
    print(f"wrote {len(rows)} rows to {out}")
    return EXIT_OK


def cmd_verify(cfg: ScenarioConfig, args) -> int:
    from .suites import run_suites
    from .transforms import calibrate_weight

    rows = run_suites(cfg, args.suite)
    extra = {"suite": args.suite}
    if cfg.mode_kind == "calibrated":
        for i, line in enumerate(calibrate_weight(cfg.medium.transverse_dim, cfg.spec).lines()):
            extra[f"calibration_{i}"] = line.strip()
    out = os.path.join(args.out or cfg.output, "verify.csv")
    _write(out, _header(cfg, "verify", extra), ["suite", "case", "value", "tolerance", "status"], rows)
    failed = [r for r in rows if r[4] == "FAIL"]
    for r in rows:
        print(f"{r[4]:4s}  {r[0]:9s} {r[1]:28s} {r[2]:.3e} (tol {r[3]:.0e})")
    print(f"{len(rows) - len(failed)}/{len(rows)} checks passed; report in {out}")
    return EXIT_TOLERANCE if failed else EXIT_OK


def cmd_compare(cfg: ScenarioConfig, args) -> int:
    from .fd import FdGrid, compare, fd_solve

    if not cfg.times or not cfg.probes.size:
        raise ConfigError(["compare needs [solve] times and [probes]"])
    if cfg.medium.transverse_dim not in (1, 2):
        raise ConfigError(["compare supports transverse_dim 1 or 2"])
    if cfg.medium.n_interfaces and cfg.coupling.kind != "ideal":
        raise ConfigError(["compare supports ideal coupling only"])
    sc = cfg.scenario()
    res = solve_grid(sc)
    hx = args.fd_h or float(cfg.fd.get("hx", 0.01))
    dt = args.fd_dt or float(cfg.fd.get("dt", hx / 4))
    tol = float(cfg.fd.get("tolerance", 1e-2))
    f = sc.initial
    xs = [b.center[0] for b in cfg.bumps] or [0.0]
    ys = [b.center[1:] for b in cfg.bumps] or [(0.0,) * cfg.medium.transverse_dim]
    sig = max([max(b.sigma) for b in cfg.bumps] or [1.0])
    extent = (min(xs), max(xs), np.min(ys, axis=0), np.max(ys, axis=0), sig)
    grid = FdGrid.auto(cfg.medium, extent, hx, dt, max(cfg.times))
    fdr = fd_solve(cfg.medium, cfg.coupling, lambda X, Y: f(X, Y), grid, cfg.times)
    m = cfg.medium.transverse_dim
    rows, worst = [], 0.0
    summary = []
    for it, t in enumerate(sc.times):
        fdv = fdr.sample(sc.probes, it)
        rep = compare(res.values[it], fdv, res.layers)
        worst = max(worst, rep.l2_rel)
        summary.append(f"t={t:g}: " + " | ".join(rep.lines()))
        for p, probe in enumerate(sc.probes):
            rows.append((t, *probe.tolist(), int(res.layers[p]), float(res.values[it, p]), float(fdv[p]),
                         float(res.values[it, p] - fdv[p])))
    cols = ["t", "x"] + [f"y{i + 1}" for i in range(m)] + ["layer", "spectral", "fd", "difference"]
    extra = {"fd_hx": f"{hx:g}", "fd_dt": f"{dt:g}", "fd_boundary_max": f"{fdr.boundary_max:.3e}",
             "tolerance_l2": f"{tol:g}"}
    extra.update({f"summary_{i}": s for i, s in enumerate(summary)})
    out = os.path.join(args.out or cfg.output, "compare.csv")
    _write(out, _header(cfg, "compare", extra), cols, rows)
    for s in summary:
        print(s)
    print(f"worst relative L2 {worst:.3e} (tolerance {tol:g}); table in {out}")
    return EXIT_OK if worst <= tol else EXIT_TOLERANCE


def parse_grid(text: str) -> dict:
    """``"rho=0.5,2;x=-1,0.5;xi=-0.5;s=0,1"`` into float lists."""
    out = {}
    for part in filter(None, (p.strip() for p in text.split(";"))):
        if "=" not in part:
            raise ValueError(f"grid entry {part!r} is not key=values")
        key, vals = part.split("=", 1)
        key = key.strip()
        if key not in ("rho", "x", "xi", "s"):
            raise ValueError(f"unknown grid key {key!r}")
        out[key] = [float(v) for v in vals.split(",") if v.strip()]
    missing = {"rho", "x", "xi", "s"} - set(out)
    if missing:
        raise ValueError("grid needs " + ", ".join(sorted(missing)))
    return out


def cmd_kernels(cfg: ScenarioConfig, args) -> int:
    from .kernels import kernel_table

    try:
        grid = parse_grid(args.grid)
    except ValueError as exc:
        raise ConfigError([f"--grid: {exc}"]) from None
    rows = kernel_table(cfg.medium, cfg.coupling, grid["rho"], grid["x"], grid["xi"], grid["s"], cfg.spec)
    out = os.path.join(args.out or cfg.output, "kernels.csv")
    _write(out, _header(cfg, "kernels", {"grid": args.grid}),
           ["rho", "x", "xi", "s", "k", "j", "re", "im"], rows)
    print(f"wrote {len(rows)} kernel values to {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="layerheat", description="Heat conduction in layered media by integral transforms")
    p.add_argument("--version", action="version", version=f"layerheat {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    s = sub.add_parser("solve", help="evaluate the solution on the probe grid")
    s.add_argument("--config", required=True)
    s.add_argument("--out", help="output directory (default: [output] path)")
    v = sub.add_parser("verify", help="round-trip, transform identity and kernel suites")
    v.add_argument("--config", required=True)
    v.add_argument("--suite", choices=["all", "roundtrip", "theorem1", "kernels"], default="all")
    v.add_argument("--out")
    c = sub.add_parser("compare", help="spectral solution against the finite-difference oracle")
    c.add_argument("--config", required=True)
    c.add_argument("--fd-h", type=float, dest="fd_h")
    c.add_argument("--fd-dt", type=float, dest="fd_dt")
    c.add_argument("--out")
    k = sub.add_parser("kernels", help="tabulate phi_kj on a grid")
    k.add_argument("--config", required=True)
    k.add_argument("--grid", required=True, help='e.g. "rho=0.5,2;x=-1,0.5;xi=-0.5,1;s=0,0.5"')
    k.add_argument("--out")
    return p


COMMANDS = {"solve": cmd_solve, "verify": cmd_verify, "compare": cmd_compare, "kernels": cmd_kernels}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        return COMMANDS[args.command](cfg, args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, ScenarioError) as exc:
        print("invalid scenario:", file=sys.stderr)
        for msg in getattr(exc, "problems", [str(exc)]):
            print(f"  {msg}", file=sys.stderr)
        return EXIT_INVALID
    except ValueError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ArithmeticError, CalibrationError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_TOLERANCE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
