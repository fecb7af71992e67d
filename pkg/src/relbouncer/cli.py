"""Command-line front end: ``relbouncer <command> --config FILE [--out DIR]``.

Configs are INI files with a ``[model]`` section plus one section per
command. Unknown sections or keys are rejected. Exit code 0 means every
requested computation succeeded; 2 means some items failed (details in the
JSON output); 1 flags a configuration or usage error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from . import lagrangian as lag
from .core import K_exact, K_first_order, K_nonrel, ModelParams, PhaseState, regime
from .errors import ConvergenceError, DomainError
from .quantum import (
    DEFAULT_V0_FRACTION,
    VelocityGrid,
    EigenSolution,
    default_scan_points,
    eigenfunction_position,
    evolve,
    gaussian_packet,
    gram_matrix,
    phi_E,
    project,
    scan_spectrum,
    superpose,
    wall_diagnostic,
)
from .trajectories import IntegratorConfig, conservation_report, integrate, zero_velocity_crossings

log = logging.getLogger("relbouncer")

EXIT_OK, EXIT_CONFIG, EXIT_PARTIAL = 0, 1, 2
REQUIRED = object()


class ConfigError(ValueError):
    pass


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _floats(text: str) -> list[float]:
    return [float(s) for s in text.replace(",", " ").split()]


SCHEMA: dict[str, dict[str, tuple[Any, Any]]] = {
    "model": {
        "m": (float, REQUIRED), "f": (float, REQUIRED), "beta": (float, 0.0),
        "c": (float, REQUIRED), "hbar": (float, REQUIRED),
        "eps_c": (float, 1e-9), "tol_regime": (float, 1e-12),
    },
    "constant": {
        "x_min": (float, 0.0), "x_max": (float, 0.0), "n_x": (int, 1),
        "v_min": (float, REQUIRED), "v_max": (float, REQUIRED), "n_v": (int, REQUIRED),
    },
    "trajectory": {
        "x0": (float, 0.0), "v0": (float, REQUIRED),
        "dt_init": (float, 1e-3), "rel_tol": (float, 1e-9), "abs_tol": (float, 1e-12),
        "t_max": (float, 10.0), "conservation_tol": (float, 1e-6),
        "max_steps": (int, 1_000_000), "clamp": (_bool, True),
    },
    "spectrum": {
        "e_min": (float, REQUIRED), "e_max": (float, REQUIRED), "n_scan": (int, None),
        "v0": (float, None), "n_points": (int, 2001), "tol_e": (float, None),
        "oversample": (int, 8), "threshold": (float, None), "sensitivity": (_bool, False),
    },
    "evolve": {
        "spectrum_file": (str, None), "packet": (str, "modes"), "mode_weights": (_floats, None),
        "center": (float, 0.0), "width": (float, 0.1), "kick": (float, 0.0),
        "t_min": (float, 0.0), "t_max": (float, REQUIRED), "n_times": (int, 100),
        "v0": (float, None), "n_points": (int, 2001), "v_stride": (int, 1),
        "x_min": (float, None), "x_max": (float, None), "n_x": (int, 0),
    },
    "lagrangian": {
        "v_min": (float, REQUIRED), "v_max": (float, REQUIRED), "n_v": (int, REQUIRED),
        "mode": (str, lag.CORRECTED),
    },
}

NATURAL = {"m": 1.0, "c": 1.0, "hbar": 1.0}


@dataclass
class RunConfig:
    model: ModelParams
    blocks: dict[str, dict[str, Any]]
    source: Path | None = None

    def block(self, name: str) -> dict[str, Any] | None:
        return self.blocks.get(name)


def _parse_section(name: str, items: dict[str, str], natural: bool) -> dict[str, Any]:
    schema = SCHEMA[name]
    unknown = sorted(set(items) - set(schema))
    if unknown:
        raise ConfigError(f"[{name}] unknown keys: {', '.join(unknown)}")
    out = {}
    for key, (conv, default) in schema.items():
        if key in items:
            try:
                out[key] = conv(items[key])
            except ValueError as exc:
                raise ConfigError(f"[{name}] {key}: {exc}") from None
        elif name == "model" and natural and key in NATURAL:
            out[key] = NATURAL[key]
        elif default is REQUIRED:
            raise ConfigError(f"[{name}] missing required key {key!r}")
        else:
            out[key] = default
    if name == "model" and natural:
        for key, val in NATURAL.items():
            if out[key] != val:
                raise ConfigError(f"--natural-units conflicts with [model] {key} = {out[key]}")
    return out


def load_config(path: str | Path | None, natural_units: bool = False) -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str.lower
    if path is not None:
        path = Path(path)
        try:
            with open(path, encoding="utf-8") as fh:
                parser.read_file(fh)
        except (OSError, configparser.Error) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
    unknown = sorted(set(parser.sections()) - set(SCHEMA))
    if unknown:
        raise ConfigError(f"unknown sections: {', '.join(unknown)}")
    if not parser.has_section("model") and not natural_units:
        raise ConfigError("missing [model] section")
    model_items = dict(parser.items("model")) if parser.has_section("model") else {}
    if natural_units and "f" not in model_items:
        model_items["f"] = "1.0"
    model = _parse_section("model", model_items, natural_units)
    try:
        params = ModelParams(**model)
    except ValueError as exc:
        raise ConfigError(f"[model] {exc}") from None
    blocks = {s: _parse_section(s, dict(parser.items(s)), natural_units)
              for s in parser.sections() if s != "model"}
    return RunConfig(params, blocks, path)


# --- output helpers -------------------------------------------------------


def _fmt(val) -> str:
    if isinstance(val, (bool, np.bool_)):
        return str(int(val))
    if isinstance(val, (float, np.floating)):
        return format(float(val), ".17g")
    return str(val)


def write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def write_json(path: Path, obj) -> None:
    def default(o):
        if isinstance(o, np.generic):
            return o.item()
        raise TypeError(f"not serializable: {type(o)}")

    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, default=default, allow_nan=True)
        fh.write("\n")


def _need(cfg: RunConfig, name: str) -> dict[str, Any]:
    blk = cfg.block(name)
    if blk is None:
        raise ConfigError(f"missing [{name}] section")
    return blk


def _linspace(lo, hi, n, what):
    if n < 1:
        raise ConfigError(f"{what}: need at least one point")
    return np.linspace(lo, hi, n)


# --- commands -------------------------------------------------------------


def cmd_constant(cfg: RunConfig, out: Path) -> int:
    blk = _need(cfg, "constant")
    p = cfg.model
    xs = _linspace(blk["x_min"], blk["x_max"], blk["n_x"], "constant x grid")
    vs = _linspace(blk["v_min"], blk["v_max"], blk["n_v"], "constant v grid")
    reg = regime(p).value
    rows, errors = [], []
    for x in xs:
        for v in vs:
            vals = []
            for fn in (K_exact, K_first_order, K_nonrel):
                try:
                    vals.append(float(fn(x, v, p)))
                except DomainError as exc:
                    vals.append(float("nan"))
                    errors.append({"x": float(x), "v": float(v), "column": fn.__name__, "error": str(exc)})
            rows.append([x, v, reg, *vals])
    write_csv(out / "constant.csv", ["x", "v", "regime", "K_exact", "K_first_order", "K_nonrel"], rows)
    write_json(out / "constant.json", {"rows": len(rows), "errors": errors})
    log.info("constant: %d rows, %d domain errors", len(rows), len(errors))
    return EXIT_OK


def cmd_trajectory(cfg: RunConfig, out: Path) -> int:
    blk = _need(cfg, "trajectory")
    p = cfg.model
    try:
        icfg = IntegratorConfig(**{k: blk[k] for k in
                                   ("dt_init", "rel_tol", "abs_tol", "t_max", "conservation_tol", "max_steps", "clamp")})
    except ValueError as exc:
        raise ConfigError(f"[trajectory] {exc}") from None
    try:
        traj = integrate(PhaseState(blk["x0"], blk["v0"]), icfg, p)
    except (ConvergenceError, DomainError) as exc:
        write_json(out / "trajectory.json", {"error": type(exc).__name__, "message": str(exc)})
        log.error("trajectory failed: %s", exc)
        return EXIT_PARTIAL
    jumps = set(traj.jump_marks)
    write_csv(out / "trajectory.csv", ["t", "x", "v", "K", "jump_flag"],
              ([t, x, v, k, i in jumps] for i, (t, x, v, k) in enumerate(zip(traj.t, traj.x, traj.v, traj.k_values))))
    report = conservation_report(traj).to_dict()
    report["n_samples"] = len(traj)
    report["turnarounds"] = [{"t": c.t, "x": c.x, "K": c.k} for c in zero_velocity_crossings(traj, p)]
    write_json(out / "trajectory.json", report)
    log.info("trajectory: %d samples, max drift %.3g", len(traj), report["max_rel_drift"])
    return EXIT_OK


def _spectrum_grid(blk, p: ModelParams) -> VelocityGrid:
    v0 = blk["v0"] if blk["v0"] is not None else DEFAULT_V0_FRACTION * p.c
    try:
        grid = VelocityGrid(v0, blk["n_points"])
        grid.check(p)
    except ValueError as exc:
        raise ConfigError(f"velocity grid: {exc}") from None
    return grid


def solve_spectrum_block(blk, p: ModelParams, grid: VelocityGrid):
    """Run find_spectrum for a [spectrum] block; returns (solutions, failures, scan energies, F)."""
    e_min, e_max = blk["e_min"], blk["e_max"]
    if e_min > e_max:
        raise ConfigError("[spectrum] e_min > e_max")
    if e_min == e_max:
        return [], [], np.zeros(0), np.zeros(0, dtype=complex)
    n_scan = blk["n_scan"] or default_scan_points(e_min, e_max, p)
    if n_scan < 2:
        raise ConfigError("[spectrum] n_scan must be >= 2")
    failures: list = []
    sols, energies, F = scan_spectrum(e_min, e_max, n_scan, grid, p, tol_E=blk["tol_e"],
                                      oversample=blk["oversample"], threshold=blk["threshold"],
                                      sensitivity=blk["sensitivity"], failures=failures)
    return sols, failures, energies, F


def cmd_spectrum(cfg: RunConfig, out: Path) -> int:
    blk = _need(cfg, "spectrum")
    p = cfg.model
    grid = _spectrum_grid(blk, p)
    sols, failures, energies, F = solve_spectrum_block(blk, p, grid)
    records = [s.to_dict() for s in sols] + [f.to_dict() for f in failures]
    write_json(out / "spectrum.json", records)
    write_csv(out / "spectrum_residual.csv", ["E", "ReF", "ImF", "absF"],
              ([e, f.real, f.imag, abs(f)] for e, f in zip(energies, F)))
    log.info("spectrum: %d eigenvalues, %d failures", len(sols), len(failures))
    return EXIT_PARTIAL if failures else EXIT_OK


def _basis_from_file(path: Path, grid: VelocityGrid, p: ModelParams) -> list[EigenSolution]:
    try:
        records = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read spectrum file {path}: {exc}") from None
    if not isinstance(records, list):
        raise ConfigError("spectrum file must hold a JSON array")
    basis = []
    for rec in records:
        if "E" not in rec:
            continue
        E = float(rec["E"])
        basis.append(EigenSolution(int(rec.get("n", len(basis) + 1)), E, float(rec.get("residual", 0.0)),
                                   phi_E(grid.nodes, E, grid.v0, p), grid))
    return basis


def cmd_evolve(cfg: RunConfig, out: Path) -> int:
    blk = _need(cfg, "evolve")
    p = cfg.model
    grid = _spectrum_grid(blk, p)
    failures: list = []
    if blk["spectrum_file"]:
        sf = Path(blk["spectrum_file"])
        if not sf.is_absolute() and cfg.source is not None:
            sf = cfg.source.parent / sf
        basis = _basis_from_file(sf, grid, p)
    elif cfg.block("spectrum") is not None:
        sblk = dict(cfg.block("spectrum"))
        sblk["v0"], sblk["n_points"] = grid.v0, grid.n_points
        basis, failures, _, _ = solve_spectrum_block(sblk, p, grid)
    else:
        raise ConfigError("[evolve] needs spectrum_file or a [spectrum] section")
    if not basis:
        raise ConfigError("[evolve] spectrum input holds no eigenvalues")

    if blk["packet"] == "modes":
        weights = blk["mode_weights"] or [1.0] * len(basis)
        if len(weights) > len(basis):
            raise ConfigError(f"[evolve] {len(weights)} mode weights for {len(basis)} eigenvalues")
        basis = basis[: len(weights)]
        raw = superpose(basis, weights, normalize=False)
        packet = raw.normalized()
        # the modes are not orthogonal, so the synthesis weights (not the projections) rebuild the packet
        coeffs = np.asarray(weights, dtype=complex) / np.sqrt(raw.norm())
    elif blk["packet"] == "gaussian":
        packet = gaussian_packet(grid, blk["center"], blk["width"], blk["kick"])
        coeffs = project(packet, basis)
    else:
        raise ConfigError(f"[evolve] packet must be 'modes' or 'gaussian', got {blk['packet']!r}")
    projected = project(packet, basis)
    times = _linspace(blk["t_min"], blk["t_max"], blk["n_times"], "evolve times")
    stride = max(1, blk["v_stride"])
    cols = np.arange(0, grid.n_points, stride)
    snaps = [evolve(packet, coeffs, basis, t, p) for t in times]
    norms = [s.norm() for s in snaps]
    write_csv(out / "evolve_v.csv", ["t", "norm"] + [f"rho(v={_fmt(v)})" for v in grid.nodes[cols]],
              ([t, n, *(np.abs(s.amplitudes[cols]) ** 2)] for t, n, s in zip(times, norms, snaps)))
    if blk["n_x"] > 0:
        if blk["x_min"] is None or blk["x_max"] is None:
            raise ConfigError("[evolve] n_x > 0 needs x_min and x_max")
        xs = np.linspace(blk["x_min"], blk["x_max"], blk["n_x"])
        # each mode maps exactly to position space, so the packet is a sum of shifted residual curves
        modes_x = np.array([eigenfunction_position(b.E, xs, grid.v0, p) for b in basis])
        rows = []
        for t in times:
            psi = (coeffs * np.exp(-1j * np.array([b.E for b in basis]) * t / p.hbar)) @ modes_x
            rows.append([t, *(np.abs(psi) ** 2)])
        write_csv(out / "evolve_x.csv", ["t"] + [f"rho(x={_fmt(x)})" for x in xs], rows)
    gram = gram_matrix(basis)
    off = gram - np.diag(np.diag(gram))
    summary = {
        "energies": [b.E for b in basis],
        "coefficients": [{"re": a.real, "im": a.imag} for a in coeffs],
        "projected_coefficients": [{"re": a.real, "im": a.imag} for a in projected],
        "sum_abs_coefficients_sq": float(np.sum(np.abs(coeffs) ** 2)),
        "initial_norm": packet.norm(),
        "norm_min": float(min(norms)), "norm_max": float(max(norms)),
        "gram_max_offdiag": float(np.max(np.abs(off))) if len(basis) > 1 else 0.0,
        "wall": [wall_diagnostic(b, np.linspace(-20 * _airy_len(p), 20 * _airy_len(p), 801), p).to_dict()
                 for b in basis],
        "errors": [f.to_dict() for f in failures],
    }
    write_json(out / "evolve.json", summary)
    log.info("evolve: %d modes, norm in [%.12g, %.12g]", len(basis), min(norms), max(norms))
    return EXIT_PARTIAL if failures else EXIT_OK


def _airy_len(p: ModelParams) -> float:
    return (p.hbar ** 2 / (2.0 * p.m ** 2 * p.f)) ** (1.0 / 3.0)


def cmd_lagrangian(cfg: RunConfig, out: Path) -> int:
    blk = _need(cfg, "lagrangian")
    p = cfg.model
    mode = blk["mode"]
    if mode not in lag.MODES:
        raise ConfigError(f"[lagrangian] mode must be one of {lag.MODES}")
    rows, errors = [], []
    for v in _linspace(blk["v_min"], blk["v_max"], blk["n_v"], "lagrangian v grid"):
        try:
            vals = [lag.B_of_v(v, p, mode), lag.C_of_v(v, p, mode), lag.dB_dv(v, p, mode),
                    lag.legendre_residual(v, p, mode)]
            status = "ok"
        except (DomainError, ConvergenceError) as exc:
            vals = [float("nan")] * 4
            status = "domain_error" if isinstance(exc, DomainError) else "convergence_error"
            errors.append({"v": float(v), "error": str(exc)})
        rows.append([v, *vals, mode, status])
    write_csv(out / "lagrangian.csv", ["v", "B", "C", "dB_dv", "legendre_residual", "mode", "status"], rows)
    write_json(out / "lagrangian.json", {"rows": len(rows), "mode": mode, "errors": errors})
    log.info("lagrangian: %d rows, %d marked", len(rows), len(errors))
    return EXIT_OK


COMMANDS = {
    "constant": cmd_constant,
    "trajectory": cmd_trajectory,
    "spectrum": cmd_spectrum,
    "evolve": cmd_evolve,
    "lagrangian": cmd_lagrangian,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="relbouncer", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, fn in COMMANDS.items():
        sp = sub.add_parser(name, help=fn.__name__.replace("cmd_", ""))
        sp.add_argument("--config", help="INI config file")
        sp.add_argument("--out", default=".", help="output directory (created if missing)")
        sp.add_argument("--natural-units", action="store_true", help="set m = c = hbar = 1")
        sp.add_argument("--quiet", action="store_true", help="only log errors")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.INFO, format="%(message)s")
    out = Path(args.out)
    try:
        cfg = load_config(args.config, args.natural_units)
        out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](cfg, out)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
