"""Command-line front end: dispersion/velocity sweeps, critical widths,
simulation runs and area-theorem evolution, written as CSV or JSON.

Config files are flat UTF-8 text, one ``key = value`` per line.  ``#``
starts a comment (whole line or trailing), blank lines are ignored and
keys accept ``-`` or ``_``.  Command-line flags override config values.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import __version__
from . import dispersion as disp
from . import mbe
from .core import (LineShape, MediumParams, NumericalError, PulseParams, ValidationError, validate,
                   validate_medium)

FMT = "%.12e"
EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 2, 3

UNITS_OF = {
    "x": "omega/omega0", "tau0": "1/omega0", "y": "tau_p/tau*", "K": "omega0/c", "V": "c",
    "exists": "bool", "regime": "-", "tau0_crit": "1/omega0", "in_domain": "bool",
    "position": "c/omega0", "theta_numeric": "rad", "theta_closed_form": "rad",
}

# key -> parser; also the whitelist for config files
KEYS = {
    "nu": float, "s0": int, "lineshape": str, "omega0_tau_star": float,
    "x": float, "tau0": float, "y": float, "eq18_literal": None,
    "variable": str, "start": float, "stop": float, "count": int,
    "theta0": float, "beta": float, "x_max": float, "steps": int,
    "area_pi": float, "n_tau": int, "n_atoms": int, "lengths": float,
    "half_width": float, "snapshot_every": int,
}

DEFAULTS = {
    "nu": 1.0, "s0": -1, "lineshape": "sharp", "x": 1.0, "tau0": 1.0,
    "eq18_literal": False, "count": 101, "steps": 500, "area_pi": 2.0,
    "n_tau": 2048, "n_atoms": 200, "lengths": 10.0, "half_width": 20.0,
    "snapshot_every": 50, "x_max": 10.0, "theta0": math.pi / 2, "beta": 1.0,
}


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValidationError(f"not a boolean: {text!r}")


def _convert(key: str, raw: str):
    kind = KEYS[key]
    try:
        if kind is None:
            return _bool(raw)
        if kind is int:
            return int(raw)
        return kind(raw)
    except ValueError:
        raise ValidationError(f"bad value for {key}: {raw!r}") from None


def read_config(path) -> dict:
    """Parse a flat key = value file."""
    out = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc.strerror}") from None
    for n, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"{path}:{n}: expected key = value")
        key, raw = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in KEYS:
            raise ValidationError(f"{path}:{n}: unknown key {key!r}")
        out[key] = _convert(key, raw)
    return out


def _settings(args) -> dict:
    cfg = dict(DEFAULTS)
    if args.config:
        cfg.update(read_config(args.config))
    for key in KEYS:
        val = getattr(args, key, None)
        if val is not None and val is not False:
            cfg[key] = val
    return cfg


# --------------------------------------------------------------------------
# parameter assembly


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    start: float
    stop: float
    count: int
    medium: MediumParams
    fixed: dict
    output: str | None = None
    fmt: str = "csv"

    def grid(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.count)


def _medium(cfg) -> MediumParams:
    try:
        shape = LineShape(cfg["lineshape"])
    except ValueError:
        raise ValidationError(f"unknown lineshape {cfg['lineshape']!r}") from None
    ts = cfg.get("omega0_tau_star") if shape is LineShape.LORENTZIAN else None
    if shape is LineShape.SHARP and cfg.get("omega0_tau_star") is not None:
        raise ValidationError("omega0_tau_star must be absent for a sharp line")
    return validate_medium(MediumParams(nu=cfg["nu"], s0=cfg["s0"], lineshape=shape, omega0_tau_star=ts))


def _tau0(cfg, medium) -> float:
    if cfg.get("y") is not None:
        if medium.omega0_tau_star is None:
            raise ValidationError("y needs a Lorentzian line with omega0_tau_star")
        return cfg["y"] * medium.omega0_tau_star
    return cfg["tau0"]


def sweep_spec(cfg, default_variable: str, output=None, fmt="csv") -> SweepSpec:
    medium = _medium(cfg)
    var = cfg.get("variable") or default_variable
    if var not in ("x", "tau0", "y"):
        raise ValidationError(f"sweep variable must be x, tau0 or y, not {var!r}")
    if var == "y" and medium.omega0_tau_star is None:
        raise ValidationError("a y sweep needs a Lorentzian line with omega0_tau_star")
    start, stop, count = cfg.get("start"), cfg.get("stop"), cfg["count"]
    if start is None or stop is None:
        raise ValidationError("sweep needs --start and --stop")
    if count < 2:
        raise ValidationError("count must be >= 2")
    if not start < stop:
        raise ValidationError("start must be < stop")
    if not start > 0:
        raise ValidationError(f"{var} must be positive over the sweep")
    fixed = {"x": cfg["x"], "tau0": _tau0(cfg, medium)}
    fixed.pop("tau0" if var in ("tau0", "y") else "x")
    # validate a representative point
    pulse = PulseParams(x=fixed.get("x", start), tau0=fixed.get("tau0", start))
    if var == "y":
        pulse = PulseParams(x=fixed["x"], tau0=start * medium.omega0_tau_star)
    validate(medium, pulse)
    return SweepSpec(var, float(start), float(stop), int(count), medium, fixed, output, fmt)


def _axes(spec: SweepSpec):
    g = spec.grid()
    if spec.variable == "x":
        return g, g, np.full_like(g, spec.fixed["tau0"])
    tau0 = g * spec.medium.omega0_tau_star if spec.variable == "y" else g
    return g, np.full_like(g, spec.fixed["x"]), tau0


# --------------------------------------------------------------------------
# commands (each returns (columns, rows, extra-header dict))


def cmd_dispersion(spec: SweepSpec, literal: bool = False):
    g, x, tau0 = _axes(spec)
    r = disp.solve_grid(spec.medium, x, tau0, literal=literal)
    rows = [[float(v), float(k) if e else None, bool(e)] for v, k, e in zip(g, r["k"], r["exists"])]
    return [spec.variable, "K", "exists"], rows, {}


def cmd_velocity(spec: SweepSpec, literal: bool = False):
    g, x, tau0 = _axes(spec)
    r = disp.solve_grid(spec.medium, x, tau0, literal=literal)
    rows = []
    for v, vel, e in zip(g, r["v"], r["exists"]):
        rows.append([float(v), float(vel) if e else None, disp.regime_of(vel).value if e else None])
    return [spec.variable, "V", "regime"], rows, {}


def cmd_critical(nu: float, x_range: tuple[float, float, int]):
    start, stop, count = x_range
    if count < 2 or not start < stop or not start > 0:
        raise ValidationError("critical needs 0 < start < stop and count >= 2")
    best = disp.minimize_critical_width(nu)
    rows = []
    for x in np.linspace(start, stop, count):
        try:
            rows.append([float(x), disp.critical_width(float(x), nu), True])
        except ValidationError:
            rows.append([float(x), None, False])
    summary = {"x_at_min": best.x_at_min, "tau0_crit_min": best.tau0_crit,
               "domain": list(best.domain)}
    return ["x", "tau0_crit", "in_domain"], rows, {"minimum": summary}


def cmd_area(theta0: float, beta: float, x_max: float, steps: int):
    if not x_max > 0:
        raise ValidationError("x_max must be positive")
    ev = mbe.area_theorem_evolve(theta0, beta, x_max, steps)
    rows = [[float(a), float(b), float(c)] for a, b, c in zip(ev.x, ev.theta_numeric, ev.theta_closed_form)]
    return ["position", "theta_numeric", "theta_closed_form"], rows, {}


def cmd_simulate(cfg, run_dir, fmt="csv") -> dict:
    """Run one soliton propagation; writes snapshots and summary.json into run_dir."""
    medium = _medium(cfg)
    pulse = PulseParams(x=cfg["x"], tau0=_tau0(cfg, medium))
    validate(medium, pulse)
    if cfg["n_tau"] < 16 or cfg["steps"] < 2:
        raise ValidationError("n_tau must be >= 16 and steps >= 2")
    run = mbe.run_soliton(medium, pulse, n_tau=cfg["n_tau"], steps=cfg["steps"],
                          lengths=cfg["lengths"], half_width=cfg["half_width"],
                          area=cfg["area_pi"] * math.pi, n_atoms=cfg["n_atoms"],
                          snapshot_every=cfg["snapshot_every"])
    rec = run.record
    sol = run.solution
    shape = mbe.shape_metrics(run)
    phase = mbe.phase_diagnostics(rec)
    summary = {
        "version": __version__,
        "parameters": rec.params,
        "closed_form": {"K": sol.k_dimless, "V": sol.v_dimless,
                        "regime": sol.regime.value if sol.regime else None},
        "measured_velocity": rec.measured_velocity,
        "characteristic_length": run.length,
        "max_norm_error": rec.max_norm_error,
        "peak_drift": shape["peak_drift"],
        "l2_deviation": shape["l2_deviation"],
        "max_phase_tau": phase["max_phase_tau"],
        "phase_slope": phase["phase_slope"],
        "area_history": [[_round(a), _round(b)] for a, b in rec.area_history],
        "area": [[_round(s.position), _round(s.area)] for s in rec.snapshots],
    }
    _ensure_dir(run_dir)
    if fmt == "csv":
        mbe.write_snapshots(rec, os.path.join(run_dir, "snapshots.csv"), FMT)
    else:
        snaps = [{"position": _round(s.position), "tau": [_round(v) for v in s.tau_grid],
                  "envelope": [_round(v) for v in s.envelope], "phase": [_round(v) for v in s.phase],
                  "sy_avg": [_round(v) for v in s.sy_avg]} for s in rec.snapshots]
        _write_text(os.path.join(run_dir, "snapshots.json"), json.dumps(snaps) + "\n")
    _write_text(os.path.join(run_dir, "summary.json"),
                json.dumps(_rounded(summary), indent=2, sort_keys=True) + "\n")
    return summary


# --------------------------------------------------------------------------
# output


def _round(v):
    """Value as it appears in CSV, so JSON and CSV agree exactly."""
    return float(FMT % v)


def _rounded(obj):
    if isinstance(obj, float):
        return _round(obj) if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _rounded(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_rounded(v) for v in obj]
    return obj


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return FMT % v
    return str(v)


def render(command: str, params: dict, columns, rows, extra, fmt: str) -> str:
    if fmt == "json":
        doc = {"version": __version__, "command": command, "parameters": _rounded(params),
               "columns": [f"{c} ({UNITS_OF[c]})" for c in columns],
               "rows": _rounded(rows), **_rounded(extra)}
        return json.dumps(doc, indent=1, sort_keys=False) + "\n"
    lines = [f"# sitdisp {__version__} {command}",
             "# parameters " + json.dumps(_rounded(params), sort_keys=True)]
    for k, v in extra.items():
        lines.append(f"# {k} " + json.dumps(_rounded(v), sort_keys=True))
    lines.append(",".join(f"{c} ({UNITS_OF[c]})" for c in columns))
    lines += [",".join(_cell(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def parse_csv(text: str):
    """Read back a table written by ``render``: (columns, rows) with None for empty."""
    body = [ln for ln in text.splitlines() if not ln.startswith("#")]
    columns = [c.split(" (")[0] for c in body[0].split(",")]
    rows = []
    for ln in body[1:]:
        row = []
        for c, cell in zip(columns, ln.split(",")):
            if cell == "":
                row.append(None)
            elif UNITS_OF[c] == "bool":
                row.append(cell == "1")
            elif c == "regime":
                row.append(cell)
            else:
                row.append(float(cell))
        rows.append(row)
    return columns, rows


def _ensure_dir(path):
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as exc:
        raise ValidationError(f"cannot create output directory {path}: {exc.strerror}") from None


def _write_text(path, text):
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise ValidationError(f"cannot write output {path}: {exc.strerror}") from None


# --------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", help="output file (directory for simulate); stdout if omitted")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--config", help="flat key = value parameter file")
    common.add_argument("--nu", type=float)
    common.add_argument("--x", type=float)
    common.add_argument("--tau0", type=float)
    common.add_argument("--y", type=float)
    common.add_argument("--omega0-tau-star", dest="omega0_tau_star", type=float)
    common.add_argument("--s0", type=int, choices=(-1, 1))
    common.add_argument("--lineshape", choices=("sharp", "lorentzian"))
    common.add_argument("--eq18-literal", dest="eq18_literal", action="store_true",
                        help="use the compact closed form of the broadened K law")

    sweep = argparse.ArgumentParser(add_help=False)
    sweep.add_argument("--variable", choices=("x", "tau0", "y"))
    sweep.add_argument("--start", type=float)
    sweep.add_argument("--stop", type=float)
    sweep.add_argument("--count", type=int)

    p = argparse.ArgumentParser(prog="sitdisp", description=" ".join(__doc__.split("\n\n")[0].split()))
    p.add_argument("--version", action="version", version=f"sitdisp {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("dispersion", parents=[common, sweep], help="K over a sweep")
    sub.add_parser("velocity", parents=[common, sweep], help="V and regime over a sweep")
    sub.add_parser("critical", parents=[common, sweep], help="stopping width over x")
    sim = sub.add_parser("simulate", parents=[common], help="Maxwell-Bloch soliton run")
    for name, kind in (("steps", int), ("n-tau", int), ("n-atoms", int), ("lengths", float),
                       ("area-pi", float), ("half-width", float), ("snapshot-every", int)):
        sim.add_argument(f"--{name}", dest=name.replace("-", "_"), type=kind)
    area = sub.add_parser("area", parents=[common], help="area-theorem evolution")
    area.add_argument("--theta0", type=float)
    area.add_argument("--beta", type=float)
    area.add_argument("--x-max", dest="x_max", type=float)
    area.add_argument("--steps", type=int)
    return p


def _params(cfg, keys):
    return {k: cfg.get(k) for k in keys}


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _settings(args)
        cmd = args.command
        if cmd == "simulate":
            cmd_simulate(cfg, args.output or "run", args.format)
            return EXIT_OK
        if cmd in ("dispersion", "velocity"):
            spec = sweep_spec(cfg, "x" if cmd == "dispersion" else "tau0", args.output, args.format)
            fn = cmd_dispersion if cmd == "dispersion" else cmd_velocity
            cols, rows, extra = fn(spec, literal=cfg["eq18_literal"])
            params = {**_params(cfg, ("nu", "s0", "lineshape", "omega0_tau_star", "eq18_literal")),
                      **spec.fixed, "variable": spec.variable, "start": spec.start,
                      "stop": spec.stop, "count": spec.count}
        elif cmd == "critical":
            start = 0.5 if cfg.get("start") is None else cfg["start"]
            stop = 2.0 if cfg.get("stop") is None else cfg["stop"]
            if not cfg["nu"] > 0:
                raise ValidationError("nu must be positive")
            cols, rows, extra = cmd_critical(cfg["nu"], (start, stop, cfg["count"]))
            params = {"nu": cfg["nu"], "start": start, "stop": stop, "count": cfg["count"]}
        else:
            steps = cfg["steps"]
            cols, rows, extra = cmd_area(cfg["theta0"], cfg["beta"], cfg["x_max"], steps)
            params = _params(cfg, ("theta0", "beta", "x_max", "steps"))
        text = render(cmd, params, cols, rows, extra, args.format)
        if args.output:
            _write_text(args.output, text)
        else:
            sys.stdout.write(text)
        return EXIT_OK
    except ValidationError as exc:
        return _fail(exc, EXIT_VALIDATION)
    except (NumericalError, ArithmeticError) as exc:
        return _fail(exc, EXIT_NUMERICAL)


def _fail(exc, code) -> int:
    sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc),
                                 "exit_code": code}) + "\n")
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
