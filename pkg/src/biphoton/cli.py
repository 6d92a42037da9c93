"""Command-line front end.

Every command prints (or writes to ``--out``) a JSON envelope
``{"config": {...}, "result": {...}}``. The config block is the fully
resolved run configuration, defaults included; passing it back through
``--config`` reproduces the result byte for byte. Commands that produce
tables write them as CSV to ``--out`` and list the files in the envelope.

Exit codes: 0 success, 64 usage, 65 data/coverage, 74 I/O. Errors are
reported as one JSON object on stderr.
"""
from __future__ import annotations

import argparse
import io
import json
import os
import sys
from contextlib import nullcontext
from pathlib import Path

import numpy as np

from . import __version__
from .beamsplitter import BeamSplitter, joint_amplitude, outcome_probabilities
from .entanglement import entropy_surface, write_surface_csv
from .errors import BiphotonError
from .shaping import HeraldSpec, herald_shape, herald_windowed, optimize_shaping, problem_from_dict
from .waveforms import TimeGrid, shape_from_dict

EX_OK, EX_USAGE, EX_DATAERR, EX_IOERR = 0, 64, 65, 74

GRID_DEFAULTS = {"grid_min": -10.0, "grid_max": 30.0, "grid_points": 2001}

DEFAULTS = {
    "probs": {"shape1": None, "shape2": None, "t_sq": 0.5, **GRID_DEFAULTS},
    "entropy-surface": {
        "outcome": "11",
        "j_min": 0.0,
        "j_max": 1.0,
        "t_sq_min": 0.0,
        "t_sq_max": 1.0,
        "resolution": 101,
        "j_values": None,
        "t_sq_values": None,
    },
    "joint": {"shape1": None, "shape2": None, "t_sq": 0.5, "outcome": "11", **GRID_DEFAULTS},
    "herald": {
        "shape1": None,
        "shape2": None,
        "t_sq": 0.5,
        "outcome": "11",
        "t_dec": 0.0,
        "t_r": 0.0,
        "t_r_sweep": None,
        "target": None,
        **GRID_DEFAULTS,
    },
    "optimize": {"problem": None, "budget": None, "restarts": None, "seed": None},
}
OPTIMIZE_SETTINGS = {"budget": 5000, "restarts": 8, "seed": 0}
REQUIRED = {
    "probs": ("shape1", "shape2"),
    "joint": ("shape1", "shape2"),
    "herald": ("shape1", "shape2"),
    "optimize": ("problem",),
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _json_arg(text: str):
    """Inline JSON or ``@path`` to a JSON file."""
    if text.startswith("@"):
        try:
            text = Path(text[1:]).read_text()
        except OSError as exc:
            raise UsageError(f"cannot read {text[1:]}: {exc}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"invalid JSON: {exc}") from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"expected a comma-separated list of numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="biphoton", description="Two-photon beam-splitter interference, entanglement and heralded shaping.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, grid=True):
        sp.add_argument("--config", help="replay a resolved run config (JSON or @file)")
        sp.add_argument("--out", help="output path")
        sp.add_argument("--format", choices=("json", "csv"), default=None)
        if grid:
            sp.add_argument("--grid-min", type=float)
            sp.add_argument("--grid-max", type=float)
            sp.add_argument("--grid-points", type=int)

    def shapes(sp):
        sp.add_argument("--shape1", help="shape spec for input port 1 (JSON or @file)")
        sp.add_argument("--shape2", help="shape spec for input port 2 (JSON or @file)")
        g = sp.add_mutually_exclusive_group()
        g.add_argument("--t-sq", type=float, help="power transmission t^2")
        g.add_argument("--t", type=float, help="amplitude transmission t")

    sp = sub.add_parser("probs", help="outcome probabilities")
    shapes(sp)
    common(sp)

    sp = sub.add_parser("entropy-surface", help="analytic entropy table over (|J|, t^2)")
    sp.add_argument("--outcome", choices=("11", "20", "02"))
    sp.add_argument("--j-min", type=float)
    sp.add_argument("--j-max", type=float)
    sp.add_argument("--t-sq-min", type=float)
    sp.add_argument("--t-sq-max", type=float)
    sp.add_argument("--resolution", type=int, help="points per axis")
    sp.add_argument("--j-values", help="explicit comma-separated |J| values")
    sp.add_argument("--t-sq-values", help="explicit comma-separated t^2 values")
    common(sp, grid=False)

    sp = sub.add_parser("joint", help="joint temporal amplitude matrix")
    shapes(sp)
    sp.add_argument("--outcome", choices=("11", "20", "02"))
    common(sp)

    sp = sub.add_parser("herald", help="heralded single-photon shape")
    shapes(sp)
    sp.add_argument("--outcome", choices=("11", "20"))
    sp.add_argument("--t-dec", type=float, help="detection time")
    sp.add_argument("--t-r", type=float, help="detector resolution window")
    sp.add_argument("--t-r-sweep", help="comma-separated resolutions; emits a table")
    sp.add_argument("--target", help="target shape spec for the fidelity (JSON or @file)")
    common(sp)

    sp = sub.add_parser("optimize", help="maximize shaping fidelity")
    sp.add_argument("--problem", help="problem JSON or @file")
    sp.add_argument("--budget", type=int)
    sp.add_argument("--restarts", type=int)
    sp.add_argument("--seed", type=int)
    common(sp, grid=False)
    return p


def resolve_config(args: argparse.Namespace) -> dict:
    """Merge defaults, a replayed ``--config`` and explicit flags (in that order)."""
    cmd = args.command
    cfg = dict(DEFAULTS[cmd])
    if args.config:
        loaded = _json_arg(args.config)
        loaded = loaded.get("config", loaded)
        if loaded.get("command", cmd) != cmd:
            raise UsageError(f"config is for command {loaded.get('command')!r}, not {cmd!r}")
        unknown = set(loaded) - set(cfg) - {"command", "format", "out"}
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        cfg.update({k: v for k, v in loaded.items() if k in cfg})
        for key in ("format", "out"):
            if loaded.get(key) is not None:
                cfg[key] = loaded[key]
    for key in cfg:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    if getattr(args, "t", None) is not None:
        cfg["t_sq"] = args.t * args.t
    for key in ("shape1", "shape2", "target", "problem"):
        if isinstance(cfg.get(key), str):
            cfg[key] = _json_arg(cfg[key])
    for key in ("j_values", "t_sq_values", "t_r_sweep"):
        if isinstance(cfg.get(key), str):
            cfg[key] = _float_list(cfg[key])
    for key in REQUIRED.get(cmd, ()):
        if cfg.get(key) is None:
            raise UsageError(f"--{key.replace('_', '-')} is required")
    if cmd == "optimize":
        # precedence: flag or replayed config, then the problem file, then defaults
        for key, default in OPTIMIZE_SETTINGS.items():
            if cfg[key] is None:
                cfg[key] = cfg["problem"].get(key, default) if isinstance(cfg["problem"], dict) else default
    if args.format is not None:
        cfg["format"] = args.format
    if args.out is not None:
        cfg["out"] = args.out
    cfg.setdefault("out", None)
    cfg.setdefault("format", "csv" if cmd in ("entropy-surface", "joint") else "json")
    if "t_sq" in cfg and not 0.0 <= cfg["t_sq"] <= 1.0:
        raise UsageError(f"t_sq must lie in [0, 1], got {cfg['t_sq']}")
    # one fixed key order, so a replayed config echoes byte-identically
    order = [*DEFAULTS[cmd], "format", "out"]
    return {"command": cmd, **{k: cfg[k] for k in order}}


def _grid(cfg) -> TimeGrid:
    try:
        return TimeGrid(cfg["grid_min"], cfg["grid_max"], cfg["grid_points"])
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _shape(spec):
    try:
        return shape_from_dict(spec)
    except (ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"bad shape spec {spec!r}: {exc}") from None


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def run_probs(cfg, out):
    f1, f2 = _shape(cfg["shape1"]), _shape(cfg["shape2"])
    pr = outcome_probabilities(f1, f2, BeamSplitter.from_t_sq(cfg["t_sq"]), _grid(cfg))
    result = {"J_abs": pr.J_abs, "P20": pr.p20, "P11": pr.p11, "P02": pr.p02}
    if cfg["format"] == "csv":
        text = "J_abs,P20,P11,P02\n" + ",".join(_fmt(v) for v in result.values()) + "\n"
        return result, {"csv": text}
    return result, {}


def run_entropy_surface(cfg, out):
    n = cfg["resolution"]
    if n is None or n < 1:
        raise UsageError("--resolution must be >= 1")
    js = cfg["j_values"] if cfg["j_values"] is not None else np.linspace(cfg["j_min"], cfg["j_max"], n).tolist()
    ts = cfg["t_sq_values"] if cfg["t_sq_values"] is not None else np.linspace(cfg["t_sq_min"], cfg["t_sq_max"], n).tolist()
    if any(not 0.0 <= v <= 1.0 for v in list(js) + list(ts)):
        raise UsageError("|J| and t^2 values must lie in [0, 1]")
    rows = entropy_surface(js, ts, cfg["outcome"])
    buf = io.StringIO()
    write_surface_csv(rows, buf)
    degenerate = sum(r.entropy is None for r in rows)
    return {"rows": len(rows), "degenerate_cells": degenerate}, {"csv": buf.getvalue()}


def run_joint(cfg, out):
    if not out:
        raise UsageError("--out is required for joint")
    out = Path(out)
    meta_path = out.with_suffix(".json")
    if meta_path == out:
        raise UsageError("--out must not end in .json; the metadata file takes that name")
    f1, f2 = _shape(cfg["shape1"]), _shape(cfg["shape2"])
    amp = joint_amplitude(f1, f2, BeamSplitter.from_t_sq(cfg["t_sq"]), cfg["outcome"], _grid(cfg))
    amp.write(out, meta_path, extra_meta={"config": cfg})
    return {"outcome": amp.outcome.value, "norm": amp.norm(), "csv": str(out), "metadata": str(meta_path)}, {"written": True}


def run_herald(cfg, out):
    grid = _grid(cfg)
    f1, f2 = _shape(cfg["shape1"]), _shape(cfg["shape2"])
    target = _shape(cfg["target"]) if cfg["target"] is not None else None
    bs = BeamSplitter.from_t_sq(cfg["t_sq"])
    try:
        spec = HeraldSpec(cfg["outcome"], cfg["t_dec"], cfg["t_r"])
    except ValueError as exc:
        raise UsageError(str(exc)) from None

    if cfg["t_r_sweep"] is not None:
        table = []
        for t_r in cfg["t_r_sweep"]:
            if t_r < 0:
                raise UsageError("resolutions must be >= 0")
            r = herald_windowed(f1, f2, bs, HeraldSpec(spec.outcome, spec.t_dec, t_r), grid, target)
            table.append({"t_R": t_r, "success_probability": r.success_probability, "fidelity": r.fidelity})
        result = {"sweep": table}
        if cfg["format"] == "csv":
            lines = ["t_R,success_probability,fidelity"]
            for row in table:
                fid = "" if row["fidelity"] is None else _fmt(row["fidelity"])
                lines.append(f"{_fmt(row['t_R'])},{_fmt(row['success_probability'])},{fid}")
            return result, {"csv": "\n".join(lines) + "\n"}
        return result, {}

    if spec.resolution > 0:
        r = herald_windowed(f1, f2, bs, spec, grid, target)
        result = {
            "success_probability": r.success_probability,
            "fidelity": r.fidelity,
            "ensemble": [{"t": float(t), "weight": w} for t, (w, _) in zip(r.sub_times, r.ensemble)],
        }
        return result, {}

    r = herald_shape(f1, f2, bs, spec, grid, target)
    result = {"success_density": r.success_density, "fidelity": r.fidelity, "shape": r.shape.to_dict()}
    if cfg["format"] == "csv":
        lines = ["tau,re,im"] + [
            f"{_fmt(t)},{_fmt(z.real)},{_fmt(z.imag)}" for t, z in zip(grid.times, r.shape.values)
        ]
        return result, {"csv": "\n".join(lines) + "\n"}
    return result, {}


def run_optimize(cfg, out):
    try:
        problem, settings = problem_from_dict(cfg["problem"])
    except (ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"bad problem: {exc}") from None
    if cfg["budget"] < 2 * cfg["restarts"] or cfg["restarts"] < 1:
        raise UsageError("need --restarts >= 1 and --budget >= 2 * restarts")
    res = optimize_shaping(problem, budget=cfg["budget"], restarts=cfg["restarts"], seed=cfg["seed"])
    return res.to_dict(), {}


COMMANDS = {
    "probs": run_probs,
    "entropy-surface": run_entropy_surface,
    "joint": run_joint,
    "herald": run_herald,
    "optimize": run_optimize,
}


def _fail(code: int, exc: BaseException) -> int:
    err = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    print(json.dumps(err), file=sys.stderr)
    return code


def _thread_limit():
    n = os.environ.get("BIPHOTON_THREADS")
    if not n:
        return nullcontext()
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=max(1, int(n)))


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = resolve_config(args)
        out = cfg["out"]
        with _thread_limit():
            result, extra = COMMANDS[cfg["command"]](cfg, out)
        envelope = {"config": cfg, "result": result}
        if "csv" in extra:
            if out is None:
                raise UsageError("--out is required for CSV output")
            Path(out).write_text(extra["csv"])
            envelope["result"] = {**result, "csv": str(out)}
            print(json.dumps(envelope, indent=2))
        elif out is not None and not extra.get("written"):
            Path(out).write_text(json.dumps(envelope, indent=2) + "\n")
        else:
            print(json.dumps(envelope, indent=2))
        return EX_OK
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except UsageError as exc:
        return _fail(EX_USAGE, exc)
    except BiphotonError as exc:
        return _fail(EX_DATAERR, exc)
    except ValueError as exc:
        return _fail(EX_USAGE, exc)
    except OSError as exc:
        return _fail(EX_IOERR, exc)


if __name__ == "__main__":
    sys.exit(main())
