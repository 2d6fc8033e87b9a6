"""Command-line front end: run experiment configs, compare CSV trajectories, print t_bound."""

from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import json
import math
import os
import platform
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Sequence

import jsonschema
import numpy as np
import scipy

from . import baseline, evolver, numerics, observables
from .effective_maps import DisorderModel

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_INVALID = 2
EXIT_FEASIBILITY = 3
EXIT_NUMERIC = 4

THREADS_ENV = "DISORDER_AVG_THREADS"
TIME_UNIT = "1/h"

OBSERVABLE_PATTERN = "^(mag|var)_[xyz]$"

CONFIG_SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "disorder-avg experiment",
    "type": "object",
    "required": ["model", "methods", "times"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "model": {
            "type": "object",
            "required": ["N"],
            "additionalProperties": False,
            "properties": {
                "N": {"type": "integer", "minimum": 2},
                "h": {"type": "number"},
                "mean_J": {"type": "number"},
                "sigma": {"type": "number", "minimum": 0},
                "scaled": {"type": "boolean"},
            },
        },
        "initial_state": {"enum": ["X", "Y", "Z"]},
        "methods": {
            "type": "array",
            "minItems": 1,
            "items": {
                "oneOf": [
                    {
                        "type": "object",
                        "required": ["type", "order"],
                        "additionalProperties": False,
                        "properties": {
                            "type": {"const": "short_time"},
                            "order": {"type": "integer", "minimum": 0, "maximum": 3},
                        },
                    },
                    {
                        "type": "object",
                        "required": ["type", "regularization"],
                        "additionalProperties": False,
                        "properties": {
                            "type": {"const": "weak_disorder"},
                            "regularization": {"enum": list(evolver.REGULARIZATIONS)},
                        },
                    },
                    {
                        "type": "object",
                        "required": ["type"],
                        "additionalProperties": False,
                        "properties": {"type": {"const": "sk_exact"}},
                    },
                    {
                        "type": "object",
                        "required": ["type"],
                        "additionalProperties": False,
                        "properties": {
                            "type": {"const": "baseline"},
                            "shots": {"type": "integer", "minimum": 2},
                            "seed": {"type": "integer", "minimum": 0},
                        },
                    },
                ]
            },
        },
        "times": {
            "type": "object",
            "required": ["stop", "count"],
            "additionalProperties": False,
            "properties": {
                "start": {"type": "number", "minimum": 0},
                "stop": {"type": "number", "minimum": 0},
                "count": {"type": "integer", "minimum": 1},
            },
        },
        "observables": {
            "type": "array",
            "minItems": 1,
            "items": {"type": "string", "pattern": OBSERVABLE_PATTERN},
        },
        "output": {"type": "string"},
        "tolerances": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "rtol": {"type": "number", "exclusiveMinimum": 0},
                "atol": {"type": "number", "exclusiveMinimum": 0},
            },
        },
    },
}

DEFAULTS = {
    "name": "experiment",
    "initial_state": "Z",
    "observables": ["mag_z", "var_z"],
    "output": "out",
    "tolerances": {"rtol": 1e-10, "atol": 1e-12},
}
BASELINE_DEFAULTS = {"shots": 1000, "seed": 0}


class ConfigError(ValueError):
    pass


# --- config -------------------------------------------------------------------------


def load_config(path: str | Path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    return raw


def validate_config(raw: dict) -> dict:
    """Schema check, defaults and cross-field rules; returns the resolved config."""
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        lines = []
        for err in errors:
            where = "/".join(str(p) for p in err.absolute_path) or "<root>"
            lines.append(f"{where}: {err.message}")
        raise ConfigError("invalid config\n  " + "\n  ".join(lines))
    cfg = copy.deepcopy(DEFAULTS)
    for key, value in raw.items():
        if key == "tolerances":
            cfg["tolerances"].update(value)
        else:
            cfg[key] = copy.deepcopy(value)
    model = {"h": 1.0, "mean_J": 0.0, "sigma": 0.0, "scaled": True}
    model.update(cfg["model"])
    cfg["model"] = model
    methods = []
    for m in cfg["methods"]:
        if m["type"] == "baseline":
            m = {**BASELINE_DEFAULTS, **m}
        methods.append(m)
    cfg["methods"] = methods
    cfg["times"] = {"start": 0.0, **cfg["times"]}
    if cfg["times"]["stop"] < cfg["times"]["start"]:
        raise ConfigError("times/stop: must not be smaller than times/start")
    if cfg["times"]["count"] > 1 and cfg["times"]["stop"] == cfg["times"]["start"]:
        raise ConfigError("times: a grid with count > 1 needs stop > start")
    for i, m in enumerate(cfg["methods"]):
        if m["type"] == "weak_disorder" and model["mean_J"] != 0.0:
            raise ConfigError(f"methods/{i}: weak_disorder requires model/mean_J = 0")
        if m["type"] == "sk_exact" and model["h"] != 0.0:
            raise ConfigError(f"methods/{i}: sk_exact requires model/h = 0")
    labels = [method_label(m) for m in cfg["methods"]]
    if len(set(labels)) != len(labels):
        raise ConfigError("methods: duplicate entries")
    return cfg


def apply_overrides(cfg: dict, seed: int | None, shots: int | None, out: str | None) -> dict:
    cfg = copy.deepcopy(cfg)
    for m in cfg["methods"]:
        if m["type"] == "baseline":
            if seed is not None:
                m["seed"] = seed
            if shots is not None:
                if shots < 2:
                    raise ConfigError("--shots must be >= 2")
                m["shots"] = shots
    if out is not None:
        cfg["output"] = out
    return cfg


def config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def method_label(m: dict) -> str:
    if m["type"] == "baseline":
        return "baseline"
    return _method(m).label


def _method(m: dict) -> evolver.Method:
    if m["type"] == "short_time":
        return evolver.Method("short_time", order=m["order"])
    if m["type"] == "weak_disorder":
        return evolver.Method("weak_disorder", regularization=m["regularization"])
    return evolver.Method("sk_exact")


def time_grid(cfg: dict) -> np.ndarray:
    t = cfg["times"]
    return np.linspace(t["start"], t["stop"], t["count"])


def columns(cfg: dict) -> list[str]:
    """Raw observables followed by their normalized variants."""
    names = list(dict.fromkeys(cfg["observables"]))
    return names + [f"{n}_norm" for n in names]


def check_feasibility(cfg: dict) -> None:
    N = cfg["model"]["N"]
    for m in cfg["methods"]:
        if m["type"] == "baseline" and N > baseline.MAX_N:
            raise baseline.FeasibilityError(
                f"baseline needs N <= {baseline.MAX_N}, config has N = {N}"
            )


# --- execution ------------------------------------------------------------------------


def _model(cfg: dict) -> DisorderModel:
    return DisorderModel(**cfg["model"])


def run_method(cfg: dict, m: dict) -> tuple[dict[str, np.ndarray], dict[str, np.ndarray], dict]:
    """Returns (values, stderr, provenance) for one method entry."""
    model = _model(cfg)
    times = time_grid(cfg)
    names = columns(cfg)
    axis = cfg["initial_state"]
    if m["type"] == "baseline":
        psi0 = baseline.polarized_vector(model.N, axis)
        est = baseline.monte_carlo_average(model, m["shots"], psi0, times, names, seed=m["seed"])
        return est.mean, est.stderr, est.meta
    rho0 = observables.polarized_state(model.N, axis)
    method = _method(m)
    if method.variant == "short_time":
        tol = cfg["tolerances"]
        traj = evolver.evolve_short_time(model, rho0, method.order, times, tol["rtol"], tol["atol"])
    else:
        traj = evolver.evolve(method, model, rho0, times)
    rows = [observables.evaluate(s, names) for s in traj.states]
    values = {n: np.array([r[n] for r in rows]) for n in names}
    meta = {k: v for k, v in traj.meta.items() if k not in ("model",)}
    return values, {}, meta


def format_float(x: float) -> str:
    """Shortest round-trip representation."""
    return repr(float(x))


def write_csv(path: Path, times, names, values, stderr) -> None:
    header = ["t"] + names + ([f"stderr_{n}" for n in names] if stderr else [])
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i, t in enumerate(times):
            row = [format_float(t)] + [format_float(values[n][i]) for n in names]
            if stderr:
                row += [format_float(stderr[n][i]) for n in names]
            w.writerow(row)


def provenance(cfg: dict, m: dict, meta: dict) -> dict:
    from .evolver import code_version

    return {
        "config_hash": config_hash(cfg),
        "config": cfg,
        "method": m,
        "seed": m.get("seed"),
        "time_unit": TIME_UNIT,
        "versions": {
            "disorder_avg": code_version(),
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "details": _jsonable(meta),
    }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def plan(cfg: dict) -> dict:
    out = Path(cfg["output"])
    times = time_grid(cfg)
    return {
        "model": cfg["model"],
        "initial_state": cfg["initial_state"],
        "times": {"start": times[0], "stop": times[-1], "count": times.size, "unit": TIME_UNIT},
        "columns": columns(cfg),
        "outputs": [str(out / f"{method_label(m)}.csv") for m in cfg["methods"]],
        "methods": cfg["methods"],
        "config_hash": config_hash(cfg),
    }


def execute(cfg: dict) -> list[Path]:
    out = Path(cfg["output"])
    names = columns(cfg)
    times = time_grid(cfg)
    with ThreadPoolExecutor(max_workers=thread_count()) as pool:
        futures = [pool.submit(run_method, cfg, m) for m in cfg["methods"]]
        results = [f.result() for f in futures]
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for m, (values, stderr, meta) in zip(cfg["methods"], results):
        label = method_label(m)
        path = out / f"{label}.csv"
        write_csv(path, times, names, values, stderr)
        sidecar = out / f"{label}.json"
        sidecar.write_text(json.dumps(provenance(cfg, m, meta), indent=2, sort_keys=True) + "\n")
        written.append(path)
    return written


# --- compare ---------------------------------------------------------------------------


class GridMismatch(ValueError):
    pass


def read_csv(path: str | Path) -> tuple[list[str], dict[str, np.ndarray]]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][0] != "t":
        raise GridMismatch(f"{path}: missing header")
    header = rows[0]
    data = np.array([[float(x) for x in r] for r in rows[1:]], dtype=float).reshape(-1, len(header))
    return header, {name: data[:, i] for i, name in enumerate(header)}


def compare(
    path_a: str | Path,
    path_b: str | Path,
    threshold: float = 1.0,
    tolerance: float = math.inf,
    until: float | None = None,
    zero_floor: float = 1e-9,
) -> dict:
    """Deviation of A from reference B per observable column.

    ``t_delta`` is the first time at which the deviation of ``mag_*`` exceeds
    ``zero_floor`` and is at least ``threshold`` times the reference ``var_*``
    of the same axis. The floor keeps rounding noise at t = 0, where both
    the deviation and the variance vanish, from counting. A file
    passes when no such time exists and every max deviation is within
    ``tolerance``.
    """
    head_a, a = read_csv(path_a)
    head_b, b = read_csv(path_b)
    obs_a = [h for h in head_a[1:] if not h.startswith("stderr_")]
    obs_b = [h for h in head_b[1:] if not h.startswith("stderr_")]
    if obs_a != obs_b:
        raise GridMismatch(f"observable headers differ: {obs_a} vs {obs_b}")
    ta, tb = a["t"], b["t"]
    if ta.shape != tb.shape or not np.allclose(ta, tb, rtol=1e-12, atol=1e-12):
        raise GridMismatch("time grids differ")
    mask = np.ones_like(ta, dtype=bool) if until is None else ta <= until + 1e-12
    report: dict[str, Any] = {"a": str(path_a), "b": str(path_b), "threshold": threshold, "observables": {}}
    passed = True
    for name in obs_a:
        dev = np.abs(a[name] - b[name])[mask]
        entry: dict[str, Any] = {"max_deviation": float(dev.max(initial=0.0))}
        se = b.get(f"stderr_{name}")
        if se is not None:
            with np.errstate(divide="ignore", invalid="ignore"):
                z = np.where(se[mask] > 0, dev / se[mask], np.where(dev > 0, np.inf, 0.0))
            entry["max_z_score"] = float(z.max(initial=0.0))
        kind, _, rest = name.partition("_")
        if kind == "mag":
            var_name = "var_" + rest
            if var_name in b:
                var = np.abs(b[var_name][mask])
                hit = np.nonzero((dev > zero_floor) & (dev >= threshold * var))[0]
                entry["t_delta"] = float(ta[mask][hit[0]]) if hit.size else None
                if hit.size:
                    passed = False
        if entry["max_deviation"] > tolerance:
            passed = False
        report["observables"][name] = entry
    report["pass"] = passed
    return report


# --- entry point --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="disorder-avg",
        description="Disorder-averaged dynamics of the random transverse-field Ising model.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run an experiment config")
    r.add_argument("config")
    r.add_argument("--seed", type=int, help="override every baseline seed")
    r.add_argument("--shots", type=int, help="override every baseline shot count")
    r.add_argument("--out", help="output directory")
    r.add_argument("--dry-run", action="store_true", help="print the resolved plan only")

    c = sub.add_parser("compare", help="compare trajectory A against reference B")
    c.add_argument("a")
    c.add_argument("b")
    c.add_argument("--threshold", type=float, default=1.0, help="t_delta fires at deviation >= threshold * variance")
    c.add_argument("--tolerance", type=float, default=math.inf, help="max allowed deviation")
    c.add_argument("--until", type=float, help="ignore times after this")
    c.add_argument("--report", help="also write the JSON report here")

    t = sub.add_parser("tbound", help="print the short-time validity estimate")
    t.add_argument("--N", type=int, required=True)
    t.add_argument("--sigma", type=float, required=True)

    sub.add_parser("schema", help="print the config JSON schema")
    return p


def _err(msg: str) -> None:
    print(f"disorder-avg: {msg}", file=sys.stderr)


def cmd_run(args) -> int:
    try:
        cfg = validate_config(load_config(args.config))
        cfg = apply_overrides(cfg, args.seed, args.shots, args.out)
        check_feasibility(cfg)
    except ConfigError as exc:
        _err(str(exc))
        return EXIT_INVALID
    except baseline.FeasibilityError as exc:
        _err(f"infeasible: {exc}")
        return EXIT_FEASIBILITY
    if args.dry_run:
        print(json.dumps(_jsonable(plan(cfg)), indent=2))
        return EXIT_OK
    try:
        written = execute(cfg)
    except baseline.FeasibilityError as exc:
        _err(f"infeasible: {exc}")
        return EXIT_FEASIBILITY
    except numerics.StiffnessError as exc:
        _err(f"integrator failure: {exc}")
        return EXIT_NUMERIC
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        _err(f"numeric failure: {type(exc).__name__}: {exc}")
        return EXIT_NUMERIC
    for path in written:
        print(path)
    return EXIT_OK


def cmd_compare(args) -> int:
    try:
        report = compare(args.a, args.b, args.threshold, args.tolerance, args.until)
    except (GridMismatch, OSError, ValueError) as exc:
        _err(str(exc))
        return EXIT_INVALID
    text = json.dumps(report, indent=2)
    print(text)
    if args.report:
        Path(args.report).write_text(text + "\n")
    return EXIT_OK if report["pass"] else EXIT_FAIL


def cmd_tbound(args) -> int:
    try:
        value = evolver.t_bound(N=args.N, sigma=args.sigma)
    except ValueError as exc:
        _err(str(exc))
        return EXIT_INVALID
    print(format_float(value))
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return cmd_run(args)
    if args.command == "compare":
        return cmd_compare(args)
    if args.command == "tbound":
        return cmd_tbound(args)
    print(json.dumps(CONFIG_SCHEMA, indent=2))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
