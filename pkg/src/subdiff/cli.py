"""Command-line front end: ``subdiff solve CONFIG`` and ``subdiff experiment NAME [CONFIG]``.

Configs are flat ``key = value`` files with ``#`` comments. CSV files use
``repr`` floats, so they do not depend on the locale.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import dataclasses
import json
import math
import sys
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from subdiff.adaptive import TimestepPolicy
from subdiff.analytic import make_manufactured, point_source_exact
from subdiff.core import Impulse, ProblemSpec, make_grid
from subdiff.harness import EXPERIMENTS, SNAPSHOT_TIMES, ExperimentResult
from subdiff.scheme import StepLimitError, run

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_SOLVER = 2
EXIT_CRITERIA = 3

_SECTION = "config"


class ConfigError(ValueError):
    pass


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v.strip())


def _optional_int(text: str) -> int | None:
    return None if text.strip().lower() in ("", "none") else int(text)


@dataclass(frozen=True)
class RunConfig:
    problem: str = "point-source"
    gamma: float = 0.5
    k_coeff: float = 1.0
    x_left: float = -10.0
    x_right: float = 10.0
    n_intervals: int = 100
    scheme: str = "implicit"
    policy: str = "adaptive"
    dt_fixed: float = 1.0e-3
    dt_min: float = 1.0e-4
    dt_max: float = 0.02
    curvature_scale: float = 1000.0
    probe_node: int | None = None
    t_end: float = 2.0
    impulse_times: tuple[float, ...] = (0.0, 1.0)
    impulse_weight: float = 1.0
    impulse_location: float = 0.0
    snapshot_times: tuple[float, ...] = SNAPSHOT_TIMES
    seed: int = 0
    out_dir: str = "out"
    # experiment-only knobs
    trials: int | None = None
    refinement_levels: int | None = None
    n_steps: int | None = None

    def policy_obj(self) -> TimestepPolicy:
        return TimestepPolicy(
            kind=self.policy,
            dt_fixed=self.dt_fixed,
            dt_min=self.dt_min,
            dt_max=self.dt_max,
            curvature_scale=self.curvature_scale,
            probe_node=self.probe_node,
        )


_PARSERS = {
    "problem": str,
    "gamma": float,
    "k_coeff": float,
    "x_left": float,
    "x_right": float,
    "n_intervals": int,
    "scheme": str,
    "policy": str,
    "dt_fixed": float,
    "dt_min": float,
    "dt_max": float,
    "curvature_scale": float,
    "probe_node": _optional_int,
    "t_end": float,
    "impulse_times": _floats,
    "impulse_weight": float,
    "impulse_location": float,
    "snapshot_times": _floats,
    "seed": int,
    "out_dir": str,
    "trials": _optional_int,
    "refinement_levels": _optional_int,
    "n_steps": _optional_int,
}


def read_config_values(path: str | Path | None) -> dict[str, Any]:
    """Keys present in the file, converted to their types."""
    if path is None:
        return {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    try:
        parser.read_string(f"[{_SECTION}]\n{text}")
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    values = {}
    for key, raw in parser[_SECTION].items():
        if key not in _PARSERS:
            raise ConfigError(f"unknown config key {key!r}")
        try:
            values[key] = _PARSERS[key](raw)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {raw!r} ({exc})") from exc
    return values


def load_config(path: str | Path | None) -> RunConfig:
    cfg = RunConfig(**read_config_values(path))
    if cfg.problem not in ("point-source", "manufactured"):
        raise ConfigError(f"problem must be 'point-source' or 'manufactured' (got {cfg.problem!r})")
    if cfg.scheme not in ("implicit", "explicit"):
        raise ConfigError(f"scheme must be 'implicit' or 'explicit' (got {cfg.scheme!r})")
    if not cfg.t_end > 0.0:
        raise ConfigError(f"t_end must be > 0 (got {cfg.t_end})")
    if cfg.problem == "manufactured" and cfg.impulse_times:
        raise ConfigError("the manufactured problem takes no impulses; set impulse_times =")
    return cfg


def build_problem(cfg: RunConfig) -> tuple[ProblemSpec, Any]:
    """Problem plus an exact-solution callable ``exact(x, t)`` (left limits)."""
    domain = (cfg.x_left, cfg.x_right)
    if cfg.problem == "manufactured":
        mp = make_manufactured(cfg.gamma, cfg.k_coeff, domain)
        return mp.problem, lambda x, t: float(mp.exact_u(x, t))
    impulses = tuple(Impulse(t, cfg.impulse_location, cfg.impulse_weight) for t in cfg.impulse_times)
    problem = ProblemSpec(cfg.gamma, cfg.k_coeff, domain, impulses=impulses)

    def exact(x, t):
        return point_source_exact(
            x,
            t,
            cfg.gamma,
            cfg.k_coeff,
            injection_times=cfg.impulse_times,
            location=cfg.impulse_location,
            weight=cfg.impulse_weight,
        )

    return problem, exact


def _write_csv(path: Path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _blank_if_nan(value: float):
    return "" if value is None or math.isnan(value) else value


def cmd_solve(config_path: str | Path | None) -> int:
    try:
        cfg = load_config(config_path)
        problem, exact = build_problem(cfg)
        grid = make_grid((cfg.x_left, cfg.x_right), cfg.n_intervals)
        policy = cfg.policy_obj()
        probe = policy.probe_index(grid)
        if not 0 < probe < grid.n_intervals:
            raise ConfigError(f"probe_node {probe} is not interior")
    except (ValueError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        with np.errstate(over="ignore", invalid="ignore"):
            result = run(problem, grid, policy, cfg.t_end, scheme=cfg.scheme)
        times = result.times
        rows = []
        for t_req in cfg.snapshot_times:
            if t_req < 0.0 or t_req > cfg.t_end * (1.0 + 1.0e-12):
                continue
            m = int(np.argmin(np.abs(times - t_req)))
            t_m = float(times[m])
            for j, x in enumerate(grid.nodes.tolist()):
                u = float(result.u_left[m, j])
                ex = exact(x, t_m) if t_m > 0.0 else math.nan
                err = abs(u - ex) if math.isfinite(ex) else math.nan
                rows.append(
                    [t_m, x, u, float(result.v_right[m, j]), _blank_if_nan(ex), _blank_if_nan(err)]
                )
        trace = []
        x_probe = float(grid.nodes[probe])
        for m in range(1, len(times)):
            ex = exact(x_probe, float(times[m]))
            trace.append([float(times[m]), _blank_if_nan(abs(float(result.u_left[m, probe]) - ex))])
    except (ArithmeticError, StepLimitError, np.linalg.LinAlgError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER

    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "solution.csv", ["t", "x", "U", "V", "exact", "abs_error"], rows)
    _write_csv(
        out / "mesh.csv",
        ["m", "t_m", "dt_m"],
        ([m, float(t), float(t - times[m - 1]) if m else ""] for m, t in enumerate(times)),
    )
    _write_csv(out / "error_trace.csv", ["t", "abs_error_at_probe"], trace)
    summary = {
        "steps": result.summary.steps,
        "wall_ms": 1.0e3 * result.summary.wall_time,
        "dt_min_used": result.summary.dt_min_used,
        "dt_max_used": result.summary.dt_max_used,
        "t_final": float(times[-1]),
        "scheme": cfg.scheme,
        "policy": cfg.policy,
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    print(f"{summary['steps']} steps to t = {cfg.t_end}; outputs in {out}")
    return EXIT_OK


def _experiment_kwargs(name: str, values: dict[str, Any]) -> dict[str, Any]:
    accepted = {
        "convergence": {"gamma": "gamma", "refinement_levels": "refinement_levels", "seed": "seed"},
        "stability": {"trials": "trials", "seed": "seed", "scheme": "scheme", "n_steps": "n_steps"},
        "explicit-witness": {"gamma": "gamma", "seed": "seed", "n_steps": "n_steps"},
        "point-source": {"t_end": "t_end", "dt_fixed": "dt_fixed"},
        "cost-scaling": {"n_steps": "n_steps", "n_intervals": "n_intervals", "gamma": "gamma"},
    }[name]
    kwargs = {arg: values[key] for key, arg in accepted.items() if values.get(key) is not None}
    if name == "convergence":
        kwargs.setdefault("gamma", RunConfig.gamma)
    if name == "point-source":
        policy_keys = {f.name for f in dataclasses.fields(TimestepPolicy)} - {"kind"}
        overrides = {k: values[k] for k in policy_keys if k in values}
        if "policy" in values:
            overrides["kind"] = values["policy"]
        kwargs["policy"] = TimestepPolicy(**overrides)
    return kwargs


def write_experiment(result: ExperimentResult, out_dir: Path) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{result.name}.csv"
    result.to_csv(path)
    for table, columns in result.tables.items():
        header = list(columns)
        _write_csv(out_dir / f"{result.name}_{table}.csv", header, zip(*columns.values()))
    return path


def cmd_experiment(name: str, config_path: str | Path | None = None) -> int:
    if name not in EXPERIMENTS:
        print(f"unknown experiment {name!r}; choose from {', '.join(EXPERIMENTS)}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        values = read_config_values(config_path)
        kwargs = _experiment_kwargs(name, values)
    except (ValueError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    result = EXPERIMENTS[name](**kwargs)
    for line in result.report_lines():
        print(line)
    path = write_experiment(result, Path(values.get("out_dir", RunConfig.out_dir)))
    print(f"results written to {path}")
    return EXIT_OK if result.passed else EXIT_CRITERIA


def main(argv: Sequence[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="subdiff", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p_solve = sub.add_parser("solve", help="run the solver and write CSV outputs")
    p_solve.add_argument("config", nargs="?", help="flat key = value config file")
    p_exp = sub.add_parser("experiment", help="run a named experiment and report criteria")
    p_exp.add_argument("name", help=f"one of: {', '.join(EXPERIMENTS)}")
    p_exp.add_argument("config", nargs="?", help="optional config overriding defaults")
    args = parser.parse_args(argv)
    if args.command == "solve":
        return cmd_solve(args.config)
    return cmd_experiment(args.name, args.config)


if __name__ == "__main__":
    sys.exit(main())
