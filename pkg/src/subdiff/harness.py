"""Scripted experiments that turn the solver's claims into pass/fail checks.

Each experiment returns an :class:`ExperimentResult`. Metrics that depend
only on the seed live in ``metrics``; anything measured with a clock lives
in ``timings`` so reproducibility checks can ignore it.
"""

from __future__ import annotations

import csv
import gc
import json
import math
import statistics
from collections.abc import Callable, Iterator, Sequence
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from subdiff.adaptive import TimestepPolicy
from subdiff.analytic import make_manufactured, point_source_exact
from subdiff.core import Impulse, ProblemSpec, SolutionHistory, SpatialGrid, TemporalMesh, make_grid
from subdiff.scheme import STEPPERS, initial_history, run

# Point-source configuration: unit deltas at the centre of [-10, 10].
POINT_SOURCE_GAMMA = 0.5
POINT_SOURCE_DOMAIN = (-10.0, 10.0)
POINT_SOURCE_INTERVALS = 100
SNAPSHOT_TIMES = (4.08e-4, 0.034, 1.0, 1.0004, 2.0)


@dataclass
class Criterion:
    passed: bool
    value: float
    target: str

    def line(self, name: str) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {name}: {self.value:.6g} (target {self.target})"


@dataclass
class ExperimentResult:
    name: str
    parameters: dict[str, Any] = field(default_factory=dict)
    metrics: dict[str, float] = field(default_factory=dict)
    criteria: dict[str, Criterion] = field(default_factory=dict)
    timings: dict[str, float] = field(default_factory=dict)
    #: Column-oriented tables (error traces, snapshots) for plotting.
    tables: dict[str, dict[str, list]] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.criteria.values())

    def check(self, name: str, passed: bool, value: float, target: str) -> None:
        self.criteria[name] = Criterion(bool(passed), float(value), target)

    def report_lines(self) -> list[str]:
        return [c.line(name) for name, c in self.criteria.items()]

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ExperimentResult:
        criteria = {k: Criterion(**v) for k, v in data.get("criteria", {}).items()}
        return cls(
            name=data["name"],
            parameters=dict(data.get("parameters", {})),
            metrics=dict(data.get("metrics", {})),
            criteria=criteria,
            timings=dict(data.get("timings", {})),
            tables={k: dict(v) for k, v in data.get("tables", {}).items()},
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> ExperimentResult:
        return cls.from_dict(json.loads(text))

    def to_csv(self, path: str | Path) -> None:
        """Long format ``section,key,value``; values are JSON so floats keep every bit."""
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["section", "key", "value"])
            writer.writerow(["name", "", json.dumps(self.name)])
            for section in ("parameters", "metrics", "timings", "tables"):
                for key, value in getattr(self, section).items():
                    writer.writerow([section, key, json.dumps(value)])
            for key, crit in self.criteria.items():
                writer.writerow(["criteria", key, json.dumps(asdict(crit))])

    @classmethod
    def from_csv(cls, path: str | Path) -> ExperimentResult:
        data: dict[str, Any] = {
            "parameters": {}, "metrics": {}, "timings": {}, "tables": {}, "criteria": {}
        }
        with open(path, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                value = json.loads(row["value"])
                if row["section"] == "name":
                    data["name"] = value
                else:
                    data[row["section"]][row["key"]] = value
        return cls.from_dict(data)


def _march(
    problem: ProblemSpec,
    grid: SpatialGrid,
    dts: Sequence[float],
    scheme: str = "implicit",
    stop_ratio: float | None = None,
) -> tuple[SolutionHistory, TemporalMesh]:
    """Step through the prescribed increments ``dts``.

    With ``stop_ratio`` the march ends early once the sup norm exceeds that
    multiple of the initial one, so a diverging scheme cannot overflow.
    """
    step = STEPPERS[scheme]
    mesh = TemporalMesh(capacity=len(dts) + 1)
    history = initial_history(problem, grid, capacity=len(dts) + 1)
    scale0 = float(np.max(np.abs(history.v_right[0])))
    for dt in dts:
        step(problem, grid, mesh, history, float(dt))
        if stop_ratio is not None and np.max(np.abs(history.u_left[-1])) > stop_ratio * scale0:
            break
    return history, mesh


def _ls_order(h: Sequence[float], err: Sequence[float]) -> float:
    slope, _ = np.polyfit(np.log(h), np.log(err), 1)
    return float(slope)


def _successive_orders(finals: Sequence[np.ndarray], ratio: float = 2.0) -> list[float]:
    """Orders from sup-norm differences of solutions on nested refinements."""
    diffs = [float(np.max(np.abs(a - b))) for a, b in zip(finals, finals[1:])]
    return [math.log(d0 / d1) / math.log(ratio) for d0, d1 in zip(diffs, diffs[1:])]


def _nested_random_mesh(rng: np.random.Generator, n_coarse: int, level: int) -> np.ndarray:
    """Random partition of [0, 1] with every interval bisected ``level`` times."""
    widths = rng.dirichlet(np.full(n_coarse, 2.0))
    coarse = np.concatenate([[0.0], np.cumsum(widths)])
    coarse[-1] = 1.0
    fine = coarse
    for _ in range(level):
        mids = 0.5 * (fine[:-1] + fine[1:])
        fine = np.insert(fine, np.arange(1, fine.size), mids)
    return np.diff(fine)


def convergence_study(
    gamma: float,
    refinement_levels: int = 4,
    seed: int = 0,
    *,
    spatial_dt: float = 2.0e-4,
    spatial_coarse: int = 4,
    temporal_intervals: int = 200,
    temporal_coarse_dt: float = 0.1,
) -> ExperimentResult:
    """Observed orders on the manufactured problem at ``t = 1``.

    Spatial errors are taken against the exact solution. Temporal orders come
    from differences between successive refinements, which cancels the fixed
    spatial error that otherwise flattens the slope at fine steps; the slope
    of the raw error is reported alongside.
    """
    if refinement_levels < 3:
        raise ValueError(f"need at least 3 refinement levels (got {refinement_levels})")
    mp = make_manufactured(gamma)
    problem = mp.problem
    res = ExperimentResult(
        "convergence",
        parameters={
            "gamma": gamma,
            "refinement_levels": refinement_levels,
            "seed": seed,
            "spatial_dt": spatial_dt,
            "temporal_intervals": temporal_intervals,
            "temporal_coarse_dt": temporal_coarse_dt,
        },
    )

    # spatial sweep
    dxs, sp_err = [], []
    n_steps = int(round(1.0 / spatial_dt))
    for level in range(refinement_levels):
        grid = make_grid(problem.domain, spatial_coarse * 2**level)
        history, mesh = _march(problem, grid, np.full(n_steps, spatial_dt))
        exact = mp.exact_u(grid.nodes, mesh.last)
        dxs.append(grid.dx)
        sp_err.append(float(np.max(np.abs(history.u_left[-1] - exact))))
    spatial_order = _ls_order(dxs, sp_err)

    # temporal sweeps on uniform and nested random meshes
    grid = make_grid(problem.domain, temporal_intervals)
    exact_final = mp.exact_u(grid.nodes, 1.0)
    rng = np.random.default_rng(seed)
    n_coarse = int(round(1.0 / temporal_coarse_dt))
    sweeps = {
        "uniform": [np.full(n_coarse * 2**lv, temporal_coarse_dt / 2**lv) for lv in range(refinement_levels)],
    }
    base_rng_state = rng.bit_generator.state
    random_meshes = []
    for lv in range(refinement_levels):
        rng.bit_generator.state = base_rng_state  # same coarse mesh at every level
        random_meshes.append(_nested_random_mesh(rng, n_coarse, lv))
    sweeps["random"] = random_meshes

    temporal: dict[str, dict[str, Any]] = {}
    for label, meshes in sweeps.items():
        finals, errs, hmax = [], [], []
        for dts in meshes:
            history, _ = _march(problem, grid, dts)
            finals.append(history.u_left[-1].copy())
            errs.append(float(np.max(np.abs(finals[-1] - exact_final))))
            hmax.append(float(np.max(dts)))
        orders = _successive_orders(finals)
        temporal[label] = {"orders": orders, "errors": errs, "hmax": hmax}
        res.metrics[f"temporal_order_{label}"] = orders[-1]
        res.metrics[f"temporal_order_{label}_vs_exact"] = _ls_order(hmax, errs)
        res.metrics[f"temporal_error_{label}_coarsest"] = errs[0]
        res.metrics[f"temporal_error_{label}_finest"] = errs[-1]

    res.metrics["spatial_order"] = spatial_order
    res.metrics["spatial_error_coarsest"] = sp_err[0]
    res.metrics["spatial_error_finest"] = sp_err[-1]
    res.tables["spatial"] = {"dx": dxs, "error": sp_err}
    for label, data in temporal.items():
        res.tables[f"temporal_{label}"] = {"dt_max": data["hmax"], "error": data["errors"]}

    res.check("spatial_order", abs(spatial_order - 2.0) <= 0.3, spatial_order, "2.0 +/- 0.3")
    for label in sweeps:
        order = res.metrics[f"temporal_order_{label}"]
        res.check(f"temporal_order_{label}", abs(order - 1.0) <= 0.25, order, "1.0 +/- 0.25")
    res.check(
        "spatial_refinement_reduces_error",
        sp_err[-1] < sp_err[0],
        sp_err[-1] / sp_err[0],
        "finest/coarsest < 1",
    )
    for label, data in temporal.items():
        errs = data["errors"]
        res.check(
            f"temporal_{label}_refinement_reduces_error",
            errs[-1] < errs[0],
            errs[-1] / errs[0],
            "finest/coarsest < 1",
        )
    return res


def _random_stability_mesh(rng: np.random.Generator, n_steps: int) -> np.ndarray:
    """Log-uniform steps in [1e-4, 1e-1] with bursts of tiny steps and big jumps."""
    dts: list[float] = []
    while len(dts) < n_steps:
        if rng.random() < 0.1:
            burst = int(rng.integers(5, 21))
            dts.extend(10.0 ** rng.uniform(-7.0, -5.0, size=burst))
            dts.append(0.1)
        else:
            dts.append(10.0 ** rng.uniform(-4.0, -1.0))
    return np.asarray(dts[:n_steps])


def _norm_ratios(history: SolutionHistory, dx: float) -> np.ndarray:
    norms = np.sqrt(dx * np.sum(history.v_right**2, axis=1))
    return norms / norms[0]


def stability_suite(
    trials: int = 50,
    seed: int = 42,
    scheme: str = "implicit",
    dt: float | None = None,
    n_steps: int = 150,
) -> ExperimentResult:
    """Worst growth of the discrete 2-norm of a perturbation with ``F = 0``.

    Each trial draws gamma, ``K``, grid size, perturbation and (unless ``dt``
    fixes a uniform step) a non-uniform mesh.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1 (got {trials})")
    res = ExperimentResult(
        "stability",
        parameters={"trials": trials, "seed": seed, "scheme": scheme, "dt": dt, "n_steps": n_steps},
    )
    bound = 1.0 + 1.0e-10
    worst = 0.0
    gammas, ratios = [], []
    for i, child in enumerate(np.random.SeedSequence(seed).spawn(trials)):
        rng = np.random.default_rng(child)
        gamma = float(rng.uniform(0.05, 0.95))
        k_coeff = float(rng.uniform(0.1, 2.0))
        grid = make_grid((0.0, 1.0), int(rng.integers(8, 65)))
        v0 = rng.standard_normal(grid.n_nodes)
        v0[[0, -1]] = 0.0
        problem = ProblemSpec(gamma, k_coeff, ic=lambda x, v0=v0: v0)
        dts = _random_stability_mesh(rng, n_steps) if dt is None else np.full(n_steps, dt)
        stop = 1.0e6 if scheme == "explicit" else None
        history, _ = _march(problem, grid, dts, scheme, stop_ratio=stop)
        if not np.any(history.v_right[0]):
            ratio = 0.0  # nothing to perturb
        else:
            ratio = float(np.max(_norm_ratios(history, grid.dx)))
        gammas.append(gamma)
        ratios.append(ratio)
        worst = max(worst, ratio)
        res.check(f"trial_{i:02d}", ratio <= bound, ratio, "<= 1 + 1e-10")
    res.metrics["max_ratio"] = worst
    res.metrics["trials_exceeding_1e3"] = float(sum(r > 1.0e3 for r in ratios))
    res.tables["trials"] = {"gamma": gammas, "max_ratio": ratios}
    return res


def explicit_instability_witness(
    gamma: float = POINT_SOURCE_GAMMA,
    n_steps: int = 200,
    seed: int = 0,
    dt: float | None = None,
) -> ExperimentResult:
    """Same perturbation marched by both schemes with ``dt = dx**2`` by default."""
    grid = make_grid(POINT_SOURCE_DOMAIN, POINT_SOURCE_INTERVALS)
    dt = grid.dx**2 if dt is None else dt
    rng = np.random.default_rng(seed)
    v0 = rng.standard_normal(grid.n_nodes)
    v0[[0, -1]] = 0.0
    problem = ProblemSpec(gamma, 1.0, POINT_SOURCE_DOMAIN, ic=lambda x: v0)
    res = ExperimentResult(
        "explicit-witness",
        parameters={"gamma": gamma, "n_steps": n_steps, "seed": seed, "dt": dt, "dx": grid.dx},
    )
    dts = np.full(n_steps, dt)
    explicit, _ = _march(problem, grid, dts, "explicit", stop_ratio=1.0e6)
    implicit, _ = _march(problem, grid, dts, "implicit")
    exp_ratios = _norm_ratios(explicit, grid.dx)
    imp_ratio = float(np.max(_norm_ratios(implicit, grid.dx)))
    exceeded = np.nonzero(exp_ratios > 1.0e3)[0]
    res.metrics["explicit_max_ratio"] = float(np.max(exp_ratios))
    res.metrics["explicit_steps_to_1e3"] = float(exceeded[0]) if exceeded.size else math.nan
    res.metrics["implicit_max_ratio"] = imp_ratio
    res.check(
        "explicit_exceeds_1e3",
        exceeded.size > 0 and exceeded[0] <= n_steps,
        res.metrics["explicit_max_ratio"],
        f"> 1e3 within {n_steps} steps",
    )
    res.check("implicit_bounded", imp_ratio <= 1.0 + 1.0e-10, imp_ratio, "<= 1 + 1e-10")
    return res


def point_source_problem(t_end: float) -> ProblemSpec:
    """Unit deltas at ``x = 0`` at every integer time before ``t_end``."""
    times = range(int(math.ceil(t_end)))
    return ProblemSpec(
        POINT_SOURCE_GAMMA,
        1.0,
        POINT_SOURCE_DOMAIN,
        impulses=tuple(Impulse(float(k), 0.0) for k in times),
    )


def _probe_error_trace(
    result, probe: int, injections: Sequence[float]
) -> tuple[np.ndarray, np.ndarray]:
    t = result.times[1:]
    u = result.u_left[1:, probe]
    exact = np.array(
        [point_source_exact(0.0, float(tn), POINT_SOURCE_GAMMA, injection_times=injections) for tn in t]
    )
    return t, np.abs(u - exact)


@contextmanager
def _gc_paused() -> Iterator[None]:
    # timed runs keep garbage collection out of the measurement, as timeit does
    enabled = gc.isenabled()
    gc.disable()
    try:
        yield
    finally:
        if enabled:
            gc.enable()


def _median_wall(fn: Callable[[], Any], repeats: int) -> float:
    with _gc_paused():
        return statistics.median(fn().summary.wall_time for _ in range(repeats))


def point_source_experiment(
    policy: TimestepPolicy | None = None,
    t_end: float = 2.0,
    *,
    dt_fixed: float = 1.0e-3,
    timing_repeats: int = 3,
) -> ExperimentResult:
    """Deltas released at the centre of ``[-10, 10]`` every unit of time.

    The adaptive run goes to ``t_end``; the step-count, accuracy and timing
    comparisons use separate runs to ``t = 0.1`` and ``t = 1``.
    """
    if not 0.0 < t_end <= 2.0:
        raise ValueError(f"t_end must lie in (0, 2] (got {t_end})")
    policy = TimestepPolicy() if policy is None else policy
    fixed = TimestepPolicy.fixed(dt_fixed)
    grid = make_grid(POINT_SOURCE_DOMAIN, POINT_SOURCE_INTERVALS)
    probe = grid.snap(0.0)
    problem = point_source_problem(t_end)
    injections = [imp.time for imp in problem.impulses]
    res = ExperimentResult(
        "point-source",
        parameters={
            "gamma": POINT_SOURCE_GAMMA,
            "domain": list(POINT_SOURCE_DOMAIN),
            "n_intervals": POINT_SOURCE_INTERVALS,
            "t_end": t_end,
            "dt_fixed": dt_fixed,
            "policy": asdict(policy),
            "timing_repeats": timing_repeats,
        },
    )

    main = run(problem, grid, policy, t_end)
    times = main.times
    res.metrics["steps_to_t_end"] = float(main.summary.steps)
    res.metrics["steps_below_0.01"] = float(np.count_nonzero((times > 0.0) & (times <= 0.01)))

    snap = {"t_requested": [], "t_node": [], "step": [], "x": [], "U": [], "V": [], "exact": []}
    for t_req in SNAPSHOT_TIMES:
        if t_req > t_end * (1.0 + 1.0e-12):
            continue
        m = int(np.argmin(np.abs(times - t_req)))
        exact = [
            point_source_exact(float(x), float(times[m]), POINT_SOURCE_GAMMA, injection_times=injections)
            for x in grid.nodes
        ]
        snap["t_requested"] += [t_req] * grid.n_nodes
        snap["t_node"] += [float(times[m])] * grid.n_nodes
        snap["step"] += [m] * grid.n_nodes
        snap["x"] += grid.nodes.tolist()
        snap["U"] += main.u_left[m].tolist()
        snap["V"] += main.v_right[m].tolist()
        snap["exact"] += exact
    res.tables["snapshots"] = snap

    to_1 = run(point_source_problem(1.0), grid, policy, 1.0)
    to_01 = run(point_source_problem(0.1), grid, policy, 0.1)
    fixed_1 = run(point_source_problem(1.0), grid, fixed, 1.0)
    res.metrics["adaptive_steps_to_1"] = float(to_1.summary.steps)
    res.metrics["adaptive_steps_to_0.1"] = float(to_01.summary.steps)
    res.metrics["fixed_steps_to_1"] = float(fixed_1.summary.steps)

    # error traces at the source node, left limits, on [0, 1]
    t_a, err_a = _probe_error_trace(to_1, probe, [0.0])
    t_f, err_f = _probe_error_trace(fixed_1, probe, [0.0])
    res.tables["error_trace_adaptive"] = {"t": t_a.tolist(), "abs_error": err_a.tolist()}
    res.tables["error_trace_fixed"] = {"t": t_f.tolist(), "abs_error": err_f.tolist()}
    window = (t_a >= 0.05) & (t_a < 1.0)
    envelope = err_a[window] / np.interp(t_a[window], t_f, err_f)
    res.metrics["error_ratio_max"] = float(np.max(envelope))
    late_a = err_a[(t_a >= 0.01) & (t_a < 1.0)]
    late_f = err_f[(t_f >= 0.01) & (t_f < 1.0)]
    res.metrics["adaptive_error_max_after_0.01"] = float(np.max(late_a))
    res.metrics["fixed_error_max_after_0.01"] = float(np.max(late_f))

    u_edge = [point_source_exact(x, 2.0, POINT_SOURCE_GAMMA) for x in (-10.0, 10.0)]
    res.metrics["exact_u_at_minus10_t2"] = u_edge[0]
    res.metrics["exact_u_at_plus10_t2"] = u_edge[1]

    # warm both paths, then time them in separate blocks
    run(point_source_problem(1.0), grid, policy, 0.05)
    run(point_source_problem(1.0), grid, fixed, 0.05)
    wall_fixed = _median_wall(lambda: run(point_source_problem(1.0), grid, fixed, 1.0), timing_repeats)
    wall_adaptive = _median_wall(lambda: run(point_source_problem(1.0), grid, policy, 1.0), timing_repeats)
    res.timings["wall_fixed_to_1"] = wall_fixed
    res.timings["wall_adaptive_to_1"] = wall_adaptive
    res.timings["wall_ratio"] = wall_fixed / wall_adaptive
    res.timings["wall_main_run"] = main.summary.wall_time

    m = res.metrics
    res.check("adaptive_steps_to_1", abs(m["adaptive_steps_to_1"] - 64) <= 5, m["adaptive_steps_to_1"], "64 +/- 5")
    res.check("adaptive_steps_to_0.1", abs(m["adaptive_steps_to_0.1"] - 17) <= 3, m["adaptive_steps_to_0.1"], "17 +/- 3")
    res.check("fixed_steps_to_1", m["fixed_steps_to_1"] == 1000, m["fixed_steps_to_1"], "== 1000")
    res.check("steps_below_0.01", m["steps_below_0.01"] >= 4, m["steps_below_0.01"], ">= 4")
    res.check("wall_ratio", res.timings["wall_ratio"] >= 20.0, res.timings["wall_ratio"], ">= 20")
    for side, value in zip(("minus10", "plus10"), u_edge):
        res.check(f"exact_u_at_{side}_t2", 2.5e-5 <= value <= 1.0e-4, value, "5e-5 within a factor of 2")
    res.check("error_envelope", m["error_ratio_max"] <= 2.0, m["error_ratio_max"], "<= 2 on [0.05, 1)")
    res.check(
        "adaptive_error_after_0.01",
        m["adaptive_error_max_after_0.01"] < 1.0e-2,
        m["adaptive_error_max_after_0.01"],
        "< 1e-2 on [0.01, 1)",
    )
    res.check(
        "fixed_error_after_0.01",
        m["fixed_error_max_after_0.01"] < 1.0e-2,
        m["fixed_error_max_after_0.01"],
        "< 1e-2 on [0.01, 1)",
    )
    return res


def _window_median(values: np.ndarray, center: int, half_width: int) -> float:
    lo, hi = max(center - half_width, 0), min(center + half_width, values.size)
    return float(np.median(values[lo:hi]))


def cost_scaling(
    n_steps: int = 2000, n_intervals: int = 400, dt: float = 1.0e-3, gamma: float = 0.5
) -> ExperimentResult:
    """Per-step wall time of a uniform run; each step sums over the whole history.

    A wide grid keeps the history sum well above the fixed per-step overhead.
    """
    if n_steps < 100:
        raise ValueError(f"n_steps must be >= 100 (got {n_steps})")
    grid = make_grid((0.0, 1.0), n_intervals)
    problem = ProblemSpec(gamma, 1.0, ic=lambda x: np.sin(np.pi * x))
    res = ExperimentResult(
        "cost-scaling",
        parameters={"n_steps": n_steps, "n_intervals": n_intervals, "dt": dt, "gamma": gamma},
    )
    run(problem, grid, TimestepPolicy.fixed(dt), 20 * dt)  # warm-up
    with _gc_paused():
        out = run(problem, grid, TimestepPolicy.fixed(dt), n_steps * dt)
    step_times = out.summary.step_times
    n = np.arange(1, step_times.size + 1, dtype=float)
    cumulative = np.cumsum(step_times)
    coeffs = np.polyfit(n, cumulative, 2)
    fitted = np.polyval(coeffs, n)
    ss_res = float(np.sum((cumulative - fitted) ** 2))
    ss_tot = float(np.sum((cumulative - cumulative.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot
    half = max(n_steps // 40, 5)
    at_full = _window_median(step_times, step_times.size - half, half)
    at_half = _window_median(step_times, step_times.size // 2, half)
    # per-step cost from a line through block medians: a local window is
    # at the mercy of whatever else the machine was doing at that moment
    block = 2 * half
    n_blocks = step_times.size // block
    medians = np.median(step_times[: n_blocks * block].reshape(n_blocks, block), axis=1)
    centers = block * np.arange(n_blocks) + 0.5 * (block + 1)
    slope, intercept = np.polyfit(centers, medians, 1)
    last = float(step_times.size)
    ratio = (intercept + slope * last) / (intercept + slope * 0.5 * last)

    # one stored level per step: bytes per level must not depend on n
    levels = len(out.history)
    bytes_per_level = out.history.nbytes_used / levels

    res.metrics["steps"] = float(out.summary.steps)
    res.metrics["history_bytes"] = float(out.history.nbytes_used)
    res.metrics["bytes_per_level"] = bytes_per_level
    res.timings["cumulative_quadratic_r2"] = r2
    res.timings["per_step_at_half"] = at_half
    res.timings["per_step_at_full"] = at_full
    res.timings["per_step_window_ratio"] = at_full / at_half
    res.timings["per_step_ratio"] = ratio
    res.timings["per_step_slope"] = float(slope)
    res.timings["per_step_intercept"] = float(intercept)
    res.timings["total_wall"] = out.summary.wall_time
    res.tables["step_times"] = {"n": n.tolist(), "seconds": step_times.tolist()}

    res.check("cumulative_quadratic_r2", r2 >= 0.95, r2, ">= 0.95")
    res.check("per_step_ratio", 1.6 <= ratio <= 2.6, ratio, "in [1.6, 2.6]")
    res.check(
        "history_memory_linear",
        bytes_per_level == 3 * grid.n_nodes * 8,
        bytes_per_level,
        f"== {3 * grid.n_nodes * 8} bytes per level",
    )
    return res


EXPERIMENTS: dict[str, Callable[..., ExperimentResult]] = {
    "convergence": convergence_study,
    "stability": stability_suite,
    "explicit-witness": explicit_instability_witness,
    "point-source": point_source_experiment,
    "cost-scaling": cost_scaling,
}

__all__ = [
    "EXPERIMENTS",
    "Criterion",
    "ExperimentResult",
    "convergence_study",
    "cost_scaling",
    "explicit_instability_witness",
    "point_source_experiment",
    "point_source_problem",
    "stability_suite",
]
