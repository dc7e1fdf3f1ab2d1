"""Time stepping for the fractional diffusion equation on a non-uniform mesh.

Each implicit step solves

    -S U_{j-1} + (1 + 2S) U_j - S U_{j+1} = M U_j + F~_j,

with ``S = Gamma(2 - gamma) K dt**gamma / dx**2`` and
``F~ = Gamma(2 - gamma) dt**gamma F(x_j, t_n)``. ``U`` holds left limits and
``V`` right limits at the mesh nodes; they differ only where a point
impulse was injected.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from numba import njit

from subdiff.adaptive import TimestepPolicy, curvature_probe, next_dt
from subdiff.caputo import (
    VECTOR_POW_MIN,
    _distance_powers,
    _distance_powers_scalar,
    _l1_weights,
    _memory_sum,
    _mesh_times,
    compute_weights,
    memory_operator,
)
from subdiff.core import ProblemSpec, SolutionHistory, SpatialGrid, TemporalMesh
from subdiff.linalg import PIVOT_TOL, _assemble, _thomas

_EMPTY = np.empty(0)

SchemeName = Literal["implicit", "explicit"]

#: Default ceiling on the number of steps taken by :func:`run`.
MAX_STEPS = 1_000_000


class StepLimitError(RuntimeError):
    """Raised when a run exceeds its step ceiling."""


@dataclass(frozen=True, slots=True)
class StepReport:
    step_index: int
    time: float
    dt_used: float
    s_n: float
    impulse_applied: bool


NONFINITE = -2


def _nonfinite(n: int, t_n: float) -> FloatingPointError:
    return FloatingPointError(f"solution is no longer finite at step {n}, t = {t_n:.6g}")


def _check_sync(mesh: TemporalMesh, history: SolutionHistory, grid: SpatialGrid) -> None:
    if len(history) == 0:
        raise ValueError("history must hold at least the initial level")
    if len(history) != len(mesh):
        raise ValueError(
            f"history has {len(history)} levels but the mesh has {len(mesh)} nodes"
        )
    if history.n_nodes != grid.n_nodes:
        raise ValueError(
            f"history vectors have {history.n_nodes} entries, grid has {grid.n_nodes} nodes"
        )


def _scaled_source(
    problem: ProblemSpec, grid: SpatialGrid, t: float, scale: float
) -> np.ndarray | None:
    if problem.source is None:
        return None
    x = grid.nodes[1:-1]
    return scale * np.asarray(problem.source(x, t), dtype=float)


def apply_impulse(
    history: SolutionHistory, grid: SpatialGrid, location: float, weight: float
) -> SolutionHistory:
    """Add a discretized delta ``weight / dx`` at the node nearest ``location``.

    Only the right limit of the latest level changes.
    """
    j = grid.snap(location)
    v = history.v_right[-1].copy()
    v[j] += weight / grid.dx
    history.set_latest_right(v)
    return history


def _apply_impulses_at(
    problem: ProblemSpec, grid: SpatialGrid, history: SolutionHistory, t: float
) -> bool:
    impulses = problem.impulses_at(t)
    for imp in impulses:
        apply_impulse(history, grid, imp.location, imp.weight)
    return bool(impulses)


@njit(cache=True)
def _implicit_update(
    t, powers, n, gamma, s_n, u_buf, v_buf, du_buf, f_tilde, bc_left, bc_right
):
    # same kernels as compute_weights / memory_operator / build_system /
    # thomas_solve, fused so a step crosses into compiled code once; the
    # new level goes straight into the history buffers at row n.
    # Returns -1 on success, the failing pivot row, or NONFINITE.
    if powers.size == 0:
        powers = _distance_powers_scalar(t, n, gamma)
    _, scaled = _l1_weights(t, powers, n, gamma)
    m_vec = _memory_sum(v_buf[n - 1], du_buf, scaled, n)
    rhs = m_vec[1:-1].copy()
    if f_tilde.size:
        rhs += f_tilde
    sub, diag, sup, rhs = _assemble(s_n, rhs, bc_left, bc_right)
    x, failed_row = _thomas(sub, diag, sup, rhs, PIVOT_TOL)
    if failed_row >= 0:
        return failed_row
    last = u_buf.shape[1] - 1
    u_buf[n, 0] = bc_left
    u_buf[n, 1:last] = x
    u_buf[n, last] = bc_right
    v_buf[n] = u_buf[n]
    du_buf[n - 1] = u_buf[n] - v_buf[n - 1]
    for value in x:
        if not math.isfinite(value):
            return NONFINITE
    return -1


def implicit_step(
    problem: ProblemSpec,
    grid: SpatialGrid,
    mesh: TemporalMesh,
    history: SolutionHistory,
    dt: float,
) -> tuple[SolutionHistory, StepReport]:
    """Advance one step of size ``dt``; ``mesh`` and ``history`` grow in place."""
    if not dt > 0.0:
        raise ValueError(f"timestep must be > 0 (got {dt})")
    _check_sync(mesh, history, grid)

    gamma = problem.gamma
    t_n = mesh.append(dt)
    n = len(mesh) - 1
    t, _ = _mesh_times(mesh)
    scale = math.gamma(2.0 - gamma) * dt**gamma
    s_n = scale * problem.k_coeff / grid.dx**2
    f_tilde = _scaled_source(problem, grid, t_n, scale)
    bc_left, bc_right = problem.boundary_values(t_n)

    u_buf, v_buf, du_buf, _ = history._reserve_level()
    failed_row = _implicit_update(
        t,
        _distance_powers(t, n, gamma) if n >= VECTOR_POW_MIN else _EMPTY,
        n,
        float(gamma),
        s_n,
        u_buf,
        v_buf,
        du_buf,
        _EMPTY if f_tilde is None else f_tilde,
        bc_left,
        bc_right,
    )
    if failed_row == NONFINITE:
        raise _nonfinite(n, t_n)
    if failed_row >= 0:
        raise np.linalg.LinAlgError(f"pivot below {PIVOT_TOL:g} in row {failed_row}")
    history._commit_level()
    applied = _apply_impulses_at(problem, grid, history, t_n)
    return history, StepReport(n, t_n, dt, s_n, applied)


def explicit_step(
    problem: ProblemSpec,
    grid: SpatialGrid,
    mesh: TemporalMesh,
    history: SolutionHistory,
    dt: float,
) -> tuple[SolutionHistory, StepReport]:
    """Advance one step with the Laplacian taken at the previous level.

    The Caputo sum is evaluated at the new node and the unit weight of the
    newest increment is isolated, so no linear solve is needed. There is no
    stability guarantee: large steps blow up.
    """
    if not dt > 0.0:
        raise ValueError(f"timestep must be > 0 (got {dt})")
    _check_sync(mesh, history, grid)

    gamma = problem.gamma
    t_prev = mesh.last
    t_n = mesh.append(dt)
    n = len(mesh) - 1
    weights = compute_weights(mesh, n, gamma, allow_unit_gamma=problem.allow_unit_gamma)
    scale = math.gamma(2.0 - gamma) * dt**gamma
    s_n = scale * problem.k_coeff / grid.dx**2

    v_prev = history.v_right[n - 1]
    m_vec = memory_operator(history, weights, n)
    u = np.empty(grid.n_nodes)
    u[1:-1] = m_vec[1:-1] + s_n * (v_prev[:-2] - 2.0 * v_prev[1:-1] + v_prev[2:])
    f_tilde = _scaled_source(problem, grid, t_prev, scale)
    if f_tilde is not None:
        u[1:-1] += f_tilde
    u[0], u[-1] = problem.boundary_values(t_n)
    if not np.isfinite(u).all():
        raise _nonfinite(n, t_n)
    history.append(u)
    applied = _apply_impulses_at(problem, grid, history, t_n)
    return history, StepReport(n, t_n, dt, s_n, applied)


STEPPERS = {"implicit": implicit_step, "explicit": explicit_step}


def initial_history(
    problem: ProblemSpec, grid: SpatialGrid, capacity: int = 64
) -> SolutionHistory:
    """Level 0 from the initial condition, with any impulses at ``t = 0`` in ``V``."""
    u0 = np.asarray(problem.ic(grid.nodes), dtype=float) * np.ones(grid.n_nodes)
    history = SolutionHistory.start(u0, capacity=capacity)
    _apply_impulses_at(problem, grid, history, 0.0)
    return history


@dataclass
class RunSummary:
    steps: int
    wall_time: float
    step_times: np.ndarray
    dt_min_used: float
    dt_max_used: float


@dataclass
class RunResult:
    history: SolutionHistory
    mesh: TemporalMesh
    summary: RunSummary
    reports: list[StepReport] = field(default_factory=list)

    @property
    def times(self) -> np.ndarray:
        return self.mesh.times

    @property
    def u_left(self) -> np.ndarray:
        return self.history.u_left

    @property
    def v_right(self) -> np.ndarray:
        return self.history.v_right


def _capacity_hint(policy: TimestepPolicy, t_end: float, max_steps: int) -> int:
    dt = policy.dt_fixed if policy.kind == "fixed" else policy.dt_max
    return int(min(max_steps, math.ceil(t_end / dt) + 8))


def run(
    problem: ProblemSpec,
    grid: SpatialGrid,
    policy: TimestepPolicy,
    t_end: float,
    scheme: SchemeName = "implicit",
    max_steps: int = MAX_STEPS,
) -> RunResult:
    """March from ``t = 0`` to ``t_end``.

    Steps suggested by ``policy`` are shortened so that the mesh lands
    exactly on every impulse time and on ``t_end``.
    """
    if not t_end > 0.0:
        raise ValueError(f"t_end must be > 0 (got {t_end})")
    try:
        step = STEPPERS[scheme]
    except KeyError:
        raise ValueError(f"unknown scheme {scheme!r}") from None
    probe = policy.probe_index(grid) if policy.kind == "adaptive" else None

    capacity = _capacity_hint(policy, t_end, max_steps)
    mesh = TemporalMesh(capacity=capacity)
    history = initial_history(problem, grid, capacity=capacity)
    stops = sorted({imp.time for imp in problem.impulses if 0.0 < imp.time < t_end})
    stops.append(t_end)
    eps = 1.0e-12 * max(1.0, t_end)

    reports: list[StepReport] = []
    step_times: list[float] = []
    next_stop = 0
    wall_start = time.perf_counter()
    while t_end - mesh.last > eps:
        if len(reports) >= max_steps:
            raise StepLimitError(f"exceeded {max_steps} steps before t_end = {t_end}")
        t = mesh.last
        if probe is None:
            dt = next_dt(policy, 0.0)
        else:
            dt = next_dt(policy, curvature_probe(history.v_right[-1], grid, probe))
        if not dt > 0.0:
            raise ValueError(f"policy returned a non-positive timestep {dt}")
        while stops[next_stop] - t <= eps:
            next_stop += 1
        target = stops[next_stop]
        if t + dt >= target - eps:
            dt = target - t

        tic = time.perf_counter()
        _, report = step(problem, grid, mesh, history, dt)
        step_times.append(time.perf_counter() - tic)
        reports.append(report)
    wall = time.perf_counter() - wall_start

    steps = np.diff(mesh.times)
    summary = RunSummary(
        steps=len(reports),
        wall_time=wall,
        step_times=np.asarray(step_times),
        dt_min_used=float(steps.min()) if steps.size else math.nan,
        dt_max_used=float(steps.max()) if steps.size else math.nan,
    )
    return RunResult(history, mesh, summary, reports)


__all__ = [
    "MAX_STEPS",
    "RunResult",
    "RunSummary",
    "StepLimitError",
    "StepReport",
    "apply_impulse",
    "explicit_step",
    "implicit_step",
    "initial_history",
    "run",
]
