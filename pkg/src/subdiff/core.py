"""Problem description and discretization geometry shared by the solver."""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass
from functools import cached_property

import numpy as np

Array = np.ndarray
BoundaryValue = float | Callable[[float], float]
SourceFunction = Callable[[Array, float], Array]


@dataclass(frozen=True)
class Impulse:
    """A point injection ``weight * delta(x - location)`` at ``time``."""

    time: float
    location: float
    weight: float = 1.0


def _zero_ic(x: Array) -> Array:
    return np.zeros_like(x)


@dataclass(frozen=True)
class ProblemSpec:
    r"""Fractional diffusion problem :math:`D_t^\gamma u - K u_{xx} = F`.

    ``bc`` holds Dirichlet values at ``(x_left, x_right)``, each either a
    constant or a function of time. ``source`` is the smooth part of the
    forcing and is sampled pointwise; impulsive parts live in ``impulses``.
    Set ``allow_unit_gamma`` only for limit checks against classical diffusion.
    """

    gamma: float
    k_coeff: float = 1.0
    domain: tuple[float, float] = (0.0, 1.0)
    bc: tuple[BoundaryValue, BoundaryValue] = (0.0, 0.0)
    ic: Callable[[Array], Array] = _zero_ic
    source: SourceFunction | None = None
    impulses: tuple[Impulse, ...] = ()
    allow_unit_gamma: bool = False

    def __post_init__(self) -> None:
        upper_ok = self.gamma <= 1.0 if self.allow_unit_gamma else self.gamma < 1.0
        if not (self.gamma > 0.0 and upper_ok):
            raise ValueError(f"gamma must satisfy 0 < gamma < 1 (got {self.gamma})")
        if not self.k_coeff > 0.0:
            raise ValueError(f"k_coeff must be > 0 (got {self.k_coeff})")
        x_left, x_right = self.domain
        if not x_left < x_right:
            raise ValueError(f"domain must satisfy x_left < x_right (got {self.domain})")
        if len(self.bc) != 2:
            raise ValueError("bc must be a (left, right) pair of Dirichlet values")
        for value in self.bc:
            if not (callable(value) or isinstance(value, (int, float))):
                raise TypeError(
                    "only Dirichlet boundary values (constants or functions of t) "
                    "are supported"
                )
        for imp in self.impulses:
            if imp.time < 0.0:
                raise ValueError(f"impulse time must be >= 0 (got {imp.time})")
            if not x_left <= imp.location <= x_right:
                raise ValueError(f"impulse location {imp.location} outside domain")
        object.__setattr__(self, "impulses", tuple(sorted(self.impulses, key=lambda i: i.time)))

    def boundary_values(self, t: float) -> tuple[float, float]:
        left, right = self.bc
        return (
            float(left(t)) if callable(left) else float(left),
            float(right(t)) if callable(right) else float(right),
        )

    def impulses_at(self, t: float, rtol: float = 1.0e-12) -> list[Impulse]:
        """Impulses whose time coincides with ``t`` (up to rounding)."""
        if not self.impulses:
            return []
        tol = rtol * max(1.0, abs(t))
        return [i for i in self.impulses if abs(i.time - t) <= tol]


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform grid of ``n_intervals + 1`` nodes on ``[x_left, x_right]``."""

    x_left: float
    x_right: float
    n_intervals: int

    @property
    def dx(self) -> float:
        return (self.x_right - self.x_left) / self.n_intervals

    @property
    def n_nodes(self) -> int:
        return self.n_intervals + 1

    @cached_property
    def nodes(self) -> Array:
        x = np.linspace(self.x_left, self.x_right, self.n_intervals + 1)
        x.flags.writeable = False
        return x

    def snap(self, location: float) -> int:
        """Index of the node nearest ``location``."""
        if not self.x_left <= location <= self.x_right:
            raise ValueError(
                f"location {location} outside domain [{self.x_left}, {self.x_right}]"
            )
        return int(round((location - self.x_left) / self.dx))


def make_grid(domain: Sequence[float], n_intervals: int) -> SpatialGrid:
    x_left, x_right = (float(v) for v in domain)
    if not x_left < x_right:
        raise ValueError(f"empty interval [{x_left}, {x_right}]")
    if int(n_intervals) != n_intervals or n_intervals < 2:
        raise ValueError(f"n_intervals must be an integer >= 2 (got {n_intervals})")
    return SpatialGrid(x_left, x_right, int(n_intervals))


class TemporalMesh:
    """Append-only, strictly increasing time nodes starting at ``t_0 = 0``.

    Storage grows geometrically so appending is amortized O(1); ``times``
    is a read-only view of the filled part.
    """

    def __init__(self, times: Sequence[float] = (0.0,), capacity: int = 64) -> None:
        values = np.asarray(times, dtype=float)
        if values.ndim != 1 or values.size == 0 or values[0] != 0.0:
            raise ValueError("a temporal mesh must start at t_0 = 0")
        if np.any(np.diff(values) <= 0.0):
            raise ValueError("mesh times must be strictly increasing")
        self._buf = np.empty(max(capacity, values.size), dtype=float)
        self._buf[: values.size] = values
        self._size = values.size

    def __len__(self) -> int:
        return self._size

    def __getitem__(self, index):
        return self.times[index]

    def __repr__(self) -> str:
        return f"TemporalMesh(n_nodes={self._size}, t_last={self.last})"

    @property
    def times(self) -> Array:
        view = self._buf[: self._size]
        view.flags.writeable = False
        return view

    @property
    def last(self) -> float:
        return float(self._buf[self._size - 1])

    @property
    def steps(self) -> Array:
        return np.diff(self.times)

    def append(self, dt: float) -> float:
        if not dt > 0.0:
            raise ValueError(f"timestep must be > 0 (got {dt})")
        t_new = self.last + dt
        if not t_new > self.last:
            raise ValueError(f"timestep {dt} too small to advance t = {self.last}")
        if self._size == self._buf.size:
            grown = np.empty(2 * self._buf.size, dtype=float)
            grown[: self._size] = self._buf[: self._size]
            self._buf = grown
        self._buf[self._size] = t_new
        self._size += 1
        return t_new


def append_time(mesh: TemporalMesh, dt: float) -> TemporalMesh:
    """Extend ``mesh`` in place with ``t_n = t_{n-1} + dt`` and return it."""
    mesh.append(dt)
    return mesh


class SolutionHistory:
    """Left limits ``U^(m)`` and right limits ``V^(m)`` for every processed level.

    Besides the two limit sequences the history keeps the increments
    ``U^(m+1) - V^(m)`` that the memory operator sums over, so each step
    reads the past exactly once. Entries are immutable once a later level
    exists; only the latest right limit may still be changed (by an impulse).
    """

    def __init__(self, n_nodes: int, capacity: int = 64) -> None:
        self.n_nodes = int(n_nodes)
        capacity = max(int(capacity), 1)
        self._u = np.empty((capacity, self.n_nodes))
        self._v = np.empty((capacity, self.n_nodes))
        self._du = np.empty((capacity, self.n_nodes))
        self._size = 0

    @classmethod
    def start(cls, u0: Array, v0: Array | None = None, capacity: int = 64) -> SolutionHistory:
        u0 = np.asarray(u0, dtype=float)
        history = cls(u0.size, capacity)
        history.append(u0, v0)
        return history

    def __len__(self) -> int:
        return self._size

    def _grow(self) -> None:
        new_cap = 2 * self._u.shape[0]
        for name in ("_u", "_v", "_du"):
            old = getattr(self, name)
            new = np.empty((new_cap, self.n_nodes))
            new[: self._size] = old[: self._size]
            setattr(self, name, new)

    def append(self, u: Array, v: Array | None = None) -> None:
        """Record a new level; ``v`` defaults to ``u`` (no discontinuity)."""
        if not isinstance(u, np.ndarray):
            u = np.asarray(u, dtype=float)
        if u.shape != (self.n_nodes,):
            raise ValueError(f"expected a vector of {self.n_nodes} nodes, got {u.shape}")
        if self._size == self._u.shape[0]:
            self._grow()
        n = self._size
        self._u[n] = u
        self._v[n] = u if v is None else v
        if n > 0:
            np.subtract(u, self._v[n - 1], out=self._du[n - 1])
        self._size += 1

    def _reserve_level(self) -> tuple[Array, Array, Array, int]:
        """Buffers and row index for a level written in place by a compiled kernel.

        The caller fills ``u[n]``, ``v[n]`` and ``du[n - 1]`` and then calls
        :meth:`_commit_level`.
        """
        if self._size == self._u.shape[0]:
            self._grow()
        return self._u, self._v, self._du, self._size

    def _commit_level(self) -> None:
        self._size += 1

    def set_latest_right(self, v: Array) -> None:
        if self._size == 0:
            raise IndexError("history is empty")
        self._v[self._size - 1] = v

    @property
    def u_left(self) -> Array:
        return self._u[: self._size]

    @property
    def v_right(self) -> Array:
        return self._v[: self._size]

    @property
    def increments(self) -> Array:
        """Rows ``U^(m+1) - V^(m)`` for ``m = 0 .. len - 2``."""
        return self._du[: max(self._size - 1, 0)]

    @property
    def nbytes_used(self) -> int:
        return 3 * self._size * self.n_nodes * self._u.itemsize


__all__ = [
    "Impulse",
    "ProblemSpec",
    "SolutionHistory",
    "SpatialGrid",
    "TemporalMesh",
    "append_time",
    "make_grid",
]
