"""Timestep selection: fixed steps or the curvature-driven adaptive rule.

The adaptive rule takes

    dt = min(dt_min * coth(|g| / curvature_scale), dt_max)

where ``g`` is the centred second difference of the latest right-limit
profile at the probe node. Large curvature gives steps near ``dt_min``,
flat profiles give ``dt_max``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from subdiff.core import SpatialGrid

PolicyKind = Literal["fixed", "adaptive"]


@dataclass(frozen=True)
class TimestepPolicy:
    kind: PolicyKind = "adaptive"
    dt_fixed: float = 1.0e-3
    dt_min: float = 1.0e-4
    dt_max: float = 0.02
    curvature_scale: float = 1000.0
    #: Grid index where curvature is measured; ``None`` means the middle node.
    probe_node: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("fixed", "adaptive"):
            raise ValueError(f"policy kind must be 'fixed' or 'adaptive' (got {self.kind!r})")
        if self.kind == "fixed" and not self.dt_fixed > 0.0:
            raise ValueError(f"dt_fixed must be > 0 (got {self.dt_fixed})")
        if not 0.0 < self.dt_min <= self.dt_max:
            raise ValueError(
                f"need 0 < dt_min <= dt_max (got dt_min={self.dt_min}, dt_max={self.dt_max})"
            )
        if not self.curvature_scale > 0.0:
            raise ValueError(f"curvature_scale must be > 0 (got {self.curvature_scale})")

    @classmethod
    def fixed(cls, dt: float) -> TimestepPolicy:
        return cls(kind="fixed", dt_fixed=dt)

    def probe_index(self, grid: SpatialGrid) -> int:
        return grid.n_intervals // 2 if self.probe_node is None else self.probe_node


def curvature_probe(latest: np.ndarray, grid: SpatialGrid, probe_node: int) -> float:
    """Centred second difference ``(U[j-1] - 2 U[j] + U[j+1]) / dx**2``."""
    if not 0 < probe_node < grid.n_intervals:
        raise ValueError(
            f"probe node {probe_node} is not interior (valid: 1..{grid.n_intervals - 1})"
        )
    left, mid, right = latest[probe_node - 1 : probe_node + 2].tolist()
    return (left - 2.0 * mid + right) / grid.dx**2


def next_dt(policy: TimestepPolicy, g: float) -> float:
    if policy.kind == "fixed":
        return policy.dt_fixed
    tanh = math.tanh(abs(g) / policy.curvature_scale)
    # coth -> inf as g -> 0, so the cap takes over
    if tanh == 0.0:
        return policy.dt_max
    return min(policy.dt_min / tanh, policy.dt_max)


__all__ = ["TimestepPolicy", "curvature_probe", "next_dt"]
