r"""Non-uniform L1 discretization of the Caputo derivative.

On a mesh :math:`0 = t_0 < t_1 < \dots < t_n` the derivative of order
:math:`0 < \gamma < 1` is approximated by

.. math::

    \frac{1}{\Gamma(2-\gamma)} \sum_{m=0}^{n-1} T_{m,n}
        \left[y(t_{m+1}^-) - y(t_m^+)\right],
    \qquad
    T_{m,n} = \frac{(t_n - t_m)^{1-\gamma} - (t_n - t_{m+1})^{1-\gamma}}
                   {t_{m+1} - t_m},

which allows jumps of :math:`y` at the nodes. The scaled weights
:math:`\tilde T_{m,n} = (t_n - t_{n-1})^\gamma T_{m,n}` satisfy
:math:`\tilde T_{n-1,n} = 1`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from subdiff.core import SolutionHistory, TemporalMesh

Array = np.ndarray


@dataclass(frozen=True, slots=True)
class CaputoWeights:
    """Weights ``T_{m,n}`` (``raw``) and ``T~_{m,n}`` (``scaled``), m = 0..n-1."""

    step_index: int
    raw: Array
    scaled: Array


def _mesh_times(mesh: TemporalMesh | Array) -> Array:
    # the raw buffer may extend past the filled part; callers index below len
    if isinstance(mesh, TemporalMesh):
        return mesh._buf, len(mesh)
    t = np.ascontiguousarray(mesh, dtype=np.float64)
    return t, t.size


#: Below this many nodes the powers are cheaper inside the compiled kernel
#: than through a numpy call; above it numpy's vectorized pow wins.
VECTOR_POW_MIN = 128


def _distance_powers(t: Array, n: int, gamma: float) -> Array:
    return (t[n] - t[: n + 1]) ** (1.0 - gamma)


@njit(cache=True)
def _distance_powers_scalar(t, n, gamma):
    alpha = 1.0 - gamma
    out = np.empty(n + 1)
    for m in range(n + 1):
        out[m] = (t[n] - t[m]) ** alpha
    return out


@njit(cache=True)
def _l1_weights(t, powers, n, gamma):
    raw = np.empty(n)
    scaled = np.empty(n)
    h = (t[n] - t[n - 1]) ** gamma
    for m in range(n):
        raw[m] = (powers[m] - powers[m + 1]) / (t[m + 1] - t[m])
        scaled[m] = raw[m] * h
    return raw, scaled


def compute_weights(
    mesh: TemporalMesh | Array, n: int, gamma: float, *, allow_unit_gamma: bool = False
) -> CaputoWeights:
    """L1 weights for the derivative at node ``t_n``.

    The last raw entry reduces to ``(t_n - t_{n-1})**(-gamma)``; it is evaluated
    by the general formula so that ``scaled[n-1]`` is 1 up to rounding.
    """
    t, size = _mesh_times(mesh)
    if not 1 <= n < size:
        raise ValueError(f"step index n={n} out of range for a mesh of {size} nodes")
    upper_ok = gamma <= 1.0 if allow_unit_gamma else gamma < 1.0
    if not (gamma > 0.0 and upper_ok):
        raise ValueError(f"gamma must satisfy 0 < gamma < 1 (got {gamma})")

    raw, scaled = _l1_weights(t, _distance_powers(t, n, gamma), n, float(gamma))
    return CaputoWeights(n, raw, scaled)


def caputo_l1(
    samples_left: Array,
    samples_right: Array,
    mesh: TemporalMesh | Array,
    n: int,
    gamma: float,
) -> float:
    """L1 estimate of the Caputo derivative of ``y`` at ``t_n``.

    Parameters
    ----------
    samples_left, samples_right
        ``y(t_m^-)`` and ``y(t_m^+)`` at the mesh nodes; for a continuous
        function pass the same samples twice.
    mesh
        Node times, at least ``n + 1`` of them.
    """
    y_minus = np.asarray(samples_left, dtype=float)
    y_plus = np.asarray(samples_right, dtype=float)
    if y_minus.shape != y_plus.shape:
        raise ValueError(
            f"left/right sample lengths differ: {y_minus.shape} vs {y_plus.shape}"
        )
    if y_minus.shape[0] < n + 1:
        raise ValueError(f"need at least {n + 1} samples, got {y_minus.shape[0]}")
    w = compute_weights(mesh, n, gamma)
    jumps = y_minus[1 : n + 1] - y_plus[:n]
    return float(w.raw @ jumps) / math.gamma(2.0 - gamma)


def memory_operator(history: SolutionHistory, weights: CaputoWeights, n: int) -> Array:
    r"""History term of the implicit scheme at step ``n``.

    Returns, for every node,
    :math:`V^{(n-1)} - \sum_{m=0}^{n-2} \tilde T_{m,n} [U^{(m+1)} - V^{(m)}]`.
    With no impulses ``V = U`` and this is the classical memory operator.
    """
    if weights.step_index != n:
        raise ValueError(f"weights are for step {weights.step_index}, not {n}")
    if len(history) < n:
        raise ValueError(f"history has {len(history)} levels, step {n} needs {n}")
    return _memory_sum(history.v_right[n - 1], history.increments, weights.scaled, n)


@njit(cache=True)
def _memory_sum(v_prev, increments, scaled, n):
    out = v_prev.copy()
    width = out.size
    for m in range(n - 1):
        w = scaled[m]
        for j in range(width):
            out[j] -= w * increments[m, j]
    return out


__all__ = ["CaputoWeights", "caputo_l1", "compute_weights", "memory_operator"]
