r"""Closed-form and series reference solutions.

The free-space propagator of the subdiffusion equation is

.. math::

    G(x, t) = \frac{1}{\sqrt{4 K t^\gamma}} \sum_{k \ge 0}
        \frac{(-z)^k}{k!\, \Gamma(1 - \gamma (k + 1) / 2)},
    \qquad z = \frac{|x|}{\sqrt{K t^\gamma}},

i.e. the residue series of :math:`H^{1,0}_{1,1}` (a Wright function of
the second kind). The prefactor carries no :math:`\sqrt\pi`: with it the
density would integrate to :math:`1/\sqrt\pi` and the :math:`\gamma = 1`
limit would miss the Gaussian.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass

import mpmath
import numpy as np
from scipy.special import gammaln, rgamma

from subdiff.core import ProblemSpec

MAX_TERMS = 10_000


class SeriesConvergenceError(ArithmeticError):
    """The propagator series needs more than ``MAX_TERMS`` terms."""


def caputo_of_power(t, p: float, gamma: float):
    r"""Exact Caputo derivative of :math:`t^p`, :math:`\Gamma(p+1)/\Gamma(p+1-\gamma)\, t^{p-\gamma}`."""
    if p < 1.0:
        raise ValueError(f"p must be >= 1 (got {p})")
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"gamma must satisfy 0 < gamma < 1 (got {gamma})")
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0.0):
        raise ValueError("t must be >= 0")
    coeff = math.gamma(p + 1.0) / math.gamma(p + 1.0 - gamma)
    out = coeff * t_arr ** (p - gamma)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ManufacturedProblem:
    exact_u: Callable
    forcing: Callable
    problem: ProblemSpec


def make_manufactured(
    gamma: float, k_coeff: float = 1.0, domain: Sequence[float] = (0.0, 1.0)
) -> ManufacturedProblem:
    """Problem with exact solution ``(1 + t**2) sin(pi x)``.

    On ``[0, 1]`` the boundary values vanish; on other domains they are
    sampled from the exact solution.
    """
    x_left, x_right = (float(v) for v in domain)

    def exact_u(x, t):
        return (1.0 + t * t) * np.sin(np.pi * np.asarray(x, dtype=float))

    def forcing(x, t):
        amplitude = caputo_of_power(t, 2.0, gamma) + k_coeff * np.pi**2 * (1.0 + t * t)
        return amplitude * np.sin(np.pi * np.asarray(x, dtype=float))

    def ic(x):
        return exact_u(x, 0.0)

    problem = ProblemSpec(
        gamma=gamma,
        k_coeff=k_coeff,
        domain=(x_left, x_right),
        bc=(lambda t: float(exact_u(x_left, t)), lambda t: float(exact_u(x_right, t))),
        ic=ic,
        source=forcing,
    )
    return ManufacturedProblem(exact_u, forcing, problem)


@dataclass(frozen=True)
class SeriesResult:
    value: float
    n_terms: int
    underflow: bool = False
    digits: int = 15


def _log_term_magnitudes(z: float, nu: float, k: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return k * math.log(z) - gammaln(k + 1.0) - gammaln(1.0 - nu * (k + 1.0))


def _asymptotic_exponent(z: float, nu: float) -> float:
    return (1.0 - nu) * (nu**nu * z) ** (1.0 / (1.0 - nu))


def _asymptotic_envelope(z: float, nu: float) -> float:
    """Leading large-``z`` behaviour ``A Y**(nu - 1/2) exp(-Y)`` of the series."""
    y = _asymptotic_exponent(z, nu)
    log_env = (nu - 0.5) * math.log(y) - y - 0.5 * math.log(2.0 * math.pi * (1.0 - nu))
    return math.exp(log_env) if log_env > -745.0 else 0.0


def wright_series(z: float, gamma: float, tol: float = 1.0e-15) -> SeriesResult:
    r"""Sum :math:`\sum_k (-z)^k / (k!\,\Gamma(1 - \gamma(k+1)/2))` to absolute accuracy ``tol``.

    Terms at gamma-function poles vanish. The magnitude of the largest term
    decides the working precision: double precision when cancellation costs
    less than ``tol``, otherwise :mod:`mpmath` with enough digits to absorb it.
    """
    if z < 0.0:
        raise ValueError("z must be >= 0")
    if not tol > 0.0:
        raise ValueError("tol must be > 0")
    nu = 0.5 * gamma
    if z == 0.0:
        return SeriesResult(float(rgamma(1.0 - nu)), 1)
    # deep in the tail the envelope is accurate and far below tol
    if _asymptotic_exponent(z, nu) > 25.0 and _asymptotic_envelope(z, nu) < 1.0e-3 * tol:
        return SeriesResult(0.0, 0, underflow=True)

    log_tol = math.log(tol)
    k = np.arange(MAX_TERMS + 2, dtype=float)
    log_mag = _log_term_magnitudes(z, nu, k)
    peak = int(np.argmax(log_mag))
    tail = np.nonzero(log_mag[peak:] < log_tol - math.log(10.0))[0]
    # the first small term past the peak has to be followed by another small one
    n_terms = None
    for offset in tail:
        idx = peak + int(offset)
        if idx + 1 < log_mag.size and log_mag[idx + 1] < log_tol - math.log(10.0):
            n_terms = idx
            break
    if n_terms is None:
        if _asymptotic_envelope(z, nu) < tol:
            return SeriesResult(0.0, 0, underflow=True)
        raise SeriesConvergenceError(
            f"series at z={z}, gamma={gamma} needs more than {MAX_TERMS} terms"
        )
    n_terms = max(n_terms, 1)

    log_peak = float(log_mag[peak])
    if log_peak + math.log(1.0e-13) < log_tol:
        kk = k[:n_terms]
        signs = np.where(kk % 2 == 0, 1.0, -1.0)
        terms = signs * np.exp(kk * math.log(z) - gammaln(kk + 1.0)) * rgamma(
            1.0 - nu * (kk + 1.0)
        )
        return SeriesResult(float(math.fsum(terms)), n_terms)

    digits = int(math.ceil((log_peak - log_tol) / math.log(10.0))) + 10
    with mpmath.workdps(digits):
        zm = mpmath.mpf(z)
        num = mpmath.mpf(gamma) / 2
        term = mpmath.mpf(1)
        total = mpmath.mpf(0)
        for i in range(n_terms):
            if i:
                term *= -zm / i
            total += term * mpmath.rgamma(1 - num * (i + 1))
        value = float(total)
    return SeriesResult(value, n_terms, digits=digits)


def _check_gamma(gamma: float) -> None:
    if not 0.0 < gamma <= 1.0:
        raise ValueError(f"gamma must satisfy 0 < gamma <= 1 (got {gamma})")


def propagator(
    x: float, t: float, gamma: float, k_coeff: float = 1.0, tol: float = 1.0e-14
) -> float:
    """Free-space Green's function for a unit delta released at ``x = 0, t = 0``.

    ``gamma = 1`` is accepted and reproduces the heat kernel.
    """
    _check_gamma(gamma)
    if not t > 0.0:
        raise ValueError(f"t must be > 0 (got {t})")
    if not k_coeff > 0.0:
        raise ValueError(f"k_coeff must be > 0 (got {k_coeff})")
    spread = k_coeff * t**gamma
    prefactor = 1.0 / math.sqrt(4.0 * spread)
    z = abs(x) / math.sqrt(spread)
    return prefactor * wright_series(z, gamma, tol / prefactor).value


def point_source_exact(
    x: float,
    t: float,
    gamma: float,
    k_coeff: float = 1.0,
    *,
    side: str = "left",
    injection_times: Sequence[float] | None = None,
    location: float = 0.0,
    weight: float = 1.0,
    tol: float = 1.0e-14,
) -> float:
    """Superposition of propagators for deltas released at ``injection_times``.

    By default one unit delta is released at ``x = 0`` at every integer time
    ``0, 1, ..., floor(t)``. At an injection instant the left limit omits
    the new delta; the right limit includes it, which is infinite at the
    source and zero elsewhere.
    """
    if side not in ("left", "right"):
        raise ValueError(f"side must be 'left' or 'right' (got {side!r})")
    if not t > 0.0:
        raise ValueError(f"t must be > 0 (got {t})")
    if injection_times is None:
        injection_times = range(int(math.floor(t)) + 1)
    eps = 1.0e-12 * max(1.0, t)
    total = 0.0
    for tau in injection_times:
        age = t - float(tau)
        if age > eps:
            total += weight * propagator(x - location, age, gamma, k_coeff, tol)
        elif abs(age) <= eps and side == "right":
            total += math.inf if x == location else 0.0
    return total


__all__ = [
    "ManufacturedProblem",
    "SeriesConvergenceError",
    "SeriesResult",
    "caputo_of_power",
    "make_manufactured",
    "point_source_exact",
    "propagator",
    "wright_series",
]
