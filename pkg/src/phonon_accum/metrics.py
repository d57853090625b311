"""Population-based nonclassicality witnesses: Fano factor, Klyshko, Wigner."""
from __future__ import annotations

import math
import warnings

import numpy as np

from .errors import DomainError, IncompleteDistributionWarning, UndefinedMetricError
from .fock import PhononDistribution


def fano_factor(d: PhononDistribution) -> float:
    """Variance over mean of the phonon number.

    Raises
    ------
    UndefinedMetricError
        For a distribution with zero mean (the ground state).
    """
    n = np.arange(d.probs.size, dtype=float)
    mean = float(n @ d.probs)
    if mean <= 0:
        raise UndefinedMetricError("Fano factor is undefined for zero mean phonon number")
    var = float((n - mean) ** 2 @ d.probs)
    return var / mean


def klyshko(d: PhononDistribution, n: int) -> float:
    """``K_n = n P(n)^2 - (n+1) P(n+1) P(n-1)``.

    No mixture of coherent states has ``K_n > 0``; a Fock state ``|n>``
    gives ``K_n = n``.
    """
    if not 1 <= n <= d.n_max - 1:
        raise DomainError(f"Klyshko order {n} needs 1 <= n <= n_max - 1 = {d.n_max - 1}")
    p = d.probs
    return float(n * p[n] ** 2 - (n + 1) * p[n + 1] * p[n - 1])


def klyshko_series(d: PhononDistribution, orders=None):
    orders = range(1, d.n_max) if orders is None else orders
    return [(n, klyshko(d, n)) for n in orders]


def wigner_origin(d: PhononDistribution) -> float:
    """Phase-space value at the origin, ``(2/pi) sum (-1)^n P(n)`` (vacuum gives 2/pi)."""
    if not d.is_complete(1e-3):
        warnings.warn(
            f"wigner_origin: {d.tail:.2e} of the population lies beyond n_max={d.n_max}",
            IncompleteDistributionWarning,
            stacklevel=2,
        )
    sign = 1.0 - 2.0 * (np.arange(d.probs.size) % 2)
    return float(2.0 / math.pi * (sign @ d.probs))


def laguerre_table(n_max: int, z) -> np.ndarray:
    """``L_0(z) ... L_{n_max}(z)`` by the three-term recurrence; shape ``(n_max+1,) + z.shape``."""
    z = np.asarray(z, dtype=float)
    out = np.empty((n_max + 1,) + z.shape)
    out[0] = 1.0
    if n_max >= 1:
        out[1] = 1.0 - z
    for k in range(1, n_max):
        out[k + 1] = ((2 * k + 1 - z) * out[k] - k * out[k - 1]) / (k + 1)
    return out


def wigner_radial(d: PhononDistribution, xs) -> np.ndarray:
    """Cut ``W(x, 0)`` of the phase-randomized state with populations ``d``.

    ``W(x, 0) = (2/pi) sum_n P(n) (-1)^n exp(-2 x^2) L_n(4 x^2)``, same
    normalization as :func:`wigner_origin`.
    """
    xs = np.asarray(xs, dtype=float)
    lag = laguerre_table(d.n_max, 4.0 * xs**2)
    sign = 1.0 - 2.0 * (np.arange(d.probs.size) % 2)
    series = np.tensordot(sign * d.probs, lag, axes=(0, 0))
    return 2.0 / math.pi * np.exp(-2.0 * xs**2) * series
