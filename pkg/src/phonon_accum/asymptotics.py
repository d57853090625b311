"""Long-time limit of ideal accumulation.

A level ``n`` with ``sin((gt/2) sqrt(n+1)) = 0`` cannot be left upward, so
repeated ideal steps pump every population up to the nearest such level
at or above it.  The limit is a mixture of these fixed-point Fock states,
weighted by partial sums of the initial distribution.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .fock import PhononDistribution

DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class FixedPointSet:
    pulse_area: float
    points: tuple
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        pts = tuple(int(n) for n in self.points)
        if any(b <= a for a, b in zip(pts, pts[1:])):
            raise DomainError("fixed points must be strictly increasing")
        object.__setattr__(self, "points", pts)

    def __iter__(self):
        return iter(self.points)

    def __len__(self):
        return len(self.points)


def _residual(pulse_area: float, n) -> np.ndarray:
    return np.abs(np.sin(0.5 * pulse_area * np.sqrt(np.asarray(n, dtype=float) + 1.0)))


def fixed_point_set(pulse_area: float, n_max: int, tol: float = DEFAULT_TOL) -> FixedPointSet:
    """All ``n <= n_max`` with ``|sin((gt/2) sqrt(n+1))| <= tol``.

    Loosen ``tol`` to analyze areas that only approximately satisfy the
    condition.  An empty set is a valid result.
    """
    if not pulse_area > 0:
        raise DomainError("pulse area must be > 0")
    if n_max < 0 or tol < 0:
        raise DomainError("n_max and tol must be nonnegative")
    n = np.arange(n_max + 1)
    return FixedPointSet(float(pulse_area), tuple(n[_residual(pulse_area, n) <= tol]), tol)


def pulse_area_for_target(n_target: int, l: int = 1) -> float:
    """Pulse area ``2 l pi / sqrt(n_target + 1)`` that makes ``n_target`` a fixed point."""
    if n_target < 0 or l < 1:
        raise DomainError("need n_target >= 0 and l >= 1")
    return 2.0 * l * math.pi / math.sqrt(n_target + 1)


@dataclass(frozen=True)
class AsymptoticReport:
    pulse_area: float
    fixed_points: FixedPointSet
    distribution: PhononDistribution
    unassigned_tail: float

    def to_dict(self):
        return {
            "pulse_area": self.pulse_area,
            "fixed_points": list(self.fixed_points.points),
            "P_infinity": {str(n): float(self.distribution.probs[n]) for n in self.fixed_points},
            "unassigned_tail": self.unassigned_tail,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def asymptotic_report(d0: PhononDistribution, pulse_area: float, tol: float = DEFAULT_TOL) -> AsymptoticReport:
    """Limit distribution on the fixed points ``<= d0.n_max``.

    Initial mass above the largest such fixed point has no destination
    inside the truncated space; it is returned as ``unassigned_tail`` and
    left out of the distribution rather than renormalized away.
    """
    fps = fixed_point_set(pulse_area, d0.n_max, tol)
    out = np.zeros(d0.n_max + 1)
    cum = np.concatenate([[0.0], np.cumsum(d0.probs)])
    lower = -1
    for n in fps:
        out[n] = cum[n + 1] - cum[lower + 1]
        lower = n
    assigned = float(cum[lower + 1])
    unassigned = float(cum[-1] - assigned)
    return AsymptoticReport(float(pulse_area), fps, PhononDistribution(out), max(unassigned, 0.0))


def asymptotic_distribution(d0: PhononDistribution, pulse_area: float, tol: float = DEFAULT_TOL) -> PhononDistribution:
    """``P_inf(n_j) = sum of P_0(m)`` over ``n_{j-1} < m <= n_j``; see :func:`asymptotic_report`."""
    return asymptotic_report(d0, pulse_area, tol).distribution


def thermal_fock_weight(n_bar: float, n_target: int) -> float:
    """Limit weight ``1 - (n_bar / (n_bar + 1))**(n_target + 1)`` of the lowest fixed point from a thermal state."""
    if n_bar < 0:
        raise DomainError("n_bar must be >= 0")
    return 1.0 - (n_bar / (n_bar + 1.0)) ** (n_target + 1)


def thermal_weight_crossing(n_target: int, level: float) -> float:
    """Largest thermal ``n_bar`` whose limit weight on the lowest fixed point ``n_target`` is at least ``level``."""
    if not 0 < level < 1:
        raise DomainError("level must lie in (0, 1)")
    q = (1.0 - level) ** (1.0 / (n_target + 1))
    return q / (1.0 - q)
