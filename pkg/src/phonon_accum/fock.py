"""Truncated phonon-number distributions and their entropies.

Every motional state handled by this package is diagonal in the Fock
basis, so a state is just the vector ``P(0), ..., P(n_max)``.  Mass beyond
``n_max`` is not stored; ``tail`` reports how much of it is missing.
"""
from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import DomainError, IncompleteDistributionWarning, SupportWarning

NEGATIVE_FLOOR = -1e-12
SUM_SLACK = 1e-9
DEFAULT_TAIL_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class PhononDistribution:
    """Immutable probability vector over Fock states ``|0>, ..., |n_max>``.

    Entries in ``[-1e-12, 0)`` are clamped to zero; anything more negative
    is rejected, as is a total above ``1 + 1e-9``.
    """

    probs: np.ndarray
    tail_tol: float = DEFAULT_TAIL_TOL

    def __post_init__(self):
        p = np.array(self.probs, dtype=float).ravel()
        if p.size == 0:
            raise DomainError("distribution needs at least one entry")
        if not np.all(np.isfinite(p)):
            raise DomainError("distribution contains non-finite entries")
        bad = np.flatnonzero(p < NEGATIVE_FLOOR)
        if bad.size:
            n = int(bad[0])
            raise DomainError(f"P({n}) = {p[n]:.3e} is negative beyond the clamp floor")
        p[p < 0] = 0.0
        if p.sum() > 1 + SUM_SLACK:
            raise DomainError(f"total probability {p.sum():.12f} exceeds 1")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @property
    def n_max(self) -> int:
        return self.probs.size - 1

    @property
    def total(self) -> float:
        return float(self.probs.sum())

    @property
    def tail(self) -> float:
        """Probability mass missing beyond ``n_max``."""
        return max(0.0, 1.0 - self.total)

    def is_complete(self, tail_tol=None) -> bool:
        tol = self.tail_tol if tail_tol is None else tail_tol
        return self.total >= 1.0 - tol

    def __len__(self):
        return self.probs.size

    def __getitem__(self, n):
        return self.probs[n]

    def __eq__(self, other):
        if not isinstance(other, PhononDistribution):
            return NotImplemented
        return np.array_equal(self.probs, other.probs)

    def __hash__(self):
        return hash(self.probs.tobytes())

    def __repr__(self):
        return f"PhononDistribution(n_max={self.n_max}, probs={np.array2string(self.probs, precision=4)})"

    def padded(self, n_max: int) -> "PhononDistribution":
        """Zero-pad (never truncate) to ``n_max``."""
        if n_max < self.n_max:
            raise DomainError(f"cannot pad down from n_max={self.n_max} to {n_max}")
        p = np.zeros(n_max + 1)
        p[: self.probs.size] = self.probs
        return PhononDistribution(p, self.tail_tol)

    def to_json(self) -> str:
        return json.dumps(self.probs.tolist())

    @classmethod
    def from_json(cls, text: str) -> "PhononDistribution":
        return cls(np.array(json.loads(text), dtype=float))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "P"])
        for n, p in enumerate(self.probs):
            w.writerow([n, repr(float(p))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "PhononDistribution":
        rows = [r for r in csv.reader(io.StringIO(text)) if r and not r[0].startswith("#")]
        if not rows or [c.strip() for c in rows[0]] != ["n", "P"]:
            raise DomainError('distribution CSV must start with header "n,P"')
        values = {}
        for i, row in enumerate(rows[1:], start=2):
            try:
                values[int(row[0])] = float(row[1])
            except (ValueError, IndexError) as exc:
                raise DomainError(f"row {i}: cannot parse {row!r}") from exc
        if not values:
            raise DomainError("distribution CSV has no rows")
        n_max = max(values)
        p = np.zeros(n_max + 1)
        for n, v in values.items():
            if n < 0:
                raise DomainError(f"negative phonon number {n}")
            p[n] = v
        return cls(p)


@dataclass(frozen=True)
class TruncationPolicy:
    """How far the Fock space may grow while iterating.

    ``adaptive`` drops trailing bins whose combined mass stays below
    ``tail_tol``; ``fixed`` pins the space at ``n_cap``.  Either way mass
    beyond ``n_cap`` above ``tail_tol`` is an error.
    """

    mode: str = "adaptive"
    n_cap: int = 128
    tail_tol: float = DEFAULT_TAIL_TOL

    def __post_init__(self):
        if self.mode not in ("adaptive", "fixed"):
            raise DomainError(f"unknown truncation mode {self.mode!r}")
        if self.n_cap < 1:
            raise DomainError("n_cap must be >= 1")
        if not 0 < self.tail_tol < 1e-3:
            raise DomainError("tail_tol must lie in (0, 1e-3)")

    def to_dict(self):
        return {"mode": self.mode, "n_cap": self.n_cap, "tail_tol": self.tail_tol}


def _check_n_bar(n_bar):
    if not n_bar >= 0 or not math.isfinite(n_bar):
        raise DomainError(f"mean phonon number must be finite and >= 0, got {n_bar}")


def thermal_distribution(n_bar: float, n_max: int) -> PhononDistribution:
    """Bose-Einstein populations ``n_bar**n / (n_bar + 1)**(n + 1)``, not renormalized."""
    _check_n_bar(n_bar)
    if n_max < 0:
        raise DomainError("n_max must be >= 0")
    n = np.arange(n_max + 1)
    if n_bar == 0:
        p = (n == 0).astype(float)
    else:
        p = np.exp(n * math.log(n_bar / (n_bar + 1)) - math.log1p(n_bar))
    return PhononDistribution(p)


def thermal_cutoff(n_bar: float, tail_tol: float = DEFAULT_TAIL_TOL) -> int:
    """Smallest ``n_max`` whose thermal tail ``(n_bar/(n_bar+1))**(n_max+1)`` is below ``tail_tol``."""
    _check_n_bar(n_bar)
    if n_bar == 0:
        return 0
    return max(0, math.ceil(math.log(tail_tol) / math.log(n_bar / (n_bar + 1))) - 1)


def poisson_distribution(n_bar: float, n_max: int) -> PhononDistribution:
    """Coherent-state statistics ``exp(-n_bar) n_bar**n / n!``."""
    _check_n_bar(n_bar)
    if n_max < 0:
        raise DomainError("n_max must be >= 0")
    n = np.arange(n_max + 1)
    if n_bar == 0:
        p = (n == 0).astype(float)
    else:
        p = np.exp(n * math.log(n_bar) - n_bar - gammaln(n + 1))
    return PhononDistribution(p)


def fock_state(n: int, n_max: int | None = None) -> PhononDistribution:
    if n < 0:
        raise DomainError("Fock index must be >= 0")
    n_max = n if n_max is None else n_max
    if n_max < n:
        raise DomainError("n_max below the Fock index")
    p = np.zeros(n_max + 1)
    p[n] = 1.0
    return PhononDistribution(p)


def _warn_if_incomplete(d: PhononDistribution, what: str, tail_tol=None):
    if not d.is_complete(tail_tol):
        warnings.warn(
            f"{what}: distribution is missing {d.tail:.3e} of its mass beyond n_max={d.n_max}",
            IncompleteDistributionWarning,
            stacklevel=3,
        )


def mean_phonon(d: PhononDistribution) -> float:
    """``sum n P(n)``; warns (does not fail) when ``d`` is incomplete."""
    _warn_if_incomplete(d, "mean_phonon")
    return float(np.arange(d.probs.size) @ d.probs)


def shannon_entropy(d: PhononDistribution) -> float:
    """Entropy in nats, with ``0 log 0 = 0``."""
    p = d.probs[d.probs > 0]
    return float(-(p * np.log(p)).sum())


def relative_entropy(p: PhononDistribution, q: PhononDistribution) -> float:
    """Kullback-Leibler divergence ``sum p log(p/q)`` in nats.

    Returns ``inf`` (with a :class:`SupportWarning`) if ``q`` vanishes where
    ``p`` does not.
    """
    if p.n_max != q.n_max:
        raise DomainError(f"n_max mismatch: {p.n_max} vs {q.n_max}")
    a, b = p.probs, q.probs
    support = a > 0
    if np.any(b[support] <= 0):
        n = int(np.flatnonzero(support & (b <= 0))[0])
        warnings.warn(f"q({n}) = 0 while p({n}) > 0", SupportWarning, stacklevel=2)
        return math.inf
    return float((a[support] * np.log(a[support] / b[support])).sum())


def renormalize(d: PhononDistribution) -> PhononDistribution:
    s = d.probs.sum()
    if s <= 0:
        raise DomainError("cannot renormalize an all-zero distribution")
    return PhononDistribution(d.probs / s, d.tail_tol)


def coverage_cutoff(d: PhononDistribution, coverage: float = 0.99) -> int:
    """Smallest ``n`` with ``sum_{m<=n} P(m) >= coverage``.

    Used to pick a common dimension for entropy comparisons across a family
    of measured states (the hottest one decides).
    """
    c = np.cumsum(d.probs)
    idx = np.flatnonzero(c >= coverage)
    if idx.size == 0:
        raise DomainError(f"distribution never reaches coverage {coverage}")
    return int(idx[0])


def thermality_report(d: PhononDistribution) -> dict:
    """Entropy of ``d`` and its divergence from thermal and Poisson references of equal mean."""
    nb = mean_phonon(renormalize(d))
    ref_th = renormalize(thermal_distribution(nb, d.n_max))
    ref_coh = renormalize(poisson_distribution(nb, d.n_max))
    return {
        "mean_phonon": nb,
        "entropy": shannon_entropy(d),
        "entropy_thermal": shannon_entropy(ref_th),
        "relative_entropy_thermal": relative_entropy(renormalize(d), ref_th),
        "relative_entropy_poisson": relative_entropy(renormalize(d), ref_coh),
    }


def as_distribution(x) -> PhononDistribution:
    return x if isinstance(x, PhononDistribution) else PhononDistribution(np.asarray(x, dtype=float))
