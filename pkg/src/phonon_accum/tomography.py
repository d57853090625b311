"""Blue-sideband Rabi-flop tomography of phonon populations.

Forward model::

    p(t) = sum_n P(n) sin^2(omega01 sqrt(n+1) t) exp(-gamma(n) t)
    gamma(n) = gamma0 (n+1)**beta

Each trace point is a fraction out of ``shots`` two-outcome detections, so
its projection noise is ``sqrt(p (1 - p) / shots)``.  Populations are
recovered by least squares on the probability simplex, and their
uncertainty by refitting traces resampled with that noise.
"""
from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import nnls

from .errors import DomainError, FitError
from .fock import PhononDistribution

KHZ = 1e3
US = 1e-6
# blue-sideband coupling g = 2 pi x 5.8 kHz; a pulse of area g t = pi is a
# full flop, so the flop frequency in sin^2(omega t) is g / 2
DEFAULT_OMEGA01 = math.pi * 5.8e3
DEFAULT_GAMMA0_KHZ = 0.32
DEFAULT_BETA = 0.5
DEFAULT_SHOTS = 100
DEFAULT_LAMB_DICKE = 0.063
# probe grid: evenly spaced over three ground-state flops, starting at t = 0
DEFAULT_POINTS = 300
DEFAULT_FLOPS = 3.0


@dataclass(frozen=True)
class DecayModel:
    """Sideband flop frequency and phenomenological damping.

    ``gamma0`` is in kHz (``10**3 / s``), ``omega01`` in rad/s.
    """

    gamma0: float = DEFAULT_GAMMA0_KHZ
    beta: float = DEFAULT_BETA
    omega01: float = DEFAULT_OMEGA01

    def __post_init__(self):
        if self.gamma0 < 0:
            raise DomainError("gamma0 must be >= 0")
        if not 0 <= self.beta <= 2:
            raise DomainError("beta must lie in [0, 2]")
        if not self.omega01 > 0:
            raise DomainError("omega01 must be > 0")

    def rate(self, n) -> np.ndarray:
        """Decay rate of the ``n -> n+1`` flop in 1/s."""
        return self.gamma0 * KHZ * (np.asarray(n, dtype=float) + 1.0) ** self.beta

    def frequency(self, n) -> np.ndarray:
        return self.omega01 * np.sqrt(np.asarray(n, dtype=float) + 1.0)

    @property
    def flop_time(self) -> float:
        """Duration of one full flop of the ground-state signal."""
        return math.pi / self.omega01

    def to_dict(self):
        return {"gamma0": self.gamma0, "beta": self.beta, "omega01": self.omega01}


@dataclass(frozen=True, eq=False)
class RabiTrace:
    """Excitation probabilities ``p_excited`` at ``times`` (seconds)."""

    times: np.ndarray
    p_excited: np.ndarray
    shots: int = DEFAULT_SHOTS

    def __post_init__(self):
        t = np.array(self.times, dtype=float).ravel()
        p = np.array(self.p_excited, dtype=float).ravel()
        if t.size != p.size:
            raise DomainError(f"{t.size} times but {p.size} probabilities")
        if t.size == 0:
            raise DomainError("empty trace")
        if np.any(np.diff(t) <= 0):
            i = int(np.flatnonzero(np.diff(t) <= 0)[0]) + 1
            raise DomainError(f"times must be strictly increasing (row {i + 1})")
        if np.any((p < 0) | (p > 1)):
            raise DomainError("excitation probabilities must lie in [0, 1]")
        if int(self.shots) < 1:
            raise DomainError("shots must be >= 1")
        t.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "p_excited", p)
        object.__setattr__(self, "shots", int(self.shots))

    def __len__(self):
        return self.times.size

    def to_csv(self, header_comment: str | None = None) -> str:
        buf = io.StringIO()
        if header_comment:
            buf.write(f"# {header_comment}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t_us", "p", "shots"])
        for t, p in zip(self.times, self.p_excited):
            w.writerow([repr(float(t / US)), repr(float(p)), self.shots])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "RabiTrace":
        """Parse ``t_us,p,shots`` rows; ``#`` lines are skipped."""
        lines = [(i, ln) for i, ln in enumerate(text.splitlines(), start=1) if ln.strip() and not ln.startswith("#")]
        if not lines:
            raise DomainError("empty Rabi trace file")
        header_line, header = lines[0]
        cols = [c.strip() for c in next(csv.reader([header]))]
        if cols != ["t_us", "p", "shots"]:
            raise DomainError(f'line {header_line}: expected header "t_us,p,shots", got {header!r}')
        ts, ps, shots = [], [], set()
        for lineno, ln in lines[1:]:
            row = next(csv.reader([ln]))
            if len(row) != 3:
                raise DomainError(f"line {lineno}: expected 3 columns, got {len(row)}")
            for col, (name, conv) in enumerate(zip(cols, (float, float, int))):
                try:
                    value = conv(row[col])
                except ValueError:
                    raise DomainError(f"line {lineno}, column {col + 1} ({name}): cannot parse {row[col]!r}") from None
                if col == 0:
                    ts.append(value * US)
                elif col == 1:
                    ps.append(value)
                else:
                    shots.add(value)
        if len(shots) > 1:
            raise DomainError(f"mixed shot counts {sorted(shots)} are not supported")
        return cls(np.array(ts), np.array(ps), shots.pop() if shots else DEFAULT_SHOTS)


def default_times(m: DecayModel, n_points: int = DEFAULT_POINTS, n_flops: float = DEFAULT_FLOPS) -> np.ndarray:
    return np.linspace(0.0, n_flops * m.flop_time, n_points)


def design_matrix(times, m: DecayModel, n_max: int) -> np.ndarray:
    """Column ``n`` is the flop signal of Fock state ``|n>``."""
    t = np.asarray(times, dtype=float)[:, None]
    n = np.arange(n_max + 1)
    return np.sin(m.frequency(n) * t) ** 2 * np.exp(-m.rate(n) * t)


def synthesize_rabi(d: PhononDistribution, m: DecayModel, times, shots: int = DEFAULT_SHOTS) -> RabiTrace:
    times = np.asarray(times, dtype=float)
    if np.any(times < 0):
        raise DomainError("times must be nonnegative")
    p = design_matrix(times, m, d.n_max) @ d.probs
    return RabiTrace(times, np.clip(p, 0.0, 1.0), shots)


def projection_sigma(p, shots: int):
    """``sqrt(p (1 - p) / shots)``; works elementwise on arrays."""
    p = np.asarray(p, dtype=float)
    if np.any((p < 0) | (p > 1)):
        raise DomainError("p must lie in [0, 1]")
    if shots < 1:
        raise DomainError("shots must be >= 1")
    s = np.sqrt(p * (1.0 - p) / shots)
    return float(s) if s.ndim == 0 else s


def simulate_measurement(trace: RabiTrace, seed, noise: str = "gaussian") -> RabiTrace:
    """Resample every point with projection noise.

    ``gaussian`` adds ``N(0, sigma(p))`` and clips to ``[0, 1]``;
    ``binomial`` draws ``Binomial(shots, p) / shots``.
    """
    rng = np.random.default_rng(seed)
    p = trace.p_excited
    if noise == "gaussian":
        new = np.clip(p + rng.standard_normal(p.size) * projection_sigma(p, trace.shots), 0.0, 1.0)
    elif noise == "binomial":
        new = rng.binomial(trace.shots, p) / trace.shots
    else:
        raise DomainError(f"unknown noise model {noise!r}")
    return RabiTrace(trace.times, new, trace.shots)


def _check_fit_inputs(trace: RabiTrace, m: DecayModel, n_max: int):
    if n_max < 0:
        raise DomainError("n_max must be >= 0")
    if np.unique(trace.times).size != trace.times.size:
        raise DomainError("duplicate probe times make the design ill-conditioned")
    if trace.times.max() - trace.times.min() < m.flop_time:
        raise DomainError("trace must span at least one full ground-state flop")
    if 3 * (n_max + 1) > len(trace):
        raise DomainError(f"{len(trace)} points cannot support {n_max + 1} populations (need 3 per bin)")


def simplex_lstsq(a: np.ndarray, y: np.ndarray, maxiter: int | None = None):
    """``argmin ||a x - y||`` subject to ``x >= 0`` and ``sum(x) = 1``.

    The equality is imposed as a heavily weighted extra row of a
    nonnegative least-squares problem, then removed by a final rescale.
    """
    scale = max(1.0, float(np.abs(a).max()))
    weight = 1e4 * scale * math.sqrt(a.shape[0])
    aug = np.vstack([a, weight * np.ones((1, a.shape[1]))])
    rhs = np.concatenate([y, [weight]])
    try:
        x, _ = nnls(aug, rhs, maxiter=maxiter)
    except RuntimeError as exc:
        raise FitError(f"nonnegative least squares did not converge: {exc}") from exc
    total = x.sum()
    if total <= 0:
        raise FitError("fit collapsed to the zero vector", best=x)
    return x / total


def fit_distribution(
    trace: RabiTrace,
    m: DecayModel,
    n_max: int,
    weighting: str = "uniform",
    lamb_dicke: float | None = DEFAULT_LAMB_DICKE,
    maxiter: int | None = None,
) -> PhononDistribution:
    """Least-squares populations on the simplex with the decay model held fixed.

    ``weighting="sigma"`` divides each residual by its projection noise
    (floored at half a count).  A warning is issued when the Lamb-Dicke
    condition ``lamb_dicke**2 (2 n_max + 1) <= 0.1`` fails.
    """
    _check_fit_inputs(trace, m, n_max)
    if lamb_dicke is not None and lamb_dicke**2 * (2 * n_max + 1) > 0.1:
        warnings.warn(
            f"eta^2 (2 n_max + 1) = {lamb_dicke**2 * (2 * n_max + 1):.3f} exceeds 0.1; "
            "the sideband model is outside the Lamb-Dicke regime",
            stacklevel=2,
        )
    a = design_matrix(trace.times, m, n_max)
    y = trace.p_excited
    if weighting == "sigma":
        floor = 0.5 / trace.shots
        w = 1.0 / np.maximum(projection_sigma(y, trace.shots), floor)
        a, y = a * w[:, None], y * w
    elif weighting != "uniform":
        raise DomainError(f"unknown weighting {weighting!r}")
    return PhononDistribution(simplex_lstsq(a, y, maxiter))


def residual_rms(trace: RabiTrace, d: PhononDistribution, m: DecayModel) -> float:
    model = design_matrix(trace.times, m, d.n_max) @ d.probs
    return float(np.sqrt(np.mean((trace.p_excited - model) ** 2)))


def total_variation(p: PhononDistribution, q: PhononDistribution) -> float:
    n = max(p.n_max, q.n_max)
    return 0.5 * float(np.abs(p.padded(n).probs - q.padded(n).probs).sum())


@dataclass(frozen=True)
class FitResult:
    distribution: PhononDistribution
    residual_rms: float
    mc_samples: list
    per_bin_sigma: np.ndarray
    failures: int = 0
    config: dict = field(default_factory=dict)

    def to_dict(self, n_sigma: float = 3.0):
        return {
            "P": self.distribution.probs.tolist(),
            "sigma": self.per_bin_sigma.tolist(),
            "error_bar": (n_sigma * self.per_bin_sigma).tolist(),
            "error_bar_sigmas": n_sigma,
            "residual_rms": self.residual_rms,
            "resamples": len(self.mc_samples),
            "failures": self.failures,
            "config": self.config,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def monte_carlo_uncertainty(
    trace: RabiTrace,
    m: DecayModel,
    n_max: int,
    n_resamples: int = 100,
    seed: int = 0,
    noise: str = "gaussian",
    weighting: str = "uniform",
) -> FitResult:
    """Central fit plus ``n_resamples`` refits of noise-resampled copies of ``trace``.

    Resample ``i`` draws from its own stream spawned from ``seed``, so the
    result does not depend on evaluation order.  Failed refits are dropped;
    more than 20% failures is an error.
    """
    if n_resamples < 2:
        raise DomainError("need at least 2 resamples")
    central = fit_distribution(trace, m, n_max, weighting)
    streams = np.random.SeedSequence(seed).spawn(n_resamples)
    samples, failures = [], 0
    for ss in streams:
        try:
            samples.append(fit_distribution(simulate_measurement(trace, ss, noise), m, n_max, weighting, lamb_dicke=None))
        except FitError:
            failures += 1
    if failures > 0.2 * n_resamples or len(samples) < 2:
        raise FitError(f"{failures} of {n_resamples} resampled fits failed", best=central)
    stack = np.array([s.probs for s in samples])
    sigma = stack.std(axis=0, ddof=1)
    config = {
        "decay_model": m.to_dict(),
        "n_max": n_max,
        "n_resamples": n_resamples,
        "seed": seed,
        "noise": noise,
        "weighting": weighting,
        "shots": trace.shots,
    }
    return FitResult(central, residual_rms(trace, central, m), samples, sigma, failures, config)
