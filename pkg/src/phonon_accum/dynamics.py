"""One accumulation step and its repetition.

A step is a blue-sideband (anti-Jaynes-Cummings) pulse on the motion with
the spin starting in its ground state, followed by an optical reset of the
spin.  Tracing out the spin leaves a map on phonon populations:

* with probability ``1 - contrast`` nothing happens;
* otherwise population ``P(n)`` stays put with weight
  ``cos^2(pulse_area/2 * sqrt(n+1))`` and moves to ``n+1`` with the
  complementary weight;
* the moved part (spin excited, hence reset) picks up recoil heating.

Heating is the Gaussian random displacement channel with mean added energy
``eta_eff**2``; :func:`thermalization_map` is its second-order expansion and
:func:`exact_thermalization_oracle` evaluates the channel by quadrature.
"""
from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, IncompleteDistributionWarning, TruncationError, ValidityError
from .fock import NEGATIVE_FLOOR, PhononDistribution, TruncationPolicy

DEFAULT_CONTRAST = 0.97
DEFAULT_ETA_EFF = 0.17


@dataclass(frozen=True)
class StepParams:
    """Everything that defines one accumulation step.

    Attributes
    ----------
    pulse_area : float
        Sideband pulse area ``g t`` in radians; ``pi`` adds one phonon to
        the ground state.
    contrast : float
        Probability that the pulse acts at all.
    eta_eff : float
        Recoil-heating strength; each reset adds ``eta_eff**2`` phonons on
        average.
    """

    pulse_area: float = math.pi
    contrast: float = DEFAULT_CONTRAST
    eta_eff: float = DEFAULT_ETA_EFF

    def __post_init__(self):
        if not self.pulse_area > 0:
            raise DomainError("pulse_area must be > 0")
        if not 0 <= self.contrast <= 1:
            raise DomainError("contrast must lie in [0, 1]")
        if not self.eta_eff >= 0:
            raise DomainError("eta_eff must be >= 0")
        if self.eta_eff**2 >= 0.1:
            raise DomainError(f"eta_eff**2 = {self.eta_eff**2:.3f} is outside the small-heating regime (< 0.1)")

    def to_dict(self):
        return {"pulse_area": self.pulse_area, "contrast": self.contrast, "eta_eff": self.eta_eff}


def _stay_weights(n_max: int, pulse_area: float) -> np.ndarray:
    n = np.arange(n_max + 1)
    return np.cos(0.5 * pulse_area * np.sqrt(n + 1.0)) ** 2


def _branches(p: np.ndarray, pulse_area: float):
    """Populations left in place and populations promoted by one phonon.

    Both returned arrays have length ``len(p) + 1``.
    """
    c = _stay_weights(p.size - 1, pulse_area)
    stay = np.zeros(p.size + 1)
    up = np.zeros(p.size + 1)
    stay[:-1] = c * p
    # 1 - cos^2 loses relative precision where cos^2 ~ 1; sin^2 does not
    up[1:] = np.sin(0.5 * pulse_area * np.sqrt(np.arange(1, p.size + 1.0))) ** 2 * p
    return stay, up


def ideal_step(d: PhononDistribution, pulse_area: float) -> PhononDistribution:
    """Perfect-contrast, heating-free step; the result has one more bin than ``d``."""
    stay, up = _branches(d.probs, pulse_area)
    return PhononDistribution(stay + up, d.tail_tol)


def _expansion(p: np.ndarray, eta2: float, clip_outflow: bool = False):
    """Heating expansion in flux form; returns ``(P', clipped_mass)``.

    Bin ``n`` sends ``eta2 (n+1) P(n)`` up and ``eta2 n P(n)`` down.  With
    ``clip_outflow`` the two fluxes are scaled down wherever together they
    would exceed ``P(n)``, i.e. where ``eta2 (2n+1) > 1``.
    """
    n = np.arange(p.size + 1, dtype=float)
    q = np.zeros(p.size + 1)
    q[:-1] = p
    rate = eta2 * (2 * n + 1)
    scale = np.ones_like(q)
    if clip_outflow:
        over = rate > 1
        scale[over] = 1.0 / rate[over]
    up = scale * eta2 * (n + 1) * q
    down = scale * eta2 * n * q
    out = q - scale * rate * q
    out[1:] += up[:-1]
    out[:-1] += down[1:]
    clipped = float(q[scale < 1].sum())
    return out, clipped


def thermalization_map(d: PhononDistribution, eta_eff: float, clip_outflow: bool = False) -> PhononDistribution:
    """Second-order recoil heating on populations.

    ``P'(n) = P(n) + eta**2 [(n+1) P(n+1) + n P(n-1) - (2n+1) P(n)]``.  The
    output has one more bin than ``d`` so the trace is preserved exactly.
    The expansion stops being positive once ``eta**2 (2n+1) > 1``;
    ``clip_outflow=True`` limits the outflow of those bins to their own
    population instead of failing.

    Raises
    ------
    ValidityError
        If the expansion produces a population below ``-1e-12``.
    """
    out, _ = _expansion(d.probs, eta_eff**2, clip_outflow)
    bad = np.flatnonzero(out < NEGATIVE_FLOOR)
    if bad.size:
        n = int(bad[0])
        raise ValidityError(
            f"heating expansion broke down at n={n} (P'={out[n]:.3e}); eta_eff**2 (2n+1) is too large"
        )
    return PhononDistribution(out, d.tail_tol)


def _displacement_generator(dim: int, phase: float) -> np.ndarray:
    """Hermitian ``K`` with ``D(r e^{i phase}) = exp(-i r K)`` on ``dim`` levels."""
    a = np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1).astype(complex)
    u = np.exp(1j * phase)
    return 1j * (u * a.T - np.conj(u) * a)


def exact_thermalization_oracle(
    d: PhononDistribution,
    eta_eff: float,
    quad_order: int = 32,
    n_angles: int = 4,
    pad: int | None = None,
    guard: int = 4,
    leak_tol: float = 1e-10,
) -> PhononDistribution:
    """Gaussian-averaged displacement channel evaluated by quadrature.

    Averages ``D(alpha) rho D(alpha)^dag`` over
    ``exp(-|alpha|^2 / eta^2) / (pi eta^2)``: Gauss-Laguerre in ``|alpha|^2``
    and a uniform rule in the phase.  Displacements are exponentials of the
    truncated generator on ``n_max + 1 + pad`` levels.  The returned
    distribution drops the top ``guard`` levels of that space, after
    checking they hold less than ``leak_tol``.
    """
    if quad_order < 8:
        raise DomainError("quad_order must be >= 8")
    if eta_eff == 0:
        return d
    p = d.probs
    if pad is None:
        pad = 12 + int(math.ceil(6 * eta_eff * math.sqrt(d.n_max + 1) + 40 * eta_eff**2))
    dim = p.size + pad
    x, w = np.polynomial.laguerre.laggauss(quad_order)
    rho_in = np.zeros(dim)
    rho_in[: p.size] = p
    out = np.zeros(dim)
    for j in range(n_angles):
        lam, vecs = np.linalg.eigh(_displacement_generator(dim, 2 * math.pi * j / n_angles))
        for xi, wi in zip(x, w):
            disp = (vecs * np.exp(-1j * eta_eff * math.sqrt(xi) * lam)) @ vecs.conj().T
            out += (wi / n_angles) * (np.abs(disp) ** 2 @ rho_in)
    leaked = out[dim - guard :].sum()
    if leaked > leak_tol:
        raise TruncationError(
            f"displacement quadrature leaks {leaked:.2e} into the top {guard} of {dim} levels",
            suggested_n_cap=dim + pad,
        )
    out = out[: dim - guard]
    if abs(out.sum() - p.sum()) > 1e-8:
        raise TruncationError(f"quadrature lost {p.sum() - out.sum():.2e} of the trace", suggested_n_cap=dim + pad)
    return PhononDistribution(np.clip(out, 0.0, None), d.tail_tol)


def full_step(d: PhononDistribution, p: StepParams, clip_outflow: bool = False) -> PhononDistribution:
    """One imperfect step: contrast loss plus heating of the promoted branch.

    The output has two more bins than ``d``.  ``clip_outflow`` is passed on
    to :func:`thermalization_map`.
    """
    if p.contrast == 0:
        return d.padded(d.n_max + 2)
    stay, up = _branches(d.probs, p.pulse_area)
    heated = thermalization_map(PhononDistribution(up, d.tail_tol), p.eta_eff, clip_outflow).probs
    out = np.zeros(d.probs.size + 2)
    out[: d.probs.size] += (1 - p.contrast) * d.probs
    out[: stay.size] += p.contrast * stay
    out += p.contrast * heated
    return PhononDistribution(out, d.tail_tol)


def heating_edge(eta_eff: float) -> int:
    """Largest ``n`` for which the heating expansion is a stochastic map."""
    if eta_eff == 0:
        return np.iinfo(np.int64).max
    return int(math.floor((1.0 / eta_eff**2 - 1) / 2))


@dataclass(frozen=True)
class IterationTrace:
    """States ``rho_0 ... rho_k`` of one accumulation run.

    ``tail_loss`` is the mass discarded by truncation over all steps;
    ``edge_mass[k]`` is the population of state ``k`` above
    :func:`heating_edge`, where the heating expansion had to be flux-limited.
    """

    states: list
    params: StepParams
    policy: TruncationPolicy
    tail_loss: float = 0.0
    step_losses: tuple = field(default_factory=tuple)
    edge_mass: tuple = field(default_factory=tuple)

    def __len__(self):
        return len(self.states)

    def __getitem__(self, k) -> PhononDistribution:
        return self.states[k]

    @property
    def final(self) -> PhononDistribution:
        return self.states[-1]

    def population(self, n: int) -> np.ndarray:
        """``P_k(n)`` for every recorded ``k``."""
        return np.array([s.probs[n] if n <= s.n_max else 0.0 for s in self.states])

    def to_dict(self):
        return {
            "params": self.params.to_dict(),
            "policy": self.policy.to_dict(),
            "states": [s.probs.tolist() for s in self.states],
            "tail_loss": self.tail_loss,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, obj) -> "IterationTrace":
        return cls(
            states=[PhononDistribution(np.array(s)) for s in obj["states"]],
            params=StepParams(**obj["params"]),
            policy=TruncationPolicy(**obj["policy"]),
            tail_loss=float(obj.get("tail_loss", 0.0)),
        )

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "n", "P"])
        for k, s in enumerate(self.states):
            for n, pn in enumerate(s.probs):
                w.writerow([k, n, repr(float(pn))])
        return buf.getvalue()


def apply_policy(p: np.ndarray, policy: TruncationPolicy, budget: float):
    """Truncate ``p`` per ``policy``; return the kept vector and the dropped mass."""
    lost = 0.0
    if policy.mode == "adaptive":
        # drop trailing bins while their combined mass stays within budget
        rev = np.cumsum(p[::-1])
        droppable = int(np.searchsorted(rev, budget, side="right"))
        droppable = min(droppable, p.size - 1)
        if droppable:
            lost = float(rev[droppable - 1])
            p = p[: p.size - droppable]
    if p.size > policy.n_cap + 1:
        excess = float(p[policy.n_cap + 1 :].sum())
        if excess > policy.tail_tol:
            raise TruncationError(
                f"{excess:.3e} of the population lies above n_cap={policy.n_cap}",
                suggested_n_cap=2 * policy.n_cap,
            )
        lost += excess
        p = p[: policy.n_cap + 1]
    if policy.mode == "fixed" and p.size < policy.n_cap + 1:
        p = np.concatenate([p, np.zeros(policy.n_cap + 1 - p.size)])
    return p, lost


def iterate(
    d0: PhononDistribution,
    p: StepParams,
    k: int,
    policy: TruncationPolicy | None = None,
    step=None,
    clip_outflow: bool = True,
) -> IterationTrace:
    """Apply ``k`` identical steps, keeping every intermediate state.

    ``step`` defaults to :func:`full_step`; pass e.g.
    ``lambda d, p: ideal_step(d, p.pulse_area)`` for the ideal map.  Under
    the adaptive policy each step may discard at most ``tail_tol / (2k)``
    of trailing mass, leaving the other half of ``tail_tol`` for whatever
    ``d0`` itself is missing.

    Repeated application of the bare heating expansion is unstable in the
    far tail (``eta**2 (2n+1) > 1``), so by default the outflow there is
    flux-limited; the affected mass is reported in ``edge_mass``.
    """
    if k < 0:
        raise DomainError("number of repetitions must be >= 0")
    policy = policy or TruncationPolicy()
    if step is None:
        def step(d, params):
            return full_step(d, params, clip_outflow=clip_outflow)
    if not d0.is_complete(policy.tail_tol):
        warnings.warn(
            f"initial state is missing {d0.tail:.2e} beyond n_max={d0.n_max}",
            IncompleteDistributionWarning,
            stacklevel=2,
        )
    edge = heating_edge(p.eta_eff)
    budget = 0.5 * policy.tail_tol / max(k, 1)
    states = [d0]
    losses = []
    d = d0
    for _ in range(k):
        raw = step(d, p).probs
        kept, lost = apply_policy(raw, policy, budget)
        d = PhononDistribution(kept, policy.tail_tol)
        states.append(d)
        losses.append(lost)
    edge_mass = tuple(float(s.probs[edge + 1 :].sum()) if edge < s.n_max else 0.0 for s in states)
    return IterationTrace(states, p, policy, float(sum(losses)), tuple(losses), edge_mass)
