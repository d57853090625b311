"""YAML experiment configuration.

Example::

    initial: {type: thermal, n_bar: 1.19}
    step: {pulse_area_pi: 1.0, contrast: 0.97, eta_eff: 0.17}
    repetitions: 20
    truncation: {mode: adaptive, n_cap: 128, tail_tol: 1.0e-9}
    metrics: {levels: [0, 1, 2, 3, 4]}
    tomography: {gamma0: 0.32, beta: 0.5, shots: 100, resamples: 100, seed: 0}
    outputs: {directory: out, formats: [csv]}

Every section is optional.  The step's pulse area is given either in
radians (``pulse_area``) or in units of pi (``pulse_area_pi``).  Only the
output directory and the seed may be overridden from the environment, via
``PHONON_ACCUM_OUT`` and ``PHONON_ACCUM_SEED``.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np
import yaml

from .dynamics import StepParams
from .errors import ConfigError, DomainError
from .fock import PhononDistribution, TruncationPolicy, fock_state, thermal_cutoff, thermal_distribution
from .tomography import DEFAULT_FLOPS, DEFAULT_POINTS, DecayModel

ENV_OUT = "PHONON_ACCUM_OUT"
ENV_SEED = "PHONON_ACCUM_SEED"
MAX_REPETITIONS = 10_000


@dataclass(frozen=True)
class ExperimentalConstants:
    """Trap and laser parameters of the reference setup (SI units, angular frequencies in rad/s)."""

    axial_frequency: float = 2 * math.pi * 1.2e6
    lamb_dicke_729: float = 0.063
    carrier_rabi: float = 2 * math.pi * 92e3
    sideband_coupling: float = 2 * math.pi * 5.8e3
    pulse_length: float = 91e-6

    def to_dict(self):
        return dict(self.__dict__)


CONSTANTS = ExperimentalConstants()


@dataclass(frozen=True)
class InitialState:
    type: str = "thermal"
    n_bar: float | None = 1.19
    n: int | None = None
    probs: tuple | None = None
    n_max: int | None = None

    def build(self, tail_tol: float = 1e-9) -> PhononDistribution:
        """Initial populations; an automatic thermal cutoff uses half of ``tail_tol``."""
        if self.type == "thermal":
            n_max = self.n_max if self.n_max is not None else thermal_cutoff(self.n_bar, 0.5 * tail_tol)
            return thermal_distribution(self.n_bar, n_max)
        if self.type == "fock":
            return fock_state(self.n, self.n_max)
        return PhononDistribution(np.array(self.probs, dtype=float))

    def to_dict(self):
        out = {"type": self.type}
        if self.type == "thermal":
            out["n_bar"] = self.n_bar
        elif self.type == "fock":
            out["n"] = self.n
        else:
            out["probs"] = list(self.probs)
        if self.n_max is not None:
            out["n_max"] = self.n_max
        return out


@dataclass(frozen=True)
class MetricsConfig:
    levels: tuple = (0, 1, 2, 3, 4)
    klyshko_orders: tuple = (1, 2, 3, 4)
    wigner_x_max: float = 2.5
    wigner_points: int = 101

    def to_dict(self):
        return {
            "levels": list(self.levels),
            "klyshko_orders": list(self.klyshko_orders),
            "wigner_x_max": self.wigner_x_max,
            "wigner_points": self.wigner_points,
        }


@dataclass(frozen=True)
class TomographyConfig:
    decay: DecayModel = field(default_factory=DecayModel)
    shots: int = 100
    resamples: int = 100
    seed: int = 0
    n_max: int = 7
    points: int = DEFAULT_POINTS
    flops: float = DEFAULT_FLOPS
    noise: str = "gaussian"
    weighting: str = "uniform"

    def to_dict(self):
        out = self.decay.to_dict()
        out.update(
            shots=self.shots,
            resamples=self.resamples,
            seed=self.seed,
            n_max=self.n_max,
            points=self.points,
            flops=self.flops,
            noise=self.noise,
            weighting=self.weighting,
        )
        return out


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "out"
    formats: tuple = ("csv",)

    def to_dict(self):
        return {"directory": self.directory, "formats": list(self.formats)}


@dataclass(frozen=True)
class ExperimentConfig:
    initial: InitialState = field(default_factory=InitialState)
    step: StepParams = field(default_factory=StepParams)
    repetitions: int = 20
    truncation: TruncationPolicy = field(default_factory=TruncationPolicy)
    metrics: MetricsConfig = field(default_factory=MetricsConfig)
    tomography: TomographyConfig = field(default_factory=TomographyConfig)
    outputs: OutputConfig = field(default_factory=OutputConfig)

    def to_dict(self):
        step = self.step.to_dict()
        step["pulse_area_pi"] = self.step.pulse_area / math.pi
        return {
            "initial": self.initial.to_dict(),
            "step": step,
            "repetitions": self.repetitions,
            "truncation": self.truncation.to_dict(),
            "metrics": self.metrics.to_dict(),
            "tomography": self.tomography.to_dict(),
            "outputs": self.outputs.to_dict(),
        }

    def initial_distribution(self) -> PhononDistribution:
        return self.initial.build(self.truncation.tail_tol)


def _line_index(text: str) -> dict:
    """Map dotted key paths to 1-based line numbers."""
    index = {}

    def walk(node, path):
        if isinstance(node, yaml.MappingNode):
            for key, value in node.value:
                p = f"{path}.{key.value}" if path else str(key.value)
                index[p] = key.start_mark.line + 1
                walk(value, p)

    try:
        root = yaml.compose(text)
    except yaml.YAMLError:
        return index
    if root is not None:
        walk(root, "")
    return index


class _Section:
    """Typed access to one mapping, tracking consumed keys and their lines."""

    def __init__(self, data, path, lines):
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise ConfigError("expected a mapping", path, lines.get(path))
        self.data, self.path, self.lines = data, path, lines
        self.used = set()

    def _where(self, key):
        p = f"{self.path}.{key}" if self.path else key
        return p, self.lines.get(p, self.lines.get(self.path))

    def get(self, key, kind, default):
        self.used.add(key)
        if key not in self.data or self.data[key] is None:
            return default
        value = self.data[key]
        p, line = self._where(key)
        try:
            if kind is int:
                if isinstance(value, bool) or not float(value).is_integer():
                    raise ValueError
                return int(value)
            if kind is float:
                if isinstance(value, bool):
                    raise ValueError
                return float(value)
            if kind is str:
                if not isinstance(value, str):
                    raise ValueError
                return value
            if kind is list:
                if not isinstance(value, list):
                    raise ValueError
                return value
        except (TypeError, ValueError):
            raise ConfigError(f"expected {kind.__name__}, got {value!r}", p, line) from None
        raise TypeError(kind)

    def sub(self, key):
        self.used.add(key)
        p, _ = self._where(key)
        return _Section(self.data.get(key), p, self.lines)

    def error(self, key, message):
        p, line = self._where(key)
        return ConfigError(message, p, line)

    def finish(self):
        extra = sorted(set(self.data) - self.used, key=str)
        if extra:
            raise self.error(str(extra[0]), "unknown key")


def _build(section, key, fn):
    """Run a dataclass constructor, re-raising its domain errors with location."""
    try:
        return fn()
    except ConfigError:
        raise
    except DomainError as exc:
        named = [k for k in section.data if str(k) in str(exc)]
        raise section.error(str(named[0]) if named else key, str(exc)) from None


def parse_config(text: str, env=None) -> ExperimentConfig:
    """Parse YAML text into a validated :class:`ExperimentConfig`."""
    env = os.environ if env is None else env
    try:
        data = yaml.safe_load(text) if text.strip() else {}
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"YAML syntax error: {getattr(exc, 'problem', exc)}", line=mark.line + 1 if mark else None) from None
    lines = _line_index(text)
    root = _Section(data, "", lines)

    s = root.sub("initial")
    kind = s.get("type", str, "thermal")
    if kind not in ("thermal", "fock", "explicit"):
        raise s.error("type", f"must be thermal, fock or explicit, got {kind!r}")
    n_max = s.get("n_max", int, None)
    if kind == "thermal":
        initial = InitialState("thermal", s.get("n_bar", float, 1.19), n_max=n_max)
        if not initial.n_bar >= 0:
            raise s.error("n_bar", "must be >= 0")
    elif kind == "fock":
        n = s.get("n", int, None)
        if n is None or n < 0:
            raise s.error("n", "fock state needs an integer n >= 0")
        initial = InitialState("fock", None, n=n, n_max=n_max)
    else:
        probs = s.get("probs", list, None)
        if not probs:
            raise s.error("probs", "explicit state needs a nonempty probs list")
        try:
            probs = tuple(float(x) for x in probs)
        except (TypeError, ValueError):
            raise s.error("probs", "entries must be numbers") from None
        initial = InitialState("explicit", None, probs=probs)
        _build(s, "probs", lambda: PhononDistribution(np.array(probs)))
    s.finish()

    s = root.sub("step")
    area = s.get("pulse_area", float, None)
    area_pi = s.get("pulse_area_pi", float, None)
    if area is not None and area_pi is not None:
        raise s.error("pulse_area", "give either pulse_area or pulse_area_pi, not both")
    if area is None:
        area = math.pi * (1.0 if area_pi is None else area_pi)
    step = _build(s, "pulse_area", lambda: StepParams(area, s.get("contrast", float, 0.97), s.get("eta_eff", float, 0.17)))
    s.finish()

    reps = root.get("repetitions", int, 20)
    if not 0 <= reps <= MAX_REPETITIONS:
        raise root.error("repetitions", f"must lie in [0, {MAX_REPETITIONS}]")

    s = root.sub("truncation")
    trunc = _build(
        s,
        "mode",
        lambda: TruncationPolicy(s.get("mode", str, "adaptive"), s.get("n_cap", int, 128), s.get("tail_tol", float, 1e-9)),
    )
    s.finish()

    s = root.sub("metrics")
    levels = tuple(int(x) for x in s.get("levels", list, [0, 1, 2, 3, 4]))
    orders = tuple(int(x) for x in s.get("klyshko_orders", list, [1, 2, 3, 4]))
    if any(n < 0 for n in levels) or any(n < 1 for n in orders):
        raise s.error("levels", "levels must be >= 0 and Klyshko orders >= 1")
    metrics = MetricsConfig(levels, orders, s.get("wigner_x_max", float, 2.5), s.get("wigner_points", int, 101))
    s.finish()

    s = root.sub("tomography")
    decay = _build(
        s,
        "gamma0",
        lambda: DecayModel(
            s.get("gamma0", float, 0.32), s.get("beta", float, 0.5), s.get("omega01", float, DecayModel().omega01)
        ),
    )
    seed = s.get("seed", int, 0)
    if env.get(ENV_SEED):
        try:
            seed = int(env[ENV_SEED])
        except ValueError:
            raise ConfigError(f"{ENV_SEED} must be an integer, got {env[ENV_SEED]!r}") from None
    tomo = TomographyConfig(
        decay,
        s.get("shots", int, 100),
        s.get("resamples", int, 100),
        seed,
        s.get("n_max", int, 7),
        s.get("points", int, DEFAULT_POINTS),
        s.get("flops", float, DEFAULT_FLOPS),
        s.get("noise", str, "gaussian"),
        s.get("weighting", str, "uniform"),
    )
    if tomo.shots < 1 or tomo.resamples < 2 or tomo.n_max < 0 or tomo.points < 2 or not tomo.flops > 0:
        raise s.error("shots", "need shots >= 1, resamples >= 2, n_max >= 0, points >= 2 and flops > 0")
    if tomo.noise not in ("gaussian", "binomial"):
        raise s.error("noise", "must be gaussian or binomial")
    if tomo.weighting not in ("uniform", "sigma"):
        raise s.error("weighting", "must be uniform or sigma")
    s.finish()

    s = root.sub("outputs")
    directory = s.get("directory", str, "out")
    if env.get(ENV_OUT):
        directory = env[ENV_OUT]
    formats = tuple(s.get("formats", list, ["csv"]))
    if not formats or any(f not in ("csv", "json") for f in formats):
        raise s.error("formats", "formats must be a nonempty subset of [csv, json]")
    outputs = OutputConfig(directory, formats)
    s.finish()

    root.finish()
    return ExperimentConfig(initial, step, reps, trunc, metrics, tomo, outputs)


def load_config(path, env=None) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, env)
