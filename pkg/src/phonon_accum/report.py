"""All witnesses of one distribution in a single serializable record."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

from .entanglement import entanglement_potential
from .errors import DomainError
from .fock import PhononDistribution, mean_phonon
from .metrics import fano_factor, klyshko_series, wigner_origin
from .qng import QNGConfig, highest_violated_level, qng_hierarchy


@dataclass
class WitnessReport:
    """Witness values; a metric that could not be evaluated is ``None`` with its reason in ``errors``."""

    mean_phonon: float | None = None
    fano: float | None = None
    klyshko: list = field(default_factory=list)
    wigner_origin: float | None = None
    qng_levels: list = field(default_factory=list)
    entanglement_potential: float | None = None
    errors: dict = field(default_factory=dict)

    @property
    def highest_qng_level(self):
        return highest_violated_level(self.qng_levels)

    def to_dict(self):
        return {
            "mean_phonon": self.mean_phonon,
            "fano": self.fano,
            "klyshko": [[n, k] for n, k in self.klyshko],
            "wigner_origin": self.wigner_origin,
            "qng_levels": [
                {"level": v.level, "violated": v.violated, "margin": v.margin, "slope": v.slope, "unreliable": v.unreliable}
                for v in self.qng_levels
            ],
            "entanglement_potential": self.entanglement_potential,
            "errors": dict(self.errors),
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    def klyshko_csv(self) -> str:
        """``n,K,minus_K`` rows; both signs are given for plotting under either convention."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "K", "minus_K"])
        for n, k in self.klyshko:
            w.writerow([n, repr(k), repr(-k)])
        return buf.getvalue()

    def qng_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["level", "violated", "margin", "slope", "unreliable"])
        for v in self.qng_levels:
            w.writerow([v.level, int(v.violated), repr(v.margin), repr(v.slope), int(v.unreliable)])
        return buf.getvalue()


def _record(report, name, fn):
    try:
        return fn()
    except (DomainError, ArithmeticError, ValueError) as exc:
        report.errors[name] = f"{type(exc).__name__}: {exc}"
        return None


def full_report(
    d: PhononDistribution,
    levels=(0, 1, 2, 3, 4),
    klyshko_orders=None,
    qng: QNGConfig = QNGConfig(),
    margin_tol=None,
    with_qng: bool = True,
) -> WitnessReport:
    """Evaluate every witness of ``d``, recording failures per metric.

    ``d`` is zero-padded so every requested QNG level and Klyshko order is
    in range; padding adds no mass, so the tail is unchanged.
    """
    orders = list(klyshko_orders) if klyshko_orders is not None else None
    need = max([0, *[n + 1 for n in (levels if with_qng else ())], *[n + 1 for n in (orders or ())]])
    if need > d.n_max:
        d = d.padded(need)
    r = WitnessReport()
    r.mean_phonon = _record(r, "mean_phonon", lambda: mean_phonon(d))
    r.fano = _record(r, "fano", lambda: fano_factor(d))
    r.klyshko = _record(r, "klyshko", lambda: klyshko_series(d, orders)) or []
    r.wigner_origin = _record(r, "wigner_origin", lambda: wigner_origin(d))
    if with_qng:
        r.qng_levels = _record(r, "qng", lambda: qng_hierarchy(d, levels, qng, margin_tol)) or []
    ep = _record(r, "entanglement_potential", lambda: entanglement_potential(d))
    if ep is not None and not math.isfinite(ep):
        r.errors["entanglement_potential"] = "non-finite value"
        ep = None
    r.entanglement_potential = ep
    return r
