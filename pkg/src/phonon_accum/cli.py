"""Command-line entry point.

Exit codes: 0 success, 2 bad configuration or input, 3 numerical failure.
Every table starts with a ``# config: {...}`` line holding the resolved
configuration; JSON outputs carry it under ``"config"``.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

from .asymptotics import DEFAULT_TOL, asymptotic_report
from .config import CONSTANTS, ExperimentConfig, load_config, parse_config
from .dynamics import StepParams, ideal_step, iterate
from .errors import ConfigError, DomainError, FitError, UndefinedMetricError, ValidityError
from .fock import PhononDistribution, thermal_cutoff, thermal_distribution
from .metrics import fano_factor, wigner_radial
from .qng import QNGConfig
from .report import full_report
from .tomography import (
    RabiTrace,
    default_times,
    monte_carlo_uncertainty,
    simulate_measurement,
    synthesize_rabi,
)

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3
SUMMARY_BINS = 8
FIG2_GRID = np.geomspace(0.05, 5.0, 30)
FIG3_AREAS = (0.9, 1.0, 1.1)


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


class Writer:
    """Serializes tables and documents into ``out`` in the requested formats."""

    def __init__(self, out: Path, formats, provenance: dict):
        self.out = Path(out)
        self.formats = tuple(formats)
        self.provenance = provenance
        self.written = []

    def _header(self):
        return "# config: " + json.dumps(self.provenance, sort_keys=True) + "\n"

    def table(self, name, columns, rows):
        self.out.mkdir(parents=True, exist_ok=True)
        if "csv" in self.formats:
            buf = io.StringIO()
            buf.write(self._header())
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(columns)
            for row in rows:
                w.writerow([_fmt(v) for v in row])
            self._write(f"{name}.csv", buf.getvalue())
        if "json" in self.formats:
            records = [{c: _json_value(v) for c, v in zip(columns, row)} for row in rows]
            self.document(name, {"columns": list(columns), "rows": records})

    def document(self, name, obj):
        self.out.mkdir(parents=True, exist_ok=True)
        doc = dict(obj)
        doc["config"] = self.provenance
        self._write(f"{name}.json", json.dumps(doc, sort_keys=True, indent=2) + "\n")

    def _write(self, fname, text):
        path = self.out / fname
        path.write_text(text, encoding="utf-8")
        self.written.append(str(path))


def _json_value(v):
    if v is None:
        return None
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(v) if math.isfinite(v) else None
    return v


def _summary_columns(levels, orders):
    cols = ["k", "n_bar", "F", "W00", "EP"]
    cols += [f"qng_{n}" for n in levels] + [f"qng_margin_{n}" for n in levels] + ["qng_highest"]
    for n in orders:
        cols += [f"K{n}", f"minus_K{n}"]
    cols += [f"P{n}" for n in range(SUMMARY_BINS)] + ["argmax_n"]
    return cols


def _summary_row(k, d, levels, orders, qng_cfg):
    rep = full_report(d, levels=levels, klyshko_orders=orders, qng=qng_cfg)
    by_level = {v.level: v for v in rep.qng_levels}
    kdict = dict(rep.klyshko)
    row = [k, rep.mean_phonon, rep.fano, rep.wigner_origin, rep.entanglement_potential]
    row += [by_level[n].violated if n in by_level else None for n in levels]
    row += [by_level[n].margin if n in by_level else None for n in levels]
    row.append(rep.highest_qng_level)
    for n in orders:
        kn = kdict.get(n)
        row += [kn, None if kn is None else -kn]
    p = d.padded(max(d.n_max, SUMMARY_BINS - 1)).probs
    row += list(p[:SUMMARY_BINS]) + [int(np.argmax(d.probs))]
    return row


def _accumulation(cfg: ExperimentConfig, writer: Writer, prefix=""):
    trace = iterate(cfg.initial_distribution(), cfg.step, cfg.repetitions, cfg.truncation)
    rows = [(k, n, pn) for k, s in enumerate(trace.states) for n, pn in enumerate(s.probs)]
    writer.table(f"{prefix}accumulation", ["k", "n", "P"], rows)
    levels, orders = cfg.metrics.levels, cfg.metrics.klyshko_orders
    summary = [_summary_row(k, s, levels, orders, QNGConfig()) for k, s in enumerate(trace.states)]
    writer.table(f"{prefix}summary", _summary_columns(levels, orders), summary)
    return trace


def cmd_simulate(cfg, writer, args):
    trace = _accumulation(cfg, writer)
    writer.document("run", {"tail_loss": trace.tail_loss, "edge_mass": list(trace.edge_mass)})


def cmd_asymptote(cfg, writer, args):
    rep = asymptotic_report(cfg.initial_distribution(), cfg.step.pulse_area, args.tol)
    writer.document("asymptote", rep.to_dict())
    writer.table("asymptote", ["n", "P_infinity"], [(n, rep.distribution.probs[n]) for n in rep.fixed_points])


def _read_distribution(path) -> PhononDistribution:
    text = Path(path).read_text(encoding="utf-8")
    if str(path).endswith(".json"):
        try:
            return PhononDistribution.from_json(text)
        except (ValueError, KeyError, TypeError) as exc:
            raise DomainError(f"{path}: {exc}") from None
    return PhononDistribution.from_csv(text)


def cmd_metrics(cfg, writer, args):
    d = _read_distribution(args.input)
    rep = full_report(d, levels=cfg.metrics.levels, klyshko_orders=cfg.metrics.klyshko_orders)
    writer.document("metrics", rep.to_dict())
    writer.table("klyshko", ["n", "K", "minus_K"], [(n, k, -k) for n, k in rep.klyshko])
    writer.table(
        "qng",
        ["level", "violated", "margin", "slope", "unreliable"],
        [(v.level, v.violated, v.margin, v.slope, v.unreliable) for v in rep.qng_levels],
    )


def cmd_tomo_synth(cfg, writer, args):
    t = cfg.tomography
    trace = synthesize_rabi(cfg.initial_distribution(), t.decay, default_times(t.decay, t.points, t.flops), t.shots)
    if args.noisy:
        trace = simulate_measurement(trace, t.seed, t.noise)
    writer.out.mkdir(parents=True, exist_ok=True)
    writer._write("trace.csv", trace.to_csv("config: " + json.dumps(writer.provenance, sort_keys=True)))


def cmd_tomo_fit(cfg, writer, args):
    t = cfg.tomography
    try:
        text = Path(args.input).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read trace {args.input}: {exc.strerror}") from None
    trace = RabiTrace.from_csv(text)
    res = monte_carlo_uncertainty(trace, t.decay, t.n_max, t.resamples, t.seed, t.noise, t.weighting)
    doc = res.to_dict()
    doc["fit_config"] = doc.pop("config")
    writer.document("fit", doc)
    p, s = res.distribution.probs, res.per_bin_sigma
    writer.table("fit", ["n", "P", "sigma", "err_3sigma"], [(n, p[n], s[n], 3 * s[n]) for n in range(p.size)])


def fig2_table(levels=(0, 1, 2, 3), grid=FIG2_GRID, qng_cfg=QNGConfig()):
    """Single ideal pi pulse on thermal states: ``(n_bar_in, n_bar_out, F, K1, -K1, W00, EP, qng flags)`` rows."""
    rows = []
    for nb in grid:
        d = ideal_step(thermal_distribution(nb, thermal_cutoff(nb, 1e-12)), math.pi)
        rep = full_report(d, levels=levels, klyshko_orders=[1], qng=qng_cfg)
        flags = {v.level: v.violated for v in rep.qng_levels}
        k1 = rep.klyshko[0][1]
        rows.append([nb, rep.mean_phonon, rep.fano, k1, -k1, rep.wigner_origin, rep.entanglement_potential] + [flags.get(n) for n in levels])
    cols = ["n_bar_in", "n_bar_out", "F", "K1", "minus_K1", "W00", "EP"] + [f"qng_{n}" for n in levels]
    return cols, rows


def fano_crossover(lo=0.05, hi=5.0):
    """Input thermal ``n_bar`` at which one ideal pi pulse yields ``F = 1``, or ``None`` if no sign change."""

    def f(nb):
        return fano_factor(ideal_step(thermal_distribution(nb, thermal_cutoff(nb, 1e-13)), math.pi)) - 1.0

    if f(lo) * f(hi) > 0:
        return None
    return brentq(f, lo, hi, xtol=1e-10)


def cmd_reproduce(cfg, writer, args):
    levels = cfg.metrics.levels
    if args.figure == "fig2":
        fig_levels = tuple(n for n in levels if n <= 3)
        cols, rows = fig2_table(fig_levels)
        writer.table("fig2", cols, rows)
        writer.document("fig2_fano", {"fano_crossover_n_bar": fano_crossover()})
        return
    base = ExperimentConfig(initial=cfg.initial.__class__("thermal", 1.19), repetitions=20, metrics=cfg.metrics)
    pops, summary, wigner = [], [], []
    xs = np.linspace(0.0, cfg.metrics.wigner_x_max, cfg.metrics.wigner_points)
    for area in FIG3_AREAS:
        step = StepParams(area * math.pi, 0.97, 0.17)
        trace = iterate(base.initial_distribution(), step, base.repetitions, base.truncation)
        for k, s in enumerate(trace.states):
            pops += [(area, k, n, pn) for n, pn in enumerate(s.probs)]
            summary.append([area] + _summary_row(k, s, levels, cfg.metrics.klyshko_orders, QNGConfig()))
        wigner += [(area, x, w) for x, w in zip(xs, wigner_radial(trace.final, xs))]
    writer.table("fig3_populations", ["gt_pi", "k", "n", "P"], pops)
    writer.table("fig3_summary", ["gt_pi"] + _summary_columns(levels, cfg.metrics.klyshko_orders), summary)
    writer.table("fig3_wigner", ["gt_pi", "x", "W"], wigner)


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="YAML experiment configuration")
    common.add_argument("--out", metavar="DIR", help="output directory (overrides config and environment)")
    common.add_argument("--seed", type=int, help="random seed (overrides config and environment)")
    common.add_argument("--format", choices=("csv", "json"), help="output format (default from config)")

    p = argparse.ArgumentParser(prog="phonon-accum", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="iterate the accumulation step").set_defaults(fn=cmd_simulate)
    a = sub.add_parser("asymptote", parents=[common], help="fixed points and limit distribution")
    a.add_argument("--tol", type=float, default=DEFAULT_TOL, help="fixed-point tolerance on |sin|")
    a.set_defaults(fn=cmd_asymptote)
    m = sub.add_parser("metrics", parents=[common], help="witness report of a distribution file (n,P csv or json)")
    m.add_argument("input")
    m.set_defaults(fn=cmd_metrics)
    tomo = sub.add_parser("tomo", help="Rabi-flop tomography").add_subparsers(dest="tomo_command", required=True)
    s = tomo.add_parser("synth", parents=[common], help="synthesize a trace from the initial state")
    s.add_argument("--noisy", action="store_true", help="add projection noise under the seed")
    s.set_defaults(fn=cmd_tomo_synth)
    f = tomo.add_parser("fit", parents=[common], help="fit populations with Monte-Carlo errors")
    f.add_argument("input")
    f.set_defaults(fn=cmd_tomo_fit)
    r = sub.add_parser("reproduce", parents=[common], help="theory tables for the single-step and accumulation figures")
    r.add_argument("figure", choices=("fig2", "fig3"))
    r.set_defaults(fn=cmd_reproduce)
    return p


def resolve_config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else parse_config("")
    changes = {}
    if args.out:
        changes["outputs"] = cfg.outputs.__class__(args.out, cfg.outputs.formats)
    if args.format:
        out = changes.get("outputs", cfg.outputs)
        changes["outputs"] = out.__class__(out.directory, (args.format,))
    if args.seed is not None:
        t = cfg.tomography
        changes["tomography"] = t.__class__(**{**t.__dict__, "seed": args.seed})
    return cfg.__class__(**{**cfg.__dict__, **changes}) if changes else cfg


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        cfg = resolve_config(args)
        provenance = cfg.to_dict()
        provenance["command"] = args.command if args.command != "tomo" else f"tomo {args.tomo_command}"
        provenance["constants"] = CONSTANTS.to_dict()
        writer = Writer(Path(cfg.outputs.directory), cfg.outputs.formats, provenance)
        args.fn(cfg, writer, args)
    except (ValidityError, FitError, ArithmeticError) as exc:
        residual = getattr(exc, "residual", None)
        extra = f" (residual {residual:.3e})" if residual is not None else ""
        print(f"numerical error: {exc}{extra}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, DomainError, UndefinedMetricError, OSError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    for path in writer.written:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
