"""Experiment orchestration: config files, load sweeps, temporal runs, CSV.

Config files are INI-style with one section per module:

    [topology]            [traffic]              [routing]
    family = hyperx       pattern = shift        kind = valiant
    n = 2                 shift_dims = xy        intermediate = any_switch
    side = 16             shift_amount = 7
    servers = 16          offered_load = 1.0     [vc]
                                                 policy = ladder_reuse
    [sim]                 [experiment]           vcs_per_step = 2
    cycles = 510000       mode = temporal
    seed = 1              seeds = 1,2,3          output = out/df_advr
    bin_size = 1000       loads = 0.1,0.2

The per-row CSV is the source of truth; plot files are derived from it.
Re-running a spec reproduces byte-identical outputs.
"""

from __future__ import annotations

import configparser
import csv
import io
import math
import os
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import analysis
from . import engine
from . import topology as topo
from . import traffic as tr
from . import vcpolicy as vp
from .errors import InvalidSpec, TooShort
from .routing import RoutingSpec, default_routing
from .topology import Topology


@dataclass
class ExperimentSpec:
    base: engine.SimConfig
    mode: str = "temporal"            # sweep | temporal
    loads: tuple = ()
    seeds: tuple = tuple(range(1, 11))
    output: Optional[str] = None

    def validate(self):
        if self.mode not in ("sweep", "temporal"):
            raise InvalidSpec(f"unknown experiment mode {self.mode!r}")
        if self.mode == "sweep":
            if not self.loads:
                raise InvalidSpec("sweep needs a non-empty load list")
            if list(self.loads) != sorted(self.loads) or not all(
                    0 < l <= 1 for l in self.loads):
                raise InvalidSpec("sweep loads must be ascending in (0, 1]")
        if len(set(self.seeds)) != len(self.seeds) or not self.seeds:
            raise InvalidSpec("seeds must be distinct and non-empty")


@dataclass
class ResultRow:
    topology: str
    pattern: str
    policy: str
    offered_load: float
    seed: int
    mean_accepted: float
    mean_latency: float
    category: str
    deadlock: bool


def topology_name(spec) -> str:
    if isinstance(spec, topo.HyperXSpec):
        return f"hyperx-{spec.n}d-s{spec.side}"
    if isinstance(spec, topo.DragonflySpec):
        return f"dragonfly-a{spec.a}-h{spec.h}-g{spec.groups}"
    return f"dragonflyplus-r{spec.r}-g{spec.groups}"


# ---------------------------------------------------------------- config --

_DIM_LETTERS = {"x": 0, "y": 1, "z": 2}


def _parse_dims(text: str) -> tuple:
    text = text.strip().lower()
    if not text:
        raise InvalidSpec("empty shift_dims")
    if all(c in _DIM_LETTERS for c in text):
        return tuple(sorted(_DIM_LETTERS[c] for c in text))
    return tuple(sorted(int(x) for x in text.split(",")))


def parse_config(path_or_text, overrides: Optional[dict] = None):
    """Parse a config file (path or text) into (ExperimentSpec, Topology).

    overrides: optional seed/cycles/offered_load/output values from
    the command line, applied after the file."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    if os.path.exists(str(path_or_text)):
        cp.read(path_or_text)
    else:
        cp.read_string(path_or_text)

    t = cp["topology"]
    family = t.get("family")
    if family == "hyperx":
        tspec = topo.HyperXSpec(n=t.getint("n"), side=t.getint("side"),
                                servers=t.getint("servers"))
    elif family == "dragonfly":
        tspec = topo.DragonflySpec(a=t.getint("a"), h=t.getint("h"),
                                   servers=t.getint("servers"),
                                   groups=t.getint("groups"))
    elif family == "dragonfly_plus":
        tspec = topo.DragonflyPlusSpec(r=t.getint("r"),
                                       servers=t.getint("servers"),
                                       groups=t.getint("groups"))
    else:
        raise InvalidSpec(f"unknown topology family {family!r}")
    built = topo.build(tspec)

    tf = cp["traffic"] if cp.has_section("traffic") else {}
    pattern_name = tf.get("pattern", "uniform")
    if pattern_name == "uniform":
        pattern = tr.Uniform()
    elif pattern_name == "shift":
        pattern = tr.Shift(dims=_parse_dims(tf.get("shift_dims", "x")),
                           amount=int(tf.get("shift_amount", 1)))
    elif pattern_name == "adv":
        pattern = tr.AdvPlus(offset=int(tf.get("adv_offset", 1)))
    elif pattern_name == "advr":
        pattern = tr.AdvrPlus(offset=int(tf.get("adv_offset", 1)))
    else:
        raise InvalidSpec(f"unknown traffic pattern {pattern_name!r}")
    offered = float(tf.get("offered_load", 1.0))

    rt_sec = cp["routing"] if cp.has_section("routing") else {}
    routing = RoutingSpec(
        kind=rt_sec.get("kind", "valiant"),
        intermediate=rt_sec.get(
            "intermediate", default_routing(built).intermediate))

    vc_sec = cp["vc"] if cp.has_section("vc") else {}
    policy = vp.default_policy(vc_sec.get("policy", "ladder_reuse"), built)
    if isinstance(policy, vp.TwoPhases) and "vcs_per_step" in vc_sec:
        policy = vp.TwoPhases(policy.injection, int(vc_sec["vcs_per_step"]))

    sim = cp["sim"] if cp.has_section("sim") else {}
    base = engine.SimConfig(
        topology=tspec, traffic=pattern, vc=policy, routing=routing,
        offered_load=offered,
        cycles=int(sim.get("cycles", 510_000)),
        seed=int(sim.get("seed", 1)),
        bin_size=int(sim.get("bin_size", 1_000)),
        warmup_fraction=float(sim.get("warmup_fraction", 0.2)),
        watchdog_cycles=int(sim.get("watchdog_cycles", 10_000)),
    )

    ex = cp["experiment"] if cp.has_section("experiment") else {}
    loads = tuple(float(x) for x in ex.get("loads", "").split(",") if x)
    seeds = tuple(int(x) for x in ex.get("seeds", "").split(",") if x)
    spec = ExperimentSpec(
        base=base,
        mode=ex.get("mode", "temporal"),
        loads=loads,
        seeds=seeds or tuple(range(1, 11)),
        output=ex.get("output", None),
    )

    overrides = overrides or {}
    if overrides.get("seed") is not None:
        spec.base.seed = int(overrides["seed"])
        spec.seeds = (int(overrides["seed"]),)
    if overrides.get("cycles") is not None:
        spec.base.cycles = int(overrides["cycles"])
    if overrides.get("offered_load") is not None:
        spec.base.offered_load = float(overrides["offered_load"])
    if overrides.get("output") is not None:
        spec.output = overrides["output"]
    return spec, built


# ----------------------------------------------------------------- runs --


def _categorize(out: engine.RunOutput, cfg: engine.SimConfig) -> str:
    try:
        return str(analysis.classify(out.binned_accepted,
                                     cfg.warmup_fraction))
    except TooShort:
        return "unknown"


def _row(cfg: engine.SimConfig, out: engine.RunOutput) -> ResultRow:
    return ResultRow(
        topology=topology_name(cfg.topology),
        pattern=tr.pattern_name(cfg.traffic),
        policy=vp.policy_name(cfg.vc),
        offered_load=cfg.offered_load,
        seed=cfg.seed,
        mean_accepted=out.mean_accepted,
        mean_latency=out.mean_latency,
        category=_categorize(out, cfg),
        deadlock=out.deadlock,
    )


def run_sweep(spec: ExperimentSpec, topology: Optional[Topology] = None):
    """One run per (load, seed); returns (rows, aggregates) where
    aggregates are (load, mean over seeds, sample stddev)."""
    spec.validate()
    if spec.mode != "sweep":
        raise InvalidSpec("run_sweep needs a sweep-mode spec")
    t = topology if topology is not None else topo.build(spec.base.topology)
    rows = []
    for load in spec.loads:
        for seed in spec.seeds:
            cfg = replace(spec.base, offered_load=load, seed=seed)
            rows.append(_row(cfg, engine.run(cfg, topology=t)))
    agg = []
    for load in spec.loads:
        vals = [r.mean_accepted for r in rows if r.offered_load == load]
        mean = float(np.mean(vals))
        std = float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0
        agg.append((load, mean, std))
    if spec.output:
        write_rows_csv(spec.output + "_rows.csv", rows)
        write_agg_csv(spec.output + "_agg.csv", agg)
        emit_plot_data(spec.output + "_sweep.dat", agg, kind="sweep")
    return rows, agg


def run_temporal(spec: ExperimentSpec, topology: Optional[Topology] = None):
    """One full-length run per seed at the configured offered load; returns
    (rows, series) with series[seed] = binned accepted-load array. Raw
    per-seed series are kept apart; they are never averaged away."""
    spec.validate()
    if spec.mode != "temporal":
        raise InvalidSpec("run_temporal needs a temporal-mode spec")
    t = topology if topology is not None else topo.build(spec.base.topology)
    rows = []
    series = {}
    for seed in spec.seeds:
        cfg = replace(spec.base, seed=seed)
        out = engine.run(cfg, topology=t)
        rows.append(_row(cfg, out))
        series[seed] = out.binned_accepted
    if spec.output:
        write_rows_csv(spec.output + "_rows.csv", rows)
        write_series_csv(spec.output + "_series.csv", series,
                         spec.base.bin_size)
        emit_plot_data(spec.output + "_temporal.dat",
                       (series, spec.base.bin_size), kind="temporal")
    return rows, series


# ------------------------------------------------------------------ files --

ROW_FIELDS = ["topology", "pattern", "policy", "offered_load", "seed",
              "mean_accepted", "mean_latency", "category", "deadlock"]


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, float):
        return "nan" if math.isnan(x) else f"{x:.6f}"
    return str(x)


def rows_csv_text(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ROW_FIELDS)
    for r in sorted(rows, key=lambda r: (r.topology, r.pattern, r.policy,
                                         r.offered_load, r.seed)):
        w.writerow([_fmt(getattr(r, f)) for f in ROW_FIELDS])
    return buf.getvalue()


def write_rows_csv(path: str, rows):
    _write(path, rows_csv_text(rows))


def write_agg_csv(path: str, agg):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["offered_load", "mean_accepted", "stddev"])
    for load, mean, std in agg:
        w.writerow([_fmt(float(load)), _fmt(mean), _fmt(std)])
    _write(path, buf.getvalue())


def write_series_csv(path: str, series: dict, bin_size: int):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["seed", "bin_index", "accepted"])
    for seed in sorted(series):
        for i, v in enumerate(series[seed]):
            w.writerow([seed, i, _fmt(float(v))])
    _write(path, buf.getvalue())


def emit_plot_data(path: str, data, kind: str):
    """Whitespace-separated plot files: sweep data as one block of
    (offered_load, mean_accepted, stddev); temporal data as one
    (cycle, accepted) block per seed, blocks separated by blank lines."""
    lines = []
    if kind == "sweep":
        lines.append("# offered_load mean_accepted stddev")
        for load, mean, std in data:
            lines.append(f"{load:.6f} {mean:.6f} {std:.6f}")
    elif kind == "temporal":
        series, bin_size = data
        lines.append("# cycle accepted (one block per seed)")
        for seed in sorted(series):
            lines.append(f"# seed {seed}")
            for i, v in enumerate(series[seed]):
                lines.append(f"{(i + 1) * bin_size} {float(v):.6f}")
            lines.append("")
    else:
        raise InvalidSpec(f"unknown plot kind {kind!r}")
    _write(path, "\n".join(lines) + "\n")


def _write(path: str, text: str):
    d = os.path.dirname(path)
    if d:
        os.makedirs(d, exist_ok=True)
    with open(path, "w") as f:
        f.write(text)
