"""Command-line front end.

Subcommands: topology-info, verify-cdg, run, sweep, temporal. Each takes a
config file; --seed/--cycles/--offered-load/--output override it.
"""

from __future__ import annotations

import argparse
import sys

from . import analysis
from . import engine
from . import harness
from . import topology as topo
from . import traffic as tr
from . import vcpolicy as vp


def _add_common(p):
    p.add_argument("config", help="experiment config file (INI)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--cycles", type=int, default=None)
    p.add_argument("--offered-load", type=float, default=None)
    p.add_argument("--output", default=None)


def _overrides(args):
    return {"seed": args.seed, "cycles": args.cycles,
            "offered_load": args.offered_load, "output": args.output}


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="vcnetsim",
        description="Phit-level interconnection-network simulator for "
                    "virtual-channel management studies")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("topology-info",
                       help="print switches,radix,servers,links,diameter")
    _add_common(p)

    p = sub.add_parser("verify-cdg",
                       help="check deadlock freedom of the configured "
                            "routing + VC policy")
    _add_common(p)
    p.add_argument("--samples", type=int, default=None,
                   help="sample this many route triples instead of "
                        "exhaustive enumeration")
    p.add_argument("--budget", type=int, default=100_000,
                   help="triple budget for exhaustive mode")

    for name in ("run", "sweep", "temporal"):
        p = sub.add_parser(name)
        _add_common(p)

    args = ap.parse_args(argv)
    spec, t = harness.parse_config(args.config, _overrides(args))

    if args.cmd == "topology-info":
        print("switches,radix,servers,links,diameter")
        print(f"{t.num_switches},{t.radix},{t.num_servers},"
              f"{t.undirected_link_count()},{t.diameter()}")
        return 0

    if args.cmd == "verify-cdg":
        routing = spec.base.routing
        if args.samples:
            mode = analysis.Sampled(args.samples, seed=spec.base.seed)
        else:
            mode = analysis.Exhaustive(budget=args.budget)
        # reuse policies are checked through their escape channel (the plain
        # all-requests graph is cyclic for them by construction)
        waits = "escape" if isinstance(spec.base.vc, vp.LadderReuse) else "all"
        g = analysis.build_cdg(t, routing, spec.base.vc, mode, waits=waits)
        ok, witness = analysis.is_acyclic(g)
        if ok:
            print(f"acyclic ({len(g.edges)} dependency edges)")
            return 0
        cyc = " -> ".join(
            "link%d.vc%d" % g.node_label(n) for n in witness)
        print(f"cyclic: {cyc}")
        return 1

    if args.cmd == "run":
        out = engine.run(spec.base, topology=t)
        row = harness._row(spec.base, out)
        print(harness.rows_csv_text([row]), end="")
        if spec.output:
            harness.write_rows_csv(spec.output + "_rows.csv", [row])
            harness.write_series_csv(spec.output + "_series.csv",
                                     {spec.base.seed: out.binned_accepted},
                                     spec.base.bin_size)
        return 0

    if args.cmd == "sweep":
        spec.mode = "sweep"
        rows, agg = harness.run_sweep(spec, topology=t)
        print(harness.rows_csv_text(rows), end="")
        return 0

    spec.mode = "temporal"
    rows, _ = harness.run_temporal(spec, topology=t)
    print(harness.rows_csv_text(rows), end="")
    return 0


if __name__ == "__main__":
    sys.exit(main())
