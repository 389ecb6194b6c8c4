"""Post-run stability classification and static deadlock-freedom checks.

The classifier reduces a binned accepted-load series to one of three
post-saturation behaviors: stable (1), drops that recover (2), or a lasting
or frequent collapse (3). Thresholds are relative to the series' own
high-reference level (a configurable quantile of the post-warmup bins), so
classification is scale-invariant.

Deadlock freedom is verified statically: enumerate route/VC combinations,
add a dependency edge whenever a packet may hold one (link, VC) channel
while requesting the next, and check the resulting graph for cycles.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from . import routing as rt
from . import vcpolicy as vp
from .errors import BudgetExceeded, TooShort
from .rng import RandomStream
from .topology import Topology

CATEGORY_STABLE = 1
CATEGORY_RECOVERING = 2
CATEGORY_UNSTABLE = 3


def classify(series, warmup_fraction: float = 0.2, theta: float = 0.8,
             cat1_bin_fraction: float = 0.01, cat3_bin_fraction: float = 0.15,
             recovery_window: float = 0.10,
             reference_quantile: float = 0.90) -> int:
    """Stability category of a binned accepted-load series.

    Let m be the reference level (quantile of post-warmup bins) and
    thr = theta*m. Category 1 if at most cat1_bin_fraction of bins fall
    below thr; Category 3 if the tail window mean stays below thr or more
    than cat3_bin_fraction of bins do; Category 2 otherwise.
    """
    series = np.asarray(series, dtype=float)
    w = int(len(series) * warmup_fraction)
    bins = series[w:]
    if len(bins) < 50:
        raise TooShort(f"{len(bins)} post-warmup bins; need at least 50")
    m = float(np.quantile(bins, reference_quantile))
    thr = theta * m
    low = float(np.mean(bins < thr))
    tail = bins[int(len(bins) * (1.0 - recovery_window)):]
    if low <= cat1_bin_fraction:
        return CATEGORY_STABLE
    if float(tail.mean()) < thr or low > cat3_bin_fraction:
        return CATEGORY_UNSTABLE
    return CATEGORY_RECOVERING


def reference_level(series, warmup_fraction: float = 0.2,
                    reference_quantile: float = 0.90) -> float:
    """The classifier's high-reference level (pre-drop plateau estimate)."""
    series = np.asarray(series, dtype=float)
    bins = series[int(len(series) * warmup_fraction):]
    return float(np.quantile(bins, reference_quantile))


def tail_level(series, recovery_window: float = 0.10) -> float:
    """Mean accepted load over the final window of the series."""
    series = np.asarray(series, dtype=float)
    return float(series[int(len(series) * (1.0 - recovery_window)):].mean())


@dataclass(frozen=True)
class Exhaustive:
    budget: int = 100_000


@dataclass(frozen=True)
class Sampled:
    k: int
    seed: int = 1


@dataclass
class DependencyGraph:
    """Directed graph over (directed link, VC) channels."""
    num_dlinks: int
    max_vcs: int
    edges: set  # of (node, node); node = dlink * max_vcs + vc

    def node(self, dlink: int, vc: int) -> int:
        return dlink * self.max_vcs + vc

    def node_label(self, node: int) -> tuple:
        return divmod(node, self.max_vcs)

    @property
    def nodes(self):
        out = set()
        for a, b in self.edges:
            out.add(a)
            out.add(b)
        return out


def _path_edges(t: Topology, policy, path: rt.Path, vmax: int, edges: set,
                escape: bool):
    hops = path.hops
    for i in range(len(hops) - 1):
        a = t.dlink_id[hops[i].switch, hops[i].out_port]
        b = t.dlink_id[hops[i + 1].switch, hops[i + 1].out_port]
        va = vp.allowed_vcs(policy, vp.hop_context(path, hops[i]))
        vb = vp.allowed_vcs(policy, vp.hop_context(path, hops[i + 1]))
        if escape:
            # a stalled packet can always fall back to its highest
            # admissible VC, so only that request can be held indefinitely
            vb = [max(vb)]
        for x in va:
            for y in vb:
                edges.add((a * vmax + x, b * vmax + y))


def _valiant_paths(t: Topology, src: int, dst: int, inter: int):
    """Every Valiant path realisation for one (src, dst, intermediate)
    triple, covering all spine choices on Dragonfly+."""
    if src == dst:
        return []
    if inter == src or inter == dst:
        absorbed = "src" if inter == src else "dst"
        return [rt.Path(p.hops, len(p.hops), True, absorbed)
                for p in rt.enumerate_minimal_routes(t, src, dst)]
    out = []
    for s1 in rt.enumerate_minimal_routes(t, src, inter):
        for s2 in rt.enumerate_minimal_routes(t, inter, dst):
            ports = [(h.switch, h.out_port) for h in s1.hops]
            ports += [(h.switch, h.out_port) for h in s2.hops]
            out.append(rt._annotate(t, ports, len(s1.hops), False))
    return out


def build_cdg(t: Topology, routing: rt.RoutingSpec, policy,
              mode=Exhaustive(), waits: str = "all") -> DependencyGraph:
    """Channel dependency graph induced by the routing and VC policy.

    Exhaustive mode enumerates every (src, dst, intermediate) triple (and
    every Dragonfly+ spine realisation); Sampled draws k random triples.

    waits selects the requested-channel side of each edge: "all" uses every
    admissible next-hop VC (the plain dependency graph); "escape" keeps only
    the highest admissible VC. Policies that re-admit lower VCs (ladder with
    reuse) are cyclic under "all" by construction yet deadlock-free because
    the top-of-ladder escape channel is always requestable; verify those
    with waits="escape".
    """
    routing.validate(t)
    if waits not in ("all", "escape"):
        raise ValueError(f"unknown waits mode {waits!r}")
    escape = waits == "escape"
    endpoints = [s for s in range(t.num_switches) if t.servers_per_switch[s]]
    if routing.kind == "valiant":
        inters = rt.intermediate_candidates(t, routing.intermediate).tolist()
    else:
        inters = [None]
    vmax = max(vp.vcs_per_port(policy, rt.PortKind(int(k)))
               for k in np.unique(t.dlink_kind))
    edges: set = set()

    if isinstance(mode, Exhaustive):
        triples = len(endpoints) * len(endpoints) * len(inters)
        if triples > mode.budget:
            raise BudgetExceeded(
                f"{triples} path triples exceed the budget {mode.budget}")
        for src in endpoints:
            for dst in endpoints:
                if src == dst:
                    continue
                if inters == [None]:
                    for p in rt.enumerate_minimal_routes(t, src, dst):
                        _path_edges(t, policy, p, vmax, edges, escape)
                    continue
                for inter in inters:
                    for p in _valiant_paths(t, src, dst, inter):
                        _path_edges(t, policy, p, vmax, edges, escape)
    elif isinstance(mode, Sampled):
        rng = RandomStream(mode.seed)
        for _ in range(mode.k):
            src = endpoints[rng.randint(len(endpoints))]
            dst = endpoints[rng.randint(len(endpoints))]
            if src == dst:
                continue
            if inters == [None]:
                p = rt.minimal_route(t, src, dst, rng)
                _path_edges(t, policy, p, vmax, edges, escape)
                continue
            inter = inters[rng.randint(len(inters))]
            p = rt.valiant_route(t, src, dst, routing.intermediate, rng,
                                 intermediate=inter)
            _path_edges(t, policy, p, vmax, edges, escape)
    else:
        raise ValueError(f"unknown CDG mode {mode!r}")
    return DependencyGraph(t.num_dlinks, vmax, edges)


def is_acyclic(g: DependencyGraph):
    """(acyclic, witness): Kahn elimination, then a simple cycle extracted
    from the residual graph when one exists."""
    succ: dict = {}
    indeg: dict = {}
    for a, b in g.edges:
        succ.setdefault(a, []).append(b)
        indeg[b] = indeg.get(b, 0) + 1
        indeg.setdefault(a, indeg.get(a, 0))
    queue = [n for n, d in indeg.items() if d == 0]
    removed = 0
    while queue:
        n = queue.pop()
        removed += 1
        for m in succ.get(n, ()):
            indeg[m] -= 1
            if indeg[m] == 0:
                queue.append(m)
    if removed == len(indeg):
        return True, None
    # trim nodes that merely hang off a cycle so the walk cannot dead-end
    residual = {n for n, d in indeg.items() if d > 0}
    outdeg = {n: sum(1 for m in succ.get(n, ()) if m in residual)
              for n in residual}
    pred: dict = {}
    for a, b in g.edges:
        if a in residual and b in residual:
            pred.setdefault(b, []).append(a)
    queue = [n for n in residual if outdeg[n] == 0]
    while queue:
        n = queue.pop()
        residual.discard(n)
        for m in pred.get(n, ()):
            if m in residual:
                outdeg[m] -= 1
                if outdeg[m] == 0:
                    queue.append(m)
    start = min(residual)
    seen = {}
    order = []
    node = start
    while node not in seen:
        seen[node] = len(order)
        order.append(node)
        node = next(m for m in succ.get(node, ()) if m in residual)
    witness = order[seen[node]:] + [node]
    return False, witness
