"""Minimal and Valiant route construction.

Minimal route shapes per family: dimension-ordered (X before Y before Z) on
HyperX, local-global-local on Dragonfly, up-global-down (up-down inside a
group) on Dragonfly+. A Valiant route concatenates two minimal segments
through a random intermediate switch; when the draw lands on the source or
destination switch the packet is routed minimally instead and the path is
flagged so the VC policy can place it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import topology as topo
from .topology import PortKind, Topology


@dataclass(frozen=True)
class Hop:
    switch: int        # switch this hop leaves from
    out_port: int
    kind: PortKind
    dim: int           # HyperX dimension of the port (0 elsewhere)
    hop_index: int
    phase: int         # 1 or 2
    local_step: int    # DF: cumulative local-hop ordinal; -1 on other hops
    global_step: int   # DF: 0 in phase 1, 1 in phase 2; -1 on other hops


@dataclass
class Path:
    hops: list[Hop]
    phase_boundary: int          # index of the first phase-2 hop (len if none)
    minimal: bool
    absorbed: Optional[str] = None  # 'src' or 'dst' for degenerate intermediates

    def __len__(self):
        return len(self.hops)

    @property
    def switches(self):
        return [h.switch for h in self.hops]


@dataclass(frozen=True)
class RoutingSpec:
    kind: str = "valiant"          # valiant | minimal
    intermediate: str = "any_switch"  # any_switch | any_leaf

    def validate(self, t: Topology):
        if self.kind not in ("valiant", "minimal"):
            raise ValueError(f"unknown routing kind {self.kind!r}")
        if self.intermediate not in ("any_switch", "any_leaf"):
            raise ValueError(f"unknown intermediate policy {self.intermediate!r}")
        if self.kind == "valiant":
            if t.family == topo.FAMILY_DFP and self.intermediate != "any_leaf":
                raise ValueError("Dragonfly+ Valiant requires any_leaf intermediates")
            if t.family != topo.FAMILY_DFP and self.intermediate == "any_leaf":
                raise ValueError("any_leaf intermediates only apply to Dragonfly+")


def default_routing(t: Topology) -> RoutingSpec:
    if t.family == topo.FAMILY_DFP:
        return RoutingSpec("valiant", "any_leaf")
    return RoutingSpec("valiant", "any_switch")


def _hx_ports(t: Topology, src: int, dst: int):
    """Dimension-ordered port sequence, one hop per differing dimension."""
    spec = t.spec
    out = []
    cur = src
    for d in range(spec.n):
        cs = t.hx_coords(cur)[d]
        cd = t.hx_coords(dst)[d]
        if cs != cd:
            out.append((cur, t.hx_port(cur, d, cd)))
            cur += (cd - cs) * spec.side ** d
    return out


def _df_ports(t: Topology, src: int, dst: int, gw):
    out = []
    gs, gd = t.df_group(src), t.df_group(dst)
    cur = src
    if gs == gd:
        if src != dst:
            out.append((cur, t.df_local_port(cur, t.df_index(dst))))
        return out
    gw_idx, gw_port = gw
    ai = int(gw_idx[gs, gd])
    if t.df_index(cur) != ai:
        out.append((cur, t.df_local_port(cur, ai)))
        cur = t.df_switch(gs, ai)
    out.append((cur, int(gw_port[gs, gd])))
    cur = t.df_switch(gd, int(gw_idx[gd, gs]))
    if cur != dst:
        out.append((cur, t.df_local_port(cur, t.df_index(dst))))
    return out


def _dfp_ports(t: Topology, src: int, dst: int, gw, spine_choice):
    """src/dst must be leaves; spine_choice picks the intra-group spine."""
    out = []
    spec = t.spec
    gs, gd = t.dfp_group(src), t.dfp_group(dst)
    if src == dst:
        return out
    if gs == gd:
        j = spine_choice
        spine = t.dfp_spine(gs, j)
        out.append((src, spec.servers + j))
        out.append((spine, dst % (2 * spec.r)))
        return out
    gw_spine, gw_gport = gw
    j = int(gw_spine[gs, gd])
    spine = t.dfp_spine(gs, j)
    out.append((src, spec.servers + j))
    out.append((spine, int(gw_gport[gs, gd])))
    spine2 = t.dfp_spine(gd, int(gw_spine[gd, gs]))
    out.append((spine2, dst % (2 * spec.r)))
    return out


def gateway_tables(t: Topology):
    """Per ordered group pair: which switch owns the global link and through
    which port. Derived from the built wiring, cached on the topology."""
    cached = getattr(t, "_gateway_tables", None)
    if cached is not None:
        return cached
    if t.family == topo.FAMILY_HX:
        t._gateway_tables = None
        return None
    G = t.spec.groups
    gw_idx = np.full((G, G), -1, dtype=np.int32)
    gw_port = np.full((G, G), -1, dtype=np.int32)
    glb = PortKind.DF_GLOBAL if t.family == topo.FAMILY_DF else PortKind.DFP_GLOBAL
    for d in range(t.num_dlinks):
        if t.dlink_kind[d] != glb:
            continue
        s = int(t.dlink_src_switch[d])
        if t.family == topo.FAMILY_DF:
            g1, g2 = t.df_group(s), t.df_group(int(t.dlink_dst_switch[d]))
            gw_idx[g1, g2] = t.df_index(s)
        else:
            g1 = t.dfp_group(s)
            g2 = t.dfp_group(int(t.dlink_dst_switch[d]))
            gw_idx[g1, g2] = s % (2 * t.spec.r) - t.spec.r  # spine index
        gw_port[g1, g2] = int(t.dlink_src_port[d])
    t._gateway_tables = (gw_idx, gw_port)
    return t._gateway_tables


def _minimal_ports(t: Topology, src: int, dst: int, spine_choice=0):
    if t.family == topo.FAMILY_HX:
        return _hx_ports(t, src, dst)
    if t.family == topo.FAMILY_DF:
        return _df_ports(t, src, dst, gateway_tables(t))
    return _dfp_ports(t, src, dst, gateway_tables(t), spine_choice)


def _annotate(t: Topology, ports, boundary, minimal, absorbed=None) -> Path:
    hops = []
    past_global = False  # within the current segment
    for i, (sw, pt) in enumerate(ports):
        if i == boundary:
            past_global = False
        kind = PortKind(int(t.port_kind[sw, pt]))
        dim = int(t.port_dim[sw, pt])
        phase = 1 if (minimal or i < boundary) else 2
        lstep = gstep = -1
        if kind == PortKind.DF_LOCAL:
            # source-group locals take the segment's first local step,
            # destination-group locals the second, whether or not the other
            # one was omitted; phase 2 shifts by two steps
            lstep = (1 if past_global else 0) + 2 * (phase - 1)
        elif kind == PortKind.DF_GLOBAL:
            gstep = phase - 1
            past_global = True
        hops.append(Hop(sw, pt, kind, dim, i, phase, lstep, gstep))
    return Path(hops, len(ports) if minimal else boundary, minimal, absorbed)


def minimal_route(t: Topology, src: int, dst: int, rng=None) -> Path:
    """The unique minimal route (HyperX DOR / Dragonfly lgl) or, on
    Dragonfly+ inside a group, the up-down route through a random spine
    (spine 0 when rng is None). Empty path when src == dst."""
    spine = 0
    if (t.family == topo.FAMILY_DFP and rng is not None
            and src != dst and t.dfp_group(src) == t.dfp_group(dst)):
        spine = rng.randint(t.spec.r)
    ports = _minimal_ports(t, src, dst, spine)
    return _annotate(t, ports, len(ports), True, absorbed="src")


def enumerate_minimal_routes(t: Topology, src: int, dst: int) -> list[Path]:
    """All minimal routes between two switches (one except for Dragonfly+
    intra-group pairs, which have one per spine)."""
    if (t.family == topo.FAMILY_DFP and src != dst
            and t.dfp_group(src) == t.dfp_group(dst)):
        out = []
        for j in range(t.spec.r):
            ports = _minimal_ports(t, src, dst, j)
            out.append(_annotate(t, ports, len(ports), True, absorbed="src"))
        return out
    return [minimal_route(t, src, dst)]


def intermediate_candidates(t: Topology, policy: str) -> np.ndarray:
    if policy == "any_leaf":
        leaves = [s for s in range(t.num_switches) if t.dfp_is_leaf(s)]
        return np.asarray(leaves, dtype=np.int32)
    return np.arange(t.num_switches, dtype=np.int32)


def valiant_route(t: Topology, src: int, dst: int, policy: str, rng,
                  intermediate: Optional[int] = None) -> Path:
    """Two minimal segments through a uniformly drawn intermediate switch.

    The candidate pool includes the source and destination switches; drawing
    either one degenerates to the minimal route, recording which endpoint
    absorbed the intermediate. `intermediate` overrides the draw (tests)."""
    if src == dst:
        return _annotate(t, [], 0, True, absorbed="src")
    if intermediate is None:
        cands = intermediate_candidates(t, policy)
        intermediate = int(cands[rng.randint(len(cands))])
    if intermediate == src or intermediate == dst:
        spine = 0
        if (t.family == topo.FAMILY_DFP and rng is not None
                and t.dfp_group(src) == t.dfp_group(dst)):
            spine = rng.randint(t.spec.r)
        ports = _minimal_ports(t, src, dst, spine)
        absorbed = "src" if intermediate == src else "dst"
        return _annotate(t, ports, len(ports), True, absorbed=absorbed)
    s1 = s2 = 0
    if t.family == topo.FAMILY_DFP:
        if t.dfp_group(src) == t.dfp_group(intermediate):
            s1 = rng.randint(t.spec.r) if rng is not None else 0
        if t.dfp_group(intermediate) == t.dfp_group(dst):
            s2 = rng.randint(t.spec.r) if rng is not None else 0
    seg1 = _minimal_ports(t, src, intermediate, s1)
    seg2 = _minimal_ports(t, intermediate, dst, s2)
    return _annotate(t, seg1 + seg2, len(seg1), False)
