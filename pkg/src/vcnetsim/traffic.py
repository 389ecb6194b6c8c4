"""Traffic patterns and the Bernoulli injection source.

Shift patterns displace the destination switch by a constant in a chosen set
of HyperX dimensions; the adversarial group patterns send to the group
`offset` positions ahead, either to the same relative position (AdvPlus) or
to a random server of that group (AdvrPlus). Servers generate 16-phit
packets with per-cycle probability rho/16 so the offered phit rate is rho.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import topology as topo
from .errors import InvalidSpec, PatternTopologyMismatch
from .topology import Topology

PACKET_LEN = 16


@dataclass(frozen=True)
class Uniform:
    pass


@dataclass(frozen=True)
class Shift:
    dims: tuple
    amount: int


@dataclass(frozen=True)
class AdvPlus:
    offset: int


@dataclass(frozen=True)
class AdvrPlus:
    offset: int


TrafficPattern = object  # Uniform | Shift | AdvPlus | AdvrPlus


def validate_pattern(t: Topology, pattern) -> None:
    if isinstance(pattern, Uniform):
        return
    if isinstance(pattern, Shift):
        if t.family != topo.FAMILY_HX:
            raise PatternTopologyMismatch("shift patterns require HyperX")
        if not pattern.dims or not set(pattern.dims) <= set(range(t.spec.n)):
            raise PatternTopologyMismatch(
                f"shift dims {pattern.dims} outside [0, {t.spec.n})")
        if not 0 < pattern.amount < t.spec.side:
            raise PatternTopologyMismatch(
                f"shift amount {pattern.amount} outside (0, side)")
        return
    if isinstance(pattern, (AdvPlus, AdvrPlus)):
        if t.family not in (topo.FAMILY_DF, topo.FAMILY_DFP):
            raise PatternTopologyMismatch("ADV patterns require a Dragonfly variant")
        if not 0 < pattern.offset < t.spec.groups:
            raise PatternTopologyMismatch(
                f"group offset {pattern.offset} outside (0, groups)")
        return
    raise PatternTopologyMismatch(f"unknown pattern {pattern!r}")


def offered_load(rho: float) -> float:
    if not 0.0 < rho <= 1.0:
        raise InvalidSpec(f"offered load {rho} outside (0, 1]")
    return float(rho)


def _shift_switch(t: Topology, pattern: Shift, switch: int) -> int:
    spec = t.spec
    coords = list(t.hx_coords(switch))
    for d in pattern.dims:
        coords[d] = (coords[d] + pattern.amount) % spec.side
    return t.hx_switch(coords)


def _group_peer_switch(t: Topology, switch: int, offset: int) -> int:
    """Same relative in-group position, `offset` groups ahead."""
    if t.family == topo.FAMILY_DF:
        g = (t.df_group(switch) + offset) % t.spec.groups
        return t.df_switch(g, t.df_index(switch))
    g = (t.dfp_group(switch) + offset) % t.spec.groups
    return t.dfp_leaf(g, switch % (2 * t.spec.r))


def destination(t: Topology, pattern, src_server: int, rng) -> int:
    """Destination server for one packet from src_server."""
    if isinstance(pattern, Uniform):
        d = rng.randint(t.num_servers - 1)
        return d + 1 if d >= src_server else d
    sw, slot = t.server_location(src_server)
    if isinstance(pattern, Shift):
        return t.server_id(_shift_switch(t, pattern, sw), slot)
    if isinstance(pattern, AdvPlus):
        return t.server_id(_group_peer_switch(t, sw, pattern.offset), slot)
    # AdvrPlus: random server in the target group
    base, count = _advr_spans(t)
    g = _server_group(t, sw)
    tg = (g + pattern.offset) % t.spec.groups
    return int(base[tg]) + rng.randint(int(count[tg]))


def _server_group(t: Topology, switch: int) -> int:
    if t.family == topo.FAMILY_DF:
        return t.df_group(switch)
    return t.dfp_group(switch)


def _advr_spans(t: Topology):
    """Contiguous server-id span of each group (server ids are switch-major)."""
    cached = getattr(t, "_group_server_spans", None)
    if cached is not None:
        return cached
    G = t.spec.groups
    base = np.zeros(G, dtype=np.int64)
    count = np.zeros(G, dtype=np.int64)
    for s in range(t.num_switches):
        p = int(t.servers_per_switch[s])
        if p == 0:
            continue
        g = _server_group(t, s)
        b = int(t.switch_server_base[s])
        if count[g] == 0:
            base[g] = b
        count[g] += p
    t._group_server_spans = (base, count)
    return t._group_server_spans


def destination_map(t: Topology, pattern) -> np.ndarray:
    """Per-switch destination switch for the deterministic patterns,
    -1 where the destination is drawn at random."""
    out = np.full(t.num_switches, -1, dtype=np.int32)
    if isinstance(pattern, Shift):
        for s in range(t.num_switches):
            out[s] = _shift_switch(t, pattern, s)
    elif isinstance(pattern, AdvPlus):
        for s in range(t.num_switches):
            if t.servers_per_switch[s]:
                out[s] = _group_peer_switch(t, s, pattern.offset)
    return out


def advr_target_spans(t: Topology, pattern: AdvrPlus):
    """Per-switch (base, count) server span of the ADVr target group."""
    base, count = _advr_spans(t)
    tb = np.zeros(t.num_switches, dtype=np.int64)
    tc = np.zeros(t.num_switches, dtype=np.int64)
    for s in range(t.num_switches):
        if t.servers_per_switch[s]:
            tg = (_server_group(t, s) + pattern.offset) % t.spec.groups
            tb[s] = base[tg]
            tc[s] = count[tg]
    return tb, tc


def should_generate(rho: float, rng) -> bool:
    """One Bernoulli draw per server per cycle at rate rho/16."""
    return rng.random() < rho / PACKET_LEN


def pattern_name(pattern) -> str:
    if isinstance(pattern, Uniform):
        return "uniform"
    if isinstance(pattern, Shift):
        dims = "".join("XYZ"[d] for d in sorted(pattern.dims))
        return f"{dims}-{pattern.amount}-shift"
    if isinstance(pattern, AdvPlus):
        return f"ADV+{pattern.offset}"
    return f"ADVr+{pattern.offset}"
