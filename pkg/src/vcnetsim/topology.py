"""Switch/port graphs for the HyperX, Dragonfly and Dragonfly+ families.

A topology is an immutable wiring of switches and ports. Every switch has a
dense port range [0, radix); ports [0, servers_per_switch) face servers
(terminal ports) and the rest are network ports, each paired with exactly one
peer port on another switch. Global links in both Dragonfly variants follow
the palmtree arrangement: the switch (or spine) with in-group index s exposes
global ports k in [0, h), and port (s, k) reaches group (g + s*h + k + 1) mod G,
which yields exactly one global link per group pair.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from enum import IntEnum
from typing import NamedTuple, Union

import numpy as np

from .errors import InvalidSpec, TerminalPort


class PortKind(IntEnum):
    TERMINAL = 0
    HX_DIM = 1
    DF_LOCAL = 2
    DF_GLOBAL = 3
    DFP_UP = 4
    DFP_DOWN = 5
    DFP_GLOBAL = 6


class PortClass(NamedTuple):
    kind: PortKind
    dim: int = 0  # HyperX dimension index; 0 for the other families


class PortRef(NamedTuple):
    switch: int
    port: int


@dataclass(frozen=True)
class HyperXSpec:
    """K_side^n Cartesian power with `servers` terminals per switch."""

    n: int
    side: int
    servers: int

    def validate(self):
        if self.n < 1 or self.side < 2 or self.servers < 0:
            raise InvalidSpec(f"bad HyperX parameters: {self}")


@dataclass(frozen=True)
class DragonflySpec:
    """Two-level hierarchy: complete groups of `a` switches, `h` global ports
    per switch, one global link per group pair."""

    a: int
    h: int
    servers: int
    groups: int

    def validate(self):
        if self.a < 1 or self.h < 1 or self.servers < 0:
            raise InvalidSpec(f"bad Dragonfly parameters: {self}")
        if self.groups > self.a * self.h + 1:
            raise InvalidSpec(
                f"Dragonfly cannot wire {self.groups} groups with "
                f"a*h+1 = {self.a * self.h + 1} maximum"
            )
        if self.groups < 2:
            raise InvalidSpec("Dragonfly needs at least 2 groups")


@dataclass(frozen=True)
class DragonflyPlusSpec:
    """Leaf/spine groups: r leaves and r spines per group, `servers` per leaf,
    r global ports per spine, one global link per group pair."""

    r: int
    servers: int
    groups: int

    def validate(self):
        if self.r < 1 or self.servers < 0:
            raise InvalidSpec(f"bad Dragonfly+ parameters: {self}")
        if self.groups > self.r * self.r + 1:
            raise InvalidSpec(
                f"Dragonfly+ cannot wire {self.groups} groups with "
                f"r^2+1 = {self.r * self.r + 1} maximum"
            )
        if self.groups < 2:
            raise InvalidSpec("Dragonfly+ needs at least 2 groups")


TopologySpec = Union[HyperXSpec, DragonflySpec, DragonflyPlusSpec]

FAMILY_HX = 0
FAMILY_DF = 1
FAMILY_DFP = 2


class Topology:
    """Immutable switch graph with port-class labels and directed-link tables.

    Arrays:
      nbr_switch/nbr_port  (S, radix): peer of each port, -1 on terminals
      port_kind            (S, radix): PortKind code
      port_dim             (S, radix): HyperX dimension of the port, else 0
      dlink_id             (S, radix): dense id of the directed link leaving
                                       that port, -1 on terminals
      dlink_src/dst_switch, dlink_src/dst_port, dlink_kind, dlink_reverse:
                           per directed link
      server_switch/server_slot: per server; switch_server_base: first server
                           id on a switch, -1 if it has none
    """

    def __init__(self, spec, family, nbr_switch, nbr_port, port_kind, port_dim,
                 servers_per_switch):
        self.spec = spec
        self.family = family
        self.num_switches = nbr_switch.shape[0]
        self.radix = nbr_switch.shape[1]
        self.nbr_switch = nbr_switch
        self.nbr_port = nbr_port
        self.port_kind = port_kind
        self.port_dim = port_dim
        self.servers_per_switch = servers_per_switch
        self.num_servers = int(servers_per_switch.sum())

        base = np.full(self.num_switches, -1, dtype=np.int64)
        nxt = 0
        srv_switch = np.empty(self.num_servers, dtype=np.int32)
        srv_slot = np.empty(self.num_servers, dtype=np.int32)
        for s in range(self.num_switches):
            p = int(servers_per_switch[s])
            if p > 0:
                base[s] = nxt
                srv_switch[nxt:nxt + p] = s
                srv_slot[nxt:nxt + p] = np.arange(p)
                nxt += p
        self.switch_server_base = base
        self.server_switch = srv_switch
        self.server_slot = srv_slot

        # dense ids for directed links (network ports only)
        is_net = port_kind != PortKind.TERMINAL
        self.num_dlinks = int(is_net.sum())
        dlink_id = np.full(port_kind.shape, -1, dtype=np.int32)
        dlink_id[is_net] = np.arange(self.num_dlinks, dtype=np.int32)
        self.dlink_id = dlink_id
        src_sw, src_pt = np.nonzero(is_net)
        self.dlink_src_switch = src_sw.astype(np.int32)
        self.dlink_src_port = src_pt.astype(np.int32)
        self.dlink_dst_switch = nbr_switch[src_sw, src_pt].astype(np.int32)
        self.dlink_dst_port = nbr_port[src_sw, src_pt].astype(np.int32)
        self.dlink_kind = port_kind[src_sw, src_pt].astype(np.int8)
        self.dlink_reverse = dlink_id[
            self.dlink_dst_switch, self.dlink_dst_port].astype(np.int32)

        for arr in (self.nbr_switch, self.nbr_port, self.port_kind,
                    self.port_dim, self.servers_per_switch):
            arr.setflags(write=False)

    # -- basic queries ------------------------------------------------------

    def neighbor(self, p: PortRef) -> PortRef:
        """Peer of a network port. Involutive: neighbor(neighbor(p)) == p."""
        s, k = p
        if self.port_kind[s, k] == PortKind.TERMINAL:
            raise TerminalPort(f"port {p} faces a server")
        return PortRef(int(self.nbr_switch[s, k]), int(self.nbr_port[s, k]))

    def port_class(self, p: PortRef) -> PortClass:
        s, k = p
        return PortClass(PortKind(int(self.port_kind[s, k])),
                         int(self.port_dim[s, k]))

    def server_id(self, switch: int, slot: int) -> int:
        return int(self.switch_server_base[switch]) + slot

    def server_location(self, server: int) -> tuple[int, int]:
        return int(self.server_switch[server]), int(self.server_slot[server])

    def undirected_link_count(self) -> int:
        return self.num_dlinks // 2

    # -- graph distances ----------------------------------------------------

    def bfs_distance(self, a: int, b: int) -> int:
        """Unweighted shortest-path length between two switches."""
        if a == b:
            return 0
        dist = {a: 0}
        q = deque([a])
        while q:
            u = q.popleft()
            du = dist[u]
            for v in self.nbr_switch[u]:
                v = int(v)
                if v >= 0 and v not in dist:
                    if v == b:
                        return du + 1
                    dist[v] = du + 1
                    q.append(v)
        raise InvalidSpec(f"switch graph is disconnected between {a} and {b}")

    def eccentricity(self, a: int) -> int:
        dist = np.full(self.num_switches, -1, dtype=np.int32)
        dist[a] = 0
        frontier = np.array([a], dtype=np.int64)
        d = 0
        while frontier.size:
            nxt = self.nbr_switch[frontier].ravel()
            nxt = nxt[nxt >= 0]
            nxt = np.unique(nxt[dist[nxt] < 0])
            d += 1
            dist[nxt] = d
            frontier = nxt
        if (dist < 0).any():
            raise InvalidSpec("switch graph is disconnected")
        return int(dist.max())

    def diameter(self) -> int:
        return max(self.eccentricity(s) for s in range(self.num_switches))

    # -- HyperX coordinate helpers ------------------------------------------

    def hx_coords(self, switch: int) -> tuple[int, ...]:
        """Little-endian coordinates (dimension 0 varies fastest)."""
        spec = self.spec
        out = []
        for _ in range(spec.n):
            out.append(switch % spec.side)
            switch //= spec.side
        return tuple(out)

    def hx_switch(self, coords) -> int:
        spec = self.spec
        sid = 0
        for d in reversed(range(spec.n)):
            sid = sid * spec.side + coords[d]
        return sid

    def hx_port(self, switch: int, dim: int, target_coord: int) -> int:
        """Port on `switch` whose link leads to `target_coord` in `dim`."""
        spec = self.spec
        c = self.hx_coords(switch)[dim]
        if target_coord == c:
            raise InvalidSpec("no self link")
        off = target_coord - 1 if target_coord > c else target_coord
        return spec.servers + dim * (spec.side - 1) + off

    # -- Dragonfly helpers ----------------------------------------------------

    def df_group(self, switch: int) -> int:
        return switch // self.spec.a

    def df_index(self, switch: int) -> int:
        return switch % self.spec.a

    def df_switch(self, group: int, index: int) -> int:
        return group * self.spec.a + index

    def df_local_port(self, switch: int, target_index: int) -> int:
        i = self.df_index(switch)
        if target_index == i:
            raise InvalidSpec("no self link")
        off = target_index - 1 if target_index > i else target_index
        return self.spec.servers + off

    # -- Dragonfly+ helpers ---------------------------------------------------

    def dfp_is_leaf(self, switch: int) -> bool:
        return switch % (2 * self.spec.r) < self.spec.r

    def dfp_group(self, switch: int) -> int:
        return switch // (2 * self.spec.r)

    def dfp_leaf(self, group: int, index: int) -> int:
        return group * 2 * self.spec.r + index

    def dfp_spine(self, group: int, index: int) -> int:
        return group * 2 * self.spec.r + self.spec.r + index


def _palmtree_link(g, s, k, h, groups):
    """Remote endpoint (group, index, port) of global port k on in-group
    index s of group g."""
    off = s * h + k + 1
    g2 = (g + off) % groups
    off2 = groups - off
    return g2, (off2 - 1) // h, (off2 - 1) % h


def _build_hyperx(spec: HyperXSpec) -> Topology:
    n, side, p = spec.n, spec.side, spec.servers
    num = side ** n
    radix = p + n * (side - 1)
    nbr_s = np.full((num, radix), -1, dtype=np.int32)
    nbr_p = np.full((num, radix), -1, dtype=np.int32)
    kind = np.zeros((num, radix), dtype=np.int8)
    dim = np.zeros((num, radix), dtype=np.int8)

    stride = [side ** d for d in range(n)]
    for s in range(num):
        coords = [(s // stride[d]) % side for d in range(n)]
        for d in range(n):
            c = coords[d]
            base = p + d * (side - 1)
            for off in range(side - 1):
                t = off + 1 if off >= c else off
                peer = s + (t - c) * stride[d]
                back = c - 1 if c > t else c
                nbr_s[s, base + off] = peer
                nbr_p[s, base + off] = p + d * (side - 1) + back
                kind[s, base + off] = PortKind.HX_DIM
                dim[s, base + off] = d
    servers = np.full(num, p, dtype=np.int32)
    return Topology(spec, FAMILY_HX, nbr_s, nbr_p, kind, dim, servers)


def _build_dragonfly(spec: DragonflySpec) -> Topology:
    a, h, p, G = spec.a, spec.h, spec.servers, spec.groups
    num = G * a
    radix = p + (a - 1) + h
    nbr_s = np.full((num, radix), -1, dtype=np.int32)
    nbr_p = np.full((num, radix), -1, dtype=np.int32)
    kind = np.zeros((num, radix), dtype=np.int8)
    dim = np.zeros((num, radix), dtype=np.int8)

    for g in range(G):
        for i in range(a):
            s = g * a + i
            # local complete graph within the group
            for off in range(a - 1):
                t = off + 1 if off >= i else off
                back = i - 1 if i > t else i
                nbr_s[s, p + off] = g * a + t
                nbr_p[s, p + off] = p + back
                kind[s, p + off] = PortKind.DF_LOCAL
            # palmtree globals
            for k in range(h):
                off = i * h + k + 1
                if off >= G:
                    continue  # unused global port on undersized instances
                g2, i2, k2 = _palmtree_link(g, i, k, h, G)
                nbr_s[s, p + (a - 1) + k] = g2 * a + i2
                nbr_p[s, p + (a - 1) + k] = p + (a - 1) + k2
                kind[s, p + (a - 1) + k] = PortKind.DF_GLOBAL
    servers = np.full(num, p, dtype=np.int32)
    return Topology(spec, FAMILY_DF, nbr_s, nbr_p, kind, dim, servers)


def _build_dragonfly_plus(spec: DragonflyPlusSpec) -> Topology:
    r, p, G = spec.r, spec.servers, spec.groups
    num = G * 2 * r
    radix = max(p + r, 2 * r)
    nbr_s = np.full((num, radix), -1, dtype=np.int32)
    nbr_p = np.full((num, radix), -1, dtype=np.int32)
    kind = np.zeros((num, radix), dtype=np.int8)
    dim = np.zeros((num, radix), dtype=np.int8)

    for g in range(G):
        for i in range(r):
            leaf = g * 2 * r + i
            for j in range(r):
                # leaf i up-port j <-> spine j down-port i
                spine = g * 2 * r + r + j
                nbr_s[leaf, p + j] = spine
                nbr_p[leaf, p + j] = i
                kind[leaf, p + j] = PortKind.DFP_UP
                nbr_s[spine, i] = leaf
                nbr_p[spine, i] = p + j
                kind[spine, i] = PortKind.DFP_DOWN
        for j in range(r):
            spine = g * 2 * r + r + j
            # palmtree globals, spine index playing the in-group role
            for k in range(r):
                off = j * r + k + 1
                if off >= G:
                    continue
                g2, j2, k2 = _palmtree_link(g, j, k, r, G)
                nbr_s[spine, r + k] = g2 * 2 * r + r + j2
                nbr_p[spine, r + k] = r + k2
                kind[spine, r + k] = PortKind.DFP_GLOBAL
    servers = np.zeros(num, dtype=np.int32)
    for g in range(G):
        for i in range(r):
            servers[g * 2 * r + i] = p
    return Topology(spec, FAMILY_DFP, nbr_s, nbr_p, kind, dim, servers)


def build(spec: TopologySpec) -> Topology:
    """Construct a topology; wiring is deterministic for a given spec."""
    spec.validate()
    if isinstance(spec, HyperXSpec):
        t = _build_hyperx(spec)
    elif isinstance(spec, DragonflySpec):
        t = _build_dragonfly(spec)
    elif isinstance(spec, DragonflyPlusSpec):
        t = _build_dragonfly_plus(spec)
    else:
        raise InvalidSpec(f"unknown topology spec {spec!r}")
    _check_pairing(t)
    return t


def _check_pairing(t: Topology):
    # every network port must be half of a bidirectional pair
    rev = t.dlink_reverse
    if (rev < 0).any() or not np.array_equal(rev[rev],
                                             np.arange(t.num_dlinks)):
        raise InvalidSpec("port pairing is not involutive")
