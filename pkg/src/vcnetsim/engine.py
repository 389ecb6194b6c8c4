"""Cycle-driven simulation runs.

`run` assembles flat state for the compiled kernel from a SimConfig and
post-processes counters into a RunOutput. Runs are bit-deterministic for a
fixed (config, seed): the three random substreams (traffic destinations,
generation Bernoulli, routing intermediates) are derived from the run seed
with the same splitmix64 generator the pure-Python surfaces use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernel as K
from . import topology as topo
from . import traffic as tr
from . import vcpolicy as vp
from .errors import InvalidSpec
from .rng import RandomStream
from .routing import RoutingSpec, default_routing, gateway_tables, \
    intermediate_candidates
from .topology import Topology

PACKET_LEN = K.PKT


@dataclass
class SimConfig:
    topology: object
    traffic: object
    vc: object
    routing: Optional[RoutingSpec] = None
    offered_load: float = 1.0
    cycles: int = 510_000
    seed: int = 1
    bin_size: int = 1_000
    warmup_fraction: float = 0.2
    watchdog_cycles: int = 10_000

    def validate(self, t: Topology):
        tr.offered_load(self.offered_load)
        tr.validate_pattern(t, self.traffic)
        if self.cycles < self.bin_size:
            raise InvalidSpec("cycles must cover at least one bin")
        if not 0.0 <= self.warmup_fraction < 1.0:
            raise InvalidSpec("warmup_fraction outside [0, 1)")
        (self.routing or default_routing(t)).validate(t)


@dataclass
class RunOutput:
    binned_accepted: np.ndarray   # phits/server/cycle per bin
    mean_accepted: float          # over post-warmup bins
    mean_latency: float           # generation->ejection, post-warmup ejections
    deadlock: bool
    seed: int
    cycles: int
    end_cycle: int
    generated: int
    injected: int
    ejected: int
    latency_samples: int
    latency_untracked: int
    warmup_bins: int
    trace: Optional["Trace"] = None


@dataclass
class Trace:
    """Per-packet route records and grant/ejection events (test support)."""
    src: np.ndarray
    dst: np.ndarray
    intermediate: np.ndarray
    minimal: np.ndarray
    length: np.ndarray
    birth: np.ndarray
    inject_cycle: np.ndarray
    eject_cycle: np.ndarray
    dlinks: np.ndarray
    masks: np.ndarray
    grant_cycle: np.ndarray
    grant_row: np.ndarray
    grant_port: np.ndarray
    grant_vc: np.ndarray


def _policy_tables(t: Topology, policy):
    kinds = t.dlink_kind
    valid = np.empty(t.num_dlinks, dtype=np.int8)
    for code in np.unique(kinds):
        valid[kinds == code] = vp.vcs_per_port(policy, topo.PortKind(int(code)))
    V = int(valid.max()) if valid.size else 1
    if isinstance(policy, vp.TwoPhases):
        pcode = K.P_TWO_PHASE
        inj = {vp.MIN_FIRST: K.INJ_MIN_FIRST, vp.MIN_LAST: K.INJ_MIN_LAST,
               vp.MIN_BOTH: K.INJ_MIN_BOTH}[policy.injection]
        tpk, steps = policy.vcs_per_step, 0
    elif isinstance(policy, vp.Ladder):
        pcode, inj, tpk, steps = K.P_LADDER, 0, 1, policy.steps
    elif isinstance(policy, vp.LadderReuse):
        pcode, inj, tpk, steps = K.P_LADDER_REUSE, 0, 1, policy.steps
    elif isinstance(policy, vp.SingleVc):
        pcode, inj, tpk, steps = K.P_SINGLE, 0, 1, 0
    else:
        raise InvalidSpec(f"unknown vc policy {policy!r}")
    return V, valid, pcode, inj, tpk, steps


def _traffic_tables(t: Topology, pattern):
    S = t.num_switches
    if isinstance(pattern, tr.Uniform):
        return (K.T_UNIFORM, np.full(S, -1, np.int32),
                np.zeros(S, np.int64), np.ones(S, np.int64))
    if isinstance(pattern, (tr.Shift, tr.AdvPlus)):
        m = tr.destination_map(t, pattern)
        return (K.T_MAPPED, m.astype(np.int32),
                np.zeros(S, np.int64), np.ones(S, np.int64))
    if isinstance(pattern, tr.AdvrPlus):
        base, cnt = tr.advr_target_spans(t, pattern)
        return (K.T_ADVR, np.full(S, -1, np.int32),
                base.astype(np.int64), np.maximum(cnt, 1).astype(np.int64))
    raise InvalidSpec(f"unknown traffic pattern {pattern!r}")


def _route_tables(t: Topology):
    if t.family == topo.FAMILY_HX:
        spec = t.spec
        strides = np.array([spec.side ** d for d in range(spec.n)], np.int64)
        dummy = np.zeros((1, 1), np.int32)
        return (spec.n, spec.side, strides, spec.servers, 1, 1, dummy, dummy)
    gw_idx, gw_port = gateway_tables(t)
    strides = np.ones(1, np.int64)
    if t.family == topo.FAMILY_DF:
        return (0, 0, strides, t.spec.servers, t.spec.a, 1,
                gw_idx.astype(np.int32), gw_port.astype(np.int32))
    return (0, 0, strides, t.spec.servers, 1, t.spec.r,
            gw_idx.astype(np.int32), gw_port.astype(np.int32))


def run(config: SimConfig, topology: Optional[Topology] = None,
        debug: bool = False, trace: bool = False,
        _preload=None, _gen_off: bool = False) -> RunOutput:
    """Execute one simulation. `topology` may be a prebuilt instance of
    config.topology (sweeps reuse it). debug enables per-cycle invariant
    checks; trace records packet routes and grant events (small runs)."""
    t = topology if topology is not None else topo.build(config.topology)
    config.validate(t)
    routing = config.routing or default_routing(t)
    policy = config.vc

    L = t.num_dlinks
    Q = t.num_servers
    V, valid, pcode, inj, tpk, steps = _policy_tables(t, policy)
    C = L * V
    P = L + Q
    (tcode, pattern_map, advr_base, advr_cnt) = _traffic_tables(t, config.traffic)
    (hx_n, hx_side, hx_strides, p_term, df_a, dfp_r,
     gw_idx, gw_port) = _route_tables(t)

    if routing.kind == "valiant":
        cands = intermediate_candidates(t, routing.intermediate)
    else:
        cands = np.zeros(1, np.int32)

    root = RandomStream(config.seed)
    rng = np.array([root.next_u64() for _ in range(3)], dtype=np.uint64)

    if L + Q >= 32767:
        raise InvalidSpec("topology too large for 16-bit port ids")
    npool = C * K.IB_SLOTS + 3 * Q + 8
    nbins = math.ceil(config.cycles / config.bin_size)
    warmup_cycle = int(config.cycles * config.warmup_fraction)

    fl = np.arange(npool, dtype=np.int32)[::-1].copy()
    fl_state = np.array([npool], dtype=np.int64)

    if _preload is not None:
        pre_src = np.asarray([p[0] for p in _preload], dtype=np.int32)
        pre_dst = np.asarray([p[1] for p in _preload], dtype=np.int32)
        if len(set(pre_src.tolist())) != pre_src.size:
            raise InvalidSpec("preloaded packets need distinct source servers")
    else:
        pre_src = np.zeros(0, dtype=np.int32)
        pre_dst = np.zeros(0, dtype=np.int32)
    gen_prob = 0.0 if _gen_off else config.offered_load / PACKET_LEN

    tr_cap = 200_000 if trace else 0
    tre_cap = 400_000 if trace else 0

    args = dict(
        pk_dlink=np.zeros((npool, 6), np.int32),
        pk_vcmask=np.zeros((npool, 6), np.uint8),
        pk_len=np.zeros(npool, np.int8),
        pk_hop=np.zeros(npool, np.int8),
        pk_birth=np.zeros(npool, np.int64),
        pk_inject=np.zeros(npool, np.int64),
        pk_flow=np.zeros((npool, 8), np.int32),
        pk_live=np.zeros(npool, np.bool_),
        ch=np.zeros((C, 8), np.int8),
        ib_pkt=np.full((C, K.IB_SLOTS), -1, np.int32),
        ob_pkt=np.full((C, K.OB_SLOTS), -1, np.int32),
        rr_vc=np.zeros(L, np.int8),
        ob_active=np.zeros(L, np.int16),
        snd=np.zeros(L, np.uint8),
        lact_list=np.zeros(L, np.int32),
        lact_pos=np.full(L, -1, np.int32),
        occ_list=np.zeros(C, np.int32),
        occ_pos=np.full(C, -1, np.int32),
        pos_port=np.full(C, -1, np.int16),
        pos_mask=np.zeros(C, np.uint8),
        rr_ptr=np.full(P, -1, np.int64),
        grant_stamp=np.full(P, -1, np.int64),
        best_stamp=np.full(P, -1, np.int64),
        best_dist=np.zeros(P, np.int64),
        best_req=np.zeros(P, np.int64),
        tp_list=np.zeros(P, np.int64),
        adm_mask=np.zeros(P, np.int64),
        qlen=np.zeros(Q, np.int64),
        head_pkt=np.full(Q, -1, np.int32),
        sreq_port=np.full(Q, -1, np.int16),
        sreq_mask=np.zeros(Q, np.uint8),
        ring=np.zeros((Q, K.BIRTH_RING), np.int32),
        ring_head=np.zeros(Q, np.int32),
        ring_cnt=np.zeros(Q, np.int32),
        untracked=np.zeros(Q, np.int64),
        eb_pkt=np.full((Q, K.EB_SLOTS), -1, np.int32),
        eb_cnt=np.zeros(Q, np.int8),
        eb_occ=np.zeros(Q, np.int16),
        eb_resv=np.zeros(Q, np.int16),
        mat_list=np.zeros(Q, np.int32),
        mat_pending=np.zeros(Q, np.bool_),
        bin_accept=np.zeros(nbins, np.int64),
        counters=np.zeros(16, np.int64),
        stream_list=np.zeros(npool, np.int32),
        chk_in_occ=np.zeros(C, np.int32),
        chk_in_resv=np.zeros(C, np.int32),
        chk_out_occ=np.zeros(C, np.int32),
        chk_out_resv=np.zeros(C, np.int32),
        chk_eb_occ=np.zeros(Q, np.int32),
        chk_eb_resv=np.zeros(Q, np.int32),
        tr_n=np.zeros(1, np.int64),
        trp_src=np.zeros(tr_cap, np.int32),
        trp_dst=np.zeros(tr_cap, np.int32),
        trp_inter=np.zeros(tr_cap, np.int64),
        trp_minimal=np.zeros(tr_cap, np.int8),
        trp_len=np.zeros(tr_cap, np.int8),
        trp_birth=np.zeros(tr_cap, np.int64),
        trp_inject=np.zeros(tr_cap, np.int64),
        trp_eject=np.zeros(tr_cap, np.int64),
        trp_dlink=np.zeros((tr_cap, 6), np.int32),
        trp_mask=np.zeros((tr_cap, 6), np.uint8),
        tr_of=np.full(npool, -1, np.int32),
        tre_n=np.zeros(1, np.int64),
        tre_cycle=np.zeros(tre_cap, np.int64),
        tre_row=np.zeros(tre_cap, np.int32),
        tre_port=np.zeros(tre_cap, np.int32),
        tre_vc=np.zeros(tre_cap, np.int32),
    )

    args["adm_mask"][:L] = (1 << valid.astype(np.int64)) - 1
    args["adm_mask"][L:] = 1

    err, deadlock, end_cycle = K.run_kernel(
        config.cycles, config.bin_size, warmup_cycle, config.watchdog_cycles,
        L, V, Q,
        t.dlink_kind, valid,
        np.ascontiguousarray(t.dlink_id),
        t.server_switch, t.server_slot,
        t.switch_server_base.astype(np.int64),
        t.family, hx_n, hx_side, hx_strides, p_term, df_a, dfp_r,
        gw_idx, gw_port,
        tcode, pattern_map, advr_base, advr_cnt, gen_prob,
        routing.kind == "minimal", cands,
        pcode, inj, tpk, steps,
        pre_src, pre_dst, np.full(Q, -1, np.int32),
        rng,
        fl, fl_state,
        args["pk_dlink"], args["pk_vcmask"], args["pk_len"], args["pk_hop"],
        args["pk_birth"], args["pk_inject"], args["pk_flow"],
        args["pk_live"],
        args["ch"], args["ib_pkt"], args["ob_pkt"],
        args["rr_vc"], args["ob_active"], args["snd"],
        args["lact_list"], args["lact_pos"], args["occ_list"],
        args["occ_pos"], args["pos_port"], args["pos_mask"],
        args["rr_ptr"], args["grant_stamp"], args["best_stamp"],
        args["best_dist"], args["best_req"], args["tp_list"],
        args["adm_mask"],
        args["qlen"], args["head_pkt"], args["sreq_port"], args["sreq_mask"],
        args["ring"], args["ring_head"], args["ring_cnt"], args["untracked"],
        args["eb_pkt"], args["eb_cnt"], args["eb_occ"], args["eb_resv"],
        args["mat_list"], args["mat_pending"],
        args["bin_accept"], args["counters"], args["stream_list"],
        1 if debug else 0,
        args["chk_in_occ"], args["chk_in_resv"], args["chk_out_occ"],
        args["chk_out_resv"], args["chk_eb_occ"], args["chk_eb_resv"],
        trace, args["tr_n"], tr_cap, args["trp_src"], args["trp_dst"],
        args["trp_inter"], args["trp_minimal"], args["trp_len"],
        args["trp_birth"], args["trp_inject"], args["trp_eject"],
        args["trp_dlink"], args["trp_mask"], args["tr_of"],
        args["tre_n"], tre_cap, args["tre_cycle"], args["tre_row"],
        args["tre_port"], args["tre_vc"])

    if err != 0:
        raise AssertionError(
            f"engine invariant violation (code {err}) at cycle {end_cycle}")

    counters = args["counters"]
    bins = args["bin_accept"].astype(np.float64) / (Q * config.bin_size)
    warmup_bins = warmup_cycle // config.bin_size
    measured = bins[warmup_bins:]
    mean_acc = float(measured.mean()) if measured.size else float("nan")
    lat_n = int(counters[6])
    mean_lat = float(counters[5] / lat_n) if lat_n else float("nan")

    out_trace = None
    if trace:
        n = int(args["tr_n"][0])
        e = int(args["tre_n"][0])
        out_trace = Trace(
            src=args["trp_src"][:n].copy(),
            dst=args["trp_dst"][:n].copy(),
            intermediate=args["trp_inter"][:n].copy(),
            minimal=args["trp_minimal"][:n].copy(),
            length=args["trp_len"][:n].copy(),
            birth=args["trp_birth"][:n].copy(),
            inject_cycle=args["trp_inject"][:n].copy(),
            eject_cycle=args["trp_eject"][:n].copy(),
            dlinks=args["trp_dlink"][:n].copy(),
            masks=args["trp_mask"][:n].copy(),
            grant_cycle=args["tre_cycle"][:e].copy(),
            grant_row=args["tre_row"][:e].copy(),
            grant_port=args["tre_port"][:e].copy(),
            grant_vc=args["tre_vc"][:e].copy(),
        )

    return RunOutput(
        binned_accepted=bins,
        mean_accepted=mean_acc,
        mean_latency=mean_lat,
        deadlock=bool(deadlock),
        seed=config.seed,
        cycles=config.cycles,
        end_cycle=int(end_cycle),
        generated=int(counters[0]),
        injected=int(counters[8]),
        ejected=int(counters[3]),
        latency_samples=lat_n,
        latency_untracked=int(counters[7]),
        warmup_bins=warmup_bins,
        trace=out_trace,
    )


def run_manual(t: Topology, policy, packets, cycles: int,
               routing: Optional[RoutingSpec] = None,
               debug: bool = True) -> RunOutput:
    """Drive a run from an explicit (src_server, dst_server) packet list
    queued at cycle 0, with generation off. Sources must be distinct.
    Routes follow `routing` (minimal by default); always traced."""
    cfg = SimConfig(
        topology=t.spec, traffic=tr.Uniform(), vc=policy,
        routing=routing or RoutingSpec("minimal"),
        offered_load=1.0, cycles=cycles, seed=0,
        bin_size=min(1000, cycles), warmup_fraction=0.0,
    )
    return run(cfg, topology=t, debug=debug, trace=True,
               _preload=packets, _gen_off=True)
