import numpy as np
import pytest

from vcnetsim import engine as eng
from vcnetsim import routing as rt
from vcnetsim import topology as topo
from vcnetsim import traffic as tr
from vcnetsim import vcpolicy as vp
from vcnetsim.routing import RoutingSpec


def cfg_for(t, pattern, policy, **kw):
    args = dict(topology=t.spec, traffic=pattern, vc=policy,
                offered_load=1.0, cycles=20_000, seed=1)
    args.update(kw)
    return eng.SimConfig(**args)


# ------------------------------------------------------- pipeline goldens --

def test_single_packet_one_hop_latency():
    t = topo.build(topo.HyperXSpec(n=1, side=2, servers=1))
    out = eng.run_manual(t, vp.Ladder(2), [(0, 1)], cycles=100)
    assert out.ejected == 1
    # grant at 0; 16 phits cross the link over cycles 1..16; ejection grant
    # at 16; the 16-phit drain finishes at cycle 31
    assert out.trace.inject_cycle.tolist() == [0]
    assert out.trace.eject_cycle.tolist() == [31]


def test_single_packet_two_hop_latency():
    t = topo.build(topo.HyperXSpec(n=2, side=2, servers=1))
    out = eng.run_manual(t, vp.Ladder(4), [(0, 3)], cycles=200)
    assert out.trace.length.tolist() == [2]
    assert out.trace.eject_cycle.tolist() == [47]  # one extra 16-cycle stage


def test_same_switch_delivery():
    t = topo.build(topo.HyperXSpec(n=1, side=2, servers=2))
    out = eng.run_manual(t, vp.Ladder(2), [(0, 1)], cycles=100)
    assert out.trace.length.tolist() == [0]
    assert out.trace.eject_cycle.tolist() == [15]
    assert out.ejected == 1


def test_injection_serialization_and_buffer_backpressure():
    """Five packets from one switch into a single VC: the output FIFO holds
    two outstanding packets, so grants serialize on 16-cycle boundaries and
    a grant is deferred until a whole-packet slot frees."""
    t = topo.build(topo.HyperXSpec(n=1, side=2, servers=8))
    out = eng.run_manual(t, vp.Ladder(2), [(s, 8) for s in range(5)],
                         cycles=300)
    got = sorted(zip(out.trace.inject_cycle.tolist(), out.trace.src.tolist()))
    assert got == [(0, 0), (1, 1), (16, 2), (32, 3), (48, 4)]
    assert sorted(out.trace.eject_cycle.tolist()) == [31, 47, 63, 79, 95]


def test_round_robin_between_input_channels():
    """Two input VCs with backlogs contending for one ejection port are
    granted alternately."""
    t = topo.build(topo.HyperXSpec(n=2, side=2, servers=4))
    pre = [(t.server_id(2, k), 12) for k in range(4)] \
        + [(t.server_id(1, k), 12) for k in range(4)]
    out = eng.run_manual(t, vp.Ladder(4), pre, cycles=500)
    L = t.num_dlinks
    by_cycle = sorted(
        (int(c), int(out.trace.src[r]) // 4)
        for c, r, p in zip(out.trace.grant_cycle, out.trace.grant_row,
                           out.trace.grant_port)
        if p >= L)
    switches = [s for _, s in by_cycle]
    assert len(switches) == 8
    # after the pipe fills, grants alternate between the two source switches
    assert switches[2:] == [1, 2, 1, 2, 1, 2]


# ----------------------------------------------------------- conservation --

def test_invariants_and_determinism_20k():
    t = topo.build(topo.HyperXSpec(n=2, side=4, servers=4))
    cfg = cfg_for(t, tr.Uniform(), vp.LadderReuse(4), offered_load=0.6,
                  cycles=20_000)
    out1 = eng.run(cfg, topology=t, debug=True)  # per-cycle kernel checks
    assert not out1.deadlock
    assert out1.generated == out1.ejected + (out1.generated - out1.ejected)
    assert out1.injected >= out1.ejected
    out2 = eng.run(cfg, topology=t)
    assert np.array_equal(out1.binned_accepted, out2.binned_accepted)
    assert out1.mean_latency == out2.mean_latency
    assert out1.generated == out2.generated
    assert out1.ejected == out2.ejected


def test_accepted_equals_offered_below_saturation():
    t = topo.build(topo.HyperXSpec(n=1, side=4, servers=1))
    cfg = cfg_for(t, tr.Uniform(), vp.Ladder(2), offered_load=0.2,
                  cycles=50_000, routing=RoutingSpec("minimal"))
    out = eng.run(cfg, topology=t)
    assert abs(out.mean_accepted - 0.2) < 0.01
    assert not out.deadlock


def test_bins_bounded_by_drain_rate():
    t = topo.build(topo.HyperXSpec(n=2, side=4, servers=4))
    cfg = cfg_for(t, tr.Uniform(), vp.LadderReuse(4), cycles=10_000)
    out = eng.run(cfg, topology=t)
    assert (out.binned_accepted >= 0).all()
    assert (out.binned_accepted <= 1.0).all()


# -------------------------------------------------- kernel/surface parity --

def _reconstruct_path(t, trace, i):
    dlinks = trace.dlinks[i, :trace.length[i]]
    ports = [(int(t.dlink_src_switch[d]), int(t.dlink_src_port[d]))
             for d in dlinks]
    minimal = bool(trace.minimal[i])
    inter = int(trace.intermediate[i])
    if minimal:
        src_sw = int(t.server_switch[trace.src[i]])
        absorbed = "dst" if (inter >= 0 and inter != src_sw) else "src"
        return rt._annotate(t, ports, len(ports), True, absorbed), inter
    boundary = next(k for k, (sw, _) in enumerate(ports) if sw == inter)
    return rt._annotate(t, ports, boundary, False), inter


@pytest.mark.parametrize("family", ["hx", "df"])
def test_traced_routes_match_surface_routing(family, hx2d_small, df_small):
    t = hx2d_small if family == "hx" else df_small
    pattern = tr.Uniform()
    policy = vp.TwoPhases(vp.MIN_LAST, 2)
    cfg = cfg_for(t, pattern, policy, cycles=4_000)
    out = eng.run(cfg, topology=t, trace=True)
    n = len(out.trace.src)
    assert n > 200
    for i in range(n):
        path, inter = _reconstruct_path(t, out.trace, i)
        src_sw = int(t.server_switch[out.trace.src[i]])
        dst_sw = int(t.server_switch[out.trace.dst[i]])
        if path.minimal:
            want = rt.minimal_route(t, src_sw, dst_sw)
            assert [(h.switch, h.out_port) for h in path.hops] == \
                   [(h.switch, h.out_port) for h in want.hops]
        else:
            m1 = rt.minimal_route(t, src_sw, inter)
            m2 = rt.minimal_route(t, inter, dst_sw)
            got = [(h.switch, h.out_port) for h in path.hops]
            assert got[:len(m1)] == [(h.switch, h.out_port) for h in m1.hops]
            assert got[len(m1):] == [(h.switch, h.out_port) for h in m2.hops]


@pytest.mark.parametrize("policy_name", [
    "two_phases_min_first", "two_phases_min_last", "ladder", "ladder_reuse"])
def test_traced_masks_match_policy_surface(policy_name, df_small):
    """The kernel's per-hop admissible-VC masks equal the pure policy
    function evaluated on the reconstructed hop contexts."""
    t = df_small
    policy = vp.default_policy(policy_name, t)
    cfg = cfg_for(t, tr.Uniform(), policy, cycles=4_000)
    out = eng.run(cfg, topology=t, trace=True)
    for i in range(len(out.trace.src)):
        path, _ = _reconstruct_path(t, out.trace, i)
        for h in path.hops:
            want = vp.allowed_mask(policy, vp.hop_context(path, h))
            assert int(out.trace.masks[i, h.hop_index]) == want


def test_granted_vcs_are_legal(df_small):
    """Every VC grant falls inside the packet's admissible mask (runtime
    VC-legality check, via the event trace)."""
    t = df_small
    cfg = cfg_for(t, tr.Uniform(), vp.TwoPhases(vp.MIN_FIRST, 2),
                  cycles=4_000)
    out = eng.run(cfg, topology=t, trace=True)
    trc = out.trace
    L = t.num_dlinks
    checked = 0
    for c, r, p, v in zip(trc.grant_cycle, trc.grant_row, trc.grant_port,
                          trc.grant_vc):
        if p >= L:
            continue  # ejection grants carry no VC
        hop = list(trc.dlinks[r, :trc.length[r]]).index(p)
        assert (int(trc.masks[r, hop]) >> int(v)) & 1
        checked += 1
    assert checked > 500


# --------------------------------------------------------------- watchdog --

def test_watchdog_negative_control():
    """One shared VC under Valiant on a small Dragonfly deadlocks; the
    watchdog aborts the run and flags it."""
    t = topo.build(topo.DragonflySpec(a=4, h=2, servers=2, groups=9))
    cfg = cfg_for(t, tr.Uniform(), vp.SingleVc(), cycles=100_000,
                  watchdog_cycles=10_000)
    out = eng.run(cfg, topology=t)
    assert out.deadlock
    assert out.end_cycle < 100_000


def test_watchdog_quiet_on_idle_and_healthy_runs():
    t = topo.build(topo.HyperXSpec(n=2, side=4, servers=4))
    cfg = cfg_for(t, tr.Shift(dims=(0, 1), amount=1), vp.Ladder(4),
                  cycles=30_000)
    out = eng.run(cfg, topology=t)
    assert not out.deadlock


def test_valiant_throughput_bound_smoke(hx2d):
    cfg = cfg_for(hx2d, tr.Shift(dims=(0, 1), amount=7), vp.LadderReuse(4),
                  cycles=40_000)
    out = eng.run(cfg, topology=hx2d)
    assert out.mean_accepted <= 0.52
    assert not out.deadlock


def test_seed_changes_output():
    t = topo.build(topo.HyperXSpec(n=2, side=4, servers=4))
    a = eng.run(cfg_for(t, tr.Uniform(), vp.LadderReuse(4), cycles=10_000,
                        seed=1), topology=t)
    b = eng.run(cfg_for(t, tr.Uniform(), vp.LadderReuse(4), cycles=10_000,
                        seed=2), topology=t)
    assert not np.array_equal(a.binned_accepted, b.binned_accepted)
