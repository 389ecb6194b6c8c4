"""Compiled cycle-driven core of the simulator.

All simulation state lives in flat numpy arrays so the whole cycle loop can
run under numba. One packet moves as a unit of 16 phits: it must be fully
resident in an input VC (or at the head of its source queue) before it can
request switch allocation; once granted it streams one phit per cycle into
the chosen output VC while the link forwards one phit per cycle (round-robin
across that link's output VCs) into the downstream input VC. Reservations
made at grant time keep every buffer within its capacity, virtual
cut-through style.

Pipeline order within a cycle: LINK, SWITCH ALLOCATION (in-transit packets
and source-queue heads compete in one round-robin arbitration per output
port, one grant per port), stream/advance, EJECTION drain, GENERATION.

Layout notes, purely for single-core speed: per-channel state is one
16-byte row (ch); pending requests are mirrored positionally alongside the
occupied-channel list so the allocation scan is a sequential walk; the link
phase advances per-channel counters (ob_avail/ob_left) and touches the
packet row only on first-phit arrival and on completion; per-port
admissibility masks are memoized within a cycle and invalidated by grants.

Error codes: 0 ok, 1 packet pool exhausted, 2 allocation invariant broken,
4 ladder step overflow, >=5 debug invariant failures (see engine.run).
"""

import numpy as np
from numba import njit

PKT = 16
IB_CAP = 64           # input VC capacity, phits (4 packets)
OB_CAP = 32           # output VC capacity (2 packets)
EB_CAP = 32           # per-server ejection buffer (2 packets)
IB_SLOTS = 4
OB_SLOTS = 2
EB_SLOTS = 2
BIRTH_RING = 4096

# pk_flow columns
FS = 0   # phits streamed out of the current source buffer
FC = 1   # phits crossed over the current link (16 once fully arrived)
FD = 2   # phits drained at the ejection buffer
FW = 3   # waiting for allocation (fully resident)
FCH = 4  # granted target channel (-1 = ejection buffer)
FSC = 5  # source channel of the active transfer (-1 = source queue)
FDQ = 6  # destination server
FSQ = 7  # source server

# ch columns (int8)
CIO = 0  # input VC occupied phits
CIR = 1  # input VC reserved phits
COO = 2  # output VC occupied phits
COR = 3  # output VC reserved phits
CON = 4  # output FIFO length (packets)
CAV = 5  # phits of the output-FIFO front present and not yet crossed
CLF = 6  # phits of the output-FIFO front still to cross
CHC = 7  # input FIFO head slot (bits 0-1) and length (bits 2-4)

# port-class codes, mirroring topology.PortKind
K_TERMINAL = 0
K_HX_DIM = 1
K_DF_LOCAL = 2
K_DF_GLOBAL = 3
K_DFP_UP = 4
K_DFP_DOWN = 5
K_DFP_GLOBAL = 6

# policy codes
P_TWO_PHASE = 0
P_LADDER = 1
P_LADDER_REUSE = 2
P_SINGLE = 3

INJ_MIN_FIRST = 0
INJ_MIN_LAST = 1
INJ_MIN_BOTH = 2

# traffic codes
T_UNIFORM = 0
T_MAPPED = 1
T_ADVR = 2

FAM_HX = 0
FAM_DF = 1
FAM_DFP = 2

_G = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_F53 = 2.0 ** -53


@njit(cache=True, inline="always")
def _next_u64(rng, i):
    rng[i] = rng[i] + _G
    z = rng[i]
    z = z ^ (z >> _S30)
    z = z * _M1
    z = z ^ (z >> _S27)
    z = z * _M2
    z = z ^ (z >> _S31)
    return z


@njit(cache=True, inline="always")
def _randint(rng, i, n):
    return np.int64((_next_u64(rng, i) >> _S11) % np.uint64(n))


@njit(cache=True, inline="always")
def _randf(rng, i):
    return np.float64(_next_u64(rng, i) >> _S11) * _F53


@njit(cache=True, inline="always")
def _emit_minimal(family, src, dst, rng,
                  hx_n, hx_side, hx_strides, p_terminal,
                  df_a, dfp_r, gw_idx, gw_port,
                  dlink_of, out_dlinks, pos):
    """Append the minimal route src->dst (as dlink ids) at out_dlinks[pos:].
    Returns the new length. Draws the Dragonfly+ intra-group spine from the
    routing stream."""
    if src == dst:
        return pos
    if family == FAM_HX:
        cur = src
        for d in range(hx_n):
            cs = (cur // hx_strides[d]) % hx_side
            cd = (dst // hx_strides[d]) % hx_side
            if cs != cd:
                off = cd - 1 if cd > cs else cd
                port = p_terminal + d * (hx_side - 1) + off
                out_dlinks[pos] = dlink_of[cur, port]
                pos += 1
                cur += (cd - cs) * hx_strides[d]
        return pos
    if family == FAM_DF:
        gs = src // df_a
        gd = dst // df_a
        cur = src
        if gs == gd:
            di = dst % df_a
            ci = cur % df_a
            off = di - 1 if di > ci else di
            out_dlinks[pos] = dlink_of[cur, p_terminal + off]
            return pos + 1
        ai = gw_idx[gs, gd]
        ci = cur % df_a
        if ci != ai:
            off = ai - 1 if ai > ci else ai
            out_dlinks[pos] = dlink_of[cur, p_terminal + off]
            pos += 1
            cur = gs * df_a + ai
        out_dlinks[pos] = dlink_of[cur, gw_port[gs, gd]]
        pos += 1
        cur = gd * df_a + gw_idx[gd, gs]
        if cur != dst:
            di = dst % df_a
            ci = cur % df_a
            off = di - 1 if di > ci else di
            out_dlinks[pos] = dlink_of[cur, p_terminal + off]
            pos += 1
        return pos
    # Dragonfly+: src/dst are leaves
    w = 2 * dfp_r
    gs = src // w
    gd = dst // w
    if gs == gd:
        j = _randint(rng, 2, dfp_r)
        spine = gs * w + dfp_r + j
        out_dlinks[pos] = dlink_of[src, p_terminal + j]
        out_dlinks[pos + 1] = dlink_of[spine, dst % w]
        return pos + 2
    j = gw_idx[gs, gd]
    spine = gs * w + dfp_r + j
    out_dlinks[pos] = dlink_of[src, p_terminal + j]
    out_dlinks[pos + 1] = dlink_of[spine, gw_port[gs, gd]]
    spine2 = gd * w + dfp_r + gw_idx[gd, gs]
    out_dlinks[pos + 2] = dlink_of[spine2, dst % w]
    return pos + 3


@njit(cache=True, inline="always")
def _refresh_request(f, c, pk_hop, pk_len, pk_dlink, pk_vcmask, pk_flow,
                     occ_pos, pos_port, pos_mask, num_dlinks):
    """Mirror the waiting front packet f of channel c into the positional
    request arrays used by the allocation scan."""
    oi = occ_pos[c]
    nh = pk_hop[f] + 1
    if nh >= pk_len[f]:
        pos_port[oi] = num_dlinks + pk_flow[f, FDQ]
        pos_mask[oi] = 1
    else:
        pos_port[oi] = pk_dlink[f, nh]
        pos_mask[oi] = pk_vcmask[f, nh]


@njit(cache=True, inline="always")
def _adm_gain(c, ch, adm_mask, V):
    """Re-test channel c after one of its rooms grew past a whole packet;
    sets its admissibility bit when both sides now fit one."""
    if (ch[c, CIO] + ch[c, CIR] + PKT <= IB_CAP
            and ch[c, COO] + ch[c, COR] + PKT <= OB_CAP):
        adm_mask[c // V] |= 1 << (c % V)


@njit(cache=True)
def run_kernel(
        # dimensions
        cycles, bin_size, warmup_cycle, watchdog_cycles,
        num_dlinks, V, num_servers,
        # topology tables
        dlink_kind, valid_vcs, dlink_of,
        server_switch, server_slot, switch_server_base,
        family, hx_n, hx_side, hx_strides, p_terminal, df_a, dfp_r,
        gw_idx, gw_port,
        # traffic / routing / policy
        traffic_code, pattern_map, advr_base, advr_cnt, gen_prob,
        routing_minimal, is_cands,
        policy_code, tp_injection, tp_k, ladder_steps,
        # preloaded packets (tests): one per distinct source server
        pre_src, pre_dst, forced_dst,
        # rng
        rng,
        # packet pool
        fl, fl_state, pk_dlink, pk_vcmask, pk_len, pk_hop,
        pk_birth, pk_inject, pk_flow, pk_live,
        # channel state
        ch, ib_pkt, ob_pkt,
        rr_vc, ob_active, snd, lact_list, lact_pos,
        occ_list, occ_pos, pos_port, pos_mask,
        # ports
        rr_ptr, grant_stamp, best_stamp, best_dist, best_req, tp_list,
        adm_mask,
        # servers
        qlen, head_pkt, sreq_port, sreq_mask,
        ring, ring_head, ring_cnt, untracked,
        eb_pkt, eb_cnt, eb_occ, eb_resv, mat_list, mat_pending,
        # outputs
        bin_accept, counters, stream_list, debug_every,
        chk_in_occ, chk_in_resv, chk_out_occ, chk_out_resv,
        chk_eb_occ, chk_eb_resv,
        # trace
        tracing, tr_n, tr_cap, trp_src, trp_dst, trp_inter, trp_minimal,
        trp_len, trp_birth, trp_inject, trp_eject, trp_dlink, trp_mask,
        tr_of, tre_n, tre_cap, tre_cycle, tre_row, tre_port, tre_vc):
    """Run the cycle loop. Returns (error_code, deadlock_flag, end_cycle).

    counters layout: [0] generated, [1] n_queued, [2] n_transit, [3] n_done,
    [4] n_inj_streaming, [5] latency_sum, [6] latency_count,
    [7] latency_unknown, [8] injected_total; [9..12] accumulate per-cycle
    loop sizes (active links, occupied channels, streams, injection
    requests) as workload diagnostics.
    """
    L = num_dlinks
    C = L * V
    Q = num_servers
    KEYMOD = C + Q
    occ_n = 0
    lact_n = 0
    sl_n = 0
    stall = np.int64(0)
    deadlock = False
    end_cycle = cycles

    # preloaded packets (manual tests): queued at cycle 0
    mat_n = 0
    for i in range(pre_src.size):
        q = pre_src[i]
        forced_dst[q] = pre_dst[i]
        qlen[q] += 1
        ring[q, 0] = 0
        ring_cnt[q] = 1
        counters[0] += 1
        counters[1] += 1
        mat_pending[q] = True
        mat_list[mat_n] = q
        mat_n += 1

    for cycle in range(cycles):
        # ---------------- materialize new queue heads ----------------
        # (queued by the previous cycle; they first compete next phase 3)
        for mi in range(mat_n):
            q = mat_list[mi]
            mat_pending[q] = False
            if head_pkt[q] >= 0 or qlen[q] == 0:
                continue
            if fl_state[0] == 0:
                return 1, False, cycle
            fl_state[0] -= 1
            pid = fl[fl_state[0]]

            # destination
            if forced_dst[q] >= 0:
                dst = np.int64(forced_dst[q])
            elif traffic_code == T_UNIFORM:
                dst = _randint(rng, 0, Q - 1)
                if dst >= q:
                    dst += 1
            elif traffic_code == T_MAPPED:
                dsw = pattern_map[server_switch[q]]
                dst = np.int64(switch_server_base[dsw]) + server_slot[q]
            else:
                ssw = server_switch[q]
                dst = advr_base[ssw] + _randint(rng, 2, advr_cnt[ssw])
            src_sw = server_switch[q]
            dst_sw = server_switch[dst]

            # route
            minimal = False
            absorbed_dst = False
            inter = np.int64(-1)
            boundary = np.int64(0)
            ln = np.int64(0)
            buf = pk_dlink[pid]
            if routing_minimal or src_sw == dst_sw:
                minimal = True
                ln = _emit_minimal(family, src_sw, dst_sw, rng, hx_n, hx_side,
                                   hx_strides, p_terminal, df_a, dfp_r, gw_idx,
                                   gw_port, dlink_of, buf, 0)
                boundary = ln
            else:
                inter = np.int64(is_cands[_randint(rng, 2, is_cands.size)])
                if inter == src_sw or inter == dst_sw:
                    minimal = True
                    absorbed_dst = inter == dst_sw
                    ln = _emit_minimal(family, src_sw, dst_sw, rng, hx_n, hx_side,
                                       hx_strides, p_terminal, df_a, dfp_r, gw_idx,
                                       gw_port, dlink_of, buf, 0)
                    boundary = ln
                else:
                    boundary = _emit_minimal(family, src_sw, inter, rng, hx_n,
                                             hx_side, hx_strides, p_terminal, df_a,
                                             dfp_r, gw_idx, gw_port, dlink_of, buf, 0)
                    ln = _emit_minimal(family, inter, dst_sw, rng, hx_n, hx_side,
                                       hx_strides, p_terminal, df_a, dfp_r, gw_idx,
                                       gw_port, dlink_of, buf, boundary)

            # per-hop admissible-VC masks
            use_last = tp_injection == INJ_MIN_LAST or (
                tp_injection == INJ_MIN_BOTH and absorbed_dst)
            past_global = False
            for i in range(ln):
                if i == boundary:
                    past_global = False
                kind = dlink_kind[buf[i]]
                if policy_code == P_LADDER:
                    if i >= ladder_steps:
                        return 4, False, cycle
                    mask = 1 << i
                elif policy_code == P_LADDER_REUSE:
                    if i >= ladder_steps:
                        return 4, False, cycle
                    mask = (1 << (i + 1)) - 1
                elif policy_code == P_SINGLE:
                    mask = 1
                else:
                    phase2 = (not minimal) and i >= boundary
                    if kind == K_DF_LOCAL:
                        step = 1 if past_global else 0
                        if (minimal and use_last) or phase2:
                            step += 2
                    else:
                        if minimal:
                            step = 1 if use_last else 0
                        else:
                            step = 1 if phase2 else 0
                    mask = ((1 << tp_k) - 1) << (tp_k * step)
                if kind == K_DF_GLOBAL:
                    past_global = True
                pk_vcmask[pid, i] = mask

            pk_len[pid] = ln
            pk_hop[pid] = -1
            pk_inject[pid] = -1
            pk_flow[pid, FS] = 0
            pk_flow[pid, FC] = 0
            pk_flow[pid, FD] = 0
            pk_flow[pid, FW] = 1
            pk_flow[pid, FCH] = -1
            pk_flow[pid, FSC] = -1
            pk_flow[pid, FDQ] = dst
            pk_flow[pid, FSQ] = q
            pk_live[pid] = True
            head_pkt[q] = pid
            if ln == 0:
                sreq_port[q] = L + dst
                sreq_mask[q] = 1
            else:
                sreq_port[q] = buf[0]
                sreq_mask[q] = pk_vcmask[pid, 0]

            # generation timestamp (oldest queued first)
            if ring_cnt[q] > 0:
                pk_birth[pid] = ring[q, ring_head[q]]
                ring_head[q] = (ring_head[q] + 1) % BIRTH_RING
                ring_cnt[q] -= 1
            else:
                untracked[q] -= 1
                pk_birth[pid] = -1

            if tracing and tr_n[0] < tr_cap:
                row = tr_n[0]
                tr_n[0] += 1
                trp_src[row] = q
                trp_dst[row] = dst
                trp_inter[row] = inter
                trp_minimal[row] = 1 if minimal else 0
                trp_len[row] = ln
                trp_birth[row] = pk_birth[pid]
                trp_inject[row] = -1
                trp_eject[row] = -1
                for i in range(ln):
                    trp_dlink[row, i] = buf[i]
                    trp_mask[row, i] = pk_vcmask[pid, i]
                tr_of[pid] = row
            else:
                tr_of[pid] = -1
        mat_n = 0

        moved = np.int64(0)

        # ---------------- phase 1: link transfer ----------------
        li = 0
        while li < lact_n:
            d = lact_list[li]
            mm = snd[d]
            if mm != 0:
                nv = valid_vcs[d]
                start = rr_vc[d]
                v = -1
                for j in range(nv):
                    w = start + 1 + j
                    if w >= nv:
                        w -= nv
                    if (mm >> w) & 1:
                        v = w
                        break
                c = d * V + v
                ch[c, CAV] -= 1
                if ch[c, CAV] == 0:
                    snd[d] = mm & ~(1 << v)
                ch[c, CLF] -= 1
                ch[c, COO] -= 1
                ch[c, CIO] += 1
                ch[c, CIR] -= 1
                if OB_CAP - ch[c, COO] - ch[c, COR] == PKT:
                    _adm_gain(c, ch, adm_mask, V)
                left = ch[c, CLF]
                if left == PKT - 1:
                    # head phit arrives: join the input FIFO
                    f = ob_pkt[c, 0]
                    hc = ch[c, CHC]
                    slot = ((hc & 3) + (hc >> 2)) % IB_SLOTS
                    ib_pkt[c, slot] = f
                    ch[c, CHC] = hc + 4
                    if hc >> 2 == 0:
                        occ_pos[c] = occ_n
                        occ_list[occ_n] = c
                        pos_port[occ_n] = -1
                        occ_n += 1
                if left == 0:
                    # fully arrived downstream
                    f = ob_pkt[c, 0]
                    pk_flow[f, FC] = PKT
                    pk_flow[f, FW] = 1
                    ob_pkt[c, 0] = ob_pkt[c, 1]
                    ch[c, CON] -= 1
                    if ch[c, CON] > 0:
                        f2 = ob_pkt[c, 0]
                        av = pk_flow[f2, FS]
                        ch[c, CAV] = av
                        ch[c, CLF] = PKT
                        if av > 0:
                            snd[d] |= 1 << v
                    else:
                        ob_active[d] -= 1
                    if ib_pkt[c, ch[c, CHC] & 3] == f:
                        _refresh_request(f, c, pk_hop, pk_len, pk_dlink,
                                         pk_vcmask, pk_flow, occ_pos,
                                         pos_port, pos_mask, L)
                rr_vc[d] = v
                moved += 1
            if ob_active[d] == 0:
                # retire idle link from the active list
                lact_n -= 1
                last = lact_list[lact_n]
                lact_list[li] = last
                lact_pos[last] = li
                lact_pos[d] = -1
            else:
                li += 1

        # ---------------- phase 2: switch allocation (in-transit) --------
        tp_n = 0
        for oi in range(occ_n):
            port = pos_port[oi]
            if port < 0:
                continue
            if adm_mask[port] & pos_mask[oi] == 0:
                continue
            c = occ_list[oi]
            dist = c - rr_ptr[port]
            if dist <= 0:
                dist += KEYMOD
            if best_stamp[port] != cycle:
                best_stamp[port] = cycle
                tp_list[tp_n] = port
                tp_n += 1
                best_dist[port] = dist
                best_req[port] = c
            elif dist < best_dist[port]:
                best_dist[port] = dist
                best_req[port] = c

        # ---------------- phase 3: injection ----------------
        # source-queue heads contend exactly like input VCs: they join the
        # same per-port arbitration as the in-transit requests above
        inj_n = 0
        for q in range(Q):
            port = sreq_port[q]
            if port < 0:
                continue
            if adm_mask[port] & sreq_mask[q] == 0:
                continue
            key = C + q
            dist = key - rr_ptr[port]
            if dist <= 0:
                dist += KEYMOD
            if best_stamp[port] != cycle:
                best_stamp[port] = cycle
                tp_list[tp_n] = port
                tp_n += 1
                best_dist[port] = dist
                best_req[port] = key
            elif dist < best_dist[port]:
                best_dist[port] = dist
                best_req[port] = key
            inj_n += 1
        counters[12] += inj_n

        # ---------------- grants: one winner per output port --------------
        for ti in range(tp_n):
            port = tp_list[ti]
            key = best_req[port]
            from_queue = key >= C
            q = key - C
            c = key
            if from_queue:
                f = head_pkt[q]
                nh = np.int64(0)
            else:
                f = ib_pkt[c, ch[c, CHC] & 3]
                nh = np.int64(pk_hop[f]) + 1
            if nh >= pk_len[f]:
                qd = pk_flow[f, FDQ]
                eb_pkt[qd, eb_cnt[qd]] = f
                eb_cnt[qd] += 1
                eb_resv[qd] += PKT
                if eb_occ[qd] + eb_resv[qd] + PKT > EB_CAP:
                    adm_mask[L + qd] = 0
                pk_flow[f, FCH] = -1
                vc_granted = -1
            else:
                dn = pk_dlink[f, nh]
                m = pk_vcmask[f, nh]
                b2 = dn * V
                bestv = -1
                bestocc = np.int64(1 << 30)
                for v in range(valid_vcs[dn]):
                    if (m >> v) & 1:
                        occ = np.int64(ch[b2 + v, CIO]) + ch[b2 + v, CIR]
                        if (occ + PKT <= IB_CAP
                                and ch[b2 + v, COO] + ch[b2 + v, COR] + PKT
                                <= OB_CAP and occ < bestocc):
                            bestv = v
                            bestocc = occ
                if bestv < 0:
                    return 2, False, cycle
                chn = b2 + bestv
                ob_pkt[chn, ch[chn, CON]] = f
                ch[chn, CON] += 1
                if ch[chn, CON] == 1:
                    ch[chn, CAV] = 0
                    ch[chn, CLF] = PKT
                    if ob_active[dn] == 0:
                        lact_pos[dn] = lact_n
                        lact_list[lact_n] = dn
                        lact_n += 1
                    ob_active[dn] += 1
                ch[chn, COR] += PKT
                ch[chn, CIR] += PKT
                if (ch[chn, CIO] + ch[chn, CIR] + PKT > IB_CAP
                        or ch[chn, COO] + ch[chn, COR] + PKT > OB_CAP):
                    adm_mask[dn] &= ~(1 << bestv)
                pk_flow[f, FCH] = chn
                vc_granted = bestv
            pk_hop[f] = nh
            pk_flow[f, FS] = 0
            pk_flow[f, FC] = 0
            pk_flow[f, FW] = 0
            stream_list[sl_n] = f
            sl_n += 1
            rr_ptr[port] = key
            grant_stamp[port] = cycle
            if from_queue:
                pk_flow[f, FSC] = -1
                sreq_port[q] = -1
                pk_inject[f] = cycle
                counters[1] -= 1
                counters[2] += 1
                counters[4] += 1
                counters[8] += 1
                if tracing and tr_of[f] >= 0:
                    trp_inject[tr_of[f]] = cycle
            else:
                pk_flow[f, FSC] = c
                pos_port[occ_pos[c]] = -1
            if tracing and tr_of[f] >= 0 and tre_n[0] < tre_cap:
                tre_cycle[tre_n[0]] = cycle
                tre_row[tre_n[0]] = tr_of[f]
                tre_port[tre_n[0]] = port
                tre_vc[tre_n[0]] = vc_granted
                tre_n[0] += 1

        # ---------------- stream granted packets ----------------
        i = 0
        while i < sl_n:
            f = stream_list[i]
            pk_flow[f, FS] += 1
            moved += 1
            sc = pk_flow[f, FSC]
            if sc >= 0:
                ch[sc, CIO] -= 1
                if IB_CAP - ch[sc, CIO] - ch[sc, CIR] == PKT:
                    _adm_gain(sc, ch, adm_mask, V)
            chn = pk_flow[f, FCH]
            if chn >= 0:
                ch[chn, COO] += 1
                ch[chn, COR] -= 1
                if ob_pkt[chn, 0] == f:
                    ch[chn, CAV] += 1
                    if ch[chn, CAV] == 1:
                        snd[chn // V] |= 1 << (chn % V)
            else:
                qd = pk_flow[f, FDQ]
                eb_occ[qd] += 1
                eb_resv[qd] -= 1
            if pk_flow[f, FS] == PKT:
                if sc >= 0:
                    # fully left the input FIFO
                    hc = ch[sc, CHC]
                    hc = (((hc & 3) + 1) & 3) | (((hc >> 2) - 1) << 2)
                    ch[sc, CHC] = hc
                    if hc >> 2 == 0:
                        occ_n -= 1
                        last = occ_list[occ_n]
                        oi = occ_pos[sc]
                        occ_list[oi] = last
                        pos_port[oi] = pos_port[occ_n]
                        pos_mask[oi] = pos_mask[occ_n]
                        occ_pos[last] = oi
                        occ_pos[sc] = -1
                    else:
                        f2 = ib_pkt[sc, hc & 3]
                        pos_port[occ_pos[sc]] = -1
                        if pk_flow[f2, FW] == 1:
                            _refresh_request(f2, sc, pk_hop, pk_len,
                                             pk_dlink, pk_vcmask, pk_flow,
                                             occ_pos, pos_port, pos_mask, L)
                else:
                    # fully left its source queue
                    qs = pk_flow[f, FSQ]
                    qlen[qs] -= 1
                    counters[4] -= 1
                    head_pkt[qs] = -1
                    if qlen[qs] > 0 and not mat_pending[qs]:
                        mat_pending[qs] = True
                        mat_list[mat_n] = qs
                        mat_n += 1
                stream_list[i] = stream_list[sl_n - 1]
                sl_n -= 1
                continue
            i += 1

        # ---------------- phase 4: ejection drain ----------------
        bidx = cycle // bin_size
        for q in range(Q):
            if eb_cnt[q] == 0:
                continue
            f = eb_pkt[q, 0]
            if pk_flow[f, FS] > pk_flow[f, FD]:
                pk_flow[f, FD] += 1
                eb_occ[q] -= 1
                if EB_CAP - eb_occ[q] - eb_resv[q] == PKT:
                    adm_mask[L + q] = 1
                moved += 1
                bin_accept[bidx] += 1
                if pk_flow[f, FD] == PKT:
                    eb_pkt[q, 0] = eb_pkt[q, 1]
                    eb_cnt[q] -= 1
                    counters[2] -= 1
                    counters[3] += 1
                    if cycle >= warmup_cycle:
                        if pk_birth[f] >= 0:
                            counters[5] += cycle - pk_birth[f]
                            counters[6] += 1
                        else:
                            counters[7] += 1
                    if tracing and tr_of[f] >= 0:
                        trp_eject[tr_of[f]] = cycle
                    pk_live[f] = False
                    tr_of[f] = -1
                    fl[fl_state[0]] = f
                    fl_state[0] += 1

        # ---------------- phase 5: generation ----------------
        if gen_prob > 0.0:
            for q in range(Q):
                if _randf(rng, 1) < gen_prob:
                    counters[0] += 1
                    counters[1] += 1
                    qlen[q] += 1
                    if untracked[q] > 0 or ring_cnt[q] == BIRTH_RING:
                        untracked[q] += 1
                    else:
                        slot = (ring_head[q] + ring_cnt[q]) % BIRTH_RING
                        ring[q, slot] = cycle
                        ring_cnt[q] += 1
                    if head_pkt[q] < 0 and not mat_pending[q]:
                        mat_pending[q] = True
                        mat_list[mat_n] = q
                        mat_n += 1

        counters[9] += lact_n
        counters[10] += occ_n
        counters[11] += sl_n

        # ---------------- watchdog ----------------
        if counters[2] > 0 and moved == 0:
            stall += 1
            if stall >= watchdog_cycles:
                deadlock = True
                end_cycle = cycle + 1
                break
        else:
            stall = 0

        # ---------------- debug invariants ----------------
        if debug_every > 0 and (cycle + 1) % debug_every == 0:
            # counter conservation
            if counters[0] != counters[1] + counters[2] + counters[3]:
                return 5, False, cycle
            tot_q = np.int64(0)
            for q in range(Q):
                tot_q += qlen[q]
            if tot_q != counters[1] + counters[4]:
                return 6, False, cycle
            # capacity bounds
            for c in range(C):
                if (ch[c, CIO] < 0 or ch[c, CIR] < 0
                        or ch[c, CIO] + ch[c, CIR] > IB_CAP):
                    return 7, False, cycle
                if (ch[c, COO] < 0 or ch[c, COR] < 0
                        or ch[c, COO] + ch[c, COR] > OB_CAP):
                    return 8, False, cycle
            for q in range(Q):
                if (eb_occ[q] < 0 or eb_resv[q] < 0
                        or eb_occ[q] + eb_resv[q] > EB_CAP):
                    return 9, False, cycle
            # recompute buffer contents from per-packet state; a packet's
            # crossed-phit count is implicit while it sits in an output FIFO
            chk_in_occ[:] = 0
            chk_in_resv[:] = 0
            chk_out_occ[:] = 0
            chk_out_resv[:] = 0
            chk_eb_occ[:] = 0
            chk_eb_resv[:] = 0
            for f in range(pk_live.size):
                if not pk_live[f] or pk_hop[f] < 0:
                    continue
                chn = pk_flow[f, FCH]
                if chn >= 0:
                    if ob_pkt[chn, 0] == f:
                        crossed = PKT - ch[chn, CLF]
                    elif ch[chn, CON] > 1 and ob_pkt[chn, 1] == f:
                        crossed = 0
                    else:
                        crossed = PKT
                    chk_out_occ[chn] += pk_flow[f, FS] - crossed
                    chk_out_resv[chn] += PKT - pk_flow[f, FS]
                    chk_in_occ[chn] += crossed
                    chk_in_resv[chn] += PKT - crossed
                else:
                    qd = pk_flow[f, FDQ]
                    chk_eb_occ[qd] += pk_flow[f, FS] - pk_flow[f, FD]
                    chk_eb_resv[qd] += PKT - pk_flow[f, FS]
                sc = pk_flow[f, FSC]
                if sc >= 0 and pk_flow[f, FS] < PKT:
                    chk_in_occ[sc] += PKT - pk_flow[f, FS]
            for c in range(C):
                if (chk_in_occ[c] != ch[c, CIO]
                        or chk_in_resv[c] != ch[c, CIR]
                        or chk_out_occ[c] != ch[c, COO]
                        or chk_out_resv[c] != ch[c, COR]):
                    return 10, False, cycle
            for q in range(Q):
                if chk_eb_occ[q] != eb_occ[q] or chk_eb_resv[q] != eb_resv[q]:
                    return 11, False, cycle
            for d in range(L):
                mm = 0
                for v in range(valid_vcs[d]):
                    c2 = d * V + v
                    if (ch[c2, CIO] + ch[c2, CIR] + PKT <= IB_CAP
                            and ch[c2, COO] + ch[c2, COR] + PKT <= OB_CAP):
                        mm |= 1 << v
                if mm != adm_mask[d]:
                    return 12, False, cycle
            for q in range(Q):
                want = 1 if eb_occ[q] + eb_resv[q] + PKT <= EB_CAP else 0
                if adm_mask[L + q] != want:
                    return 13, False, cycle

    return 0, deadlock, end_cycle
