"""Virtual-channel admissibility policies.

Two families are provided. Two-phase policies split each port's VCs into
per-step blocks: two steps (one per Valiant phase) on HyperX/Dragonfly+
ports, four ordered local steps and two global steps on Dragonfly ports
(one ladder per class), each step `vcs_per_step` wide. Minimally routed
packets occupy the first-phase blocks under MinFirst, the second-phase
blocks under MinLast, and the block of the endpoint that absorbed the
intermediate under MinBoth. Ladder policies index VCs by hop count:
exactly {i} at the i-th hop, or {0..i} when reuse is enabled.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .errors import StepOverflow
from .routing import Hop, Path
from .topology import PortKind

MIN_FIRST = "min_first"
MIN_LAST = "min_last"
MIN_BOTH = "min_both"


@dataclass(frozen=True)
class TwoPhases:
    injection: str = MIN_FIRST
    vcs_per_step: int = 2

    def __post_init__(self):
        if self.injection not in (MIN_FIRST, MIN_LAST, MIN_BOTH):
            raise ValueError(f"unknown injection policy {self.injection!r}")
        if self.vcs_per_step < 1:
            raise ValueError("vcs_per_step must be positive")


@dataclass(frozen=True)
class Ladder:
    steps: int

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("ladder needs at least one step")


@dataclass(frozen=True)
class LadderReuse:
    steps: int

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("ladder needs at least one step")


@dataclass(frozen=True)
class SingleVc:
    """One shared VC, always allowed. Deadlock-prone; negative control only."""


VcPolicySpec = object  # TwoPhases | Ladder | LadderReuse | SingleVc


@dataclass(frozen=True)
class HopContext:
    port_kind: PortKind
    hop_index: int
    phase: int                     # 1 or 2
    local_step: int = -1           # Dragonfly local hops only
    global_step: int = -1          # Dragonfly global hops only
    minimal: bool = False
    absorbed: Optional[str] = None  # 'src'/'dst' for degenerate intermediates
    at_injection: bool = False


def hop_context(path: Path, hop: Hop) -> HopContext:
    return HopContext(hop.kind, hop.hop_index, hop.phase, hop.local_step,
                      hop.global_step, path.minimal, path.absorbed,
                      hop.hop_index == 0)


def _step_count(kind: PortKind) -> int:
    # Dragonfly locals carry four ordered steps, its globals two; every other
    # network port class has one step per Valiant phase.
    if kind == PortKind.DF_LOCAL:
        return 4
    return 2


def vcs_per_port(spec, kind: PortKind) -> int:
    """Total VCs on a network port of the given class."""
    if isinstance(spec, (Ladder, LadderReuse)):
        return spec.steps
    if isinstance(spec, SingleVc):
        return 1
    return spec.vcs_per_step * _step_count(kind)


def _two_phase_step(spec: TwoPhases, ctx: HopContext) -> int:
    """Step index of the block the packet may use at this hop."""
    kind = ctx.port_kind
    if ctx.minimal:
        if spec.injection == MIN_FIRST:
            last = False
        elif spec.injection == MIN_LAST:
            last = True
        else:
            last = ctx.absorbed == "dst"
        if kind == PortKind.DF_LOCAL:
            return ctx.local_step + (2 if last else 0)
        return 1 if last else 0
    if kind == PortKind.DF_LOCAL:
        return ctx.local_step
    if kind == PortKind.DF_GLOBAL:
        return ctx.global_step
    return ctx.phase - 1


def allowed_vcs(spec, ctx: HopContext) -> list[int]:
    """Ordered admissible VC indices for a packet at the given hop."""
    if isinstance(spec, SingleVc):
        return [0]
    if isinstance(spec, Ladder):
        if ctx.hop_index >= spec.steps:
            raise StepOverflow(f"hop {ctx.hop_index} on a {spec.steps}-step ladder")
        return [ctx.hop_index]
    if isinstance(spec, LadderReuse):
        if ctx.hop_index >= spec.steps:
            raise StepOverflow(f"hop {ctx.hop_index} on a {spec.steps}-step ladder")
        return list(range(ctx.hop_index + 1))
    step = _two_phase_step(spec, ctx)
    k = spec.vcs_per_step
    return list(range(k * step, k * (step + 1)))


def allowed_mask(spec, ctx: HopContext) -> int:
    """allowed_vcs as a bitmask (bit v set iff VC v admissible)."""
    m = 0
    for v in allowed_vcs(spec, ctx):
        m |= 1 << v
    return m


def jsq_select(candidates, occupancy, capacity: int, packet_len: int):
    """Join-shortest-queue pick among candidate VCs.

    Returns the candidate with the least occupancy among those with room for
    the whole packet (ties to the lowest VC index), or None when no candidate
    has room."""
    best = None
    best_occ = None
    for v in candidates:
        occ = occupancy[v]
        if capacity - occ < packet_len:
            continue
        if best is None or occ < best_occ:
            best, best_occ = v, occ
    return best


def policy_name(spec) -> str:
    if isinstance(spec, TwoPhases):
        return {MIN_FIRST: "two_phases_min_first",
                MIN_LAST: "two_phases_min_last",
                MIN_BOTH: "two_phases_min_both"}[spec.injection]
    if isinstance(spec, Ladder):
        return "ladder"
    if isinstance(spec, LadderReuse):
        return "ladder_reuse"
    return "single_vc"


def default_policy(name: str, topology) -> object:
    """Build a policy spec by config name with the evaluated VC budget for
    the given topology (ladder steps = 2*diameter; two-phase widths per the
    per-family budgets)."""
    from . import topology as topo
    fam = topology.family
    if fam == topo.FAMILY_HX:
        diameter = topology.spec.n
        k = {1: 2, 2: 2, 3: 3}.get(topology.spec.n, topology.spec.n)
    else:
        diameter = 3
        k = 2 if fam == topo.FAMILY_DF else 3
    if name == "ladder":
        return Ladder(2 * diameter)
    if name == "ladder_reuse":
        return LadderReuse(2 * diameter)
    if name == "single_vc":
        return SingleVc()
    if name == "two_phases_min_first":
        return TwoPhases(MIN_FIRST, k)
    if name == "two_phases_min_last":
        return TwoPhases(MIN_LAST, k)
    if name == "two_phases_min_both":
        return TwoPhases(MIN_BOTH, k)
    raise ValueError(f"unknown vc policy {name!r}")
