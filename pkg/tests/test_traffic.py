import numpy as np
import pytest

from vcnetsim import topology as topo
from vcnetsim import traffic as tr
from vcnetsim.errors import InvalidSpec, PatternTopologyMismatch
from vcnetsim.rng import RandomStream


def test_shift_example(hx2d):
    # XY-7-shift: servers of (0,0) send to the same slot on (7,7)
    pat = tr.Shift(dims=(0, 1), amount=7)
    src = hx2d.server_id(hx2d.hx_switch((0, 0)), 2)
    dst = tr.destination(hx2d, pat, src, None)
    sw, slot = hx2d.server_location(dst)
    assert hx2d.hx_coords(sw) == (7, 7)
    assert slot == 2


def test_adv_example(df):
    pat = tr.AdvPlus(offset=6)
    src = df.server_id(df.df_switch(72, 4), 1)
    dst = tr.destination(df, pat, src, None)
    sw, slot = df.server_location(dst)
    assert df.df_group(sw) == 5
    assert df.df_index(sw) == 4
    assert slot == 1


def test_advr_targets_group(df):
    pat = tr.AdvrPlus(offset=6)
    rng = RandomStream(7)
    src = df.server_id(df.df_switch(10, 0), 0)
    seen = set()
    for _ in range(500):
        dst = tr.destination(df, pat, src, rng)
        sw, _ = df.server_location(dst)
        assert df.df_group(sw) == 16
        seen.add(dst)
    assert len(seen) > 50  # spreads over the target group


def test_dfp_group_relative_position(dfp):
    # same (leaf index, slot) in the group `offset` ahead
    pat = tr.AdvPlus(offset=8)
    src = dfp.server_id(dfp.dfp_leaf(64, 3), 5)
    dst = tr.destination(dfp, pat, src, None)
    sw, slot = dfp.server_location(dst)
    assert dfp.dfp_group(sw) == 7
    assert sw == dfp.dfp_leaf(7, 3)
    assert slot == 5


def test_uniform_excludes_source_and_is_uniform():
    t = topo.build(topo.HyperXSpec(n=1, side=4, servers=4))
    src = 5
    rng = RandomStream(123)
    n = t.num_servers
    counts = np.zeros(n, dtype=int)
    draws = 200_000
    for _ in range(draws):
        counts[tr.destination(t, tr.Uniform(), src, rng)] += 1
    assert counts[src] == 0
    # chi-square against uniform over the 15 other servers
    expected = draws / (n - 1)
    chi2 = float(((counts[np.arange(n) != src] - expected) ** 2
                  / expected).sum())
    # df=14; 3-sigma-ish acceptance for a fixed seed
    assert chi2 < 40.0


def test_shift_and_adv_are_permutations(hx2d, df):
    for t, pat in ((hx2d, tr.Shift(dims=(0, 1), amount=7)),
                   (df, tr.AdvPlus(offset=6))):
        dsts = [tr.destination(t, pat, s, None) for s in range(t.num_servers)]
        assert sorted(dsts) == list(range(t.num_servers))
        # and no destination stays on the source switch
        for s, d in enumerate(dsts):
            assert t.server_location(s)[0] != t.server_location(d)[0]


def test_generation_rate():
    rng = RandomStream(42)
    fired = sum(tr.should_generate(0.5, rng) for _ in range(1_000_000))
    rate = fired * tr.PACKET_LEN / 1_000_000
    assert abs(rate - 0.5) < 0.01
    # full load means one 16-phit packet every 16 cycles on average
    rng = RandomStream(43)
    fired = sum(tr.should_generate(1.0, rng) for _ in range(1_000_000))
    assert abs(fired / 1_000_000 - 1 / 16) < 0.001


def test_offered_load_bounds():
    with pytest.raises(InvalidSpec):
        tr.offered_load(0.0)
    with pytest.raises(InvalidSpec):
        tr.offered_load(1.2)
    assert tr.offered_load(1.0) == 1.0


def test_pattern_topology_mismatch(hx2d, df):
    with pytest.raises(PatternTopologyMismatch):
        tr.validate_pattern(df, tr.Shift(dims=(0,), amount=1))
    with pytest.raises(PatternTopologyMismatch):
        tr.validate_pattern(hx2d, tr.AdvPlus(offset=1))
    with pytest.raises(PatternTopologyMismatch):
        tr.validate_pattern(hx2d, tr.Shift(dims=(0, 5), amount=1))
    with pytest.raises(PatternTopologyMismatch):
        tr.validate_pattern(hx2d, tr.Shift(dims=(0,), amount=16))
    with pytest.raises(PatternTopologyMismatch):
        tr.validate_pattern(df, tr.AdvPlus(offset=73))


def test_pattern_names():
    assert tr.pattern_name(tr.Shift(dims=(0, 1), amount=7)) == "XY-7-shift"
    assert tr.pattern_name(tr.AdvrPlus(offset=6)) == "ADVr+6"
    assert tr.pattern_name(tr.Uniform()) == "uniform"
