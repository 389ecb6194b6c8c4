import os

import numpy as np
import pytest

from vcnetsim import cli
from vcnetsim import engine as eng
from vcnetsim import harness
from vcnetsim import topology as topo
from vcnetsim import traffic as tr
from vcnetsim import vcpolicy as vp
from vcnetsim.errors import InvalidSpec

SMALL_CFG = """
[topology]
family = hyperx
n = 2
side = 4
servers = 4

[traffic]
pattern = shift
shift_dims = xy
shift_amount = 1
offered_load = 1.0

[routing]
kind = valiant
intermediate = any_switch

[vc]
policy = ladder_reuse

[sim]
cycles = 8000
seed = 1
bin_size = 100

[experiment]
mode = temporal
seeds = 1,2
"""


def test_parse_config_fields():
    spec, t = harness.parse_config(SMALL_CFG)
    assert isinstance(spec.base.topology, topo.HyperXSpec)
    assert spec.base.topology.side == 4
    assert isinstance(spec.base.traffic, tr.Shift)
    assert spec.base.traffic.dims == (0, 1)
    assert isinstance(spec.base.vc, vp.LadderReuse)
    assert spec.base.vc.steps == 4
    assert spec.base.cycles == 8000
    assert spec.seeds == (1, 2)
    assert t.num_switches == 16


def test_parse_overrides():
    spec, _ = harness.parse_config(
        SMALL_CFG, {"seed": 9, "cycles": 5000, "offered_load": 0.5,
                    "output": "somewhere"})
    assert spec.base.seed == 9
    assert spec.seeds == (9,)
    assert spec.base.cycles == 5000
    assert spec.base.offered_load == 0.5
    assert spec.output == "somewhere"


def test_shipped_configs_parse():
    here = os.path.join(os.path.dirname(__file__), "..", "configs")
    for name in sorted(os.listdir(here)):
        spec, t = harness.parse_config(os.path.join(here, name))
        spec.base.validate(t)


def test_sweep_below_saturation_and_csv_determinism(tmp_path):
    spec, t = harness.parse_config(SMALL_CFG)
    spec.mode = "sweep"
    spec.loads = (0.1, 0.3)
    spec.seeds = (1, 2)
    spec.output = str(tmp_path / "a")
    rows, agg = harness.run_sweep(spec, topology=t)
    assert len(rows) == 4
    # conservation below saturation: accepted equals offered
    for load, mean, _ in agg:
        assert abs(mean - load) < 0.01
    text1 = (tmp_path / "a_rows.csv").read_text()
    spec.output = str(tmp_path / "b")
    harness.run_sweep(spec, topology=t)
    assert (tmp_path / "b_rows.csv").read_text() == text1
    assert (tmp_path / "a_agg.csv").read_text().startswith(
        "offered_load,mean_accepted,stddev")


def test_sweep_empty_loads_rejected():
    spec, t = harness.parse_config(SMALL_CFG)
    spec.mode = "sweep"
    spec.loads = ()
    with pytest.raises(InvalidSpec):
        harness.run_sweep(spec, topology=t)
    spec.loads = (0.5, 0.2)
    with pytest.raises(InvalidSpec):
        harness.run_sweep(spec, topology=t)


def test_temporal_rows_and_series(tmp_path):
    spec, t = harness.parse_config(SMALL_CFG)
    spec.output = str(tmp_path / "t")
    rows, series = harness.run_temporal(spec, topology=t)
    assert sorted(series) == [1, 2]
    assert len(series[1]) == 80
    assert all(r.category in ("1", "2", "3", "unknown") for r in rows)
    lines = (tmp_path / "t_series.csv").read_text().splitlines()
    assert lines[0] == "seed,bin_index,accepted"
    assert len(lines) == 1 + 2 * 80


def test_temporal_too_short_is_unknown():
    spec, t = harness.parse_config(SMALL_CFG)
    spec.base.cycles = 2000  # 20 bins; post-warmup 16 < 50
    spec.seeds = (1,)
    rows, _ = harness.run_temporal(spec, topology=t)
    assert rows[0].category == "unknown"


def test_emit_plot_data(tmp_path):
    p = tmp_path / "plot.dat"
    harness.emit_plot_data(str(p), [(0.1, 0.1, 0.0), (0.2, 0.19, 0.01)],
                           kind="sweep")
    lines = p.read_text().splitlines()
    assert lines[0].startswith("#")
    assert lines[1] == "0.100000 0.100000 0.000000"
    # temporal blocks, one per seed
    p2 = tmp_path / "plot2.dat"
    harness.emit_plot_data(str(p2), ({1: np.array([0.1, 0.2])}, 1000),
                           kind="temporal")
    body = p2.read_text()
    assert "1000 0.100000" in body and "2000 0.200000" in body
    # header-only on empty input
    p3 = tmp_path / "plot3.dat"
    harness.emit_plot_data(str(p3), [], kind="sweep")
    assert p3.read_text().splitlines() == ["# offered_load mean_accepted stddev"]


# --------------------------------------------------------------------- CLI --

def _write_cfg(tmp_path, text=SMALL_CFG):
    p = tmp_path / "exp.ini"
    p.write_text(text)
    return str(p)


def test_cli_topology_info(tmp_path, capsys):
    rc = cli.main(["topology-info", _write_cfg(tmp_path)])
    out = capsys.readouterr().out.splitlines()
    assert rc == 0
    assert out[0] == "switches,radix,servers,links,diameter"
    assert out[1] == "16,10,64,48,2"


def test_cli_run_and_output(tmp_path, capsys):
    rc = cli.main(["run", _write_cfg(tmp_path), "--cycles", "6000",
                   "--seed", "3", "--output", str(tmp_path / "r")])
    out = capsys.readouterr().out
    assert rc == 0
    assert "mean_accepted" in out
    assert (tmp_path / "r_rows.csv").exists()
    assert (tmp_path / "r_series.csv").exists()


def test_cli_sweep(tmp_path, capsys):
    cfg = SMALL_CFG.replace("mode = temporal",
                            "mode = sweep\nloads = 0.2")
    rc = cli.main(["sweep", _write_cfg(tmp_path, cfg), "--cycles", "6000"])
    out = capsys.readouterr().out
    assert rc == 0
    assert out.count("\n") == 3  # header + 2 seeds


def test_cli_verify_cdg_exit_codes(tmp_path, capsys):
    cfg = _write_cfg(tmp_path)
    assert cli.main(["verify-cdg", cfg]) == 0
    assert "acyclic" in capsys.readouterr().out
    bad = SMALL_CFG.replace("policy = ladder_reuse", "policy = single_vc")
    assert cli.main(["verify-cdg", _write_cfg(tmp_path, bad)]) == 1
    assert "cyclic" in capsys.readouterr().out
