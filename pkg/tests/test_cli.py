import csv
import json

import pytest

from bifikinetic.cli import build_parser, main

SMALL = """
model = transport/diffusion
d_z = 2
M_train = 12
M_test = 6
N = 1,2,3
eps = 1e-6
nx = 16
nv = 8
T = 0.02
"""

FINE_COARSE = """
model = transport-fine/transport-coarse
d_z = 1
eps = 1
nx = 128
nx_coarse = 16
nv = 8
T = 0.02
order_levels = 16,32,64
order_dt = linear
sigma_amplitude = 0
"""


@pytest.fixture
def cfg_file(tmp_path):
    def make(text):
        p = tmp_path / "run.cfg"
        p.write_text(text)
        return p
    return make


def rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


@pytest.mark.parametrize("cmd", ["offline", "bifi-eval", "conv-n", "eps-sweep", "order-study"])
def test_subcommands_require_config_and_out(cmd):
    with pytest.raises(SystemExit):
        build_parser().parse_args([cmd, "--config", "x.cfg"])
    args = build_parser().parse_args([cmd, "--config", "x.cfg", "--out", "o"])
    assert args.command == cmd


def test_offline_then_eval_reuses_surrogate(cfg_file, tmp_path, capsys):
    cfg = cfg_file(SMALL)
    out = tmp_path / "run"
    assert main(["offline", "--config", str(cfg), "--out", str(out)]) == 0
    assert (out / "surrogate" / "index.txt").exists()
    assert main(["bifi-eval", "--config", str(cfg), "--out", str(out)]) == 0
    manifest = json.loads((out / "manifest_bifi-eval.json").read_text())
    assert "offline_high" not in manifest["solver_calls"]
    assert len(rows(out / "bifi_eval.csv")) == 6
    assert "aggregate L2_z error" in capsys.readouterr().out


def test_conv_n_and_eps_sweep(cfg_file, tmp_path):
    cfg = cfg_file(SMALL)
    main(["conv-n", "--config", str(cfg), "--out", str(tmp_path / "a")])
    assert [int(r["N"]) for r in rows(tmp_path / "a" / "conv_n.csv")] == [1, 2, 3]
    main(["eps-sweep", "--config", str(cfg), "--out", str(tmp_path / "b")])
    assert rows(tmp_path / "b" / "eps_sweep.csv")[0]["bound_ok"] == "1"


def test_order_study(cfg_file, tmp_path, capsys):
    main(["order-study", "--config", str(cfg_file(FINE_COARSE)), "--out", str(tmp_path)])
    assert len(rows(tmp_path / "order_study.csv")) == 3
    assert "least-squares observed order" in capsys.readouterr().out
