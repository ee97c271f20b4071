import json
import subprocess
import sys
import time

import pytest

from rtchannel.cli import build_parser, main
from rtchannel.config import ConfigError, RunConfig, load_config
from rtchannel.dataset import read_csv
from rtchannel.scene import load_scene


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    assert run("scene", "--seed", 7, "--size", 300, "--buildings", 40, "--out", d / "scene.json") == 0
    assert run("generate", "--seed", 7, "--scene", d / "scene.json", "--receivers", 2500,
               "--out", d / "dataset.csv") == 0
    assert run("train", "--seed", 7, "--dataset", d / "dataset.csv", "--subset", 300,
               "--out-dir", d / "models") == 0
    return d


def test_scene_is_deterministic(tmp_path, workdir, capsys):
    assert run("scene", "--seed", 7, "--size", 300, "--buildings", 40, "--out", tmp_path / "s.json") == 0
    assert (tmp_path / "s.json").read_bytes() == (workdir / "scene.json").read_bytes()
    assert "40 buildings" in capsys.readouterr().out
    assert run("scene", "--seed", 8, "--out", tmp_path / "t.json") == 0
    assert (tmp_path / "t.json").read_bytes() != (workdir / "scene.json").read_bytes()


def test_scene_without_buildings(tmp_path):
    assert run("scene", "--buildings", 0, "--out", tmp_path / "s.json") == 0
    assert load_scene(tmp_path / "s.json").buildings == ()


def test_generate_smoke_run(tmp_path, workdir, capsys):
    t0 = time.perf_counter()
    assert run("generate", "--scene", workdir / "scene.json", "--receivers", 100,
               "--out", tmp_path / "d.csv") == 0
    assert time.perf_counter() - t0 < 5.0
    d = read_csv(tmp_path / "d.csv")
    assert d.data.shape[1] == 8 and 0 < len(d) <= 100
    assert d.meta["trace_cfg"]["carrier_frequency_hz"] == 7e9
    assert d.meta["prune_cfg"] == {"delta_th_db": 30.0, "epsilon_tau_s": 57.76e-9}
    assert d.meta["tx"] == [150.0, 150.0, 16.0] and d.meta["rx_height"] == 1.5
    assert "valid receivers" in capsys.readouterr().out


def test_generate_zero_threshold(tmp_path, workdir):
    assert run("generate", "--scene", workdir / "scene.json", "--receivers", 200, "--delta-th", 0,
               "--out", tmp_path / "d.csv") == 0
    d = read_csv(tmp_path / "d.csv")
    assert d.meta["prune_cfg"]["delta_th_db"] == 0.0


def test_train_writes_six_models_deterministically(tmp_path, workdir):
    files = sorted(p.name for p in (workdir / "models").glob("model_*.json"))
    assert files == [f"model_{m}_{t}.json" for m in ("dtr", "lr", "svr") for t in ("im", "re")]
    assert run("train", "--seed", 7, "--dataset", workdir / "dataset.csv", "--subset", 300,
               "--out-dir", tmp_path) == 0
    for name in files + ["split.json", "train_metrics.json"]:
        assert (tmp_path / name).read_bytes() == (workdir / "models" / name).read_bytes()
    split = json.loads((tmp_path / "split.json").read_text())
    assert (len(split["train"]), len(split["validation"])) == (240, 60)


def test_train_subset_of_models(tmp_path, workdir):
    assert run("train", "--dataset", workdir / "dataset.csv", "--subset", 200, "--models", "lr",
               "--out-dir", tmp_path) == 0
    assert sorted(p.name for p in tmp_path.glob("model_*.json")) == ["model_lr_im.json", "model_lr_re.json"]


def test_evaluate_report(tmp_path, workdir):
    assert run("evaluate", "--dataset", workdir / "dataset.csv", "--models-dir", workdir / "models",
               "--out-dir", tmp_path) == 0
    doc = json.loads((tmp_path / "report.json").read_text())
    pairs = [(r["model"], r["target"]) for r in doc["rows"]]
    assert pairs == [(m, t) for m in ("lr", "svr", "dtr", "mean") for t in ("re", "im")]
    d = read_csv(workdir / "dataset.csv")
    assert doc["n_holdout"] == len(d) - 300
    for name in ("report.csv", "stats.json", "ecdf_svr_im.csv", "hist_re.csv"):
        assert (tmp_path / name).exists()


def test_config_file_and_precedence(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"seed": 3, "generate": {"receivers": 500, "delta_th_db": 20},
                               "model": {"models": "lr,dtr"}}))
    c = load_config(cfg, {"generate.receivers": 50, "generate.tx_x": None})
    assert c.seed == 3 and c.generate.receivers == 50 and c.generate.delta_th_db == 20
    assert c.model.models == ("lr", "dtr")
    assert c.stage_seed("split") == 3
    c = load_config(cfg, {"split.seed": 11})
    assert c.stage_seed("split") == 11 and c.stage_seed("scene") == 3
    assert RunConfig().tx_position() == (150.0, 150.0, 16.0)


@pytest.mark.parametrize("doc", [{"generate": {"recievers": 10}}, {"bogus": 1},
                                 {"generate": {"receivers": 0}}, {"model": {"models": ["knn"]}},
                                 {"split": {"train_fraction": 1.5}}])
def test_bad_config_exits_2(tmp_path, doc, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps(doc))
    assert run("scene", "--config", cfg, "--out", tmp_path / "s.json") == 2
    assert "config error" in capsys.readouterr().err
    with pytest.raises(ConfigError):
        load_config(cfg)


def test_unreadable_config_exits_2(tmp_path):
    (tmp_path / "c.json").write_text("{not json")
    assert run("scene", "--config", tmp_path / "c.json", "--out", tmp_path / "s.json") == 2
    assert run("scene", "--config", tmp_path / "missing.json", "--out", tmp_path / "s.json") == 2


def test_invalid_flag_values_exit_2(tmp_path):
    assert run("generate", "--receivers", -5, "--scene", tmp_path / "x.json") == 2
    with pytest.raises(SystemExit) as exc:
        run("generate", "--receivers", "many")
    assert exc.value.code == 2


def test_runtime_failures_exit_3(tmp_path, workdir):
    assert run("generate", "--scene", tmp_path / "missing.json", "--out", tmp_path / "d.csv") == 3
    bad = tmp_path / "bad.csv"
    bad.write_text("tx_x,tx_y\n1,2\n")
    assert run("train", "--dataset", bad, "--out-dir", tmp_path / "m") == 3
    # infeasible building density
    assert run("scene", "--size", 40, "--buildings", 200, "--out", tmp_path / "s.json") == 3
    # model subset larger than the dataset
    assert run("train", "--dataset", workdir / "dataset.csv", "--subset", 10**6,
               "--out-dir", tmp_path / "m") == 3


def test_malformed_scene_file_exits_2(tmp_path):
    p = tmp_path / "s.json"
    p.write_text('{"bounds": [0, 10, 0, 10], "buildings": [{"footprint": [[0,0],[1,0]], '
                 '"height": 3, "material": "concrete"}]}')
    assert run("generate", "--scene", p, "--out", tmp_path / "d.csv") == 2


def test_help_documents_table_counterparts():
    parser = build_parser()
    sub = parser._subparsers._group_actions[0].choices
    text = " ".join(sub["pipeline"].format_help().split())
    for needle in ("7 GHz", "30 dB", "57.76 ns", "16 m", "1.5 m", "15000", "0.3 x 0.3 km", "1 W"):
        assert needle in text
    for name in ("scene", "generate", "train", "evaluate"):
        assert "--seed" in sub[name].format_help()


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "rtchannel", "--help"], capture_output=True, text=True)
    assert out.returncode == 0
    for cmd in ("scene", "generate", "train", "evaluate", "pipeline"):
        assert cmd in out.stdout
