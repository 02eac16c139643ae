import json

import numpy as np
import pytest

from nngmix.cli import main
from nngmix.dataset import load_csv, save_csv


def write_config(tmp_path, **kw):
    cfg = dict(dataset={"synthetic": "two_blobs"}, labeled_ratios=[0.05], multipliers=[5],
               generators=[{"kind": "nng_mix"}], detectors=[{"kind": "logistic", "epochs": 50}],
               seeds=[0, 1], output_dir=str(tmp_path / "sweep"), intrusion_samples=2000)
    cfg.update(kw)
    p = tmp_path / "exp.json"
    p.write_text(json.dumps(cfg))
    return str(p)


def test_synth_preset(tmp_path, capsys):
    out = tmp_path / "d.csv"
    assert main(["synth", "--preset", "two_blobs", "--seed", "3", "--out", str(out)]) == 0
    ds = load_csv(out)
    assert ds.n == 550 and ds.n_anomalies == 50
    assert "550 rows" in capsys.readouterr().out


def test_synth_cluster_json(tmp_path):
    spec = tmp_path / "c.json"
    spec.write_text(json.dumps([{"center": [0, 0, 0], "std": 1, "count": 10, "label": 0},
                                {"center": [5, 5, 5], "std": 0.1, "count": 2, "label": 1}]))
    out = tmp_path / "d.csv"
    assert main(["synth", "--config", str(spec), "--out", str(out)]) == 0
    assert load_csv(out).d == 3


def test_generate(tmp_path):
    cfg = write_config(tmp_path)
    out = tmp_path / "gen"
    assert main(["generate", "--config", cfg, "--out", str(out)]) == 0
    pseudo = load_csv(out / "pseudo_anomalies.csv")
    A = load_csv(out / "labeled_anomalies.csv")
    assert pseudo.n == 5 * A.n and np.all(pseudo.labels == 1)
    prov = json.loads((out / "provenance.json").read_text())
    assert prov["generator"]["kind"] == "nng_mix" and len(prov["rows"]) == pseudo.n


def test_evaluate(tmp_path, capsys):
    cfg = write_config(tmp_path)
    out = tmp_path / "r.json"
    assert main(["evaluate", "--config", cfg, "--seed", "1", "--out", str(out)]) == 0
    res = json.loads(out.read_text())
    assert 0 <= res["auc"] <= 1 and res["seed"] == 1
    # rerun reproduces
    main(["evaluate", "--config", cfg, "--seed", "1", "--out", str(tmp_path / "r2.json")])
    assert (tmp_path / "r2.json").read_text() == out.read_text()


def test_sweep(tmp_path, capsys):
    cfg = write_config(tmp_path)
    assert main(["sweep", "--config", cfg]) == 0
    assert (tmp_path / "sweep" / "results.csv").read_text().count("\n") == 3
    assert "2 computed" in capsys.readouterr().out
    assert main(["sweep", "--config", cfg]) == 0
    assert "0 computed" in capsys.readouterr().out


def test_intrusion(tmp_path):
    cfg = write_config(tmp_path, generators=[{"kind": "gaussian"}, {"kind": "mixup"}])
    out = tmp_path / "i.json"
    assert main(["intrusion", "--config", cfg, "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["mean"]["gaussian"] == 0.0 and rep["mean"]["mixup"] > 0


def test_grid_and_project(tmp_path):
    cfg = write_config(tmp_path, grid_resolution=[5, 4])
    g = tmp_path / "g.csv"
    assert main(["grid", "--config", cfg, "--out", str(g)]) == 0
    assert len(g.read_text().splitlines()) == 21
    p = tmp_path / "p.csv"
    assert main(["project", "--config", cfg, "--out", str(p)]) == 0
    labels = {line.split(",")[2] for line in p.read_text().splitlines()[1:]}
    assert labels == {"0", "1", "2"}
    data = tmp_path / "d.csv"
    save_csv(data, np.random.default_rng(0).normal(size=(30, 4)), [0] * 25 + [1] * 5)
    assert main(["project", "--input", str(data), "--out", str(p)]) == 0


@pytest.mark.parametrize("argv", [
    ["evaluate"],                               # missing --config
    ["frobnicate"],                             # unknown command
    ["synth", "--preset", "nope"],
    ["evaluate", "--config", "{missing}"],
])
def test_config_errors_exit_1(tmp_path, argv, capsys):
    argv = [a.replace("{missing}", str(tmp_path / "nope.json")) for a in argv]
    with pytest.raises(SystemExit) as e:
        raise SystemExit(main(argv))
    assert e.value.code == 1


def test_bad_generator_exit_1(tmp_path):
    cfg = write_config(tmp_path, generators=[{"kind": "nng_mix", "k": 0}])
    assert main(["evaluate", "--config", cfg]) == 1


def test_missing_csv_exit_2(tmp_path, capsys):
    cfg = write_config(tmp_path, dataset={"path": str(tmp_path / "absent.csv")})
    assert main(["evaluate", "--config", cfg]) == 2
    assert "absent.csv" in capsys.readouterr().err


def test_bad_label_exit_2(tmp_path, capsys):
    data = tmp_path / "bad.csv"
    data.write_text("a,b,label\n1,2,0\n3,4,2\n")
    cfg = write_config(tmp_path, dataset={"path": str(data)})
    assert main(["evaluate", "--config", cfg]) == 2
    assert "bad.csv:3" in capsys.readouterr().err


def test_divergence_exit_3(tmp_path, capsys):
    cfg = write_config(tmp_path, detectors=[{"kind": "sadlite", "learning_rate": 1e6, "epochs": 50}])
    assert main(["evaluate", "--config", cfg]) == 3
    assert "diverged" in capsys.readouterr().err
