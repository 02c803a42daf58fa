import csv
import json

import numpy as np
import pytest

from qfames.cli import main
from qfames.experiments import (
    PRESETS,
    SWEEP_COLUMNS,
    ConfigError,
    ExperimentConfig,
    ancilla_check,
    preset,
)


def small_illustrative(tmp_path, **over):
    doc = preset("illustrative").to_json()
    doc["qfames"]["N"] = 400
    doc["seeds"] = [0, 1, 2]
    doc["output_dir"] = str(tmp_path / "out")
    doc.update(over)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(doc))
    return path, doc


@pytest.mark.parametrize("name", PRESETS)
def test_presets_roundtrip(name):
    cfg = preset(name)
    again = ExperimentConfig.from_json(json.loads(json.dumps(cfg.to_json())))
    assert again.to_json() == cfg.to_json()


def test_dump_config(capsys):
    assert main(["preset", "tfim", "--dump-config"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["model"] == {**doc["model"], "kind": "tfim", "L": 10, "g": 0.5}


@pytest.mark.parametrize("mutate", [
    lambda d: d.update(bogus=1),
    lambda d: d["qfames"].update(Tmax=3),
    lambda d: d["model"].update(kind="ising"),
    lambda d: d.update(schema="other/1"),
    lambda d: d["qfames"].update(tau=-1),
    lambda d: d["truth"].update(width=0.1),
    lambda d: d.update(seeds=[]),
])
def test_invalid_config_exit_1_no_outputs(tmp_path, mutate, capsys):
    path, doc = small_illustrative(tmp_path)
    mutate(doc)
    path.write_text(json.dumps(doc))
    assert main(["run", str(path)]) == 1
    assert "invalid configuration" in capsys.readouterr().err
    assert not (tmp_path / "out").exists()
    assert not any(p.name.startswith(".qfames-") for p in tmp_path.iterdir())


def test_unknown_key_named_in_message():
    doc = preset("illustrative").to_json()
    doc["data"]["shots"] = 3
    with pytest.raises(ConfigError, match="shots"):
        ExperimentConfig.from_json(doc)


def test_run_outputs(tmp_path):
    path, _ = small_illustrative(tmp_path)
    assert main(["run", str(path)]) == 0
    out = tmp_path / "out"
    assert {p.name for p in out.iterdir()} == {"dods.json", "landscape.csv", "singular_values.csv", "manifest.json"}
    dods = json.loads((out / "dods.json").read_text())
    assert [r["seed"] for r in dods["runs"]] == [0, 1, 2]
    c = dods["runs"][0]["clusters"][0]
    assert {"theta_star", "theta_star_physical", "multiplicity", "singular_values"} <= set(c)
    with open(out / "landscape.csv") as fh:
        assert next(csv.reader(fh)) == ["theta", "theta_physical", "frobenius_norm"]
    with open(out / "singular_values.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert any(r["seed"] == "mean" for r in rows)


def test_determinism_across_workers(tmp_path, monkeypatch):
    path, _ = small_illustrative(tmp_path)
    outs = []
    for w in ("1", "2"):
        monkeypatch.setenv("QFAMES_WORKERS", w)
        out = tmp_path / f"w{w}"
        assert main(["run", str(path), "--out", str(out)]) == 0
        outs.append(out)
    for name in ("dods.json", "landscape.csv", "singular_values.csv"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()


def test_bad_worker_env(tmp_path, monkeypatch):
    path, _ = small_illustrative(tmp_path)
    monkeypatch.setenv("QFAMES_WORKERS", "many")
    assert main(["run", str(path)]) == 1


def test_sweep(tmp_path):
    path, _ = small_illustrative(tmp_path, seeds=[0])
    assert main(["sweep-T", str(path), "--T", "40,80"]) == 0
    with open(tmp_path / "out" / "sweep.csv") as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == SWEEP_COLUMNS
    body = [dict(zip(rows[0], r)) for r in rows[1:]]
    assert sorted({r["method"] for r in body}) == ["qfames", "qmegs"]
    q = [r for r in body if r["method"] == "qfames"]
    assert [float(r["T_max"]) for r in q] == [40.0, 80.0]
    assert float(q[0]["T_total"]) == 9 * 400 * 40.0  # L R N T_max
    qm = [r for r in body if r["method"] == "qmegs"]
    assert float(qm[0]["T_total"]) == 9 * 400 * 40.0  # same sample budget on one entry


@pytest.mark.parametrize("T", ["", ",", "40,abc", "0,40"])
def test_sweep_bad_T(tmp_path, T):
    path, _ = small_illustrative(tmp_path, seeds=[0])
    assert main(["sweep-T", str(path), "--T", T]) == 1
    assert not (tmp_path / "out").exists()


def test_ancilla_check_cli(tmp_path):
    path, _ = small_illustrative(tmp_path)
    assert main(["ancilla-check", str(path), "--h", "0.01", "--dt", "0.01"]) == 0
    rep = json.loads((tmp_path / "out" / "reconstruction_report.json").read_text())
    assert len(rep["pairs"]) == 9
    mixed = [p for p in rep["pairs"] if p["max_error"] > 1e-10]
    assert mixed and all(3 <= p["ratio"] <= 5 for p in mixed)


def test_ancilla_check_zero_crossing(tmp_path):
    _, doc = small_illustrative(tmp_path)
    doc["states"]["phi"] = [[[1, 0], [0, 0], [0, 0]], [[0, 0], [0, 0], [1, 0]]]
    doc["states"]["count"] = 2
    rep = ancilla_check(ExperimentConfig.from_json(doc), 0.01, 0.01)
    by = {(p["l"], p["r"]): p for p in rep["pairs"]}
    assert "zero_crossing" in by[(0, 1)] and "zero_crossing" in by[(1, 0)]
    assert by[(0, 0)]["max_error"] < 1e-10  # a single eigenvector: pure exponential


def test_ancilla_check_rejects_bad_step(tmp_path):
    path, _ = small_illustrative(tmp_path)
    assert main(["ancilla-check", str(path), "--h", "0", "--dt", "0.01"]) == 1


def test_help_documents_columns(capsys):
    with pytest.raises(SystemExit):
        main(["--help"])
    text = capsys.readouterr().out
    for col in SWEEP_COLUMNS + ("theta_physical", "frobenius_norm", "singular_value", "QFAMES_WORKERS"):
        assert col in text
