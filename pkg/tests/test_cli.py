import csv

import pytest
import yaml

from ionbv.cli import config_hash, main


def write_cfg(tmp_path, name="cfg.yaml", **cfg):
    cfg.setdefault("out", str(tmp_path / "out"))
    p = tmp_path / name
    p.write_text(yaml.safe_dump(cfg))
    return str(p)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_compile_summary_n1(tmp_path, capsys):
    cfg = write_cfg(tmp_path, noise="noiseless", experiment={"kind": "bv", "n": 1, "secrets": ["1"]})
    assert main(["compile", "--config", cfg]) == 0
    line = capsys.readouterr().out.strip()
    assert line.startswith("s=1: 15 PB1, 1 MS, 9 transports")
    rows = read_csv(tmp_path / "out" / "counts.csv")
    assert rows[0]["transports"] == "9"
    assert list(rows[0])[-1] == "config_hash"
    assert (tmp_path / "out" / "program_s1.txt").exists()


def test_compile_n2_transports_identical(tmp_path):
    cfg = write_cfg(tmp_path, noise="noiseless", experiment={"kind": "bv", "n": 2})
    assert main(["compile", "--config", cfg]) == 0
    rows = read_csv(tmp_path / "out" / "counts.csv")
    assert {r["transports"] for r in rows} == {"19"}
    texts = {(tmp_path / "out" / f"transport_s{s}.txt").read_text() for s in ("00", "01", "10", "11")}
    assert len(texts) == 1


def test_run_is_deterministic(tmp_path):
    cfg = write_cfg(tmp_path, noise="phase-noise", shots=200, seed=11,
                    experiment={"kind": "bv", "n": 1})
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "a")]) == 0
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "bv_histograms.csv").read_bytes()
    b = (tmp_path / "b" / "bv_histograms.csv").read_bytes()
    assert a == b


def test_phase_sweep_schema(tmp_path):
    cfg = write_cfg(tmp_path, noise="noiseless",
                    experiment={"kind": "phase-sweep", "freqs_khz": [10, 40],
                                "sequence_count": 2, "cliffords_per_ion": 3})
    assert main(["run", "--config", cfg]) == 0
    rows = read_csv(tmp_path / "out" / "phase_sweep.csv")
    assert list(rows[0]) == ["freq_hz", "fidelity_ion0", "fidelity_ion1", "config_hash"]
    assert [float(r["freq_hz"]) for r in rows] == [10e3, 40e3]
    assert (tmp_path / "out" / "manifest.yaml").exists()


def test_report_metrics_and_mixed_hashes(tmp_path, capsys):
    cfg = write_cfg(tmp_path, noise="noiseless", shots=1000, seed=1,
                    experiment={"kind": "bv", "n": 2})
    assert main(["run", "--config", cfg]) == 0
    capsys.readouterr()
    assert main(["report", str(tmp_path / "out")]) == 0
    out = capsys.readouterr().out
    assert "mutual information: 2.000 bits" in out
    assert "classical baseline: 0.5000" in out

    other = write_cfg(tmp_path, "other.yaml", noise="noiseless",
                      experiment={"kind": "thermal-scan", "nbar": [0, 1]})
    assert main(["run", "--config", other]) == 0
    capsys.readouterr()
    assert main(["report", str(tmp_path / "out")]) == 4
    assert "allow-mixed" in capsys.readouterr().err
    assert main(["report", str(tmp_path / "out"), "--allow-mixed", "--csv"]) == 0
    assert capsys.readouterr().out.startswith("metric,key,value")


def test_exit_codes(tmp_path, capsys):
    (tmp_path / "empty").mkdir()
    assert main(["report", str(tmp_path / "empty")]) == 4
    assert main(["run", "--config", str(tmp_path / "missing.yaml")]) == 4
    bad = write_cfg(tmp_path, noise="nope", experiment={"kind": "bv", "n": 1})
    assert main(["run", "--config", bad]) == 2
    bad = write_cfg(tmp_path, noise="noiseless", experiment={"kind": "bv", "n": 1, "colour": 1})
    assert main(["run", "--config", bad]) == 2
    err = capsys.readouterr().err
    assert err.count("ionbv: error[") == 4


def test_config_hash_ignores_out():
    a = {"noise": "noiseless", "experiment": {"kind": "bv", "n": 1}, "out": "x"}
    b = dict(a, out="y")
    assert config_hash(a) == config_hash(b)
    assert config_hash(a) != config_hash(dict(a, seed=3))
