import csv
import json

import numpy as np
import pytest

from covseg.cli import main
from covseg.ingestion import load_rates, to_log_returns
from covseg.kernels import ReturnMatrix
from covseg.report import series_text
from covseg.segmentation import recompute_entropy
from covseg.synthetic import MixtureScenario, RegimeSpec, equicorrelated, format_scenario


def three_regime_text(seed=0, m=5, length=500):
    z = np.zeros(m)
    scen = MixtureScenario(
        (RegimeSpec(length, z, np.eye(m)), RegimeSpec(length, z, equicorrelated(m, 0.8)),
         RegimeSpec(length, z, 4 * np.eye(m))),
        seed=seed,
    )
    return format_scenario(scen)


@pytest.fixture
def synth_three(tmp_path):
    scen = tmp_path / "a1.txt"
    scen.write_text(three_regime_text())
    out = tmp_path / "a1.csv"
    assert main(["synth", str(scen), "--out", str(out)]) == 0
    return out


def read_rows(path):
    with open(path) as fh:
        return list(csv.DictReader(line for line in fh if not line.startswith("#")))


def test_synth_writes_data_and_truth(synth_three):
    truth = read_rows(synth_three.with_name("a1.truth.csv"))
    assert [int(r["boundary"]) for r in truth] == [500, 1000]
    data = to_log_returns(load_rates(synth_three))
    assert (data.M, data.T) == (5, 1500)


def test_synth_deterministic(tmp_path, synth_three):
    scen = tmp_path / "again.txt"
    scen.write_text(three_regime_text())
    out = tmp_path / "again.csv"
    main(["synth", str(scen), "--out", str(out)])
    assert out.read_bytes() == synth_three.read_bytes()
    main(["synth", str(scen), "--out", str(out), "--seed", "5"])
    assert out.read_bytes() != synth_three.read_bytes()


def test_synth_zero_regimes(tmp_path, capsys):
    scen = tmp_path / "empty.txt"
    scen.write_text("seed 3\n")
    assert main(["synth", str(scen), "--out", str(tmp_path / "x.csv")]) == 1
    err = capsys.readouterr().err.strip()
    assert err.startswith("covseg: error code=scenario_parse")
    assert len(err.splitlines()) == 1


def test_segment_round_trip(tmp_path, synth_three):
    out = tmp_path / "report"
    assert main(["segment", str(synth_three), "--out-dir", str(out)]) == 0
    rows = read_rows(out / "segments.csv")
    assert [r["k"] for r in rows] == ["1", "2", "3"]
    starts = [int(r["start_column"]) for r in rows[1:]]
    assert all(abs(s - t) <= 20 for s, t in zip(starts, [500, 1000]))
    for name in ("segments.json", "entropy.csv", "eigenvalues.csv", "tree.json", "tree.csv"):
        assert (out / name).is_file()
    eig = read_rows(out / "eigenvalues.csv")
    assert list(eig[0].keys())[-2:] == ["lambda1", "lambda2"]

    report = json.loads((out / "segments.json").read_text())
    data = to_log_returns(load_rates(synth_three))
    for seg in report["segments"]:
        recomputed = recompute_entropy(data, (seg["start_column"], seg["end_column"]))
        assert seg["entropy"] == pytest.approx(recomputed, rel=1e-9, abs=1e-9)
        assert seg["start"] == data.timestamps[seg["start_column"]]
    assert report["metadata"]["delta0"] == 50.0 and report["metadata"]["t_min"] == 16


def test_segment_byte_deterministic(tmp_path, synth_three):
    a, b = tmp_path / "a", tmp_path / "b"
    main(["segment", str(synth_three), "--out-dir", str(a)])
    main(["segment", str(synth_three), "--out-dir", str(b), "--seed", "99"])
    for name in ("segments.csv", "segments.json", "entropy.csv", "eigenvalues.csv", "tree.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_single_regime_root_leaf(tmp_path):
    scen = tmp_path / "one.txt"
    scen.write_text("seed 2\nregime 600\ndiag 1 1 1\n")
    data_file = tmp_path / "one.csv"
    main(["synth", str(scen), "--out", str(data_file)])
    out = tmp_path / "r"
    assert main(["segment", str(data_file), "--out-dir", str(out)]) == 0
    assert len(read_rows(out / "segments.csv")) == 1
    tree = json.loads((out / "tree.json").read_text())
    assert tree["accepted"] is False and tree["reason"] == "below_threshold"


def test_fx_shaped_header(tmp_path):
    scen = tmp_path / "fx.txt"
    lines = ["seed 1", "regime 1380", "diag " + " ".join(["1"] * 30), "regime 1380", "diag " + " ".join(["3"] * 30)]
    scen.write_text("\n".join(lines) + "\n")
    data_file = tmp_path / "fx.csv"
    main(["synth", str(scen), "--out", str(data_file)])
    out = tmp_path / "r"
    assert main(["segment", str(data_file), "--out-dir", str(out)]) == 0
    head = [ln for ln in (out / "segments.csv").read_text().splitlines() if ln.startswith("#")]
    assert "# delta0=300.0" in head and "# t_min=91" in head and "# M=30" in head and "# T=2760" in head


def test_failure_leaves_no_partial_output(tmp_path, capsys):
    x = np.random.default_rng(0).normal(size=(1, 200))
    data = ReturnMatrix(np.vstack([x, x]))
    src = tmp_path / "dup.csv"
    src.write_text(series_text(data))
    out = tmp_path / "r"
    assert main(["segment", str(src), "--out-dir", str(out)]) == 1
    assert "code=singular_covariance" in capsys.readouterr().err
    assert not out.exists() or not any(out.iterdir())


def test_missing_input(tmp_path, capsys):
    assert main(["segment", str(tmp_path / "nope.csv"), "--out-dir", str(tmp_path / "r")]) == 1
    assert "code=input_format" in capsys.readouterr().err


def halves_file(tmp_path):
    x = np.random.default_rng(1).normal(size=(2, 40))
    data = ReturnMatrix(np.concatenate([x, x[:, ::-1]], axis=1))
    path = tmp_path / "halves.csv"
    path.write_text(series_text(data))
    return path


def test_spectrum_identical_halves(tmp_path, capsys):
    assert main(["spectrum", str(halves_file(tmp_path)), "--margin-factor", "1"]) == 0
    text = capsys.readouterr().out
    rows = list(csv.DictReader(ln for ln in text.splitlines() if not ln.startswith("#")))
    mid = next(r for r in rows if r["t"] == "40")
    assert abs(float(mid["delta"])) < 1e-6
    assert sum(r["best"] == "1" for r in rows) == 1


def test_spectrum_peak_near_boundary(tmp_path, capsys):
    scen = tmp_path / "two.txt"
    scen.write_text("seed 4\nregime 300\ndiag 1 1\nregime 300\ndiag 4 4\n")
    data_file = tmp_path / "two.csv"
    main(["synth", str(scen), "--out", str(data_file)])
    out_file = tmp_path / "spec.csv"
    capsys.readouterr()
    assert main(["spectrum", str(data_file), "--out", str(out_file)]) == 0
    rows = read_rows(out_file)
    best = next(r for r in rows if r["best"] == "1")
    assert abs(int(best["t"]) - 300) <= 20
    js = [float(r["js"]) * 600 for r in rows]
    np.testing.assert_allclose(js, [float(r["delta"]) for r in rows], rtol=1e-9)


def test_spectrum_range(tmp_path, capsys):
    path = halves_file(tmp_path)
    assert main(["spectrum", str(path), "--range", "0:500"]) == 1
    assert "code=range_out_of_bounds" in capsys.readouterr().err
    assert main(["spectrum", str(path), "--range", "10:70", "--margin-factor", "1"]) == 0
    assert "# range=[10, 70)" in capsys.readouterr().out
