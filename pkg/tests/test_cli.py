import json

import numpy as np
import pytest

from mitest.cli import main, run

FIXTURE_CSV = "a,b\n10,20\n20,10\n"


@pytest.fixture
def counts_file(tmp_path):
    path = tmp_path / "counts.csv"
    path.write_text(FIXTURE_CSV)
    return str(path)


@pytest.fixture
def pairs_file(tmp_path):
    rng = np.random.default_rng(0)
    x = rng.standard_normal(300)
    y = x + rng.standard_normal(300)
    path = tmp_path / "pairs.csv"
    path.write_text("x,y\n" + "".join(f"{a},{b}\n" for a, b in zip(x, y)))
    return str(path)


def doc(argv):
    code, text = run(argv)
    assert code == 0, text
    return json.loads(text)


def test_test_command(counts_file):
    d = doc(["test", "--input", counts_file])
    assert d["command"] == "test" and d["timing_ms"] is None
    r = d["result"]
    assert r["value"] == pytest.approx(100 / 15, rel=1e-11)
    assert r["p_value"] == pytest.approx(0.00982327450752, rel=1e-10)
    assert r["reject"] is True and r["method"] == "classical"


def test_test_t1_series(counts_file):
    r = doc(["test", "--input", counts_file, "--stat", "t1"])["result"]
    assert r["method"] == "series" and r["weights"] == [1.0, 0.0, 0.0]


def test_pairs_input(pairs_file):
    r = doc(["test", "--input", pairs_file, "--format", "pairs", "--rule", "fixed:3:3"])["result"]
    assert r["dims"] == [3, 3] and r["n"] == 300 and r["reject"]


def test_categorical_pairs(tmp_path):
    path = tmp_path / "cat.csv"
    path.write_text("".join(f"{a},{b}\n" for a, b in [("u", "p"), ("u", "q"), ("v", "p"), ("v", "q")] * 5))
    r = doc(["test", "--input", str(path), "--format", "pairs"])["result"]
    assert r["value"] == 0.0 and r["p_value"] == 1.0


def test_weights_command(tmp_path):
    path = tmp_path / "flat.csv"
    path.write_text("\n".join(",".join(["40"] * 5) for _ in range(5)) + "\n")
    r = doc(["weights", "--input", str(path)])["result"]
    assert r["unit_dof"] == 16
    assert r["sum"] == pytest.approx(16, rel=1e-10)


def test_simulate_and_power():
    r = doc(["simulate", "--seed", "1", "--reps", "200", "--n", "500", "--stat", "t1"])["result"]
    assert len(r["values"]) == 200 and r["ks_distance"] < 0.15
    r = doc(["power", "--seed", "1", "--reps", "100", "--n", "500", "--coupling", "checkerboard:1"])["result"]
    assert r["rejection_rate"] > 0.9


def test_bin_command(pairs_file):
    r = doc(["bin", "--input", pairs_file, "--rule", "fixed:2:2"])["result"]
    assert np.sum(r["counts"]) == 300


def test_verify_and_curve():
    assert doc(["verify-conjecture", "--seed", "0", "--dims", "3x4"])["result"]["max_rel_diff"] <= 1e-8
    r = doc(["curve", "--points", "3", "--surface", "3"])["result"]
    assert r["curve"][0][1] == pytest.approx(0.0849495183977)
    assert len(r["surface"]) == 10


def test_byte_identical_reruns(counts_file):
    for argv in (["test", "--input", counts_file, "--stat", "t1"],
                 ["simulate", "--seed", "3", "--reps", "120", "--n", "100"]):
        assert run(argv) == run(argv)


def test_timing_flag(counts_file):
    assert doc(["test", "--input", counts_file, "--timing"])["timing_ms"] >= 0


def test_csv_output(counts_file):
    code, text = run(["test", "--input", counts_file, "--csv"])
    assert code == 0
    lines = text.splitlines()
    assert lines[0] == "field,value" and lines[1] == "statistic_name,t2"


@pytest.mark.parametrize("argv", [
    ["simulate", "--reps", "10"],
    ["power"],
    ["verify-conjecture"],
    ["verify-conjecture", "--seed", "0", "--dims", "1x3"],
    ["test", "--input", "x.csv", "--pvalue", "mc"],
    ["test", "--input", "x.csv", "--bogus"],
    ["frobnicate"],
])
def test_usage_errors(argv):
    assert run(argv)[0] == 2


def test_data_errors(tmp_path):
    code, text = run(["test", "--input", str(tmp_path / "missing.csv")])
    assert code == 1 and "missing.csv" in text and "\n" not in text
    bad = tmp_path / "neg.csv"
    bad.write_text("1,-2\n3,4\n")
    assert run(["test", "--input", str(bad)])[0] == 1


def test_main_writes_out(counts_file, tmp_path, capsys):
    out = tmp_path / "res.json"
    assert main(["test", "--input", counts_file, "--out", str(out)]) == 0
    assert json.loads(out.read_text())["result"]["reject"] is True
    assert capsys.readouterr().out == ""
    assert main(["test", "--input", str(tmp_path / "nope.csv")]) == 1
    assert "nope.csv" in capsys.readouterr().err
