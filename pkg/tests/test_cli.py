import csv
import io
import json

import numpy as np
import pytest

from lpstat.cli import run
from lpstat.io import dataset_text

ROW1 = [-0.400, -0.441, 0.034, 0.703]
COL1 = [-0.544, -0.233, -0.042, 0.589, 1.094]


@pytest.fixture
def xy(tmp_path):
    rng = np.random.default_rng(0)
    x = rng.uniform(0, 17, 314)
    y = np.abs(np.exp(3 - 0.15 * x) + rng.normal(0, 2, 314))
    p = tmp_path / "xy.csv"
    np.savetxt(p, np.c_[x, y], delimiter=",", header="x,y", comments="")
    return p


@pytest.fixture
def wais(tmp_path):
    p = tmp_path / "wais.csv"
    p.write_text(dataset_text("wais"))
    return p


def call(capsys, *argv):
    code = run([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def envelope(capsys, *argv):
    code, out, err = call(capsys, *argv)
    assert code == 0, err
    return json.loads(out)


def test_corresp_fisher_csv(capsys, tmp_path):
    p = tmp_path / "fisher.csv"
    p.write_text(dataset_text("fisher"))
    code, out, _ = call(capsys, "corresp", "--input", p, "--rank", 2, "--format", "csv")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    r1 = np.array([float(r["dim1"]) for r in rows if r["kind"] == "row"])
    c1 = np.array([float(r["dim1"]) for r in rows if r["kind"] == "col"])
    s = np.sign(r1[0] * ROW1[0])
    assert np.max(np.abs(s * r1 - ROW1)) < 0.01
    assert np.max(np.abs(s * c1 - COL1)) < 0.01


def test_lpinfor_wais(capsys, wais):
    env = envelope(capsys, "lpinfor", "--input", wais, "--m", 4, "--perm", 999, "--seed", 7)
    assert env["schema"] == 1 and env["seed"] == 7 and env["config"]["seed"] == 7
    assert env["results"]["rule"] == "threshold"
    flagged = {(e["j"], e["k"]): e for e in env["results"]["significant_entries"]}
    assert flagged[2, 1]["value"] == pytest.approx(-0.617, abs=0.002)
    assert flagged[2, 1]["pvalue"] <= 0.05


def test_empty_stdin(capsys, monkeypatch):
    monkeypatch.setattr("sys.stdin", io.StringIO(""))
    code, _, err = call(capsys, "moments", "--input", "-")
    assert code == 2
    assert "empty input" in err


@pytest.mark.parametrize("argv", [["moments", "--bogus"], ["frobnicate"], ["corresp", "--rank", "two"]])
def test_parse_errors_exit_1(capsys, argv):
    with pytest.raises(SystemExit) as exc:
        run(argv)
    assert exc.value.code == 1
    assert "usage" in capsys.readouterr().err


@pytest.mark.parametrize(
    "argv",
    [
        ["moments", "--input", "missing.csv"],
        ["moments"],
        ["corresp", "--dataset", "fisher", "--plotdata", "PD", "--plot-kind", "scores"],
        ["comoments", "--dataset", "fisher", "--plotdata", "PD"],
        ["comoments", "--dataset", "fisher", "--plot-kind", "scores"],
    ],
)
def test_usage_errors_exit_1(capsys, tmp_path, argv):
    argv = [str(tmp_path / "pd") if a == "PD" else a for a in argv]
    code, _, err = call(capsys, *argv)
    assert code == 1 and err


def test_data_error_exit_2(capsys, tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("x,y\n1,2\n3,oops\n")
    code, _, err = call(capsys, "comoments", "--input", p, "--layout", "columns")
    assert code == 2 and "non-numeric" in err
    code, _, _ = call(capsys, "corresp", "--input", p, "--layout", "columns")
    assert code == 2


def test_numeric_failure_exit_3(capsys, tmp_path):
    p = tmp_path / "r.json"
    good = {"schema": 1, "command": "corresp", "config": {"dataset": "fisher", "m": "full", "rank": 2, "variant": "ca", "layout": "auto"}, "results": {"rank": 7}}
    p.write_text(json.dumps(good))
    code, _, err = call(capsys, "verify", p)
    assert code == 3 and "not reproduced" in err


def test_plotdata_shapes(capsys, tmp_path, xy):
    d = tmp_path / "pd"
    envelope(capsys, "moments", "--input", xy, "--column", "y", "--plotdata", d)
    with open(d / "scores.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["u_left", "u_right", "j", "value"]
    assert len(rows) == 1 + 4 * 314
    envelope(capsys, "copula", "--dataset", "fisher", "--plotdata", d, "--plot-kind", "copula_grid")
    with open(d / "copula_grid.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["u", "v", "density"] and len(rows) == 1 + 101 * 101
    envelope(capsys, "power-sim", "--patterns", "circle", "--noises", "E1", "--B0", 60, "--B1", 50, "--plotdata", d)
    with open(d / "power.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0][:3] == ["noise_level", "method", "power"] and len(rows) == 4


@pytest.mark.parametrize(
    "argv",
    [
        ["moments", "--column", "y"],
        ["comoments"],
        ["gof", "--column", "y", "--baseline", "exponential"],
        ["density", "--column", "y", "--baseline", "gamma", "--form", "exp"],
        ["copula", "--form", "exp"],
        ["lpinfor", "--perm", 199, "--seed", 3],
        ["regress", "--path", "sample", "--seed", 3],
        ["regress"],
    ],
)
def test_verify_round_trip(capsys, tmp_path, xy, argv):
    out = tmp_path / "r.json"
    code, _, err = call(capsys, argv[0], "--input", xy, *argv[1:], "--output", out)
    assert code == 0, err
    env = json.loads(out.read_text())
    assert env["version"] and env["config"]["command"] == argv[0]
    code, stdout, err = call(capsys, "verify", out)
    assert code == 0, err
    assert json.loads(stdout)["results"]["verified"] is True


def test_verify_stateless_commands(capsys, tmp_path):
    for argv in (["corresp", "--dataset", "fisher", "--variant", "goodman"], ["bench", "--ns", "100,200", "--repeats", 2]):
        out = tmp_path / "r.json"
        assert call(capsys, *argv, "--output", out)[0] == 0
        code, _, err = call(capsys, "verify", out)
        if argv[0] == "bench":
            # timings are not reproducible; only the statistics would be
            assert code == 3
        else:
            assert code == 0, err


def test_seed_recorded_when_drawn(capsys, wais):
    env = envelope(capsys, "lpinfor", "--input", wais, "--perm", 99)
    assert isinstance(env["seed"], int) and env["config"]["seed"] == env["seed"]


def test_toml_config(capsys, tmp_path):
    conf = tmp_path / "c.toml"
    conf.write_text('m = "full"\n[corresp]\nrank = 1\nvariant = "goodman"\n')
    env = envelope(capsys, "corresp", "--dataset", "fisher", "--config", conf)
    assert env["results"]["variant"] == "goodman" and env["results"]["rank"] == 1
    env = envelope(capsys, "corresp", "--dataset", "fisher", "--config", conf, "--rank", 2)
    assert env["results"]["rank"] == 2
    conf.write_text("colour = 1\n")
    assert call(capsys, "corresp", "--dataset", "fisher", "--config", conf)[0] == 1


def test_threads_env(capsys, monkeypatch, wais):
    monkeypatch.setenv("LPSTAT_THREADS", "3")
    a = envelope(capsys, "lpinfor", "--input", wais, "--perm", 600, "--seed", 1)
    monkeypatch.delenv("LPSTAT_THREADS")
    b = envelope(capsys, "lpinfor", "--input", wais, "--perm", 600, "--seed", 1, "--threads", 1)
    assert a["results"] == b["results"]


def test_warnings_collected(capsys, tmp_path):
    p = tmp_path / "few.csv"
    p.write_text("x\n1\n2\n2\n3\n")
    env = envelope(capsys, "moments", "--input", p, "--m", 4)
    assert env["warnings"] and len(env["results"]["coeffs"]) == 2
