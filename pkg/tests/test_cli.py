import csv
import json
import math

import pytest

from nclp import cli
from oracles import r_pq, rel_close


def run(tmp_path, *argv, fmt="both"):
    return cli.run([*argv, "--output-dir", str(tmp_path), "--format", fmt])


def load(tmp_path, command):
    with open(tmp_path / f"{command}.json", encoding="utf-8") as fh:
        return json.load(fh)


def test_mixed_equal_norms(tmp_path, capsys):
    assert run(tmp_path, "mixed", "--p", "3", "--q", "1.5", "--diag", "1,1,1,1") == 0
    res = load(tmp_path, "mixed")["results"]
    expected = 4 ** (1 / r_pq(3, 1.5))
    assert res["lower"] <= expected * (1 + 1e-9) and expected <= res["upper"] * (1 + 1e-9)
    assert res["gap"] <= 1e-3
    assert "mixed norm" in capsys.readouterr().out


def test_verify_thm3_example(tmp_path):
    argv = ["verify", "thm3", "--p", "2", "--r", "1", "--q", "2", "--trials", "1000", "--seed", "7"]
    assert run(tmp_path, *argv) == 0
    res = load(tmp_path, "verify")["results"]
    assert res["trials"] == 1000 and res["min_relative_margin"] >= -1e-9


def test_counterexample_example(tmp_path):
    argv = ["counterexample", "--p", "0.5", "--q", "2", "--t-min", "1e-5", "--t-max", "1e-2"]
    assert run(tmp_path, *argv) == 0
    res = load(tmp_path, "counterexample")["results"]
    assert rel_close(res["sum_fit"]["coefficient"], 2**-0.5, 0.05)
    assert rel_close(res["power_fit"]["coefficient"], 2**-0.25, 0.05)
    with open(tmp_path / "counterexample.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 19 and float(rows[0]["t"]) == 0.01


@pytest.mark.parametrize("argv", [
    ["norm", "--p", "inf", "--entries", "1,2;3,4"],
    ["kfun", "--diag", "3,1"],
    ["interp", "--p", "2", "--diag", "3,1"],
    ["lorentz", "--r", "2", "--p", "1", "--diag", "3,1"],
    ["divergence", "--r", "2", "--p", "1", "--n-max", "256"],
    ["verify", "logconv", "--trials", "20"],
    ["verify", "kfun", "--trials", "3"],
    ["amplify", "--p", "0.5", "--q", "2", "--r", "1", "--trials", "12"],
])
def test_commands_succeed(tmp_path, argv):
    assert run(tmp_path, *argv) == 0
    env = load(tmp_path, argv[0])
    assert set(env) == {"tool_version", "command", "config", "timestamp", "results"}
    assert (tmp_path / f"{argv[0]}.csv").exists()


def test_norm_value(tmp_path):
    assert run(tmp_path, "norm", "--p", "1", "--diag", "3,-4") == 0
    assert load(tmp_path, "norm")["results"]["norm"] == 7.0


def test_lorentz_diag_equals_plain_norm(tmp_path):
    assert run(tmp_path, "lorentz", "--r", "2", "--p", "2", "--diag", "3,4") == 0
    assert rel_close(load(tmp_path, "lorentz")["results"]["norm"], 5.0, 1e-15)


@pytest.mark.parametrize("argv", [
    ["norm", "--p", "0", "--diag", "1"],
    ["norm", "--p", "2", "--bogus"],
    ["norm", "--p", "2", "--entries", "1,2;3"],
    ["mixed", "--p", "0.5", "--q", "2", "--diag", "1,2"],
    ["interp", "--p", "2", "--theta", "1.5", "--diag", "1"],
    ["verify", "thm3", "--r", "3", "--q", "2"],
    ["counterexample", "--p", "2", "--q", "3"],
    ["amplify", "--p", "2", "--q", "3", "--r", "1", "--trials", "2"],
])
def test_validation_errors_exit_2(tmp_path, capsys, argv):
    assert run(tmp_path, *argv) == 2
    err = capsys.readouterr().err.strip()
    assert err.startswith("nclp: error:") and "\n" not in err
    assert not (tmp_path / f"{argv[0]}.json").exists()


def test_malformed_matrix_file(tmp_path, capsys):
    bad = tmp_path / "m.json"
    bad.write_text('{"dim": 2, "re": [1, 2, 3]}')
    assert run(tmp_path, "norm", "--p", "2", "--matrix", str(bad)) == 2
    bad.write_text("not json")
    assert run(tmp_path, "norm", "--p", "2", "--matrix", str(bad)) == 2


def test_matrix_file_roundtrip(tmp_path):
    from nclp.spectral import matrix_to_json

    f = tmp_path / "m.json"
    f.write_text(json.dumps(matrix_to_json([[2.0, 0.0], [0.0, 0.0]])))
    assert run(tmp_path, "norm", "--p", "2", "--matrix", str(f)) == 0
    assert load(tmp_path, "norm")["results"]["norm"] == 2.0


def test_genuine_failure_exits_3(tmp_path, monkeypatch):
    def broken(*args, **kwargs):
        return {"suite": "power_mean", "trials": 1, "min_relative_margin": -1.0, "passed": False,
                "rows": []}

    monkeypatch.setattr(cli, "power_mean_suite", broken)
    assert run(tmp_path, "verify", "thm3", "--trials", "1") == 3


def test_expected_violations_are_not_failures(tmp_path):
    assert run(tmp_path, "verify", "thm3", "--p", "0.5", "--r", "1", "--q", "2", "--trials", "30") == 0
    assert load(tmp_path, "verify")["results"]["failures"] == 0


def _strip(env):
    env = dict(env)
    env.pop("timestamp")
    return env


def test_deterministic_json(tmp_path):
    argv = ["verify", "logconv", "--trials", "30", "--seed", "4"]
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(a, *argv) == 0 and run(b, *argv) == 0
    assert _strip(load(a, "verify")) == _strip(load(b, "verify"))
    ta = (a / "verify.json").read_text().splitlines()
    tb = (b / "verify.json").read_text().splitlines()
    assert [x for x in ta if "timestamp" not in x] == [x for x in tb if "timestamp" not in x]


def test_jobs_do_not_change_results(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(a, "verify", "thm3", "--trials", "30") == 0
    assert run(b, "verify", "thm3", "--trials", "30", "--jobs", "2") == 0
    ra, rb = load(a, "verify")["results"], load(b, "verify")["results"]
    assert ra == rb


def test_env_seed_overrides_flag(tmp_path, monkeypatch):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(a, "verify", "logconv", "--trials", "10", "--seed", "9") == 0
    monkeypatch.setenv("NCLP_SEED", "9")
    assert run(b, "verify", "logconv", "--trials", "10", "--seed", "1") == 0
    assert load(b, "verify")["config"]["seed"] == 9
    assert load(a, "verify")["results"] == load(b, "verify")["results"]
    monkeypatch.setenv("NCLP_SEED", "x")
    assert run(b, "verify", "logconv", "--trials", "1") == 2


def test_format_flags(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(a, "norm", "--p", "2", "--diag", "1", fmt="json") == 0
    assert run(b, "norm", "--p", "2", "--diag", "1", fmt="csv") == 0
    assert (a / "norm.json").exists() and not (a / "norm.csv").exists()
    assert (b / "norm.csv").exists() and not (b / "norm.json").exists()


def test_csv_is_locale_free(tmp_path):
    assert run(tmp_path, "divergence", "--r", "2", "--p", "1", "--n-max", "64", fmt="csv") == 0
    text = (tmp_path / "divergence.csv").read_text()
    for row in list(csv.reader(text.splitlines()))[1:]:
        for cell in row:
            float(cell)
    assert ";" not in text


def test_infinity_spelling(tmp_path):
    assert run(tmp_path, "mixed", "--p", "2", "--q", "inf", "--diag", "1,2") == 0
    env = load(tmp_path, "mixed")
    assert env["config"]["q"] == "inf"
    assert rel_close(env["results"]["value"], (1 + 2 ** r_pq(2, math.inf)) ** (1 / r_pq(2, math.inf)), 1e-6)
