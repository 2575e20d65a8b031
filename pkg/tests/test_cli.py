import json

import pytest

from orrw import cli


def run(args, capsys):
    code = cli.main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_list_plain_and_json(capsys):
    code, out, _ = run(["list"], capsys)
    assert code == 0 and "balance" in out and "martingale" in out
    code, out, _ = run(["list", "--json"], capsys)
    cat = json.loads(out)
    assert code == 0 and len(cat) >= 12
    assert all(e["anchor"] and e["params"] for e in cat)


def test_martingale_example(tmp_path, capsys):
    code, out, err = run(["run", "martingale", "--fiber", "point", "--delta", "0", "--horizon", "1",
                          "--reps", "1000", "--seed", "7", "--out", str(tmp_path)], capsys)
    assert code == 0 and out == "" and "martingale: pass" in err
    rep = json.loads((tmp_path / "martingale.json").read_text())
    assert rep["verdict"] == "pass" and rep["replications"] == 1000
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["experiments"][0]["seed"] == 7 and man["version"] and man["started"] and man["finished"]


def test_balance_example_deterministic(tmp_path, capsys):
    args = ["run", "balance", "--fiber", "path3", "--delta", "10", "--samples", "50", "--seed", "1",
            "--format", "both"]
    assert run(args + ["--out", str(tmp_path / "a")], capsys)[0] == 0
    assert run(args + ["--out", str(tmp_path / "b")], capsys)[0] == 0
    for name in ("balance.json", "balance.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_malformed_fiber_file(tmp_path, capsys):
    bad = tmp_path / "g.txt"
    bad.write_text("0 1\n1 2 3\n")
    code, _, err = run(["run", "balance", "--fiber", f"file:{bad}", "--out", str(tmp_path)], capsys)
    assert code == 2 and "line 2" in err


@pytest.mark.parametrize("args", [["frobnicate"], ["run", "nope"], ["run", "balance", "--alpha", "0.9"],
                                  ["run", "balance", "--delta", "abc"], ["run", "shunt", "--d", "0"],
                                  ["run", "balance", "--set", "novalue"], ["replay", "/nonexistent.json"]])
def test_configuration_errors_exit_2(args, capsys, tmp_path):
    assert run(args + (["--out", str(tmp_path)] if args[0] == "run" else []), capsys)[0] == 2


def test_failed_check_exits_1(tmp_path, capsys):
    # a deliberately impossible calibrated point: D-wall on a two-vertex fiber with no reinforcement
    code, _, err = run(["run", "dwall", "--fiber", "path2", "--D", "1", "--delta", "0", "--x", "2",
                        "--reps", "200", "--set", "calibrated=[(1, 0)]", "--out", str(tmp_path)], capsys)
    assert code == 1 and "dwall: fail" in err


def test_ini_config_and_precedence(tmp_path, capsys):
    ini = tmp_path / "c.ini"
    ini.write_text("[DEFAULT]\nseed = 4\nsamples = 3\n\n[shunt]\ngrid = [(2, 20, 0.1)]\nconst.C = 2.5\n")
    code, _, _ = run(["run", "shunt", "--config", str(ini), "--out", str(tmp_path)], capsys)
    assert code == 0
    man = json.loads((tmp_path / "manifest.json").read_text())
    cfg = man["experiments"][0]["config"]
    assert cfg["seed"] == 4 and cfg["extra"]["grid"] == [[2, 20, 0.1]] and cfg["constant_overrides"] == {"C": 2.5}
    code, _, _ = run(["run", "commute", "--config", str(ini), "--seed", "9", "--out", str(tmp_path)], capsys)
    cfg = json.loads((tmp_path / "manifest.json").read_text())["experiments"][0]["config"]
    assert code == 0 and cfg["seed"] == 9 and cfg["samples"] == 3


def test_malformed_ini(tmp_path, capsys):
    ini = tmp_path / "c.ini"
    ini.write_text("no header here\n")
    assert run(["run", "balance", "--config", str(ini)], capsys)[0] == 2


def test_replay_identical(tmp_path, capsys):
    out = tmp_path / "o"
    assert run(["run", "hitfront", "current_crossings", "--fiber", "path2", "--reps", "300", "--samples", "1",
                "--seed", "3", "--out", str(out), "--format", "both"], capsys)[0] == 0
    code, _, err = run(["replay", str(out / "manifest.json")], capsys)
    assert code == 0 and "replay identical" in err
    (out / "hitfront.json").write_text("{}")
    code, _, err = run(["replay", str(out / "manifest.json"), "--out", str(tmp_path / "r2")], capsys)
    assert code == 1 and "hitfront.json" in err
