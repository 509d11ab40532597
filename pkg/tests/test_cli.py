import json
import subprocess
import sys

import pytest

from cpfs import cli
from cpfs import tree as T
from cpfs.experiments import io as out_io
from cpfs.experiments.verify import CheckRow


def run(args, capsys):
    code = cli.main(args)
    cap = capsys.readouterr()
    return code, cap.out, cap.err


def config_of(text):
    line = next(l for l in text.splitlines() if l.startswith("# config "))
    return json.loads(line[len("# config "):])


def test_gen_tree_roundtrip(tmp_path, capsys):
    p = tmp_path / "t.txt"
    code, _, _ = run(["gen-tree", "--seed", "3", "--out", str(p)], capsys)
    assert code == 0
    text = p.read_text()
    assert text.startswith("# cpfs ")
    tree = T.loads(text)
    assert tree.n == 15
    code, out, _ = run(["simulate", "--tree", str(p), "--trials", "20", "--seed", "1"], capsys)
    assert code == 0
    rows = out_io.read_rows(out)
    assert [r["experiment"] for r in rows] == ["extinction_time_mean", "alive_at_stop", "max_depth_mean"]
    assert rows[1]["estimate"] == "0.0"


def test_sweep_rows(capsys):
    code, out, _ = run(["sweep", "--lambda", "0.1:0.1:2.0", "--trials", "50",
                        "--horizon", "5", "--budget", "2000"], capsys)
    assert code == 0
    rows = out_io.read_rows(out)
    assert len(rows) == 20
    est = [float(r["estimate"]) for r in rows]
    assert est == sorted(est)


def test_config_precedence(tmp_path, capsys, monkeypatch):
    monkeypatch.delenv("CPFS_SEED", raising=False)
    cfg = tmp_path / "c.cfg"
    cfg.write_text("# comment\nlambda = 0.7\nfitness-vector = 1,2,1\ntrials = 100\n")
    _, out, _ = run(["path", "--config", str(cfg), "--lambda", "0.9"], capsys)
    c = config_of(out)
    assert c["lambda"] == 0.9 and c["fitness-vector"] == "1,2,1" and c["trials"] == 100
    assert c["seed"] == 0
    monkeypatch.setenv("CPFS_SEED", "42")
    _, out, _ = run(["path", "--config", str(cfg)], capsys)
    assert config_of(out)["seed"] == 42 and config_of(out)["lambda"] == 0.7
    _, out, _ = run(["path", "--config", str(cfg), "--seed", "5"], capsys)
    assert config_of(out)["seed"] == 5


@pytest.mark.parametrize("content,needle", [
    ("lambda = 1\nbogus = 2\n", "bogus"),
    ("lambda 1\n", ":1: malformed"),
])
def test_config_errors(tmp_path, capsys, content, needle):
    cfg = tmp_path / "c.cfg"
    cfg.write_text(content)
    code, _, err = run(["path", "--config", str(cfg)], capsys)
    assert code == 1 and needle in err


@pytest.mark.parametrize("args", [
    ["simulate", "--lambda", "-1", "--trials", "2"],
    ["simulate", "--trials", "0"],
    ["star", "--eps", "0.7", "--trials", "2"],
    ["simulate", "--nope", "1"],
    ["simulate", "--offspring", "weird:1"],
    ["verify", "--suite", "none"],
])
def test_invalid_exit_one(args, capsys):
    assert run(args, capsys)[0] == 1


def test_budget_exit_two(capsys):
    code, out, err = run(["gen-tree", "--max-vertices", "5", "--max-gen", "5"], capsys)
    assert code == 2 and "budget" in err and out == ""


def test_verify_exit_codes(capsys, monkeypatch):
    code, out, _ = run(["verify", "--suite", "exact", "--instances", "3"], capsys)
    assert code == 0 and len(out_io.read_rows(out)) == 15
    monkeypatch.setitem(cli.SUITES, "exact",
                        lambda seed, **kw: [CheckRow("x", "0", 1.0, 0.0, False)])
    code, out, _ = run(["verify", "--suite", "exact"], capsys)
    assert code == 3 and out_io.read_rows(out)[0]["pass"] == "0"


def test_jobs_do_not_change_output(tmp_path):
    outs = []
    for j in (1, 2):
        p = tmp_path / f"o{j}.csv"
        subprocess.run([sys.executable, "-m", "cpfs.cli", "simulate", "--trials", "2500",
                        "--lambda", "0.5", "--seed", "9", "--jobs", str(j), "--out", str(p)],
                       check=True)
        outs.append(p.read_bytes())
    assert outs[0] == outs[1]


def test_all_commands_smoke(capsys):
    small = {
        "depth-tail": ["--trials", "50", "--h", "1,2"],
        "star": ["--trials", "20", "--k", "16", "--f", "4", "--cap", "5"],
        "path": ["--trials", "200"],
        "relay": ["--trials", "20", "--cap", "5"],
        "ychain": ["--trials", "20", "--horizon", "1"],
        "percolation": ["--trials", "20"],
        "good-vertices": ["--trials", "20", "--max-gen", "3"],
    }
    for cmd, extra in small.items():
        code, out, err = run([cmd, *extra], capsys)
        assert code == 0, (cmd, err)
        assert out_io.read_rows(out), cmd
