import io
import os
import shutil
import subprocess
import sys

import numpy as np
import pytest

from formulas import counted_formula, pigeonhole
from unigen.cli import main
from unigen.formula import emit_dimacs, evaluate, parse_witness, read_dimacs


@pytest.fixture
def cnf(tmp_path):
    f, s = counted_formula(10, 300, np.random.default_rng(0), extra=5)
    path = tmp_path / "f.cnf"
    path.write_text(emit_dimacs(f, s))
    return str(path)


def run(argv):
    out = io.StringIO()
    code = main(argv, out=out)
    return code, out.getvalue()


def test_sample_outputs_witnesses(cnf):
    code, text = run(["sample", cnf, "--epsilon", "6", "--samples", "20", "--seed", "1"])
    assert code == 0
    lines = text.splitlines()
    assert len(lines) == 20
    f, _ = read_dimacs(cnf)
    for line in lines:
        assert line == "FAIL" or evaluate(f, parse_witness(line))


def test_sample_is_seeded(cnf, monkeypatch):
    args = ["sample", cnf, "--epsilon", "6", "--samples", "5"]
    a = run(args + ["--seed", "3"])
    assert a == run(args + ["--seed", "3"])
    monkeypatch.setenv("UNIGEN_SEED", "3")
    assert run(args) == a
    # an explicit flag beats the environment
    monkeypatch.setenv("UNIGEN_SEED", "4")
    assert run(args + ["--seed", "3"]) == a


def test_sampling_set_override(tmp_path):
    path = tmp_path / "g.cnf"
    path.write_text("p cnf 3 1\n1 2 0\n")
    code, text = run(["sample", str(path), "--epsilon", "6", "--samples", "50", "--seed", "0",
                      "--sampling-set", "1,2"])
    assert code == 0
    seen = {tuple(int(t) for t in line.split()[:2]) for line in text.splitlines()}
    assert seen == {(1, 2), (1, -2), (-1, 2)}


def test_state_file_reused(cnf, tmp_path):
    state = tmp_path / "state.txt"
    args = ["sample", cnf, "--epsilon", "6", "--samples", "4", "--seed", "9", "--state", str(state)]
    first = run(args)
    assert state.read_text().startswith("unigen-presample 1\n")
    assert run(args) == first
    code, _ = run(["sample", cnf, "--epsilon", "7", "--state", str(state)])
    assert code == 3


def test_count(cnf):
    assert run(["count", cnf, "--exact"]) == (0, "300\n")
    code, text = run(["count", cnf, "--tolerance", "0.8", "--confidence", "0.8", "--seed", "1"])
    assert code == 0
    assert 300 / 1.8 <= int(text) <= 300 * 1.8


def test_evaluate_writes_report(cnf, tmp_path):
    out_dir = tmp_path / "rep"
    code, text = run(["evaluate", cnf, "--epsilon", "6", "--samples", "500", "--seed", "2",
                      "--out", str(out_dir)])
    assert code == 0
    assert "bounds_ok:" in text
    assert sorted(os.listdir(out_dir)) == [
        "ideal_fof.csv", "ideal_histogram.csv", "summary.txt", "unigen_fof.csv", "unigen_histogram.csv",
    ]


def test_exit_code_usage(cnf, tmp_path, capsys):
    with pytest.raises(SystemExit) as info:
        main(["sample", cnf])
    assert info.value.code == 1
    with pytest.raises(SystemExit) as info:
        main(["sample", cnf, "--epsilon", "6", "--sampling-set", "1,x"])
    assert info.value.code == 1
    assert run(["count", str(tmp_path / "missing.cnf"), "--exact"])[0] == 1
    bad = tmp_path / "bad.cnf"
    bad.write_text("p cnf 2 1\n1 5 0\n")
    assert run(["count", str(bad), "--exact"])[0] == 1
    assert "line 2" in capsys.readouterr().err


def test_exit_code_contract(cnf, monkeypatch):
    assert run(["sample", cnf, "--epsilon", "1.71"])[0] == 3
    monkeypatch.setenv("UNIGEN_SEED", "abc")
    assert run(["sample", cnf, "--epsilon", "6"])[0] == 3


def test_exit_code_timeout(tmp_path):
    path = tmp_path / "php.cnf"
    path.write_text(emit_dimacs(pigeonhole(9, 8)))
    assert run(["count", str(path), "--bsat-timeout", "1e-9", "--seed", "0"])[0] == 2
    assert run(["sample", str(path), "--epsilon", "6", "--bsat-timeout", "1e-9"])[0] == 2


@pytest.mark.skipif(shutil.which("unigen") is None, reason="console script not installed")
def test_console_script(cnf):
    res = subprocess.run(["unigen", "count", cnf, "--exact"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout == "300\n"


def test_module_entry_point(cnf):
    res = subprocess.run([sys.executable, "-m", "unigen.cli", "count", cnf, "--exact"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout == "300\n"
