import csv
import json
import subprocess
import sys

import pytest

from radiality import kernels
from radiality.cli import main

from conftest import fixture_path


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_backend_flag(capsys):
    code, out, _ = run(capsys, "--backend")
    assert code == 0 and out.strip() == kernels.BACKEND


def test_sizes(capsys):
    code, out, _ = run(capsys, "sizes", "case33", "fig2")
    assert code == 0
    rows = [line.split() for line in out.splitlines()[2:]]
    assert ["case33", "scf0", "37", "37", "33"] in rows
    assert ["case33", "scf-st", "111", "37", "101"] in rows
    assert ["fig2", "st", "8", "0", "6"] in rows


def test_counterexample_fig1(capsys):
    code, out, _ = run(capsys, "counterexample", "fig1")
    assert code == 0
    assert "closed lines: 1 2 4 5 6" in out
    assert "sum a = 5 (|N| - |R| = 5)" in out
    assert "pseudo-root: buses [4, 5, 6], cycle lines [4, 5, 6]" in out


def test_counterexample_none(capsys):
    code, out, _ = run(capsys, "counterexample", "fig2")
    assert code == 0 and out.strip() == "none"


def test_verify_exit_codes(capsys, tmp_path):
    good = tmp_path / "good.json"
    good.write_text(json.dumps({"closed": [1, 2, 3, 4, 5]}))
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"closed": [1, 2, 4, 5, 6]}))
    code, out, _ = run(capsys, "verify", "fig1", str(good))
    assert code == 0 and out.strip().endswith("radial")
    code, out, _ = run(capsys, "verify", "fig1", str(bad))
    assert code == 1 and "pseudo-root" in out and "condition 1 (every bus reaches a root): violated" in out


def test_propagate(capsys):
    code, out, _ = run(capsys, "propagate", "fig2", "--fix", "1=1")
    assert code == 0
    assert "a_3=0" in out and "a_2 + a_4 = 1" in out
    assert "a_3∈[0,1]" in out and "a_2 + a_3 + a_4 = 1" in out


def test_propagate_bad_fix(capsys):
    with pytest.raises(SystemExit, match="bad --fix"):
        main(["propagate", "fig2", "--fix", "one"])


def test_solve_csv(capsys, tmp_path):
    out_csv = tmp_path / "s.csv"
    code, out, _ = run(capsys, "solve", "restore", "fig1_fault", "--constraints", "st", "--constraints", "scf0",
                       "--strategy", "enumerate", "--csv", str(out_csv))
    assert code == 0
    with open(out_csv) as fh:
        rows = list(csv.DictReader(fh))
    assert [r["constraints"] for r in rows] == ["st", "scf0"]
    assert all(float(r["objective"]) == 113.0 and r["proof"] == "exhaustive" for r in rows)
    assert rows[0]["closed_lines"] == "1 3 4 5" and rows[0]["radial"] == "yes"
    assert "closed_lines" not in out.splitlines()[0]


def test_solve_reconfig_node_cap(capsys):
    code, out, _ = run(capsys, "solve", "reconfig", "case33", "--constraints", "scf-st", "--max-nodes", "20",
                       "--no-limits")
    assert code == 0 and "node-capped" in out


def test_solver_error_exit_code(capsys):
    code, _, err = run(capsys, "solve", "reconfig", "fig1_fault")
    assert code == 3 and "use restore" in err


def test_missing_file_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["verify", "nope.json", "also-nope.json"])
    assert exc.value.code == 2


def test_unknown_constraint_set(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["solve", "reconfig", "fig2", "--constraints", "mtz"])
    assert exc.value.code == 2


def test_no_command(capsys):
    code, out, _ = run(capsys)
    assert code == 2 and out.startswith("usage")


def test_scenarios_files_are_reproducible(capsys, tmp_path):
    paths = []
    for k in range(2):
        out_csv = tmp_path / f"s{k}.csv"
        code, out, _ = run(capsys, "scenarios", "case33", "--count", "3", "--seed", "4", "--max-nodes", "100",
                           "--csv", str(out_csv), "--out", str(tmp_path / f"nets{k}"))
        assert code == 0 and "scf0: radial 3/3" in out
        paths.append(out_csv)
    assert paths[0].read_bytes() == paths[1].read_bytes()
    nets = sorted(p.name for p in (tmp_path / "nets0").iterdir())
    assert nets == ["case33_s000.json", "case33_s001.json", "case33_s002.json"]
    assert (tmp_path / "nets0" / nets[1]).read_bytes() == (tmp_path / "nets1" / nets[1]).read_bytes()


def test_scenarios_zero_count(capsys):
    code, out, _ = run(capsys, "scenarios", "case33", "--count", "0")
    assert code == 0 and "scenarios: 0" in out


@pytest.mark.parametrize("fmt", ["lp", "mps"])
def test_export(capsys, tmp_path, fmt):
    path = tmp_path / f"m.{fmt}"
    code, out, _ = run(capsys, "export", str(fixture_path("fig2")), "--constraints", "scf0", "--format", fmt,
                       "--output", str(path), "--radiality-only")
    assert code == 0 and path.exists() and "8 columns" in out


def test_console_script_entry_point():
    res = subprocess.run([sys.executable, "-m", "radiality.cli", "sizes", "fig1"], capture_output=True, text=True)
    assert res.returncode == 0 and "fig1" in res.stdout
