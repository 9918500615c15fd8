import csv
import json
import subprocess
import sys

import pytest

from benders_qubo.cli import main
from benders_qubo.instance import MiqpInstance, generate, read_instance, validate, write_instance
from benders_qubo.oracle import solve_direct


def parse_output(text):
    return dict(line.split(": ", 1) for line in text.strip().splitlines() if ": " in line)


@pytest.fixture
def instance_file(tmp_path):
    path = tmp_path / "inst.json"
    assert main(["generate", "--n", "5", "--p", "5", "--m", "5", "--seed", "42", "--out", str(path)]) == 0
    return path


def test_generate_writes_valid_instance(instance_file, tmp_path):
    inst = read_instance(instance_file)
    assert (inst.n, inst.p, inst.m) == (5, 5, 5)
    assert validate(inst) == []
    again = tmp_path / "again.json"
    main(["generate", "--n", "5", "--p", "5", "--m", "5", "--seed", "42", "--out", str(again)])
    assert again.read_bytes() == instance_file.read_bytes()


def test_generate_rejects_zero_size(tmp_path, capsys):
    assert main(["generate", "--n", "0", "--p", "5", "--m", "5", "--out", str(tmp_path / "x.json")]) == 2
    assert "--n" in capsys.readouterr().err


def test_generate_unwritable_target(tmp_path):
    out = tmp_path / "missing" / "x.json"
    assert main(["generate", "--n", "2", "--p", "2", "--m", "2", "--out", str(out)]) == 3


def test_solve_exact_matches_oracle(instance_file, capsys):
    assert main(["solve", "--instance", str(instance_file), "--master", "exact"]) == 0
    out = parse_output(capsys.readouterr().out)
    assert out["status"] == "Converged"
    oracle = solve_direct(read_instance(instance_file)).objective
    assert abs(float(out["objective"]) - oracle) <= 0.5 + 1e-6
    assert int(out["iterations"]) >= 1


def test_solve_iteration_limit(tmp_path, capsys):
    for seed in range(50):
        path = tmp_path / f"i{seed}.json"
        write_instance(generate(5, 5, 5, seed), path)
        main(["solve", "--instance", str(path)])
        if int(parse_output(capsys.readouterr().out)["iterations"]) > 1:
            break
    assert main(["solve", "--instance", str(path), "--max-iters", "1"]) == 4
    assert parse_output(capsys.readouterr().out)["status"] == "IterationLimit"


def test_solve_sa_trace_is_reproducible(instance_file, tmp_path):
    traces = []
    for k in range(2):
        trace = tmp_path / f"trace{k}.csv"
        code = main(["solve", "--instance", str(instance_file), "--master", "sa", "--seed", "7",
                     "--reads", "50", "--sweeps", "200", "--trace", str(trace)])
        assert code in (0, 4, 6)
        with open(trace, newline="") as fh:
            rows = list(csv.DictReader(fh))
        for r in rows:
            del r["master_ms"], r["sub_ms"]
        traces.append(rows)
    assert traces[0] == traces[1]
    assert traces[0]


def test_solve_infeasible_instance(tmp_path, capsys):
    path = tmp_path / "bad.json"
    write_instance(MiqpInstance(1, 1, 1, [[1.0]], [1.0], [[0.0]], [[-1.0]], [1.0]), path)
    assert main(["solve", "--instance", str(path)]) == 5
    assert parse_output(capsys.readouterr().out)["status"] == "MasterInfeasible"
    assert main(["oracle", "--instance", str(path)]) == 5


def test_missing_instance_file(tmp_path, capsys):
    assert main(["solve", "--instance", str(tmp_path / "nope.json")]) == 3
    assert "cannot read" in capsys.readouterr().err


def test_malformed_instance_file(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text(json.dumps({"n": 1}))
    assert main(["oracle", "--instance", str(path)]) == 3


def test_oracle_command(instance_file, capsys):
    assert main(["oracle", "--instance", str(instance_file)]) == 0
    out = parse_output(capsys.readouterr().out)
    sol = solve_direct(read_instance(instance_file))
    assert float(out["objective"]) == sol.objective
    assert [int(v) for v in out["x"].split()] == list(sol.x)


def test_bench_exact(tmp_path, capsys):
    out, report = tmp_path / "res.csv", tmp_path / "rep.csv"
    code = main(["bench", "--sizes", "5", "--trials", "3", "--master", "exact",
                 "--out", str(out), "--report", str(report), "--trace-dir", str(tmp_path / "tr")])
    assert code == 0
    with open(out, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 3
    assert all(r["converged"] == "true" and r["backend"] == "exact" for r in rows)
    with open(report, newline="") as fh:
        rep = list(csv.DictReader(fh))
    assert rep[0]["size"] == "5" and float(rep[0]["success_rate"]) == 1.0
    assert len(list((tmp_path / "tr").iterdir())) == 3
    assert "success_rate" in capsys.readouterr().out


def test_bench_rejects_empty_sizes(tmp_path):
    assert main(["bench", "--sizes", "", "--out", str(tmp_path / "r.csv")]) == 2


def test_unknown_command():
    assert main(["frobnicate"]) == 2


def test_module_entry_point(instance_file):
    proc = subprocess.run([sys.executable, "-m", "benders_qubo", "oracle", "--instance", str(instance_file)],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert proc.stdout.startswith("objective: ")
