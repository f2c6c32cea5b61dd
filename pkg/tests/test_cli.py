import json
import subprocess
import sys
from fractions import Fraction as F

import pytest

from spillnash.cli import OUTPUT_DIR_ENV, run
from spillnash.instances import fig1_network
from spillnash.network import emit_network


def call(capsys, *argv):
    code = run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_simulate_unit_family(capsys):
    code, out, _ = call(capsys, "simulate", "--builtin", "unit_family", "--param", "k=4", "--amount", "6", "--mode", "spillback")
    assert code == 0
    assert json.loads(out)["completion"] == "6"


def test_poa_fig1_matches_closed_form(capsys):
    code, out, _ = call(capsys, "poa", "--builtin", "fig1", "--param", "eps=1/10", "--amount", "2", "--decimal", "3")
    doc = json.loads(out)
    assert code == 0
    assert doc["opt_completion"] == "13/5"
    assert F(doc["computed_equilibrium_completion"]) >= 20
    assert doc["ratio_decimal"] == f"{float(F(doc['ratio'])):.3f}"


def test_verify_round_trip_of_a_trace(tmp_path, capsys):
    path = tmp_path / "trace.json"
    assert run(["simulate", "--builtin", "fig1", "--output", str(path)]) == 0
    code, out, _ = call(capsys, "verify", "--instance", str(path))
    doc = json.loads(out)
    assert code == 0 and doc["feasible"] == [] and doc["nash"] == []


def test_verify_lemmas_and_precondition(capsys):
    code, out, _ = call(capsys, "verify", "--builtin", "fig1", "--lemma", "L2", "--lemma", "L5")
    doc = json.loads(out)
    assert code == 0
    assert doc["lemmas"]["L2"]["verdict"] == "pass"
    assert doc["lemmas"]["L5"]["verdict"] == "precondition-not-met"


def test_instance_file_source(tmp_path, capsys):
    path = tmp_path / "net.json"
    path.write_text(emit_network(fig1_network(F(1, 2)), F(2)))
    code, out, _ = call(capsys, "quickest", "--instance", str(path))
    assert code == 0 and json.loads(out)["horizon"] == "7/3"


def test_sweep_csv(capsys):
    code, out, _ = call(capsys, "sweep", "--builtin", "fig1", "--amounts", "1,2,4", "--format", "csv")
    assert code == 0
    assert out.splitlines() == ["M,EQ,OPT,ratio", "1,2,2,1", "2,4,7/3,12/7", "4,8,3,8/3"]


def test_braess_and_compare(capsys):
    code, out, _ = call(capsys, "braess", "--builtin", "fig1", "--param", "eps=1/10")
    assert code == 0 and json.loads(out)["witness_removed_edges"] == [1]
    code, out, _ = call(capsys, "compare", "--builtin", "fig1")
    assert code == 0 and set(json.loads(out)) >= {"spillback", "koch-skutella"}


def test_instances_listing(capsys):
    code, out, _ = call(capsys, "instances")
    assert code == 0 and "fig2" in json.loads(out)["builtins"]


@pytest.mark.parametrize("argv", [[], ["bogus"], ["simulate"], ["simulate", "--builtin", "fig1", "--param", "eps"],
                                  ["sweep", "--builtin", "fig1"], ["verify", "--builtin", "fig1", "--lemma", "L99"]])
def test_usage_errors_exit_one(argv, capsys):
    assert run(argv) == 1


def test_validation_error_exits_two(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{"vertices": ["s", "t"], "source": "s", "sink": "t", "inflow_rate": 1, "edges": []}')
    code, _, err = call(capsys, "simulate", "--instance", str(path), "--amount", "1")
    assert code == 2 and "sink unreachable" in err


def test_phase_budget_exits_three(capsys):
    code, _, err = call(capsys, "simulate", "--builtin", "fig1", "--max-phases", "1")
    assert code == 3 and "phase budget" in err


def test_output_dir_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(OUTPUT_DIR_ENV, str(tmp_path))
    assert run(["poa", "--builtin", "unit_family", "--output", "poa.json"]) == 0
    assert json.loads((tmp_path / "poa.json").read_text())["ratio"] == "2"


def test_output_is_byte_stable(capsys):
    first = call(capsys, "simulate", "--builtin", "fig1")[1]
    second = call(capsys, "simulate", "--builtin", "fig1")[1]
    assert first == second


def test_console_entry_point_runs():
    proc = subprocess.run([sys.executable, "-m", "spillnash.cli", "instances"], capture_output=True, text=True)
    assert proc.returncode == 0 and "builtin-list" in proc.stdout
