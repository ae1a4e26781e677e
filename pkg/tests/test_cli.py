import json
import subprocess
import sys
from pathlib import Path

import pytest

from mdbell.cli import main, parse_grid

GOLDEN = Path(__file__).parent / "golden"


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_parse_grid():
    assert [str(v) for v in parse_grid("0:1:1/4")] == ["0", "1/4", "1/2", "3/4", "1"]
    assert [str(v) for v in parse_grid("0,829/1000,2")] == ["0", "829/1000", "2"]


def test_eval_json(capsys):
    code, out, _ = run(capsys, "eval", str(GOLDEN / "model_V.txt"), "--format", "json",
                       "--inequality", "svetlichny", "--scenario", "bipartite:AB")
    j = json.loads(out)
    assert j["schema_version"] == "1" and j["S"] == {"svetlichny": "6"}
    assert j["bound"]["bound"] == "6" and j["bound"]["verdict"] is True
    assert j["dependence"]["M12"] == "1"
    # the observed behaviour of this model signals, so eval reports a failed check
    assert j["no_signaling"]["no_signaling"] is False and code == 1


def test_eval_partial_model_passes(capsys):
    code, out, _ = run(capsys, "eval", str(GOLDEN / "model_IV.txt"), "--inequality", "mermin",
                       "--scenario", "bipartite:AB")
    assert code == 0 and "S[mermin] = 3" in out and "no-signaling: n/a" in out


def test_eval_bad_column_sum(capsys, tmp_path):
    lines = (GOLDEN / "model_IV.txt").read_text().splitlines()
    # row 2's rho(xy'z) entry 1/2 -> 1 makes that column sum to 3/2
    k = lines[2].index("rho(xy'z)")
    lines[4] = lines[4][:k] + "1  " + lines[4][k + 3:]
    p = tmp_path / "bad.txt"
    p.write_text("\n".join(lines) + "\n")
    code, _, err = run(capsys, "eval", str(p))
    assert code == 2 and "rho(xy'z) sums to 3/2" in err and f"{p}:3:{k + 1}:" in err


def test_bad_arguments(capsys):
    assert run(capsys, "eval", "/nonexistent/model.txt")[0] == 2
    assert run(capsys, "search", str(GOLDEN / "model_IV.txt"))[0] == 2
    code, _, err = run(capsys, "complete", str(GOLDEN / "model_I.txt"), "--budget", "M7=1")
    assert code == 2 and "budget" in err


def test_complete(capsys, tmp_path):
    w = tmp_path / "w.txt"
    code, out, _ = run(capsys, "complete", str(GOLDEN / "model_I.txt"), "--budget", "M1=1/2",
                       "--budget", "M2=1", "--witness", str(w))
    assert code == 0 and "feasible: True" in out and w.exists()
    j = json.loads(run(capsys, "eval", str(w), "--format", "json")[1])
    assert j["dependence"]["partial"] is False
    assert j["dependence"]["M1"] in ("0", "1/4", "1/2") and j["dependence"]["M2"] in ("0", "1/2", "1")


def test_search_model_IV(capsys):
    code, out, _ = run(capsys, "search", str(GOLDEN / "model_IV.txt"), "--inequality", "mermin",
                       "--scenario", "bipartite:AB", "--grid", "0,1,2", "--format", "json")
    j = json.loads(out)
    assert code == 0 and [c["lp_max_S"] for c in j["certificates"]] == ["2", "3", "4"]


def test_search_reports_violation(capsys):
    code, out, _ = run(capsys, "search", str(GOLDEN / "model_II.txt"), "--inequality", "svetlichny",
                       "--scenario", "one-sided:A", "--grid", "1/2", "--format", "csv")
    assert code == 1 and out.splitlines()[1].split(",")[1:4] == ["6", "5", "False"]


def test_bounds_exit_and_formats(capsys):
    code, out, _ = run(capsys, "bounds", "--inequality", "mermin", "--scenario", "bipartite:AB",
                       "--L", "1", "--grid", "0:2:1", "--format", "csv")
    assert code == 0 and out.splitlines() == ["budget,max_S,bound", "0,2,2", "1,2,3", "2,2,4"]
    code, out, _ = run(capsys, "bounds", "--inequality", "mermin", "--scenario", "bipartite:AB",
                       "--L", "1", "--grid", "0:2:1", "--format", "json")
    assert json.loads(out.splitlines()[0])["schema_version"] == "1"


def test_bounds_rejects_large_L(capsys):
    assert run(capsys, "bounds", "--inequality", "mermin", "--scenario", "one-sided:A", "--L", "4")[0] == 2


def test_quantum_single(capsys):
    code, out, _ = run(capsys, "quantum", "--inequality", "mermin", "--format", "json")
    j = json.loads(out)
    assert code == 0 and abs(j["results"][0]["S"] - 4) <= 1e-6 and set(j["results"][0]["settings"]) == {
        "A0", "A1", "B0", "B1", "C0", "C1"}


def test_tables_all_claims_pass(capsys):
    code, out, _ = run(capsys, "tables", "--grid", "0:1:1/8")
    assert code == 0, out.splitlines()[-1]


def test_output_is_deterministic(tmp_path):
    outs = []
    for k in range(2):
        p = tmp_path / f"o{k}.json"
        subprocess.run([sys.executable, "-m", "mdbell", "tables", "--grid", "0:1:1/4", "--format", "json",
                        "--out", str(p)], check=False)
        outs.append(p.read_bytes())
    assert outs[0] == outs[1] and outs[0]
