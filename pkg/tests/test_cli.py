import csv
import json
import math
import subprocess
import sys

import pytest

from unsharp_lab.cli import emit_report, main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


def test_mermin_default(capsys):
    code, rep = run(capsys, "mermin")
    assert code == 0
    assert rep["results"]["satisfying_assignments"] == 0
    assert rep["results"]["parity_certificate"] == {"lhs_product": 1, "rhs_product": -1}
    assert rep["command"] == "mermin" and "version" in rep and "duration_s" in rep


def test_mermin_targets(capsys):
    code, rep = run(capsys, "mermin", "--targets", "1,1,1,1,1,1")
    assert code == 0 and rep["results"]["satisfying_assignments"] == 16


@pytest.mark.parametrize("bad", ["1,1,1", "1,1,1,1,1,2", "a,b"])
def test_mermin_bad_targets(bad):
    with pytest.raises(SystemExit) as exc:
        main(["mermin", "--targets", bad])
    assert exc.value.code == 2


def test_unsharp_published_example(capsys):
    code, rep = run(
        capsys, "unsharp", "--v", "-1,1,1,-1", "--w", "1,-1,-1", "--t", "0.887444e-4", "--epsilon", "1e-3"
    )
    assert code == 0
    res = rep["results"]
    assert res["delta"][1] == pytest.approx(0.23779e-4, rel=1e-4)
    assert res["delta"][3] == pytest.approx(-0.23779e-4, rel=1e-4)
    assert [w["code"] for w in res["warnings"]] == ["delta3_exponent_anomaly"]
    assert res["max_abs_residual"] <= 1e-14


def test_unsharp_trivial_rejected(capsys):
    code, rep = run(capsys, "unsharp", "--t", "0")
    assert code == 1
    assert "TrivialSolutionError" in rep["error"]


def test_unsharp_enumerate(capsys):
    code, rep = run(capsys, "unsharp", "--enumerate", "--epsilon", "1e-3", "--t", "1e-4")
    assert code == 0
    res = rep["results"]
    assert res["v_solved"] == 16
    for conv in ("literal", "identity-signed"):
        assert res["conventions"][conv]["w_solved"] == 8
        assert res["conventions"][conv]["pairs_solved"] == 128


def test_unsharp_trace_csv(capsys, tmp_path):
    path = tmp_path / "fam.csv"
    code, rep = run(capsys, "unsharp", "--v", "-1,1,1,-1", "--trace", str(path), "--t-range", "1e-5,1e-3")
    assert code == 0 and rep["results"]["trace"]["points"] == 21
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["t", "delta1", "delta2", "delta3", "delta4", "max_residual"]
    assert len(rows) == 22
    assert all(float(r[-1]) <= 1e-14 for r in rows[1:])


@pytest.mark.parametrize("argv", [["unsharp", "--v", "1,1"], ["unsharp", "--epsilon", "-1"], ["unsharp", "--branches", "plus"]])
def test_unsharp_bad_flags(argv):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 2


def test_unsharp_bound_violation_exit_1(capsys):
    code, _ = run(capsys, "unsharp", "--t", "5e-3", "--epsilon", "1e-3")
    assert code == 1


def test_chsh_epsilon(capsys):
    code, rep = run(capsys, "chsh", "--epsilon", "0.1")
    assert code == 0
    assert rep["results"]["unsharp_bound"] == pytest.approx(2.42, abs=1e-12)
    assert rep["results"]["sharp_bound"] == 2
    assert rep["results"]["epsilon_to_reach_tsirelson"] == pytest.approx(0.1892071, abs=1e-7)


def test_chsh_optimize(capsys):
    code, rep = run(capsys, "chsh", "--optimize", "--state", "singlet")
    assert code == 0
    assert rep["results"]["quantum_max"] == pytest.approx(2.8284271, abs=1e-6)


def test_chsh_bad_epsilon():
    with pytest.raises(SystemExit) as exc:
        main(["chsh", "--epsilon", "-1"])
    assert exc.value.code == 2


def test_sga_histogram(capsys, tmp_path):
    out = tmp_path / "h.csv"
    code, rep = run(capsys, "sga", "--model", "sharp", "--p-up", "0.5", "--n", "1000000", "--seed", "42", "--out", str(out))
    assert code == 0
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["bin_left", "bin_right", "count"]
    total = sum(int(r[2]) for r in rows[1:-2]) + int(rows[-2][1]) + int(rows[-1][1])
    assert total == 1_000_000
    assert rep["results"]["bin_total"] + rep["results"]["underflow"] + rep["results"]["overflow"] == 1_000_000
    assert abs(rep["results"]["p_plus_hat"] - 0.5) <= 3 * math.sqrt(0.25 / 1e6)


def test_sga_compare(capsys, tmp_path):
    code, rep = run(capsys, "sga", "--compare", "--n", "1000000", "--out", str(tmp_path / "cmp.csv"))
    assert code == 0
    assert rep["results"]["tv_distance"] < 0.01
    assert (tmp_path / "cmp_sharp.csv").exists() and (tmp_path / "cmp_unsharp.csv").exists()


def test_sga_unwritable(capsys, tmp_path):
    code, _ = run(capsys, "sga", "--n", "100", "--out", str(tmp_path / "missing" / "h.csv"))
    assert code == 1


@pytest.mark.parametrize("argv", [["sga", "--p-up", "2"], ["sga", "--bins", "1"], ["sga", "--n", "0"], ["sga", "--range", "1,0"], ["sga", "--seed", "-4"]])
def test_sga_bad_flags(argv):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 2


def test_verify_paper(capsys):
    code, rep = run(capsys, "verify-paper")
    res = rep["results"]
    assert code == 0
    assert res["mermin_satisfying"] == 0
    assert res["delta_ratio_21"] == pytest.approx(-0.26795, abs=1e-4)
    codes = {w["code"] for w in res["warnings"]}
    assert {"delta3_exponent_anomaly", "sixth_row_convention_mismatch"} <= codes
    assert all(c["passed"] for c in res["checks"])


def test_json_output_and_quiet(capsys, tmp_path):
    path = tmp_path / "r.json"
    code = main(["chsh", "--epsilon", "0.1", "--quiet", "--json", str(path)])
    assert code == 0
    assert capsys.readouterr().out == ""
    assert json.loads(path.read_text())["results"]["unsharp_bound"] == pytest.approx(2.42)


def test_json_unwritable(capsys, tmp_path):
    code = main(["mermin", "--quiet", "--json", str(tmp_path / "no" / "r.json")])
    assert code == 1


def test_deterministic_except_duration(capsys):
    reports = []
    for _ in range(2):
        _, rep = run(capsys, "sga", "--n", "20000", "--seed", "5")
        rep.pop("duration_s")
        reports.append(json.dumps(rep, sort_keys=True))
    assert reports[0] == reports[1]


def test_report_roundtrip(capsys):
    _, rep = run(capsys, "unsharp", "--t", "1e-4")
    text = emit_report(rep)
    assert json.loads(text) == rep
    assert json.loads(emit_report(json.loads(text))) == rep


def test_missing_command():
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "unsharp_lab", "mermin", "--quiet"], capture_output=True)
    assert proc.returncode == 0
