import csv
import io
import json
import math

import pytest

from gsek import cli, report
from gsek.suites import SUITES, Check, compare


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_eval_constant_S(capsys):
    code, out, _ = run(capsys, "eval", "--dim", "2", "--quantity", "S", "--potential", "const:1", "--t", "0.5")
    doc = json.loads(out)
    assert code == 0
    assert doc["value"] == pytest.approx(0.5, abs=1e-9)
    assert doc["status"] == "pass"
    assert doc["seed"] == 0


def test_eval_flags_after_verb_or_before(capsys):
    a = run(capsys, "--dim", "1", "eval", "--quantity", "g", "--t", "1", "--x", "0", "--y", "0")
    b = run(capsys, "eval", "--quantity", "g", "--t", "1", "--x", "0", "--y", "0", "--dim", "1")
    assert a[0] == b[0] == 0
    assert json.loads(a[1])["value"] == json.loads(b[1])["value"]
    assert json.loads(a[1])["value"] == pytest.approx(1 / math.sqrt(4 * math.pi), rel=1e-12)


def test_eval_delta_inverse_sign(capsys):
    code, out, _ = run(capsys, "eval", "--dim", "3", "--quantity", "delta_inv", "--potential", "ball:1,1",
                       "--x", "0,0,0")
    assert code == 0
    assert json.loads(out)["value"] == pytest.approx(-0.5, abs=1e-8)


def test_twelve_significant_digits(capsys):
    code, out, _ = run(capsys, "--format", "csv", "eval", "--dim", "1", "--quantity", "g", "--t", "1",
                       "--x", "0", "--y", "0")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0
    assert rows[0]["value"] == f"{1 / math.sqrt(4 * math.pi):.12g}"


def test_parse_error_exit_64(capsys):
    code, _, err = run(capsys, "eval", "--dim", "1", "--quantity", "S", "--potential", "ball:1", "--t", "1")
    assert code == 64
    assert "position" in err


def test_bad_flag_exit_64(capsys):
    with pytest.raises(SystemExit) as info:
        cli.main(["eval", "--bogus"])
    assert info.value.code == 64


def test_domain_error_nonzero(capsys):
    code, _, err = run(capsys, "eval", "--dim", "2", "--quantity", "delta_inv", "--potential", "ball:1,1",
                       "--x", "0,0")
    assert code == 1
    assert "DivergenceError" in err


def _fake(status):
    def suite(ctx):
        lhs = 1.0 if status == "pass" else 2.0
        return [compare("fake/0", "lhs <= rhs", lhs, 1.0, 0.0, "le", status != "inconclusive", seed=ctx.seed)]
    return suite


@pytest.mark.parametrize("status,code", [("pass", 0), ("fail", 1), ("inconclusive", 2)])
def test_verify_exit_codes(capsys, monkeypatch, status, code):
    monkeypatch.setitem(SUITES, "fake", _fake(status))
    got, out, _ = run(capsys, "verify", "--suite", "fake")
    doc = json.loads(out)
    assert got == code
    assert doc["meta"]["status"] == status
    assert doc["checks"][0]["status"] == status


def test_verify_json_schema_and_csv(capsys, monkeypatch, tmp_path):
    monkeypatch.setitem(SUITES, "fake", _fake("pass"))
    path = tmp_path / "r.json"
    _, out, _ = run(capsys, "verify", "--suite", "fake", "--report", str(path))
    doc = json.loads(path.read_text())
    assert json.loads(out) == doc
    assert set(doc) == {"meta", "checks"}
    assert doc["meta"]["schema_version"] == report.SCHEMA_VERSION
    assert {"version", "seed", "config", "suites", "status"} <= set(doc["meta"])
    check = doc["checks"][0]
    assert {"suite", "id", "anchor", "status", "lhs", "rhs", "tolerance", "metadata"} <= set(check)
    _, out, _ = run(capsys, "--format", "csv", "verify", "--suite", "fake")
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0][:4] == ["suite", "id", "anchor", "status"]
    assert rows[1][:2] == ["fake", "fake/0"]


def test_seed_flag_overrides_environment(capsys, monkeypatch):
    monkeypatch.setitem(SUITES, "fake", _fake("pass"))
    monkeypatch.setenv("GSEK_SEED", "17")
    _, out, _ = run(capsys, "verify", "--suite", "fake")
    doc = json.loads(out)
    assert doc["meta"]["seed"] == 17
    assert doc["checks"][0]["metadata"]["seed"] == 17
    _, out, _ = run(capsys, "--seed", "3", "verify", "--suite", "fake")
    assert json.loads(out)["meta"]["seed"] == 3


def test_counterexample_small(capsys):
    code, out, _ = run(capsys, "counterexample-d3", "--n", "10")
    doc = json.loads(out)
    assert code == 0
    row = doc["rows"][0]
    assert row["n"] == 10 and row["L_ge_B"]
    assert row["B"] == pytest.approx(row["B_quadrature"], rel=1e-8)


def test_counterexample_bad_n(capsys):
    code, _, _ = run(capsys, "counterexample-d3", "--n", "10,x")
    assert code == 64


def test_compare_constant(capsys):
    code, out, _ = run(capsys, "compare", "--dim", "1", "--potential", "const:1", "--T", "1")
    doc = json.loads(out)
    assert code == 0
    vals = {k: v["value"] for k, v in doc["quantities"].items()}
    for k in ("S", "r_star", "e_star", "A"):
        assert vals[k] == pytest.approx(1.0, abs=1e-6)
    assert vals["N"] == pytest.approx(math.sqrt(4 * math.pi), abs=1e-6)
    assert doc["ratios"]["S/S"] == 1.0


def test_report_rounding_and_nonfinite():
    assert report.fmt(1 / 3) == "0.333333333333"
    assert report.rounded({"a": [math.inf, 0.1 + 0.2]}) == {"a": [None, 0.3]}
    assert report.overall_status(["pass", "inconclusive"]) == "inconclusive"
    assert report.overall_status(["pass", "fail", "inconclusive"]) == "fail"
    assert report.overall_status(["pass"]) == "pass"


def test_compare_relation_semantics():
    assert compare("a", "", 1.0, 1.0, 0.0, "le").status == "pass"
    assert compare("a", "", 1.1, 1.0, 0.05, "le").status == "fail"
    assert compare("a", "", 0.9, 1.0, 0.05, "ge").status == "fail"
    assert compare("a", "", 1.0, 1.0 + 1e-9, 1e-8, "eq").status == "pass"
    assert compare("a", "", 1.0, 1.0, 0.0, "eq", converged=False).status == "inconclusive"
    assert compare("a", "", math.nan, 1.0, 1.0, "le").status == "fail"
    assert isinstance(compare("a", "", 0, 0, 0), Check)
