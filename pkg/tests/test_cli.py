import csv
import json

import pytest

from dendrifliess import cli


def run(capsys, *argv):
    code = cli.run(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_trees_enum(capsys):
    code, out, _ = run(capsys, "trees", "enum", "--order", "3")
    assert code == 0
    assert len(out.strip().splitlines()) == 5


def test_trees_enum_json_decorated(capsys):
    code, out, _ = run(capsys, "--json", "trees", "enum", "--order", "2",
                       "--decorate", "x1x2")
    assert code == 0
    payload = json.loads(out)
    assert payload["count"] == 2
    assert payload["trees"][0] == {"l": None, "x": 1,
                                   "r": {"l": None, "x": 2, "r": None}}


def test_deterministic_output(capsys):
    a = run(capsys, "algebra", "char", "--order", "3")
    b = run(capsys, "algebra", "char", "--order", "3")
    assert a == b and a[0] == 0


def test_algebra_shuffle(capsys):
    code, out, _ = run(capsys, "algebra", "shuffle", "(x1<x2)", "x3")
    assert code == 0
    assert out.strip() == "(x1<(x2<x3)) + (x1<(x2>x3)) + ((x1<x2)>x3)"


def test_algebra_prelie(capsys):
    code, out, _ = run(capsys, "algebra", "prelie", "x1", "x2")
    assert code == 0
    assert out.strip() == "(x1<x2) - (x1>x2)"


def test_bad_expression_exit_code(capsys):
    code, _, err = run(capsys, "algebra", "shuffle", "x1", "][")
    assert code == 1
    assert err.startswith("error:")


def test_json_errors_on_stderr(capsys):
    code, _, err = run(capsys, "--json", "algebra", "shuffle", "x1", "][")
    assert code == 1
    assert "error" in json.loads(err)


def test_usage_error_exit_code(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.run(["trees", "enum"])  # missing --order
    assert exc.value.code == 2
    capsys.readouterr()


def test_eval_tree_to_csv(capsys, tmp_path):
    out_path = str(tmp_path / "result.csv")
    code, _, _ = run(capsys, "eval", "tree", "--expr", "(x1<x1)",
                     "--signal", "const:0,1;-1,0", "--grid", "64",
                     "--horizon", "0.5", "--out", out_path)
    assert code == 0
    with open(out_path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "e11", "e12", "e21", "e22"]
    assert len(rows) == 66
    # (x1<x1) on a constant channel is (tA)^2/2; entry (1,1) at T=0.5 is -1/8
    assert abs(float(rows[-1][1]) + 0.125) < 1e-9


def test_fliess_dyson(capsys):
    code, out, _ = run(capsys, "--json", "fliess", "eval",
                       "--series", "dyson:4", "--signal", "const:0.5",
                       "--order", "4", "--grid", "128", "--horizon", "1.0")
    assert code == 0
    payload = json.loads(out)
    # truncated exponential of 0.5
    want = sum(0.5 ** n / [1, 1, 2, 6, 24][n] for n in range(5))
    assert abs(payload["values"][-1][0][0] - want) < 1e-5


def test_fliess_series_file(capsys, tmp_path):
    path = tmp_path / "series.json"
    path.write_text(json.dumps(
        [{"coeff": "2", "tree": {"l": None, "x": 1, "r": None}}]))
    code, out, _ = run(capsys, "--json", "fliess", "eval",
                       "--series", str(path), "--signal", "const:1.0",
                       "--order", "2", "--grid", "32", "--horizon", "1.0",
                       "--certificate")
    assert code == 0


def test_magnus_json(capsys):
    code, out, _ = run(capsys, "--json", "magnus", "--signal", "spin:0.5,rot",
                       "--order", "2", "--grid", "128", "--compare-rk4")
    assert code == 0
    payload = json.loads(out)
    assert payload["orientation"] == "standard"
    assert payload["deviation"] < 1e-1


def test_verify_catalan(capsys):
    code, out, _ = run(capsys, "verify", "catalan")
    assert code == 0
    assert "catalan: ok" in out


def test_verify_json_shape(capsys):
    code, out, _ = run(capsys, "--json", "verify", "axioms", "--seed", "1")
    assert code == 0
    payload = json.loads(out)
    assert payload["results"]["axioms"] == []


def test_unknown_signal_spec(capsys):
    code, _, err = run(capsys, "eval", "tree", "--expr", "x1",
                       "--signal", "wave:1")
    assert code == 1
    assert "signal spec" in err
