import json
import subprocess
import sys

import pytest

from bvmaster.cli_io import ResultBundle, load_model, main, parse_model, parse_polynomial, run_solve
from bvmaster.errors import ParseError
from bvmaster.laurent import Laurent
from bvmaster.super_algebra import render

from conftest import FIXTURES, MODELS, a_table


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_parse_polynomial():
    t = a_table()
    assert render(parse_polynomial("x^3/3 - 2*x*eta + (x + 1)**2", t)) == "1 + 2*x + x^2 - 2*x*eta + 1/3*x^3"
    assert parse_polynomial("3/6 · x", t) == t.var("x") / 2
    assert parse_polynomial("-x", t) == -t.var("x")


@pytest.mark.parametrize("text,col", [("x + q", 5), ("x^", 3), ("(x + 1", 7), ("x/x", 3), ("x $ 1", 3), ("1/0", 3)])
def test_parse_polynomial_errors(text, col):
    with pytest.raises(ParseError) as err:
        parse_polynomial(text, a_table(), line=4, column=1)
    assert err.value.line == 4
    assert err.value.column == col


def test_model_file_errors():
    with pytest.raises(ParseError) as err:
        parse_model('name = "a"\nclass = "isolated"\naction = "x^3 + y"\n'
                    '[[variables]]\nname = "x"\nghost = 0\npartner = "e"\n'
                    '[[variables]]\nname = "e"\nghost = -1\npartner = "x"\n')
    assert err.value.line == 3 and err.value.column == 17
    with pytest.raises(ParseError) as err:
        parse_model("name = \n")
    assert err.value.line == 1
    with pytest.raises(ParseError):
        parse_model('action = "x"\n')
    with pytest.raises(ParseError):
        load_model(MODELS / "missing.toml")


def test_bundle_round_trip():
    mf = load_model(MODELS / "a2.toml")
    _, _, bundle = run_solve(mf, order=4, arity=4)
    text = bundle.dumps()
    back = ResultBundle.loads(text)
    assert back.dumps() == text
    assert back.correlators[4][(1, 1, 1, 1)] == Laurent({1: 2})
    assert back.passed()


def test_solve_deterministic(capsys, monkeypatch):
    path = str(MODELS / "two_variable.toml")
    _, one, _ = run(["solve", path, "--threads", "1"], capsys)
    monkeypatch.setenv("BVMASTER_THREADS", "4")
    code, four, _ = run(["solve", path], capsys)
    assert code == 0 and one == four
    json.loads(one)


def test_bad_thread_env(capsys, monkeypatch):
    monkeypatch.setenv("BVMASTER_THREADS", "many")
    code, _, err = run(["solve", str(MODELS / "a2.toml")], capsys)
    assert code == 1 and "BVMASTER_THREADS" in err


def test_ring(capsys):
    code, out, _ = run(["ring", str(MODELS / "a3.toml")], capsys)
    assert code == 0
    assert [b["name"] for b in json.loads(out)["h_basis"]] == ["1", "x", "x^2"]


def test_correlators_with_oracle(capsys):
    code, out, _ = run(["correlators", str(MODELS / "a2.toml"), "--oracle", "--order", "4", "--arity", "4"], capsys)
    obj = json.loads(out)
    assert code == 0
    assert obj["extra"]["oracle_checked"] > 0
    assert obj["verification"]["passed"]


def test_exit_codes(capsys, tmp_path):
    code, _, _ = run(["verify", str(MODELS / "a3.toml")], capsys)
    assert code == 0
    code, _, _ = run(["solve", str(tmp_path / "nope.toml")], capsys)
    assert code == 1
    bad = tmp_path / "bad.toml"
    bad.write_text((MODELS / "a2.toml").read_text().replace('"x^3/3"', '"x^2*eta"'))
    code, _, err = run(["solve", str(bad)], capsys)
    assert code == 2 and "ModelInvalid" in err
    code, out, _ = run(["verify", str(FIXTURES / "a2_corrupt_lambda.toml")], capsys)
    assert code == 3
    assert json.loads(out)["failed_identity"] == "hbar-divisibility"
    obj = json.loads((FIXTURES / "kappa2_regression.json").read_text())
    obj["expected"]["kappa"][1][1][0] = "5"
    wrong = tmp_path / "wrong.json"
    wrong.write_text(json.dumps(obj))
    code, _, err = run(["obstruction", str(wrong)], capsys)
    assert code == 4 and "OracleMismatch" in err


def test_usage_error(capsys):
    with pytest.raises(SystemExit) as err:
        main(["frobnicate"])
    assert err.value.code == 1


def test_obstruction_regression(capsys):
    code, out, _ = run(["obstruction", str(FIXTURES / "kappa2_regression.json")], capsys)
    rep = json.loads(out)
    assert code == 0 and rep["regression"] == "match"
    code, out, _ = run(["obstruction", str(FIXTURES / "two_dim.json"), "--order", "3"], capsys)
    assert len(json.loads(out)["kappa"]) == 3


def test_out_file(capsys, tmp_path):
    target = tmp_path / "ring.json"
    code, out, _ = run(["ring", str(MODELS / "a2.toml"), "--out", str(target)], capsys)
    assert code == 0 and out == ""
    assert json.loads(target.read_text())["h_basis"]


def test_console_module():
    proc = subprocess.run([sys.executable, "-m", "bvmaster.cli_io", "ring", str(MODELS / "a2.toml")],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "h_basis" in proc.stdout
