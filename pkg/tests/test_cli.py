import json

import pytest

from cramer import cli


def run(argv, capsys):
    code = cli.run(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_moments(capsys):
    code, out, _ = run(["moments", "--model", "cramer", "--n", "1000"], capsys)
    data = json.loads(out)
    assert code == 0
    assert set(data["result"]) == {"n", "m_n", "B_n"}
    assert data["config"]["n"] == 1000 and data["config"]["command"] == "moments"


def test_eigen(capsys):
    code, out, _ = run(["eigen", "--z", "1"], capsys)
    assert code == 0 and abs(json.loads(out)["result"]["lambda"] - 2) < 1e-6


def test_usage_errors(capsys):
    code, _, err = run(["moments", "--bogus", "1"], capsys)
    assert code == 2 and "usage" in err
    code, _, err = run(["nonsense"], capsys)
    assert code == 2
    code, _, err = run(["moments", "--n", "2"], capsys)
    assert code == 2 and "error" in err


def test_config_file_and_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\nmodel = fair_coin\nn = 40\n")
    code, out, _ = run(["moments", "--config", str(cfg), "--n", "10"], capsys)
    data = json.loads(out)
    assert data["config"]["model"] == "fair_coin" and data["result"]["m_n"] == 5.0
    cfg.write_text("color = blue\n")
    assert run(["moments", "--config", str(cfg)], capsys)[0] == 2


def test_csv_and_output_file(tmp_path, capsys):
    path = tmp_path / "law.csv"
    assert run(["exact-law", "--model", "fair_coin", "--n", "2", "--format", "csv", "--output", str(path)],
               capsys)[0] == 0
    assert path.read_text() == "k,probability\n0,0.25\n1,0.5\n2,0.25\n"
    assert run(["theta", "--format", "csv"], capsys)[0] == 2


def test_identical_output(capsys):
    argv = ["prime-prob", "--n", "500", "--replicas", "2000", "--seed", "5"]
    _, a, _ = run(argv, capsys)
    _, b, _ = run(argv + ["--workers", "3"], capsys)
    strip = lambda s: json.loads(s)["result"]
    from cramer.harness import _strip_elapsed

    assert _strip_elapsed(strip(a)) == _strip_elapsed(strip(b))


def test_verdict_exit_code(capsys):
    # zeta = 5 at n = 10^4 falls below the bracket: a verdict failure, not an error
    code, out, _ = run(["quasiprime", "--n", "10000", "--zeta", "5", "--replicas", "500"], capsys)
    assert code == 1 and json.loads(out)["result"]["verdict"] == "fail"


@pytest.mark.parametrize("argv", [
    ["simulate", "--n", "200"], ["charfunc", "--t", "0.25"], ["divisibility", "--d", "5", "--n", "100"],
    ["delta-law", "--k", "5"], ["gaps", "--n", "20000"], ["lil-subseq", "--n", "20000"],
    ["ou-survival", "--T", "2", "--replicas", "500"], ["llt", "--n", "500"],
])
def test_subcommands_run(argv, capsys):
    assert run(argv, capsys)[0] == 0


def test_suite_subset(tmp_path, capsys):
    code, out, err = run(["suite", "--criteria", "1,6", "--output", str(tmp_path / "rep")], capsys)
    assert code == 0
    assert "criterion  1 PASS" in err and "criterion  6 PASS" in err
    assert (tmp_path / "rep" / "criterion_01.json").exists()
    assert json.loads((tmp_path / "rep" / "criterion_06.json").read_text())["verdict"] == "pass"
