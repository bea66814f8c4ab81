import json

import pytest

from nitschefem import cli, verify


def run(args):
    return cli.main(args)


def test_convergence_single_level(tmp_path):
    out = tmp_path / "conv"
    code = run(["convergence", "--levels", "1", "--n0", "8",
                "--out", str(out)])
    assert code == cli.EXIT_OK
    lines = (out / "convergence_nitsche.csv").read_text().splitlines()
    rows = [l for l in lines if not l.startswith("#")]
    assert len(rows) == 2  # header + one level
    assert rows[1].split(",")[4] == ""  # no rate with a single level
    assert (out / "comparison.csv").exists()
    assert json.loads((out / "manifest.json").read_text())["config"]["levels"] == 1


def test_convergence_reproducible(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert run(["convergence", "--levels", "2", "--n0", "5",
                    "--out", str(out)]) == cli.EXIT_OK
    assert (a / "convergence_nitsche.csv").read_bytes() == \
        (b / "convergence_nitsche.csv").read_bytes()


def test_penalty_sweep_single_gamma(tmp_path):
    out = tmp_path / "sweep"
    code = run(["penalty-sweep", "--n", "10", "--gammas", "0",
                "--out", str(out)])
    assert code == cli.EXIT_OK
    lines = (out / "penalty_sweep.csv").read_text().splitlines()
    assert len(lines) == 2
    manifest = json.loads((out / "manifest.json").read_text())
    assert "l2_max_min_ratio" not in manifest


def test_outflow_writes_field_and_report(tmp_path):
    out = tmp_path / "flow"
    code = run(["outflow", "--n", "10", "--eps", "0.1", "--out", str(out)])
    assert code == cli.EXIT_OK
    vtks = list(out.glob("*.vtk"))
    assert len(vtks) == 1
    report = json.loads(next(out.glob("outflow_*.json")).read_text())
    assert {"oscillation", "max", "min"} <= set(report)


def test_infsup_over_cap_refused(tmp_path):
    out = tmp_path / "infsup"
    code = run(["infsup", "--n", "64", "--out", str(out)])
    assert code == cli.EXIT_CONFIG


def test_infsup_empty_list(tmp_path):
    out = tmp_path / "infsup0"
    code = run(["infsup", "--n", "--out", str(out)])
    assert code == cli.EXIT_OK
    assert (out / "infsup.csv").read_text().splitlines() == ["n,h,c_s"]


def test_infsup_sym_compare_column(tmp_path):
    out = tmp_path / "infsup2"
    code = run(["infsup", "--n", "8", "--sym-compare", "--out", str(out)])
    assert code == cli.EXIT_OK
    lines = (out / "infsup.csv").read_text().splitlines()
    assert lines[0] == "n,h,c_s,c_s_sym"
    assert len(lines[1].split(",")) == 4


def test_config_error_exit_code(tmp_path):
    code = run(["convergence", "--levels", "2", "--n0", "5",
                "--gamma", "-1", "--out", str(tmp_path / "x")])
    assert code == cli.EXIT_CONFIG


def test_bad_beta_rejected():
    with pytest.raises(SystemExit):
        cli.build_parser().parse_args(["outflow", "--beta", "1;2"])


def test_verify_ok(tmp_path, capsys):
    out = tmp_path / "verify"
    code = run(["verify", "--n", "10", "--out", str(out)])
    assert code == cli.EXIT_OK
    printed = capsys.readouterr().out
    assert "PASS" in printed
    report = json.loads((out / "verify.json").read_text())
    assert all(entry["status"] in ("PASS", "SKIP") for entry in report)


def test_verify_failure_exit_code(tmp_path, monkeypatch):
    bad = [verify.CheckResult("forced", verify.FAIL, 1.0, "seeded failure")]
    monkeypatch.setattr(verify, "run_verification",
                        lambda *a, **kw: bad)
    code = run(["verify", "--n", "10", "--out", str(tmp_path / "v")])
    assert code == cli.EXIT_CHECK
