import json

import pytest

from solitonglue import cli


def run(tmp_path, *args):
    return cli.main(list(args) + ["--out", str(tmp_path)])


def test_series_outputs_and_report(tmp_path):
    assert run(tmp_path, "series", "--n", "3", "--k", "1") == 0
    rows = (tmp_path / "laurent.csv").read_text(encoding="utf-8").splitlines()
    assert rows[0] == "degree,numerator,denominator,exact,truncation_order"
    assert any(r.startswith("-5,") for r in rows)
    assert all(r.split(",")[1] == "0" for r in rows[1:] if int(r.split(",")[0]) % 2 == 0)
    rep = json.loads((tmp_path / "series.json").read_text())
    assert rep["config"]["parameters"]["n"] == 3
    assert rep["config"]["seed"] == 0
    assert rep["report"]["laurent"]["residual_order"] == -5


def test_reports_are_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert cli.main(["glue", "--R", "20", "--seed", "4", "--out", str(d)]) == 0
    assert (a / "glue.json").read_bytes() == (b / "glue.json").read_bytes()
    assert (a / "glued.obj").read_bytes() == (b / "glued.obj").read_bytes()


def test_overrides_win_over_the_config_file(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# sweep point\nn = 4\nk = 2\nseed = 9\n", encoding="utf-8")
    out = tmp_path / "o"
    assert cli.main(["series", "--config", str(cfg), "--n", "2", "--out", str(out)]) == 0
    p = json.loads((out / "series.json").read_text())["config"]
    assert p["parameters"]["n"] == 2 and p["parameters"]["k"] == 2 and p["seed"] == 9


def test_inadmissible_parameters_give_a_machine_readable_error(tmp_path, capsys):
    assert run(tmp_path, "glue", "--R", "20", "--epsilon", "1e-3") == 2
    err = json.loads(capsys.readouterr().out)
    assert err["error"] == "invalid parameters"
    assert any("1/Delta" in v for v in err["violations"])


def test_bad_tolerance_and_unknown_keys_are_rejected(tmp_path, capsys):
    assert run(tmp_path, "series", "--tol", "-1") == 2
    assert "tol must be positive" in capsys.readouterr().out
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("bogus = 1\n", encoding="utf-8")
    assert run(tmp_path, "series", "--config", str(cfg)) == 2


def test_jacobi_reports_the_plateau(tmp_path):
    assert run(tmp_path, "jacobi", "--h", "0.05", "--m-max", "1") == 0
    rep = json.loads((tmp_path / "jacobi.json").read_text())["report"]
    assert rep["plateau"] == -0.25
    assert abs(rep["potential_at_outer_end"] + 0.25) < 0.01
    assert (tmp_path / "potential.csv").read_text().startswith("rho,r,potential")


def test_profile_reports_slopes_with_widths(tmp_path):
    assert run(tmp_path, "profile", "--n-r", "60") == 0
    rep = json.loads((tmp_path / "profile.json").read_text())["report"]
    for n, fit in rep["large_scale"].items():
        assert abs(fit["slope"] - fit["expected"]) <= 0.15
        assert fit["width"] > 0


def test_greens_reports_a_sweep(tmp_path):
    assert run(tmp_path, "greens", "--R-sweep", "10", "--m-max", "0", "--samples", "1") == 0
    rep = json.loads((tmp_path / "greens.json").read_text())["report"]
    assert rep["sweep"][0]["BA"] < 1
    assert (tmp_path / "contraction.csv").exists()


def test_verify_writes_a_matrix(tmp_path):
    assert run(tmp_path, "verify", "--only", "1,14") == 0
    lines = (tmp_path / "verify_matrix.csv").read_text().splitlines()
    assert lines[0].startswith("criterion,name,passed")
    assert len(lines) == 3


def test_verify_exits_nonzero_on_a_failed_check(tmp_path, monkeypatch):
    from solitonglue import verify

    bad = verify.CheckResult(1, "forced", False)
    monkeypatch.setattr(verify, "run_all", lambda selected=None: [bad])
    assert run(tmp_path, "verify") == 1


@pytest.mark.parametrize("value", [1.0, 0.1, 1e-300, 123456.789, -0.0])
def test_json_floats_round_trip(value):
    assert float(json.loads(cli.dumps({"x": value}))["x"]) == value
