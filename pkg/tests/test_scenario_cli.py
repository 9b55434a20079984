import json
from pathlib import Path

import numpy as np
import pytest
import yaml
from click.testing import CliRunner

import qhjtraj as q
from qhjtraj.cli import main
from qhjtraj.config import fixture_path, load_config, validate_config
from qhjtraj.errors import AlignmentError, ConfigError
from qhjtraj.scenario import emit_comparison_table, run_scenario

MINIMAL = {
    "name": "minimal",
    "potential": {"kind": "free"},
    "grid": {"x_min": 0.0, "x_max": 3.2, "points": 1601},
    "microstates": [{"energy": 0.5, "a": 1.0, "b": 0.0}],
    "laws": ["bd", "floyd", "xhat"],
    "trajectory": {"x0": 0.0, "t_span": 2.0, "step_tol": 1e-12},
    "stencil": {"delta_scale": 1e-4},
    "comparison": {"x_samples": 11, "margin": 0.3},
    "checks": ["wronskian", "schrodinger", "qshje", "law_agreement"],
    "seed": 7,
}


def write_cfg(tmp_path, payload, name="scenario.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(payload))
    return path


# ---------------------------------------------------------------------------
# config validation


def test_validate_minimal():
    cfg = validate_config(MINIMAL)
    assert cfg.name == "minimal"
    assert cfg.basis_kind == "analytic-free"


def test_config_rejects_a_zero():
    bad = json.loads(json.dumps(MINIMAL))
    bad["microstates"][0]["a"] = 0.0
    with pytest.raises(ConfigError, match=r"microstates\[0\].a"):
        validate_config(bad)


def test_config_rejects_small_grid():
    bad = json.loads(json.dumps(MINIMAL))
    bad["grid"]["points"] = 50
    with pytest.raises(ConfigError, match="points"):
        validate_config(bad)


def test_config_rejects_unknown_check():
    bad = json.loads(json.dumps(MINIMAL))
    bad["checks"] = ["definitely_not_a_check"]
    with pytest.raises(ConfigError, match="checks"):
        validate_config(bad)


def test_config_rejects_free_only_check_on_harmonic():
    bad = json.loads(json.dumps(MINIMAL))
    bad["potential"] = {"kind": "harmonic", "stiffness": 1.0}
    bad["checks"] = ["eq_free_time"]
    with pytest.raises(ConfigError, match="free potential only"):
        validate_config(bad)


def test_config_rejects_nonpositive_tolerance():
    bad = json.loads(json.dumps(MINIMAL))
    bad["tolerances"] = {"qshje_analytic": -1.0}
    with pytest.raises(ConfigError, match="tolerances"):
        validate_config(bad)


def test_config_rejects_degenerate_transform():
    bad = json.loads(json.dumps(MINIMAL))
    bad["transforms"] = [{"type": "general", "mu": 1.0, "nu": 2.0, "alpha": 2.0, "beta": 4.0}]
    with pytest.raises(ConfigError, match="degenerate"):
        validate_config(bad)


def test_config_rejects_unknown_field():
    bad = json.loads(json.dumps(MINIMAL))
    bad["graid"] = {}
    with pytest.raises(ConfigError):
        validate_config(bad)


def test_fixture_path_unknown_name():
    with pytest.raises(ConfigError, match="available"):
        fixture_path("nope")


# ---------------------------------------------------------------------------
# run_scenario


def test_run_minimal_scenario(tmp_path):
    cfg = validate_config(MINIMAL)
    report = run_scenario(cfg, out_dir=tmp_path / "out")
    assert report.passed
    names = {c.name for c in report.checks}
    assert names == set(MINIMAL["checks"])
    assert (tmp_path / "out" / "report.json").is_file()
    assert (tmp_path / "out" / "comparison_ms0.csv").is_file()


def test_every_requested_check_appears_once(tmp_path):
    cfg = validate_config(MINIMAL)
    report = run_scenario(cfg, out_dir=tmp_path / "out")
    names = [c.name for c in report.checks]
    assert len(names) == len(set(names))
    assert set(names) == set(MINIMAL["checks"])


def test_run_deterministic_artifacts(tmp_path):
    cfg = load_config(fixture_path("contradiction"))
    a, b = tmp_path / "a", tmp_path / "b"
    run_scenario(cfg, out_dir=a)
    run_scenario(cfg, out_dir=b)
    files_a = sorted(p.name for p in a.iterdir())
    files_b = sorted(p.name for p in b.iterdir())
    assert files_a == files_b
    for name in files_a:
        assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_comparison_csv_shape(tmp_path):
    cfg = validate_config(MINIMAL)
    run_scenario(cfg, out_dir=tmp_path / "out")
    lines = (tmp_path / "out" / "comparison_ms0.csv").read_text().splitlines()
    assert lines[0] == "x,t_bd,t_floyd,t_xhat,gap_eq20"
    xs = [float(line.split(",")[0]) for line in lines[1:]]
    assert xs == sorted(xs)
    assert len(xs) == MINIMAL["comparison"]["x_samples"]


def test_single_law_comparison_two_columns(tmp_path):
    solo = json.loads(json.dumps(MINIMAL))
    solo["laws"] = ["bd"]
    solo["checks"] = ["qshje"]
    cfg = validate_config(solo)
    run_scenario(cfg, out_dir=tmp_path / "out")
    header = (tmp_path / "out" / "comparison_ms0.csv").read_text().splitlines()[0]
    assert header == "x,t_bd"


def test_field_csv_columns(tmp_path):
    cfg = validate_config(MINIMAL)
    run_scenario(cfg, out_dir=tmp_path / "out")
    header = (tmp_path / "out" / "field_ms0.csv").read_text().splitlines()[0]
    assert header == "x,S0,P,Q,xhat,V"
    traj_header = (tmp_path / "out" / "trajectory_bd_ms0.csv").read_text().splitlines()[0]
    assert traj_header == "law,t,x,P,Q,H,L,action"


def test_tabulated_potential_roundtrip(tmp_path):
    table = tmp_path / "flat.csv"
    xs = np.linspace(-0.1, 3.3, 69)
    table.write_text("x,V\n" + "\n".join(f"{x:.8f},0.0" for x in xs))
    raw = json.loads(json.dumps(MINIMAL))
    raw["potential"] = {"kind": "tabulated", "csv": "flat.csv"}
    raw["basis"] = {"kind": "numeric"}
    raw["checks"] = ["wronskian", "qshje"]
    raw["laws"] = ["bd"]
    cfg = validate_config(raw, base_dir=tmp_path)
    report = run_scenario(cfg, out_dir=tmp_path / "out")
    assert report.passed


def test_emit_comparison_rejects_empty(tmp_path):
    with pytest.raises(AlignmentError):
        emit_comparison_table([], None, tmp_path / "c.csv")


def test_emit_comparison_rejects_misaligned(tmp_path, a2_stencil):
    xs = np.linspace(0.3, 1.0, 5)
    lt1 = q.sample_law_times(a2_stencil, xs, q.Law.FLOYD_JACOBI)
    lt2 = q.sample_law_times(a2_stencil, xs + 0.05, q.Law.XHAT_JACOBI)
    with pytest.raises(AlignmentError):
        emit_comparison_table([lt1, lt2], None, tmp_path / "c.csv")


def test_stage_failure_skips_dependent_checks(tmp_path):
    # trajectory starts outside the classically allowed region -> the
    # trajectories stage fails, dependent checks are skipped, exit code 1
    raw = json.loads(json.dumps(MINIMAL))
    raw["potential"] = {"kind": "harmonic", "stiffness": 1.0}
    raw["basis"] = {"kind": "numeric"}
    raw["grid"] = {"x_min": -1.5, "x_max": 1.5, "points": 601}
    raw["microstates"] = [{"energy": 0.5, "a": 1.0}]
    raw["trajectory"] = {"x0": 1.3, "t_span": 1.0}  # forbidden at E = 0.5
    raw["checks"] = ["wronskian", "action_identity"]
    raw["laws"] = ["bd"]
    cfg = validate_config(raw)
    report = run_scenario(cfg, out_dir=tmp_path / "out")
    assert not report.passed
    by_name = {c.name: c for c in report.checks}
    assert by_name["wronskian"].passed
    assert not by_name["action_identity"].passed
    assert "skipped" in by_name["action_identity"].detail
    assert any(c.name == "stage:trajectories" for c in report.checks)


# ---------------------------------------------------------------------------
# CLI


def test_cli_validate_ok(tmp_path):
    path = write_cfg(tmp_path, MINIMAL)
    result = CliRunner().invoke(main, ["validate", str(path)])
    assert result.exit_code == 0
    assert "OK" in result.output


def test_cli_validate_config_error(tmp_path):
    bad = json.loads(json.dumps(MINIMAL))
    bad["microstates"][0]["a"] = 0.0
    path = write_cfg(tmp_path, bad)
    result = CliRunner().invoke(main, ["validate", str(path)])
    assert result.exit_code == 2
    assert "microstates[0].a" in result.output


def test_cli_run_minimal(tmp_path):
    path = write_cfg(tmp_path, MINIMAL)
    result = CliRunner().invoke(main, ["run", str(path), "--out", str(tmp_path / "out")])
    assert result.exit_code == 0, result.output
    assert "PASS law_agreement" in result.output


def test_cli_run_missing_config(tmp_path):
    result = CliRunner().invoke(main, ["run", str(tmp_path / "absent.yaml")])
    assert result.exit_code == 2


def test_cli_tolerance_scale_forces_failure(tmp_path):
    path = write_cfg(tmp_path, MINIMAL)
    result = CliRunner().invoke(
        main,
        ["run", str(path), "--out", str(tmp_path / "out"), "--tolerance-scale", "1e-12"],
    )
    assert result.exit_code == 1
    assert "FAIL" in result.output


def test_cli_demo_unknown_fixture():
    result = CliRunner().invoke(main, ["demo", "nonexistent"])
    assert result.exit_code == 2
    assert "available" in result.output


def test_cli_demo_classical(tmp_path):
    result = CliRunner().invoke(main, ["demo", "classical", "--out", str(tmp_path / "out")])
    assert result.exit_code == 0, result.output
    assert (tmp_path / "out" / "report.json").is_file()


def test_cli_out_env_var(tmp_path, monkeypatch):
    monkeypatch.setenv("QHJTRAJ_OUT", str(tmp_path / "env-out"))
    path = write_cfg(tmp_path, MINIMAL)
    result = CliRunner().invoke(main, ["run", str(path)])
    assert result.exit_code == 0
    assert (tmp_path / "env-out" / "report.json").is_file()


def test_cli_seed_recorded(tmp_path):
    path = write_cfg(tmp_path, MINIMAL)
    CliRunner().invoke(
        main, ["run", str(path), "--out", str(tmp_path / "out"), "--seed", "99"]
    )
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert report["seed"] == 99
