"""Tests for the command line front-end: exit codes, headers, determinism."""

from __future__ import annotations

import subprocess
import sys

import pytest

import volesim
from volesim import ModelParams, equilibrium_density
from volesim.cli import run_command

SUBCOMMANDS = (
    "simulate", "sweep", "embed", "dimension", "components", "inject",
    "diverge", "fixpoint", "jacobian", "spectrum", "manifold", "fold", "theory",
)

FAST_SIM = ["--years", "300", "--sample-from", "201", "--sample-to", "300",
            "--seed", "5", "--init", "II"]


def header_entries(path) -> dict[str, str]:
    entries = {}
    for line in path.read_text().splitlines():
        if not line.startswith("# "):
            break
        key, _, value = line[2:].partition("=")
        entries[key] = value
    return entries


# --- argument handling --------------------------------------------------


@pytest.mark.parametrize("name", SUBCOMMANDS)
def test_help_exits_cleanly(name, capsys):
    assert run_command([name, "--help"]) == 0
    out = capsys.readouterr().out
    assert "default" in out


def test_usage_errors_exit_2(capsys):
    assert run_command([]) == 2
    assert run_command(["simulate", "--bogus"]) == 2
    assert run_command(["simulate", "--init", "III"]) == 2
    capsys.readouterr()


def test_version_flag(capsys):
    assert run_command(["--version"]) == 0
    assert volesim.__version__ in capsys.readouterr().out


def test_module_entrypoint_runs():
    proc = subprocess.run(
        [sys.executable, "-m", "volesim.cli", "--version"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert volesim.__version__ in proc.stdout


# --- configuration ------------------------------------------------------


def test_config_file_then_flags_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment line\n\na0=0.18\ngamma=3.0\nyears=300\n")
    out = tmp_path / "theory.csv"
    rc = run_command(["theory", "--config", str(cfg), "--gamma", "4.0", "--out", str(out)])
    assert rc == 0
    entries = header_entries(out)
    assert entries["a0"] == "0.18"      # from the file
    assert entries["years"] == "300"    # from the file
    assert entries["gamma"] == "4.0"    # flag wins over the file
    capsys.readouterr()


def test_config_unknown_key_reports_location(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("a0=0.18\nbanana=1\n")
    rc = run_command(["theory", "--config", str(cfg)])
    assert rc == 2
    err = capsys.readouterr().err
    assert "error[config]" in err
    assert f"{cfg}:2" in err


def test_window_beyond_horizon_exit_2(capsys):
    rc = run_command(["simulate", "--years", "100"])
    assert rc == 2
    assert "error[config]" in capsys.readouterr().err


def test_seed_env_var_and_flag(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("VOLE_SEED", "77")
    out = tmp_path / "a.csv"
    assert run_command(["theory", "--a0", "0.18", "--out", str(out)]) == 0
    assert header_entries(out)["seed"] == "77"
    out2 = tmp_path / "b.csv"
    assert run_command(["theory", "--a0", "0.18", "--seed", "5", "--out", str(out2)]) == 0
    assert header_entries(out2)["seed"] == "5"
    capsys.readouterr()


# --- headers and determinism --------------------------------------------


def test_simulate_deterministic_bytes(tmp_path, capsys):
    f1, f2 = tmp_path / "one.csv", tmp_path / "two.csv"
    assert run_command(["simulate", *FAST_SIM, "--out", str(f1)]) == 0
    assert run_command(["simulate", *FAST_SIM, "--out", str(f2)]) == 0
    assert f1.read_bytes() == f2.read_bytes()
    out = capsys.readouterr().out
    assert out.startswith("simulate: years=300")


def test_output_header_stamps_run(tmp_path, capsys):
    f = tmp_path / "run.csv"
    assert run_command(["simulate", *FAST_SIM, "--out", str(f)]) == 0
    lines = f.read_text().splitlines()
    keys = []
    for line in lines:
        if not line.startswith("# "):
            break
        keys.append(line[2:].partition("=")[0])
    assert keys == sorted(keys)
    entries = header_entries(f)
    assert entries["command"] == "simulate"
    assert entries["version"] == volesim.__version__
    assert entries["seed"] == "5"
    assert entries["backend"] in ("compiled", "python")
    assert entries["gamma"] == "8.25"
    assert lines[len(keys)] == "step,year_phase,births,mature"
    capsys.readouterr()


def test_sweep_jobs_bytes_identical(tmp_path, capsys):
    common = ["sweep", "--param", "gamma", "--from", "3.0", "--to", "3.5",
              "--step", "0.5", "--years", "400", "--sample-from", "301",
              "--sample-to", "400", "--seed", "11"]
    f1, f2 = tmp_path / "serial.csv", tmp_path / "parallel.csv"
    assert run_command([*common, "--out", str(f1)]) == 0
    assert run_command([*common, "--jobs", "2", "--out", str(f2)]) == 0
    assert f1.read_bytes() == f2.read_bytes()
    capsys.readouterr()


# --- theory -------------------------------------------------------------


def test_theory_reports_closed_forms(capsys):
    assert run_command(["theory", "--a0", "0.18"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("theory: ")
    fields = dict(tok.split("=", 1) for tok in out[len("theory: "):].split())
    expected = equilibrium_density(ModelParams(a0=0.18))
    assert float(fields["n_eq"]) == pytest.approx(expected, rel=1e-12)
    assert "gamma_threshold_0" in fields
    assert "gamma_threshold_1" in fields
    assert float(fields["gamma_threshold_0"]) < float(fields["gamma_threshold_1"])


def test_theory_no_equilibrium_prints_none(capsys):
    # bounds still print but carry the not-guaranteed warning
    with pytest.warns(UserWarning):
        assert run_command(["theory", "--a0", "0.18", "--m0", "1.0"]) == 0
    out = capsys.readouterr().out
    assert "n_eq=none" in out


def test_theory_unreachable_threshold_count_exit_3(capsys):
    rc = run_command(["theory", "--a0", "0.18", "--threshold-count", "10"])
    assert rc == 3
    assert "error[numeric]" in capsys.readouterr().err


def test_missing_output_directory_exit_4(tmp_path, capsys):
    target = tmp_path / "no_such_dir" / "out.csv"
    rc = run_command(["simulate", "--years", "120", "--sample-from", "101",
                      "--sample-to", "120", "--out", str(target)])
    assert rc == 4
    assert "error[io]" in capsys.readouterr().err


# --- analysis subcommand smokes -----------------------------------------


def test_embed_smoke(tmp_path, capsys):
    f = tmp_path / "cloud.csv"
    assert run_command(["embed", *FAST_SIM, "--out", str(f)]) == 0
    out = capsys.readouterr().out
    assert out.startswith("embed: points=98")
    lines = f.read_text().splitlines()
    data = [line for line in lines if not line.startswith("# ")]
    assert data[0] == "year,x,y,z"
    assert len(data) == 99


def test_components_smoke(capsys):
    rc = run_command(["components", "--gamma", "4.0", "--a0", "0.18", "--rho", "0.41",
                      "--years", "2000", "--sample-from", "1001", "--sample-to", "2000",
                      "--seed", "11"])
    assert rc == 0
    assert "components: count=2" in capsys.readouterr().out


def test_dimension_smoke(capsys):
    rc = run_command(["dimension", "--years", "12000", "--sample-from", "1001",
                      "--sample-to", "12000", "--seed", "29", "--init", "II"])
    assert rc == 0
    assert capsys.readouterr().out.startswith("dimension: slope=")


def test_inject_smoke(capsys):
    common = ["inject", "--years", "2000", "--sample-from", "101", "--sample-to", "2000",
              "--seed", "29", "--init", "II"]
    assert run_command([*common, "--center-count", "5"]) == 0
    assert "inject: centers=5" in capsys.readouterr().out
    assert run_command([*common, "--centers", "500,600"]) == 0
    assert "inject: centers=2" in capsys.readouterr().out


def test_diverge_smoke(tmp_path, capsys):
    f = tmp_path / "diverge.csv"
    rc = run_command(["diverge", "--center", "500", "--years", "1000",
                      "--sample-from", "101", "--sample-to", "1000",
                      "--horizon", "2", "--r", "0.5", "--seed", "29", "--init", "II",
                      "--out", str(f)])
    assert rc == 0
    out = capsys.readouterr().out
    assert out.startswith("diverge: center=500 members=")
    members = int(out.split("members=")[1].split()[0])
    data = [line for line in f.read_text().splitlines() if not line.startswith("# ")]
    assert data[0] == "member_time,offset_years,delta"
    assert len(data) == 1 + members * 401


def test_fold_smoke(tmp_path, capsys):
    f = tmp_path / "fold.csv"
    g = tmp_path / "filament.csv"
    rc = run_command(["fold", "--anchor-a", "500", "--anchor-b", "600",
                      "--n-points", "100", "--horizon", "1.0", "--frame-step", "50",
                      "--years", "3000", "--sample-from", "101", "--sample-to", "3000",
                      "--seed", "29", "--init", "II", "--out", str(f),
                      "--filament-out", str(g)])
    assert rc == 0
    assert capsys.readouterr().out.startswith("fold: frames=3")
    data = [line for line in f.read_text().splitlines() if not line.startswith("# ")]
    assert data[0] == "t,max_curvature,argmax_vertex"
    assert len(data) == 4
    filament = [line for line in g.read_text().splitlines() if not line.startswith("# ")]
    assert filament[0] == "vertex,param,x,y,z,ds,curvature"
    assert len(filament) == 101


# --- fixed point pipeline -----------------------------------------------

NONSEASONAL = ["--rho", "0.0", "--eps-season", "0.0", "--gamma", "5.0", "--a0", "0.18",
               "--years", "12000", "--sample-from", "1001", "--sample-to", "12000",
               "--init", "II", "--seed", "3"]


def test_fixpoint_smoke_nonseasonal(tmp_path, capsys):
    f = tmp_path / "fixpoint.csv"
    assert run_command(["fixpoint", *NONSEASONAL, "--out", str(f)]) == 0
    out = capsys.readouterr().out
    assert out.startswith("fixpoint: year=")
    fields = dict(tok.split("=", 1) for tok in out[len("fixpoint: "):].split())
    assert float(fields["coarse_residual"]) < 1e-8
    assert float(fields["refined_residual"]) <= float(fields["coarse_residual"])
    data = [line for line in f.read_text().splitlines() if not line.startswith("# ")]
    assert data[0] == "k,value"
    assert len(data) == 202


def test_manifold_complex_leading_pair_exit_3(capsys):
    # the nonseasonal equilibrium has a complex leading eigenvalue pair,
    # so no single unstable direction exists
    rc = run_command(["manifold", *NONSEASONAL])
    assert rc == 3
    err = capsys.readouterr().err
    assert "error[numeric]" in err
    assert "leading eigenvalue" in err
