"""Backend selection and cross-backend agreement."""

from __future__ import annotations

import os
import subprocess
import sys

import numpy as np
import pytest

import volesim._backend as backend_mod
from volesim import DiscreteModel, ModelParams, initial_condition, run
from volesim._backend import available_backends, get_backend

HAVE_COMPILED = "compiled" in available_backends()


def test_available_backends_list_python():
    names = available_backends()
    assert "python" in names
    assert backend_mod.BACKEND in names


def test_get_backend_returns_callables():
    assert callable(get_backend("python"))
    if HAVE_COMPILED:
        assert callable(get_backend("compiled"))


def test_get_backend_rejects_unknown_name():
    with pytest.raises(ValueError):
        get_backend("fortran")


@pytest.mark.skipif(not HAVE_COMPILED, reason="compiled backend not built")
def test_backends_agree_over_five_years(canonical_model, monkeypatch):
    results = {}
    for name in ("compiled", "python"):
        monkeypatch.setattr(backend_mod, "run_steps", get_backend(name))
        history = initial_condition("II", seed=29, model=canonical_model)
        traj = run(canonical_model, history, years=5)
        results[name] = (traj.births.copy(), traj.mature.copy())
    births_diff = np.max(np.abs(results["compiled"][0] - results["python"][0]))
    mature_diff = np.max(np.abs(results["compiled"][1] - results["python"][1]))
    assert births_diff <= 1e-10
    assert mature_diff <= 1e-10


def test_python_backend_runs_standalone(monkeypatch):
    monkeypatch.setattr(backend_mod, "run_steps", get_backend("python"))
    model = DiscreteModel.build(ModelParams(a0=0.18, rho=0.41, gamma=5.0), p=50)
    history = initial_condition("I", seed=4, model=model)
    traj = run(model, history, years=3)
    assert np.all(np.isfinite(traj.mature))
    assert np.all(traj.mature >= 0.0)


def test_env_var_forces_python_backend():
    env = dict(os.environ, VOLESIM_BACKEND="python")
    out = subprocess.run(
        [sys.executable, "-c", "import volesim._backend as b; print(b.BACKEND)"],
        capture_output=True,
        text=True,
        env=env,
        check=True,
    )
    assert out.stdout.strip() == "python"


def test_env_var_unknown_backend_fails_import():
    env = dict(os.environ, VOLESIM_BACKEND="fortran")
    out = subprocess.run(
        [sys.executable, "-c", "import volesim._backend"],
        capture_output=True,
        text=True,
        env=env,
    )
    assert out.returncode != 0
    assert "fortran" in out.stderr
