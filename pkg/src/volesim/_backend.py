"""Selects the trajectory stepping backend at import time.

The compiled Cython kernel is preferred; the pure-python kernel is the
fallback. Set VOLESIM_BACKEND=compiled or VOLESIM_BACKEND=python to force
one (forcing "compiled" raises if the extension is not built). The active
choice is exposed as BACKEND.
"""

from __future__ import annotations

import os

from . import _fallback

__all__ = ["BACKEND", "run_steps", "get_backend", "available_backends"]


def get_backend(name: str):
    """Return the run_steps callable of the named backend ("compiled" or "python")."""
    if name == "python":
        return _fallback.run_steps
    if name == "compiled":
        from . import _core

        return _core.run_steps
    raise ValueError(f"unknown backend {name!r}; expected 'compiled' or 'python'")


def available_backends() -> list[str]:
    """Names of the backends importable in this environment."""
    names = ["python"]
    try:
        get_backend("compiled")
    except ImportError:
        pass
    else:
        names.insert(0, "compiled")
    return names


_forced = os.environ.get("VOLESIM_BACKEND", "").strip().lower()
if _forced:
    run_steps = get_backend(_forced)
    BACKEND = _forced
else:
    try:
        run_steps = get_backend("compiled")
        BACKEND = "compiled"
    except ImportError:
        run_steps = get_backend("python")
        BACKEND = "python"
