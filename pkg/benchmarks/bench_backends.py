"""Benchmark the compiled stepping kernel against the pure-python fallback.

Runs the default chaotic configuration on every available backend,
reports steps per second and the speedup, and verifies that a short run
agrees between backends to 1e-10.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from volesim import DiscreteModel, ModelParams, initial_condition, run
from volesim import _backend


def build_model(p: int) -> DiscreteModel:
    params = ModelParams(
        a0=0.15,
        a1=2.0,
        m0=50.0,
        gamma=8.25,
        rho=0.30,
        eps_season=0.1,
        fecundity_smooth=True,
        season_smooth=True,
    )
    return DiscreteModel.build(params, p=p)


def timed_run(kernel, model: DiscreteModel, years: int, seed: int) -> tuple[float, np.ndarray]:
    history = initial_condition("II", seed, model)
    saved = _backend.run_steps
    _backend.run_steps = kernel
    try:
        t0 = time.perf_counter()
        traj = run(model, history, years)
        elapsed = time.perf_counter() - t0
    finally:
        _backend.run_steps = saved
    return elapsed, traj.mature


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--years", type=int, default=20000, help="simulated years (default 20000)")
    parser.add_argument("--p", type=int, default=100, help="steps per year (default 100)")
    parser.add_argument("--seed", type=int, default=29, help="initial-condition seed (default 29)")
    args = parser.parse_args()

    model = build_model(args.p)
    backends = _backend.available_backends()
    print(f"backends: {', '.join(backends)}")

    short = {}
    for name in backends:
        kernel = _backend.get_backend(name)
        _, mature = timed_run(kernel, model, 5, args.seed)
        short[name] = mature
    if len(backends) == 2:
        diff = float(np.max(np.abs(short[backends[0]] - short[backends[1]])))
        status = "OK" if diff <= 1e-10 else "MISMATCH"
        print(f"5-year parity: max |diff| = {diff:.3e} [{status}]")

    results = {}
    for name in backends:
        kernel = _backend.get_backend(name)
        years = args.years if name == "compiled" else max(args.years // 10, 100)
        elapsed, _ = timed_run(kernel, model, years, args.seed)
        steps = years * args.p
        results[name] = steps / elapsed
        print(f"{name:>8}: {years} years in {elapsed:.3f} s  ({steps / elapsed:,.0f} steps/s)")

    if len(results) == 2:
        print(f"speedup: {results['compiled'] / results['python']:.1f}x")


if __name__ == "__main__":
    main()
