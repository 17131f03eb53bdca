"""Discrete-time renewal simulator.

Discretizes the year into p steps. The state is the ring of the last 2p
per-step birth counts (two years of memory, the maximal age); the mature
population at a step is the survival-weighted sum of those births, and the
births it produces are damped by the density-dependent fecundity and the
seasonal weight of the step's phase. Weight tables are precomputed once
per model; the inner loop runs on the backend selected in
volesim._backend.
"""

from __future__ import annotations

import dataclasses
import functools
import math
from typing import IO, Iterable

import numpy as np

from . import _backend
from .errors import NumericError, UnsupportedParameterError
from .kernels import ModelParams, fecundity_coefficients, season_c0, season_c1

__all__ = [
    "DiscreteModel",
    "BirthHistory",
    "Trajectory",
    "build_survival_weights",
    "build_seasonal_weights",
    "initial_condition",
    "step",
    "run",
    "advance_window",
    "annual_samples",
    "trajectory_to_csv",
]

# A0*p closer to an integer than this uses the exact-boundary weight path.
INTEGRAL_TOL = 1e-9

# Mature values above this multiple of the theoretical ceiling abort a run:
# the dynamics cannot reach them, so they signal mis-parameterization.
OVERFLOW_FACTOR = 1e6

DEFAULT_REFINE = 100
_MAX_IC_RETRIES = 64


def build_survival_weights(params: ModelParams, p: int, refine: int = DEFAULT_REFINE) -> np.ndarray:
    """Per-step survival weights s_k for lags k = 1..2p (index k-1).

    A birth k steps ago contributes weight (1 - k/(p*a1)) once past the
    maturation lag. When a0*p is integral the indicator boundary is exact
    and inclusive; otherwise each coarse weight is the mean of the weights
    on a grid refined `refine`-fold, which smooths the partial coverage of
    the maturation boundary cell.

    Args:
        params: model constants; a0 and a1 are used.
        p: steps per year, >= 2.
        refine: refinement factor for the non-integral boundary path, >= 1.

    Returns:
        Array of 2p weights in [0, 1].
    """
    if p < 2:
        raise ValueError(f"p must be >= 2, got {p}")
    if refine < 1:
        raise ValueError(f"refine must be >= 1, got {refine}")
    lag = np.arange(1, 2 * p + 1)
    boundary = params.a0 * p
    if abs(boundary - round(boundary)) < INTEGRAL_TOL:
        return np.where(lag >= round(boundary), 1.0 - lag / (p * params.a1), 0.0)
    q = p * refine
    fine_lag = np.arange(1, 2 * q + 1)
    fine_boundary = params.a0 * q
    if abs(fine_boundary - round(fine_boundary)) < INTEGRAL_TOL:
        fine_boundary = round(fine_boundary)
    fine = np.where(fine_lag >= fine_boundary, 1.0 - fine_lag / (q * params.a1), 0.0)
    return fine.reshape(2 * p, refine).mean(axis=1)


def build_seasonal_weights(params: ModelParams, p: int) -> np.ndarray:
    """Per-phase seasonal weights e_i for i = 0..p-1.

    Each weight is the mean of the season profile at the two endpoints of
    the phase interval [i/p, (i+1)/p), using the smooth or hard profile
    according to params.season_smooth.
    """
    if p < 2:
        raise ValueError(f"p must be >= 2, got {p}")
    rho = params.rho
    if params.season_smooth:
        eps = params.eps_effective
        values = [
            0.5 * (season_c1(i / p, rho, eps) + season_c1((i + 1) / p, rho, eps))
            for i in range(p)
        ]
    else:
        values = [
            0.5 * (season_c0(i / p, rho) + season_c0((i + 1) / p, rho))
            for i in range(p)
        ]
    return np.array(values)


@dataclasses.dataclass(frozen=True, eq=False)
class DiscreteModel:
    """Precomputed weight tables for one parameter set at resolution p.

    Immutable and shareable between concurrent simulations. The memory
    layout fixes a1 = 2 years, so the birth ring holds exactly 2p steps.

    Attributes:
        params: continuous-model constants.
        p: steps per year.
        survival_weights: s_k for k = 1..2p at index k-1.
        seasonal_weights: e_i for phase index i = 0..p-1.
        refine: refinement factor used for the survival table.
    """

    params: ModelParams
    p: int
    survival_weights: np.ndarray
    seasonal_weights: np.ndarray
    refine: int = DEFAULT_REFINE

    @classmethod
    def build(cls, params: ModelParams, p: int = 100, refine: int = DEFAULT_REFINE) -> "DiscreteModel":
        """Build the weight tables for `params` at resolution p."""
        if params.a1 != 2.0:
            raise UnsupportedParameterError(
                f"the discrete memory layout fixes a1 = 2 years, got {params.a1}"
            )
        return cls(
            params=params,
            p=p,
            survival_weights=build_survival_weights(params, p, refine),
            seasonal_weights=build_seasonal_weights(params, p),
            refine=refine,
        )

    @functools.cached_property
    def survival_reversed(self) -> np.ndarray:
        """Survival weights reversed, aligned with a chronological ring."""
        return self.survival_weights[::-1].copy()

    @functools.cached_property
    def fecundity_constants(self) -> tuple[bool, float, float, float, float, float]:
        """(use_quad, n1, n2, a, b, c) driving the stepping kernels.

        The smooth curve applies when requested and gamma > 2; otherwise
        n1 = n2 = 1 reduces the branch structure to the hard curve.
        """
        params = self.params
        if params.fecundity_smooth and params.gamma > 2.0:
            curve = fecundity_coefficients(params.gamma)
            return True, curve.n1, curve.n2, curve.a, curve.b, curve.c
        return False, 1.0, 1.0, 1.0, 0.0, 0.0

    @functools.cached_property
    def overflow_limit(self) -> float:
        """Mature values above this abort a run."""
        params = self.params
        n_max = params.m0 * (params.a1 / 2.0) * (1.0 - params.a0 / params.a1) ** 2
        return OVERFLOW_FACTOR * n_max

    def fecundity(self, n: float) -> float:
        """Scalar fecundity with exactly the branch structure of the step loop."""
        use_quad, n1, n2, qa, qb, qc = self.fecundity_constants
        m0 = self.params.m0
        if n <= n1:
            return m0
        if use_quad and n <= n2:
            return m0 * (qa + qb * n + qc * n * n)
        return m0 * n ** (-self.params.gamma)


@dataclasses.dataclass
class BirthHistory:
    """Ring of the 2p most recent per-step birth counts.

    births is chronological: births[j] is the count at absolute step
    step_index - 2p + j, so births[-1] is the most recent step.
    """

    births: np.ndarray
    step_index: int = 0


@dataclasses.dataclass(eq=False)
class Trajectory:
    """A recorded simulation: births and derived mature series.

    births holds the 2p pre-history steps followed by one entry per
    computed step; mature holds one entry per computed step. Computed step
    i (0-based, absolute index start_step + i) covers the phase interval
    [(start_step + i)/p, (start_step + i + 1)/p) of the year.
    """

    params: ModelParams
    p: int
    births: np.ndarray
    mature: np.ndarray
    t0: float = 0.0

    @property
    def start_step(self) -> int:
        """Absolute index of the first computed step."""
        return round(self.t0 * self.p)

    @property
    def years(self) -> float:
        """Simulated horizon in years."""
        return len(self.mature) / self.p

    def final_history(self) -> BirthHistory:
        """Ring after the last computed step, for continuation runs."""
        twop = 2 * self.p
        return BirthHistory(
            births=self.births[-twop:].copy(),
            step_index=self.start_step + len(self.mature),
        )

    def spot_check(self, indices: Iterable[int], model: DiscreteModel) -> float:
        """Largest recurrence violation |N_i - sum(s_k * n_(i-k))| over indices."""
        twop = 2 * self.p
        worst = 0.0
        for i in indices:
            expected = float(model.survival_reversed @ self.births[i:i + twop])
            worst = max(worst, abs(expected - float(self.mature[i])))
        return worst


def initial_condition(variant: str, seed: int, model: DiscreteModel) -> BirthHistory:
    """Seeded random pre-history with a calibrated starting population.

    Draws the 2p pre-history births iid uniform on [0, 1) from
    numpy.random.default_rng(seed) (PCG64; one call of random(2p), a
    stable stream across releases). Variant "I" zeroes births at winter
    phases first. The vector is then rescaled by a single factor so the
    first computed mature value equals 20 (variant I) or 1 (variant II),
    which is exact because that value is linear in past births.

    If the masked draw sums to zero mature population (probability ~0),
    the generator is re-seeded from SeedSequence(seed).spawn and the draw
    repeats.

    Args:
        variant: "I" (winterless pre-history, start at 20) or "II" (start at 1).
        seed: RNG seed.
        model: discrete model supplying p, rho, and survival weights.

    Returns:
        A BirthHistory at step_index 0.
    """
    if variant not in ("I", "II"):
        raise ValueError(f"variant must be 'I' or 'II', got {variant!r}")
    p = model.p
    twop = 2 * p
    seq = np.random.SeedSequence(seed)
    for _ in range(_MAX_IC_RETRIES):
        rng = np.random.default_rng(seq)
        births = rng.random(twop)
        if variant == "I":
            phase = (np.arange(twop) % p) / p
            births[phase < model.params.rho] = 0.0
        first_mature = float(model.survival_reversed @ births)
        if first_mature > 0.0:
            target = 20.0 if variant == "I" else 1.0
            births *= target / first_mature
            return BirthHistory(births=births, step_index=0)
        seq = seq.spawn(1)[0]
    raise NumericError("initial condition degenerate for every retry substream")


def step(model: DiscreteModel, history: BirthHistory) -> tuple[float, float]:
    """Advance one step in place; returns (births, mature) of that step.

    The mature value is the survival-weighted sum of the ring; the birth
    count it produces is damped by fecundity and the phase's seasonal
    weight. Reference implementation of the backend kernels; use
    :func:`run` for long horizons.
    """
    p = model.p
    if history.births.shape != (2 * p,):
        raise ValueError(f"ring must have length {2 * p}, got {history.births.shape}")
    n_mature = float(model.survival_reversed @ history.births)
    if not math.isfinite(n_mature) or n_mature > model.overflow_limit:
        raise NumericError(
            f"mature population overflow at step {history.step_index}",
            step_index=history.step_index,
        )
    rate = model.fecundity(n_mature)
    seasonal = float(model.seasonal_weights[history.step_index % p])
    n_birth = rate * n_mature * seasonal / p
    history.births[:-1] = history.births[1:]
    history.births[-1] = n_birth
    history.step_index += 1
    return n_birth, n_mature


def run(model: DiscreteModel, history: BirthHistory, years: int) -> Trajectory:
    """Simulate `years` years from `history` without mutating it.

    Cost is O(years * p * 2p): each step folds the 2p-step ring with the
    survival weights. Raises NumericError with the offending absolute step
    index if a mature value goes non-finite or exceeds the overflow guard.
    """
    if years < 1:
        raise ValueError(f"years must be >= 1, got {years}")
    p = model.p
    twop = 2 * p
    n_steps = years * p
    births = np.zeros(twop + n_steps)
    births[:twop] = history.births
    mature = np.empty(n_steps)
    use_quad, n1, n2, qa, qb, qc = model.fecundity_constants
    params = model.params
    bad = _backend.run_steps(
        births, model.survival_reversed, model.seasonal_weights,
        p, n_steps, history.step_index,
        params.m0, params.gamma, use_quad, n1, n2, qa, qb, qc,
        model.overflow_limit, mature,
    )
    if bad >= 0:
        absolute = history.step_index + int(bad)
        raise NumericError(
            f"mature population overflow at step {absolute}", step_index=absolute
        )
    return Trajectory(
        params=params, p=p, births=births, mature=mature,
        t0=history.step_index / p,
    )


def advance_window(
    model: DiscreteModel,
    values: np.ndarray,
    steps: int | None = None,
    start_phase: int = 0,
) -> np.ndarray:
    """Advance a 2p+1-sample window of consecutive mature values.

    The window spans two years of mature values at step resolution; its
    entries determine the birth ring over the same span, so the window
    propagates autonomously. The default advance of 2p steps is the
    two-year return map whose fixed points and differential the analysis
    module studies. start_phase gives the phase (absolute step mod p) of
    the step that produced entry 1; it stays 0 for windows taken at whole
    years.

    Args:
        model: discrete model.
        values: 2p+1 consecutive mature samples.
        steps: number of steps to advance, default 2p.
        start_phase: phase offset of the window, in steps.

    Returns:
        The advanced window, same shape.
    """
    p = model.p
    twop = 2 * p
    values = np.asarray(values, dtype=float)
    if values.shape != (twop + 1,):
        raise ValueError(f"window must have length {twop + 1}, got {values.shape}")
    if steps is None:
        steps = twop
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    use_quad, n1, n2, qa, qb, qc = model.fecundity_constants
    params = model.params
    m0 = params.m0

    ring_values = values[1:]
    rates = np.full(twop, m0)
    if use_quad:
        quad = (ring_values > n1) & (ring_values <= n2)
        vq = ring_values[quad]
        rates[quad] = m0 * (qa + qb * vq + qc * vq * vq)
        power = ring_values > n2
    else:
        power = ring_values > n1
    vp = ring_values[power]
    rates[power] = m0 * vp ** (-params.gamma)
    phases = (start_phase + np.arange(twop)) % p
    ring = rates * ring_values * model.seasonal_weights[phases] / p

    births = np.zeros(twop + steps)
    births[:twop] = ring
    mature = np.empty(steps)
    bad = _backend.run_steps(
        births, model.survival_reversed, model.seasonal_weights,
        p, steps, start_phase,
        m0, params.gamma, use_quad, n1, n2, qa, qb, qc,
        model.overflow_limit, mature,
    )
    if bad >= 0:
        raise NumericError(f"window advance overflow at relative step {int(bad)}")
    out = np.empty(twop + 1)
    if steps <= twop:
        out[: twop + 1 - steps] = values[steps:]
        out[twop + 1 - steps:] = mature
    else:
        out[:] = mature[steps - twop - 1:]
    return out


def annual_samples(traj: Trajectory, year_range: tuple[int, int], delta_t: float = 0.0) -> np.ndarray:
    """Mature population at one instant per year over [lo, hi] inclusive.

    Year n is sampled at step round((n + delta_t) * p); delta_t = 0 is the
    year boundary at the end of summer, and negative values sample earlier
    in the year (delta_t near -0.4 sits close to the population peak).

    Raises:
        IndexError: if any sampled instant falls outside the recorded horizon.
    """
    lo, hi = year_range
    if hi < lo:
        raise ValueError(f"empty year range ({lo}, {hi})")
    if not -1.0 <= delta_t <= 1.0:
        raise ValueError(f"delta_t must be within [-1, 1], got {delta_t}")
    targets = np.rint((np.arange(lo, hi + 1) + delta_t) * traj.p).astype(np.int64)
    indices = targets - traj.start_step - 1
    if len(indices) and (indices[0] < 0 or indices[-1] >= len(traj.mature)):
        raise IndexError(
            f"sampling years [{lo}, {hi}] with delta_t={delta_t} falls outside "
            f"the recorded horizon of {len(traj.mature)} steps from t0={traj.t0}"
        )
    return traj.mature[indices]


def _open_out(path_or_file) -> tuple[IO[str], bool]:
    if hasattr(path_or_file, "write"):
        return path_or_file, False
    return open(path_or_file, "w", encoding="utf-8"), True


def trajectory_to_csv(traj: Trajectory, path_or_file, header_lines: list[str] | None = None) -> None:
    """Write one row per computed step: step,year_phase,births,mature.

    step is the absolute 0-based step index; year_phase is the decimal
    year of the row's mature value. Floats are written with exact
    round-trip repr.
    """
    out, owned = _open_out(path_or_file)
    try:
        for line in header_lines or []:
            out.write(line + "\n")
        out.write("step,year_phase,births,mature\n")
        start = traj.start_step
        twop = 2 * traj.p
        births = traj.births.tolist()
        mature = traj.mature.tolist()
        inv_p = 1.0 / traj.p
        rows = []
        for i in range(len(mature)):
            rows.append(
                f"{start + i},{(start + i + 1) * inv_p!r},{births[twop + i]!r},{mature[i]!r}\n"
            )
            if len(rows) >= 65536:
                out.write("".join(rows))
                rows.clear()
        out.write("".join(rows))
    finally:
        if owned:
            out.close()
