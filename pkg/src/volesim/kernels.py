"""Pure model kernels and closed-form theory quantities.

The continuous model tracks a mature population N(t) driven by delayed
births: individuals born a years ago contribute to N(t) with survival
weight S(a) on the age window [a0, a1], reproduce at a density-dependent
rate m(N), and only during the breeding season. This module holds the
scalar building blocks (survival, the two fecundity curves, the two
seasonal profiles) and the quantities the linearized theory predicts from
them (equilibrium density, population bounds, characteristic function,
stability thresholds in the density-dependence exponent).

All functions are pure and reentrant.
"""

from __future__ import annotations

import dataclasses
import functools
import warnings

import numpy as np
from scipy.optimize import brentq

from .errors import NoEquilibriumError, NumericError, UnsupportedParameterError

__all__ = [
    "ModelParams",
    "FecundityCurve",
    "TheoryBounds",
    "survival_rate",
    "fecundity_c0",
    "fecundity_coefficients",
    "fecundity_c1",
    "season_c0",
    "season_c1",
    "equilibrium_density",
    "population_bounds",
    "characteristic_value",
    "gamma_thresholds",
]

# Below this modulus the 1/lambda^2 closed form of the characteristic
# integral cancels catastrophically; the analytic limit value is used.
SMALL_LAMBDA = 1e-8

# Frequency scan used to isolate characteristic roots: simple, well
# separated roots up to the cutoff, located by sign change then bisection.
ROOT_SCAN_MAX = 50.0
ROOT_SCAN_STEP = 1e-3
ROOT_XTOL = 1e-10


@dataclasses.dataclass(frozen=True)
class ModelParams:
    """Constants of the continuous model.

    Attributes:
        a0: maturation age in years.
        a1: maximal age in years.
        m0: fecundity ceiling in births per female per year.
        gamma: dimensionless density-dependence exponent.
        rho: winter length as a fraction of the year.
        eps_season: seasonal ramp width as a fraction of the year; the
            effective width is clamped to min(eps_season, rho, 1 - rho).
        fecundity_smooth: use the once-differentiable fecundity curve
            (falls back to the piecewise-constant one when gamma <= 2).
        season_smooth: use the cosine-ramped seasonal profile.
    """

    a0: float
    a1: float = 2.0
    m0: float = 50.0
    gamma: float = 8.25
    rho: float = 0.0
    eps_season: float = 0.0
    fecundity_smooth: bool = True
    season_smooth: bool = True

    def __post_init__(self) -> None:
        if not 0.0 < self.a0 < self.a1:
            raise ValueError(f"require 0 < a0 < a1, got a0={self.a0}, a1={self.a1}")
        if self.m0 <= 0.0:
            raise ValueError(f"require m0 > 0, got {self.m0}")
        if self.gamma <= 0.0:
            raise ValueError(f"require gamma > 0, got {self.gamma}")
        if not 0.0 <= self.rho < 1.0:
            raise ValueError(f"require 0 <= rho < 1, got {self.rho}")
        if self.eps_season < 0.0:
            raise ValueError(f"require eps_season >= 0, got {self.eps_season}")

    @property
    def eps_effective(self) -> float:
        """Seasonal ramp width actually used by every consumer."""
        return min(self.eps_season, self.rho, 1.0 - self.rho)

    def satisfies_theory_conditions(self) -> bool:
        """Whether the standing assumptions of the bound theory hold.

        Checks gamma >= 1, a1 >= max(2*a0, a0 + 1), c0 * m0 > 2 and
        rho + eps < 1. Violations degrade the guarantees of
        :func:`population_bounds` but are not errors.
        """
        eps = self.eps_effective
        if self.gamma < 1.0:
            return False
        if self.a1 < max(2.0 * self.a0, self.a0 + 1.0):
            return False
        if self.rho + eps >= 1.0:
            return False
        c0 = (1.0 - self.rho - eps) * (1.0 - (1.0 + self.rho + eps + 2.0 * self.a0) / (2.0 * self.a1))
        return c0 * self.m0 > 2.0


@dataclasses.dataclass(frozen=True)
class FecundityCurve:
    """Coefficients of the once-differentiable fecundity curve.

    The curve equals the ceiling below n1, the quadratic
    m0 * (a + b*n + c*n^2) on (n1, n2], and the power law m0 * n^(-gamma)
    beyond n2, with matching values and derivatives at both junctions.

    Attributes:
        n1: lower junction density.
        n2: upper junction density, equal to 2**(1/gamma).
        a: dimensionless quadratic coefficient.
        b: linear coefficient, per density.
        c: quadratic coefficient, per squared density; always <= 0.
    """

    n1: float
    n2: float
    a: float
    b: float
    c: float


@dataclasses.dataclass(frozen=True)
class TheoryBounds:
    """Closed-form bounds on long-run population values.

    Attributes:
        n_max: upper bound on the mature population.
        c0: integral constant entering the lower bound, in years.
        lower: lower bound on post-transient population values.
        lipschitz: bound on the time derivative of the population.
    """

    n_max: float
    c0: float
    lower: float
    lipschitz: float


def survival_rate(a: float, a1: float) -> float:
    """Fraction of a cohort still alive at age a, linear down to age a1.

    Args:
        a: age in years, within [0, a1].
        a1: maximal age in years.

    Returns:
        1 - a/a1, in [0, 1].

    Raises:
        ValueError: if a is outside [0, a1].
    """
    if not 0.0 <= a <= a1:
        raise ValueError(f"age {a} outside [0, {a1}]")
    return 1.0 - a / a1


def fecundity_c0(n: float, m0: float, gamma: float) -> float:
    """Piecewise-constant-then-power fecundity, continuous at n = 1.

    Args:
        n: mature population density, >= 0.
        m0: fecundity ceiling.
        gamma: density-dependence exponent.

    Returns:
        m0 for n <= 1, else m0 * n**(-gamma).
    """
    if n < 0.0:
        raise ValueError(f"density must be nonnegative, got {n}")
    if n <= 1.0:
        return m0
    return m0 * n ** (-gamma)


@functools.lru_cache(maxsize=128)
def fecundity_coefficients(gamma: float) -> FecundityCurve:
    """Closed-form coefficients of the once-differentiable fecundity curve.

    The five matching conditions (value and slope at both junctions, ceiling
    value below n1) admit the closed-form solution returned here; the
    construction degenerates when gamma <= 2 because n1 becomes nonpositive.

    Args:
        gamma: density-dependence exponent, > 2.

    Returns:
        The coefficient bundle for this gamma.

    Raises:
        UnsupportedParameterError: if gamma <= 2; callers should use
            :func:`fecundity_c0` in that regime.
    """
    if gamma <= 2.0:
        raise UnsupportedParameterError(
            f"smooth fecundity needs gamma > 2, got {gamma}; use fecundity_c0"
        )
    n2 = 2.0 ** (1.0 / gamma)
    n1 = n2 * (1.0 - 2.0 / gamma)
    a = 0.5 * (1.0 + gamma - gamma * gamma / 4.0)
    b = 2.0 ** (-1.0 / gamma) * (gamma * gamma / 4.0 - gamma / 2.0)
    c = -gamma * gamma / (8.0 * 4.0 ** (1.0 / gamma))
    return FecundityCurve(n1=n1, n2=n2, a=a, b=b, c=c)


def fecundity_c1(n: float, m0: float, gamma: float) -> float:
    """Once-differentiable fecundity curve.

    Equals the ceiling m0 below the lower junction, a quadratic blend on
    the junction interval, and m0 * n**(-gamma) beyond; globally continuous
    with a continuous first derivative.

    Args:
        n: mature population density, >= 0.
        m0: fecundity ceiling.
        gamma: density-dependence exponent, > 2.

    Returns:
        Fecundity in births per female per year.

    Raises:
        UnsupportedParameterError: if gamma <= 2.
    """
    if n < 0.0:
        raise ValueError(f"density must be nonnegative, got {n}")
    curve = fecundity_coefficients(gamma)
    if n <= curve.n1:
        return m0
    if n <= curve.n2:
        return m0 * (curve.a + curve.b * n + curve.c * n * n)
    return m0 * n ** (-gamma)


def season_c0(t: float, rho: float) -> float:
    """Hard on/off breeding season: 0 during winter [0, rho), 1 after.

    The phase t is reduced modulo 1; the value exactly at t = rho is 1
    (closed on the summer side).
    """
    t = t % 1.0
    return 0.0 if t < rho else 1.0


def season_c1(t: float, rho: float, eps: float) -> float:
    """Breeding season with cosine ramps of width eps at both transitions.

    The year starts at the end of summer: the profile ramps down around
    t = 0, stays 0 through the winter, ramps up around t = rho, and holds 1
    on the summer plateau. The ramp width is clamped internally to
    min(eps, rho, 1 - rho); eps = 0 reproduces :func:`season_c0`.

    Args:
        t: year phase, reduced modulo 1.
        rho: winter length as a fraction of the year.
        eps: requested ramp width as a fraction of the year.

    Returns:
        Breeding intensity in [0, 1], periodic with period 1.
    """
    t = t % 1.0
    eps = min(eps, rho, 1.0 - rho)
    if eps <= 0.0:
        return 0.0 if t < rho else 1.0
    if t < eps / 2.0:
        return 0.5 * (1.0 + np.cos(np.pi * (t / eps + 0.5)))
    if t < rho - eps / 2.0:
        return 0.0
    if t < rho + eps / 2.0:
        return 0.5 * (1.0 + np.cos(np.pi * ((t - rho) / eps - 0.5)))
    if t < 1.0 - eps / 2.0:
        return 1.0
    return 0.5 * (1.0 + np.cos(np.pi * ((t - 1.0) / eps + 0.5)))


def equilibrium_density(params: ModelParams) -> float:
    """Positive equilibrium of the non-seasonal model (rho ignored).

    Solves the stationarity relation N = m(N) * N * integral of the
    survival rate over [a0, a1]; the solution lands on the power branch of
    either fecundity curve, giving the closed form
    [m0 * (a1 - a0)^2 / (2 a1)]**(1/gamma).

    Raises:
        NoEquilibriumError: when 2*a1/(a1 - a0)^2 > m0/2, in which case no
            positive equilibrium exists on the power branch.
    """
    a0, a1, m0 = params.a0, params.a1, params.m0
    survival_integral = (a1 - a0) ** 2 / (2.0 * a1)
    if 2.0 * a1 / (a1 - a0) ** 2 > m0 / 2.0:
        raise NoEquilibriumError(
            f"no positive equilibrium: 2*a1/(a1-a0)^2 = {2.0 * a1 / (a1 - a0) ** 2:.6g} "
            f"exceeds m0/2 = {m0 / 2.0:.6g}"
        )
    return (m0 * survival_integral) ** (1.0 / params.gamma)


def population_bounds(params: ModelParams) -> TheoryBounds:
    """Closed-form population bounds and the Lipschitz constant.

    The bounds hold after a transient when the theory conditions are
    satisfied; a warning is issued otherwise and the values are still
    returned (they remain well defined, just not guaranteed).
    """
    if not params.satisfies_theory_conditions():
        warnings.warn(
            "theory conditions violated; returned bounds are not guaranteed",
            stacklevel=2,
        )
    a0, a1, m0 = params.a0, params.a1, params.m0
    eps = params.eps_effective
    n_max = m0 * (a1 / 2.0) * (1.0 - a0 / a1) ** 2
    c0 = (1.0 - params.rho - eps) * (1.0 - (1.0 + params.rho + eps + 2.0 * a0) / (2.0 * a1))
    lower = (c0 * m0 / 2.0) * n_max ** (1.0 - params.gamma)
    lipschitz = m0 * (3.0 - a0 / a1)
    return TheoryBounds(n_max=n_max, c0=c0, lower=lower, lipschitz=lipschitz)


def _characteristic_closed_form(lam: complex | np.ndarray, a0: float, a1: float):
    """Closed form of the survival-weighted exponential integral.

    Valid away from lambda = 0; vectorizes over numpy arrays.
    """
    inv = 1.0 / lam
    inv2 = inv * inv / a1
    return (inv * (1.0 - a0 / a1) - inv2) * np.exp(-a0 * lam) + inv2 * np.exp(-a1 * lam)


def characteristic_value(lam: complex, a0: float, a1: float) -> complex:
    """Characteristic function: integral of S(a) * exp(-a * lambda) over [a0, a1].

    Uses the exact closed form away from zero and the analytic limit
    (a1 - a0)^2 / (2 a1) below modulus 1e-8, where the closed form loses
    all significant digits to cancellation.
    """
    lam = complex(lam)
    if abs(lam) < SMALL_LAMBDA:
        return complex((a1 - a0) ** 2 / (2.0 * a1))
    return complex(_characteristic_closed_form(lam, a0, a1))


def gamma_thresholds(
    a0: float,
    a1: float,
    count: int = 2,
    scan_step: float = ROOT_SCAN_STEP,
) -> list[float]:
    """Density-dependence thresholds where oscillatory modes destabilize.

    Scans the imaginary axis for the ordered positive roots u of
    Im F(-iu) = 0, keeps the even-indexed roots where Re F(-iu) < 0, and
    returns 1 + [(a1 - a0)^2 / (2 a1)] / |F(-iu)| for the first `count` of
    them, in strictly increasing order.

    Args:
        a0: maturation age.
        a1: maximal age.
        count: number of thresholds requested, >= 1.
        scan_step: frequency scan resolution; the result is stable to 1e-6
            under halving this step.

    Raises:
        NumericError: if fewer than `count` qualifying roots are found in
            the scan range (0, 50].
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    u_grid = np.arange(scan_step, ROOT_SCAN_MAX + scan_step, scan_step)
    values = _characteristic_closed_form(-1j * u_grid, a0, a1)
    imag = values.imag
    sign_change = np.nonzero(np.signbit(imag[:-1]) != np.signbit(imag[1:]))[0]

    def _imag_at(u: float) -> float:
        return _characteristic_closed_form(-1j * u, a0, a1).imag

    roots = [
        brentq(_imag_at, u_grid[i], u_grid[i + 1], xtol=ROOT_XTOL)
        for i in sign_change
    ]
    survival_integral = (a1 - a0) ** 2 / (2.0 * a1)
    thresholds = []
    for index in range(0, len(roots), 2):
        value = _characteristic_closed_form(-1j * roots[index], a0, a1)
        if value.real < 0.0:
            thresholds.append(1.0 + survival_integral / abs(value))
        if len(thresholds) == count:
            break
    if len(thresholds) < count:
        raise NumericError(
            f"found {len(thresholds)} thresholds for u in (0, {ROOT_SCAN_MAX}] "
            f"({len(roots)} characteristic roots); requested {count}"
        )
    thresholds.sort()
    return thresholds
