"""Property suite for the continuous-model kernels.

The whole module doubles as the kernel acceptance gate and must stay
fast; keep hypothesis example counts bounded.
"""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from volesim import (
    ModelParams,
    NoEquilibriumError,
    UnsupportedParameterError,
    characteristic_value,
    equilibrium_density,
    fecundity_c0,
    fecundity_c1,
    fecundity_coefficients,
    gamma_thresholds,
    population_bounds,
    season_c0,
    season_c1,
    survival_rate,
)

FAST = settings(max_examples=60, deadline=None)

gammas = st.floats(min_value=2.05, max_value=12.0, allow_nan=False)
densities = st.floats(min_value=0.0, max_value=50.0, allow_nan=False)
phases = st.floats(min_value=0.0, max_value=1.0, exclude_max=True, allow_nan=False)


# --- survival -----------------------------------------------------------


def test_survival_endpoints_and_midpoint():
    assert survival_rate(0.0, 2.0) == 1.0
    assert survival_rate(2.0, 2.0) == 0.0
    assert survival_rate(1.0, 2.0) == pytest.approx(0.5)


@FAST
@given(
    a=st.floats(min_value=0.0, max_value=2.0),
    b=st.floats(min_value=0.0, max_value=2.0),
)
def test_survival_monotone_nonincreasing(a, b):
    lo, hi = sorted((a, b))
    assert survival_rate(lo, 2.0) >= survival_rate(hi, 2.0)


# --- fecundity ----------------------------------------------------------


def test_fecundity_c0_branches():
    assert fecundity_c0(0.5, 50.0, 8.25) == 50.0
    assert fecundity_c0(1.0, 50.0, 8.25) == 50.0
    assert fecundity_c0(2.0, 50.0, 8.25) == pytest.approx(50.0 * 2.0 ** -8.25)


@FAST
@given(gamma=gammas)
def test_fecundity_junction_locations(gamma):
    curve = fecundity_coefficients(gamma)
    n2 = 2.0 ** (1.0 / gamma)
    assert curve.n2 == pytest.approx(n2, rel=1e-12)
    assert curve.n1 == pytest.approx(n2 * (1.0 - 2.0 / gamma), rel=1e-12)
    assert 0.0 < curve.n1 < curve.n2


def test_fecundity_coefficients_reject_low_gamma():
    with pytest.raises(UnsupportedParameterError):
        fecundity_coefficients(2.0)
    with pytest.raises(UnsupportedParameterError):
        fecundity_coefficients(1.5)


@FAST
@given(gamma=gammas)
def test_fecundity_c1_junction_derivative_jump(gamma):
    # one-sided forward/backward differences; jump bound 1e-6 * m0.
    # h balances quadratic truncation against float branch mismatch.
    m0 = 50.0
    h = 3e-8
    curve = fecundity_coefficients(gamma)
    for n_star in (curve.n1, curve.n2):
        left = (fecundity_c1(n_star, m0, gamma) - fecundity_c1(n_star - h, m0, gamma)) / h
        right = (fecundity_c1(n_star + h, m0, gamma) - fecundity_c1(n_star, m0, gamma)) / h
        assert abs(left - right) < 1e-6 * m0


@FAST
@given(gamma=gammas, n=densities)
def test_fecundity_c1_matches_c0_outside_blend(gamma, n):
    curve = fecundity_coefficients(gamma)
    assume(n <= curve.n1 or n >= curve.n2)
    assert fecundity_c1(n, 50.0, gamma) == fecundity_c0(n, 50.0, gamma)


@FAST
@given(gamma=gammas)
def test_fecundity_c1_continuous_at_junctions(gamma):
    m0 = 50.0
    curve = fecundity_coefficients(gamma)
    for n_star in (curve.n1, curve.n2):
        inside = fecundity_c1(n_star + 1e-12, m0, gamma)
        outside = fecundity_c1(n_star - 1e-12, m0, gamma)
        assert abs(inside - outside) < 1e-9 * m0


@pytest.mark.parametrize("gamma", [2.5, 3.0, 5.0, 8.25])
def test_fecundity_c1_monotone_nonincreasing(gamma):
    grid = np.linspace(0.0, 10.0, 10_000)
    values = np.array([fecundity_c1(n, 50.0, gamma) for n in grid])
    assert np.all(np.diff(values) <= 1e-12)


@FAST
@given(gamma=gammas, n=densities, m0=st.floats(min_value=1.0, max_value=100.0))
def test_fecundity_scales_linearly_in_m0(gamma, n, m0):
    base = fecundity_c1(n, 1.0, gamma)
    assert fecundity_c1(n, m0, gamma) == pytest.approx(m0 * base, rel=1e-12, abs=1e-300)


# --- season -------------------------------------------------------------


def test_season_c0_branches():
    assert season_c0(0.0, 0.41) == 0.0
    assert season_c0(0.40999, 0.41) == 0.0
    assert season_c0(0.41, 0.41) == 1.0
    assert season_c0(0.99, 0.41) == 1.0


@FAST
@given(t=phases, rho=st.floats(min_value=0.05, max_value=0.9))
def test_season_c0_periodic(t, rho):
    # jump phases excluded: rounding t+1 can cross the discontinuity
    assume(abs(t - rho) > 1e-9 and t > 1e-9 and t < 1.0 - 1e-9)
    assert season_c0(t + 1.0, rho) == season_c0(t, rho)


@FAST
@given(
    t=phases,
    rho=st.floats(min_value=0.05, max_value=0.9),
    eps=st.floats(min_value=0.0, max_value=0.2),
)
def test_season_c1_bounded(t, rho, eps):
    assert 0.0 <= season_c1(t, rho, eps) <= 1.0


@FAST
@given(
    t=phases,
    rho=st.floats(min_value=0.05, max_value=0.9),
    eps=st.floats(min_value=0.01, max_value=0.2),
)
def test_season_c1_periodic(t, rho, eps):
    # continuous profile: the periodicity gap is bounded by the ramp slope
    # times one unit of float rounding
    value = season_c1(t, rho, eps)
    assert abs(season_c1(t + 1.0, rho, eps) - value) <= 1e-12


@FAST
@given(t=phases, rho=st.floats(min_value=0.05, max_value=0.9))
def test_season_c1_zero_width_degenerates_to_c0(t, rho):
    # equality away from the two jump phases
    assume(abs(t - rho) > 1e-9 and t > 1e-9 and t < 1.0 - 1e-9)
    assert season_c1(t, rho, 0.0) == season_c0(t, rho)


@pytest.mark.parametrize("rho,eps", [(0.3, 0.1), (0.41, 0.05), (0.2, 0.15)])
def test_season_c1_summer_plateau_length(rho, eps):
    # value 1 on an interval of length 1 - rho - eps
    n = 20_000
    grid = (np.arange(n) + 0.5) / n
    values = np.array([season_c1(t, rho, eps) for t in grid])
    measured = np.count_nonzero(values >= 1.0 - 1e-12) / n
    assert measured == pytest.approx(1.0 - rho - eps, abs=2.0 / n)


# --- equilibrium and bounds ---------------------------------------------


def test_equilibrium_known_value():
    params = ModelParams(a0=0.18, a1=2.0, m0=50.0, gamma=5.0)
    expected = (50.0 * (2.0 - 0.18) ** 2 / 4.0) ** (1.0 / 5.0)
    assert equilibrium_density(params) == pytest.approx(expected, rel=1e-14)


@FAST
@given(
    a0=st.floats(min_value=0.05, max_value=0.45),
    gamma=st.floats(min_value=2.05, max_value=12.0),
    m0=st.floats(min_value=20.0, max_value=80.0),
)
def test_equilibrium_self_consistent(a0, gamma, m0):
    params = ModelParams(a0=a0, a1=2.0, m0=m0, gamma=gamma)
    try:
        n_eq = equilibrium_density(params)
    except NoEquilibriumError:
        assume(False)
    integral = (params.a1 - params.a0) ** 2 / (2.0 * params.a1)
    reproduced = fecundity_c1(n_eq, m0, gamma) * n_eq * integral
    assert reproduced == pytest.approx(n_eq, rel=1e-10)


def test_equilibrium_requires_enough_fecundity():
    with pytest.raises(NoEquilibriumError):
        equilibrium_density(ModelParams(a0=0.18, a1=2.0, m0=2.0, gamma=5.0))


@FAST
@given(
    a0=st.floats(min_value=0.05, max_value=0.45),
    rho=st.floats(min_value=0.0, max_value=0.45),
    gamma=st.floats(min_value=1.0, max_value=12.0),
    m0=st.floats(min_value=20.0, max_value=80.0),
)
def test_population_bounds_ordering(a0, rho, gamma, m0):
    params = ModelParams(a0=a0, a1=2.0, m0=m0, gamma=gamma, rho=rho)
    bounds = population_bounds(params)
    assert bounds.n_max > 0.0
    assert bounds.lower >= 0.0
    assert bounds.lipschitz == pytest.approx(m0 * (3.0 - a0 / 2.0), rel=1e-12)
    if params.satisfies_theory_conditions():
        assert bounds.lower < bounds.n_max


def test_bounds_closed_forms():
    params = ModelParams(a0=0.18, a1=2.0, m0=50.0, gamma=8.25, rho=0.41)
    bounds = population_bounds(params)
    n_max = 50.0 * (2.0 / 2.0) * (1.0 - 0.18 / 2.0) ** 2
    assert bounds.n_max == pytest.approx(n_max, rel=1e-12)
    c0 = (1.0 - 0.41) * (1.0 - (1.0 + 0.41 + 2.0 * 0.18) / 4.0)
    assert bounds.c0 == pytest.approx(c0, rel=1e-12)
    assert bounds.lower == pytest.approx(
        (c0 * 50.0 / 2.0) * n_max ** (1.0 - 8.25), rel=1e-12
    )


# --- characteristic function and thresholds -----------------------------


def test_characteristic_small_argument_limit():
    a0, a1 = 0.18, 2.0
    limit = (a1 - a0) ** 2 / (2.0 * a1)
    assert characteristic_value(0.0, a0, a1) == pytest.approx(limit, rel=1e-12)
    assert characteristic_value(9.9e-9, a0, a1) == pytest.approx(limit, abs=1e-7)


@pytest.mark.parametrize("lam", [0.5, 3.0, 0.7 - 1.3j, -2.0j, -11.5j])
def test_characteristic_matches_survival_transform(lam):
    # independent oracle: quadrature of the defining weighted integral
    from scipy.integrate import quad

    a0, a1 = 0.18, 2.0

    def integrand_re(a):
        return ((1.0 - a / a1) * np.exp(-lam * a)).real

    def integrand_im(a):
        return ((1.0 - a / a1) * np.exp(-lam * a)).imag

    re, _ = quad(integrand_re, a0, a1, epsabs=1e-13, epsrel=1e-13)
    im, _ = quad(integrand_im, a0, a1, epsabs=1e-13, epsrel=1e-13)
    assert characteristic_value(lam, a0, a1) == pytest.approx(
        complex(re, im), rel=1e-9, abs=1e-11
    )


def test_gamma_thresholds_strictly_increasing():
    values = gamma_thresholds(0.18, 2.0, count=2)
    assert len(values) == 2
    assert values[0] < values[1]
    assert all(v > 1.0 for v in values)


def test_gamma_thresholds_exhausted_scan_raises():
    from volesim import NumericError

    with pytest.raises(NumericError):
        gamma_thresholds(0.18, 2.0, count=10)


def test_gamma_thresholds_resolution_invariant():
    coarse = gamma_thresholds(0.18, 2.0, count=2)
    fine = gamma_thresholds(0.18, 2.0, count=2, scan_step=5e-4)
    assert max(abs(a - b) for a, b in zip(coarse, fine)) < 1e-6


def test_gamma_thresholds_weak_a0_dependence():
    base = gamma_thresholds(0.18, 2.0, count=1)[0]
    shifted = gamma_thresholds(0.15, 2.0, count=1)[0]
    assert abs(base - shifted) / base < 0.25


# --- parameter validation -----------------------------------------------


def test_params_validation():
    with pytest.raises(ValueError):
        ModelParams(a0=0.0, a1=2.0)
    with pytest.raises(ValueError):
        ModelParams(a0=2.5, a1=2.0)
    with pytest.raises(ValueError):
        ModelParams(a0=0.15, a1=2.0, m0=-1.0)
    with pytest.raises(ValueError):
        ModelParams(a0=0.15, a1=2.0, rho=1.0)
    with pytest.raises(ValueError):
        ModelParams(a0=0.15, a1=2.0, eps_season=-0.1)


def test_effective_ramp_width_clamped():
    assert ModelParams(a0=0.15, rho=0.3, eps_season=0.5).eps_effective == pytest.approx(0.3)
    assert ModelParams(a0=0.15, rho=0.9, eps_season=0.5).eps_effective == pytest.approx(
        1.0 - 0.9
    )
    assert ModelParams(a0=0.15, rho=0.3, eps_season=0.05).eps_effective == pytest.approx(0.05)


def test_theory_conditions_predicate():
    assert ModelParams(a0=0.15, rho=0.30, eps_season=0.1, gamma=8.25).satisfies_theory_conditions()
    assert not ModelParams(a0=0.15, gamma=0.5).satisfies_theory_conditions()
    assert not ModelParams(a0=0.15, m0=2.0, gamma=5.0).satisfies_theory_conditions()


def test_math_module_available():
    # anchors the import; keeps the suite honest about its dependencies
    assert math.isfinite(survival_rate(0.3, 2.0))
