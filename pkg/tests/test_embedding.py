"""Tests for delay embedding, state windows, and projection diagnostics."""

from __future__ import annotations

import io

import numpy as np
import pytest

from volesim import (
    BirthHistory,
    DiscreteModel,
    ModelParams,
    Trajectory,
    UnsupportedParameterError,
    annual_samples,
    cloud_to_csv,
    distortion_to_csv,
    embed3,
    initial_condition,
    neighborhood_divergence,
    normalized_distance,
    normalized_norm,
    projection_distortion,
    run,
    state_window,
)

SYN_PARAMS = ModelParams(a0=0.15, rho=0.30, eps_season=0.1)


def synthetic_trajectory(mature: np.ndarray) -> Trajectory:
    mature = np.asarray(mature, dtype=float)
    return Trajectory(
        params=SYN_PARAMS,
        p=100,
        births=np.zeros(200 + len(mature)),
        mature=mature,
    )


# --- norms --------------------------------------------------------------


@pytest.mark.parametrize("norm", ["l1", "l2", "linf"])
def test_normalized_norm_all_ones_is_one(norm):
    assert normalized_norm(np.ones(201), norm) == 1.0
    assert normalized_norm(np.ones(7), norm) == 1.0


def test_normalized_norm_orderings():
    v = np.zeros(100)
    v[0] = 1.0
    assert normalized_norm(v, "l1") == pytest.approx(0.01)
    assert normalized_norm(v, "l2") == pytest.approx(0.1)
    assert normalized_norm(v, "linf") == 1.0
    with pytest.raises(ValueError):
        normalized_norm(v, "l3")


def test_normalized_distance_symmetric():
    a = np.array([1.0, 2.0, 3.0])
    b = np.array([2.0, 2.0, 1.0])
    assert normalized_distance(a, b, "linf") == 2.0
    assert normalized_distance(b, a, "linf") == 2.0
    assert normalized_distance(a, a, "l2") == 0.0


# --- embed3 -------------------------------------------------------------


def test_embed3_matches_annual_samples(chaotic_traj):
    cloud = embed3(chaotic_traj, (101, 200))
    samples = annual_samples(chaotic_traj, (101, 202))
    assert cloud.points.shape == (100, 3)
    assert np.array_equal(cloud.points[:, 0], samples[:-2])
    assert np.array_equal(cloud.points[:, 1], samples[1:-1])
    assert np.array_equal(cloud.points[:, 2], samples[2:])
    assert np.array_equal(cloud.times, np.arange(101, 201))
    assert len(cloud) == 100


def test_embed3_constant_series_on_diagonal():
    traj = synthetic_trajectory(np.full(600, 2.5))
    cloud = embed3(traj, (1, 2))
    assert np.array_equal(cloud.points, np.full((2, 3), 2.5))


def test_embed3_period_two_gives_two_points():
    mature = np.ones(900)
    for t in range(1, 10):
        mature[t * 100 - 1] = 3.0 if t % 2 == 0 else 1.0
    traj = synthetic_trajectory(mature)
    cloud = embed3(traj, (1, 5))
    distinct = np.unique(cloud.points, axis=0)
    assert distinct.shape == (2, 3)
    assert {tuple(row) for row in distinct} == {(1.0, 3.0, 1.0), (3.0, 1.0, 3.0)}


def test_embed3_log_scale(chaotic_traj):
    lin = embed3(chaotic_traj, (101, 300))
    log = embed3(chaotic_traj, (101, 300), scale="log")
    assert len(log) == len(lin)
    assert np.array_equal(log.points, np.log10(lin.points))
    assert log.scale == "log"


def test_embed3_log_rejects_nonpositive():
    traj = synthetic_trajectory(np.zeros(600))
    with pytest.raises(ValueError):
        embed3(traj, (1, 2), scale="log")


def test_embed3_requires_two_extra_years(chaotic_traj):
    last = 3000
    with pytest.raises(IndexError):
        embed3(chaotic_traj, (101, last - 1))
    embed3(chaotic_traj, (101, last - 2))


# --- state windows ------------------------------------------------------


def test_state_window_shape_and_shadow(chaotic_traj):
    w = state_window(chaotic_traj, 150)
    assert w.values.shape == (201,)
    cloud = embed3(chaotic_traj, (150, 150))
    assert np.array_equal(w.shadow3, cloud.points[0])


def test_state_windows_overlap_by_one_year(chaotic_traj):
    w0 = state_window(chaotic_traj, 150)
    w1 = state_window(chaotic_traj, 151)
    assert np.array_equal(w0.values[100:], w1.values[:101])


def test_state_window_requires_standard_grid():
    params = ModelParams(a0=0.15, rho=0.30, eps_season=0.1)
    model = DiscreteModel.build(params, p=50)
    traj = run(model, initial_condition("II", seed=1, model=model), years=10)
    with pytest.raises(UnsupportedParameterError):
        state_window(traj, 3)


def test_state_window_coverage_checked(chaotic_traj):
    with pytest.raises(IndexError):
        state_window(chaotic_traj, 2999)
    state_window(chaotic_traj, 2998)


# --- projection distortion ----------------------------------------------


def test_projection_distortion_finite_on_chaotic(chaotic_traj):
    recs = projection_distortion(
        chaotic_traj, [500, 700], r=0.1, year_range=(101, 1500)
    )
    assert [r.center for r in recs] == [500, 700]
    for rec in recs:
        assert rec.ball_count > 0
        assert np.isfinite(rec.sup_ratio)
        assert rec.sup_ratio >= 1.0


def test_projection_distortion_flags_collapsed_pairs():
    # windows of years 2, 3, 4 are identical; the bump at step 150 sits
    # inside year 1's window but away from its delay coordinates, so every
    # pair is coincident in 3-D while year 1's window differs
    mature = np.ones(600)
    mature[150] = 1.02
    traj = synthetic_trajectory(mature)
    rec = projection_distortion(traj, [1], r=0.1)[0]
    assert rec.ball_count == 3
    assert rec.sup_ratio == float("inf")
    assert rec.excluded_pairs == 3

    rec2 = projection_distortion(traj, [2], r=0.1)[0]
    assert rec2.sup_ratio == float("inf")


def test_projection_distortion_empty_ball():
    traj = synthetic_trajectory(np.arange(600, dtype=float))
    rec = projection_distortion(traj, [2], r=1e-6)[0]
    assert np.isnan(rec.sup_ratio)
    assert rec.ball_count == 0
    assert rec.excluded_pairs == 0


def test_projection_distortion_validates_arguments(chaotic_traj):
    with pytest.raises(ValueError):
        projection_distortion(chaotic_traj, [500], r=0.0)
    with pytest.raises(ValueError):
        projection_distortion(chaotic_traj, [50], r=0.1, year_range=(101, 1000))
    params = ModelParams(a0=0.15, rho=0.30, eps_season=0.1)
    model = DiscreteModel.build(params, p=50)
    coarse = run(model, initial_condition("II", seed=1, model=model), years=10)
    with pytest.raises(UnsupportedParameterError):
        projection_distortion(coarse, [3], r=0.1)


# --- neighborhood divergence --------------------------------------------


def test_neighborhood_divergence_center_curve_zero(chaotic_traj):
    div = neighborhood_divergence(chaotic_traj, 500, r=0.5, horizon=3)
    assert 500 in div.member_times
    row = int(np.flatnonzero(div.member_times == 500)[0])
    assert np.array_equal(div.curves[row], np.zeros_like(div.offsets))
    assert div.offsets[0] == -3.0
    assert div.offsets[-1] == 3.0
    assert len(div.offsets) == 601
    assert div.curves.shape == (len(div.member_times), 601)


def test_neighborhood_divergence_periodic_members_identical():
    # yearly alternation: same-parity windows coincide exactly
    mature = np.where((np.arange(3000) // 100) % 2 == 0, 1.0, 3.0)
    traj = synthetic_trajectory(mature)
    div = neighborhood_divergence(traj, 10, r=0.01, horizon=2)
    assert len(div.member_times) > 1
    assert np.all(div.member_times % 2 == 0)
    assert np.all(div.curves == 0.0)


def test_neighborhood_divergence_validates_arguments(chaotic_traj):
    with pytest.raises(ValueError):
        neighborhood_divergence(chaotic_traj, 500, r=-1.0)
    with pytest.raises(ValueError):
        neighborhood_divergence(chaotic_traj, 500, horizon=0)
    with pytest.raises(IndexError):
        neighborhood_divergence(chaotic_traj, 2995, horizon=20)


# --- CSV ----------------------------------------------------------------


def test_cloud_to_csv_round_trip(chaotic_traj):
    cloud = embed3(chaotic_traj, (101, 130))
    buffer = io.StringIO()
    cloud_to_csv(cloud, buffer, header_lines=["# seed=29"])
    lines = buffer.getvalue().splitlines()
    assert lines[0] == "# seed=29"
    assert lines[1] == "year,x,y,z"
    rows = [line.split(",") for line in lines[2:]]
    assert len(rows) == 30
    years = np.array([int(r[0]) for r in rows])
    points = np.array([[float(r[1]), float(r[2]), float(r[3])] for r in rows])
    assert np.array_equal(years, cloud.times)
    assert np.array_equal(points, cloud.points)


def test_distortion_to_csv_format(chaotic_traj):
    recs = projection_distortion(chaotic_traj, [500], r=0.1, year_range=(101, 1500))
    buffer = io.StringIO()
    distortion_to_csv(recs, buffer)
    lines = buffer.getvalue().splitlines()
    assert lines[0] == "center,sup_ratio,ball_count"
    center, sup, count = lines[1].split(",")
    assert int(center) == 500
    assert float(sup) == recs[0].sup_ratio
    assert int(count) == recs[0].ball_count
