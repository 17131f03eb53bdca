"""Delay embeddings of trajectories and projection diagnostics.

Annual samples delay-embed into 3-D points (N(t), N(t+1), N(t+2)); the
full per-step state over the same two years forms a 201-sample window on
the standard grid of 100 steps per year. The diagnostics quantify how
faithfully the 3-D projection represents the window dynamics: distance
distortion inside small window balls, and the spread of trajectories
whose windows almost coincide.
"""

from __future__ import annotations

import dataclasses
from typing import IO, Sequence

import numpy as np

from .errors import UnsupportedParameterError
from .simulator import Trajectory, annual_samples

__all__ = [
    "EmbeddedCloud",
    "StateWindow",
    "DistortionRecord",
    "DivergenceCurves",
    "normalized_norm",
    "normalized_distance",
    "embed3",
    "state_window",
    "projection_distortion",
    "neighborhood_divergence",
    "cloud_to_csv",
    "distortion_to_csv",
]

WINDOW_GRID = 100
WINDOW_LENGTH = 2 * WINDOW_GRID + 1

# 3-D distances below this are numerical coincidences; pairs at such
# distance are excluded from distortion ratios and counted separately.
COINCIDENCE_TOL = 1e-12

_NORMS = ("l1", "l2", "linf")


def normalized_norm(v: np.ndarray, norm: str = "linf") -> float:
    """Dimension-normalized vector norm; the all-ones vector has norm 1.

    l1 is the mean absolute entry, l2 the root mean square, linf the
    maximum absolute entry.
    """
    v = np.asarray(v, dtype=float)
    if norm == "l1":
        return float(np.mean(np.abs(v)))
    if norm == "l2":
        return float(np.sqrt(np.mean(v * v)))
    if norm == "linf":
        return float(np.max(np.abs(v)))
    raise ValueError(f"norm must be one of {_NORMS}, got {norm!r}")


def normalized_distance(a: np.ndarray, b: np.ndarray, norm: str = "linf") -> float:
    """Normalized norm of a - b."""
    return normalized_norm(np.asarray(a, dtype=float) - np.asarray(b, dtype=float), norm)


@dataclasses.dataclass(frozen=True, eq=False)
class EmbeddedCloud:
    """Delay-embedded annual samples.

    Attributes:
        points: (n, 3) array; row i is (N(t_i), N(t_i+1), N(t_i+2)), in
            density units or their log10 according to scale.
        times: integer year tag per point, strictly increasing.
        delta_t: sampling offset within the year, in years.
        scale: "linear" or "log".
    """

    points: np.ndarray
    times: np.ndarray
    delta_t: float = 0.0
    scale: str = "linear"

    def __post_init__(self) -> None:
        points = np.asarray(self.points, dtype=float)
        times = np.asarray(self.times, dtype=np.int64)
        if points.ndim != 2 or points.shape[1] != 3:
            raise ValueError(f"points must be (n, 3), got {points.shape}")
        if times.shape != (len(points),):
            raise ValueError("need exactly one time tag per point")
        if len(times) > 1 and not np.all(np.diff(times) > 0):
            raise ValueError("times must be strictly increasing")
        if not np.all(np.isfinite(points)):
            raise ValueError("points must be finite")
        if self.scale not in ("linear", "log"):
            raise ValueError(f"scale must be 'linear' or 'log', got {self.scale!r}")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "times", times)

    def __len__(self) -> int:
        return len(self.points)


@dataclasses.dataclass(frozen=True, eq=False)
class StateWindow:
    """Two years of consecutive per-step mature samples, 201 entries."""

    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.shape != (WINDOW_LENGTH,):
            raise ValueError(f"window must have {WINDOW_LENGTH} entries, got {values.shape}")
        if not np.all(values >= 0.0):
            raise ValueError("window entries must be nonnegative")
        object.__setattr__(self, "values", values)

    @property
    def shadow3(self) -> np.ndarray:
        """The 3-D delay coordinates: entries at years 0, 1, 2."""
        v = self.values
        return np.array([v[0], v[WINDOW_GRID], v[2 * WINDOW_GRID]])


@dataclasses.dataclass(frozen=True)
class DistortionRecord:
    """Projection distortion around one ball center.

    sup_ratio is the largest ratio of 201-D window distance to 3-D point
    distance over unordered pairs in the ball; inf flags a pair of
    distinct windows projecting to coincident 3-D points, nan an empty
    ball. excluded_pairs counts pairs coincident in both spaces.
    """

    center: int
    sup_ratio: float
    ball_count: int
    excluded_pairs: int = 0


@dataclasses.dataclass(frozen=True, eq=False)
class DivergenceCurves:
    """Trajectory spread around the ball members of one window center.

    curves[i, j] is N(member_i + offsets[j]) - N(center + offsets[j]);
    the center itself is a member, with an identically zero curve.
    """

    center: int
    member_times: np.ndarray
    offsets: np.ndarray
    curves: np.ndarray


def embed3(
    traj: Trajectory,
    year_range: tuple[int, int],
    delta_t: float = 0.0,
    scale: str = "linear",
) -> EmbeddedCloud:
    """Delay-embed annual samples over [lo, hi] into 3-D points.

    The point tagged with year t is (N(t), N(t+1), N(t+2)) sampled at
    offset delta_t within the year, so the trajectory must cover
    year_range extended by 2 years. With scale="log" the coordinates are
    log10 of the densities.

    Raises:
        ValueError: under log scale if any embedded density is not
            strictly positive.
        IndexError: if the horizon does not cover year_range + 2.
    """
    lo, hi = year_range
    samples = annual_samples(traj, (lo, hi + 2), delta_t)
    points = np.stack([samples[:-2], samples[1:-1], samples[2:]], axis=1)
    if scale == "log":
        if np.any(points <= 0.0):
            raise ValueError("log scale requires strictly positive densities")
        points = np.log10(points)
    times = np.arange(lo, hi + 1, dtype=np.int64)
    return EmbeddedCloud(points=points, times=times, delta_t=delta_t, scale=scale)


def _window_start(traj: Trajectory, t: float) -> int:
    """Index into traj.mature of window entry 0 for a window at year t."""
    return int(np.rint(t * traj.p)) - 1 - traj.start_step


def state_window(traj: Trajectory, t: int | float) -> StateWindow:
    """The 201 consecutive per-step samples covering years [t, t+2].

    Entry k is the mature population at time t + k/100; entries 0, 100,
    200 equal the embed3 coordinates at year t (delta_t=0). Defined only
    on the standard grid p=100.

    Raises:
        UnsupportedParameterError: if traj.p != 100.
        IndexError: if [t, t+2] is not fully recorded.
    """
    if traj.p != WINDOW_GRID:
        raise UnsupportedParameterError(
            f"state windows are defined on the p={WINDOW_GRID} grid, got p={traj.p}"
        )
    i0 = _window_start(traj, t)
    if i0 < 0 or i0 + WINDOW_LENGTH > len(traj.mature):
        raise IndexError(f"window at year {t} not fully recorded")
    return StateWindow(values=traj.mature[i0:i0 + WINDOW_LENGTH].copy())


def _covered_years(traj: Trajectory, margin_steps: int = 0) -> np.ndarray:
    """Integer years with the window and a ±margin of steps recorded.

    Window entry 0 of year t sits at index i0 = t*p - 1 - start_step;
    coverage requires i0 >= margin and both the window and the forward
    margin to fit: i0 + max(201, margin + 1) <= len(mature).
    """
    p = traj.p
    n = len(traj.mature)
    reach = max(WINDOW_LENGTH, margin_steps + 1)
    t_lo = -(-(1 + traj.start_step + margin_steps) // p)
    t_hi = (n - reach + 1 + traj.start_step) // p
    if t_hi < t_lo:
        return np.arange(0)
    return np.arange(t_lo, t_hi + 1, dtype=np.int64)


def projection_distortion(
    traj: Trajectory,
    centers: Sequence[int],
    r: float = 0.1,
    norm: str = "linf",
    delta_t: float = 0.0,
    scale: str = "linear",
    year_range: tuple[int, int] | None = None,
) -> list[DistortionRecord]:
    """How much the 3-D projection shrinks distances near each center.

    For each center year, the ball collects every other candidate year
    whose 201-sample window is within normalized distance r of the
    center's window. Over all unordered pairs in the ball (center
    included) the record reports the supremum of window distance divided
    by 3-D distance, both in the same normalized norm; the 3-D points
    follow `scale`. Pairs closer than 1e-12 in 3-D are degenerate: if the
    windows also coincide the pair is excluded and counted, otherwise the
    ratio is infinite.

    Args:
        traj: trajectory on the p=100 grid.
        centers: center year tags.
        r: ball radius in normalized window distance.
        norm: "l1", "l2", or "linf".
        delta_t: sampling offset applied to windows and points alike.
        scale: "linear" or "log" for the 3-D points.
        year_range: candidate years; default all fully recorded years.

    Returns:
        One DistortionRecord per center, in input order.
    """
    if traj.p != WINDOW_GRID:
        raise UnsupportedParameterError(
            f"state windows are defined on the p={WINDOW_GRID} grid, got p={traj.p}"
        )
    if r <= 0.0:
        raise ValueError(f"ball radius must be positive, got {r}")
    if norm not in _NORMS:
        raise ValueError(f"norm must be one of {_NORMS}, got {norm!r}")
    if year_range is None:
        years = _covered_years(traj)
        shift = int(np.rint(delta_t * traj.p))
        if shift < 0:
            years = years[years * traj.p + shift >= 1 + traj.start_step]
        elif shift > 0:
            years = years[(years * traj.p) + shift + WINDOW_LENGTH - 1 - traj.start_step <= len(traj.mature)]
    else:
        years = np.arange(year_range[0], year_range[1] + 1, dtype=np.int64)
    if len(years) == 0:
        raise ValueError("no candidate years with full window coverage")
    starts = np.rint((years + delta_t) * traj.p).astype(np.int64) - 1 - traj.start_step
    if starts[0] < 0 or starts[-1] + WINDOW_LENGTH > len(traj.mature):
        raise IndexError("candidate years not fully recorded at this delta_t")
    windows = np.lib.stride_tricks.sliding_window_view(traj.mature, WINDOW_LENGTH)[starts]
    points = windows[:, [0, WINDOW_GRID, 2 * WINDOW_GRID]]
    if scale == "log":
        if np.any(points <= 0.0):
            raise ValueError("log scale requires strictly positive densities")
        points = np.log10(points)
    elif scale != "linear":
        raise ValueError(f"scale must be 'linear' or 'log', got {scale!r}")

    year_to_idx = {int(t): i for i, t in enumerate(years)}
    records = []
    for center in centers:
        if int(center) not in year_to_idx:
            raise ValueError(f"center year {center} outside the candidate set")
        ci = year_to_idx[int(center)]
        d_all = _rowwise_norm(windows - windows[ci], norm)
        in_ball = np.flatnonzero(d_all < r)
        members = in_ball[in_ball != ci]
        if len(members) == 0:
            records.append(DistortionRecord(int(center), float("nan"), 0, 0))
            continue
        idx = np.concatenate(([ci], members))
        sub_w = windows[idx]
        sub_p = points[idx]
        sup = 0.0
        excluded = 0
        for a in range(len(idx)):
            dw = _rowwise_norm(sub_w[a + 1:] - sub_w[a], norm)
            dp = _rowwise_norm(sub_p[a + 1:] - sub_p[a], norm)
            tiny = dp < COINCIDENCE_TOL
            both = tiny & (dw < COINCIDENCE_TOL)
            excluded += int(both.sum())
            if np.any(tiny & ~both):
                sup = float("inf")
            good = ~tiny
            if np.any(good):
                sup = max(sup, float(np.max(dw[good] / dp[good])))
        records.append(DistortionRecord(int(center), sup, len(members), excluded))
    return records


def _rowwise_norm(rows: np.ndarray, norm: str) -> np.ndarray:
    rows = np.atleast_2d(rows)
    if norm == "l1":
        return np.mean(np.abs(rows), axis=1)
    if norm == "l2":
        return np.sqrt(np.mean(rows * rows, axis=1))
    return np.max(np.abs(rows), axis=1)


def neighborhood_divergence(
    traj: Trajectory,
    center_t: int,
    r: float = 0.04,
    norm: str = "linf",
    horizon: int = 20,
) -> DivergenceCurves:
    """Spread of trajectories whose windows nearly coincide at the center.

    Collects every candidate year whose window is within normalized
    distance r of the window at center_t, the center itself included, and
    reports the per-step difference to the center trajectory over
    offsets in [-horizon, horizon] years. Candidates are restricted to
    years with the full offset span recorded.

    Raises:
        IndexError: if the center lacks the offset span or window coverage.
    """
    if traj.p != WINDOW_GRID:
        raise UnsupportedParameterError(
            f"state windows are defined on the p={WINDOW_GRID} grid, got p={traj.p}"
        )
    if r <= 0.0:
        raise ValueError(f"ball radius must be positive, got {r}")
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1 year, got {horizon}")
    p = traj.p
    margin = horizon * p
    years = _covered_years(traj, margin_steps=margin)
    if int(center_t) not in set(int(t) for t in years):
        raise IndexError(
            f"center year {center_t} lacks window or {horizon}-year offset coverage"
        )
    starts = years * p - 1 - traj.start_step
    windows = np.lib.stride_tricks.sliding_window_view(traj.mature, WINDOW_LENGTH)[starts]
    ci = int(np.searchsorted(years, int(center_t)))
    d_all = _rowwise_norm(windows - windows[ci], norm)
    members = np.flatnonzero(d_all < r)
    offsets_steps = np.arange(-margin, margin + 1)
    center_slice = traj.mature[starts[ci] - margin: starts[ci] + margin + 1]
    curves = np.empty((len(members), 2 * margin + 1))
    for row, mi in enumerate(members):
        curves[row] = traj.mature[starts[mi] - margin: starts[mi] + margin + 1] - center_slice
    return DivergenceCurves(
        center=int(center_t),
        member_times=years[members],
        offsets=offsets_steps / p,
        curves=curves,
    )


def _open_out(path_or_file) -> tuple[IO[str], bool]:
    if hasattr(path_or_file, "write"):
        return path_or_file, False
    return open(path_or_file, "w", encoding="utf-8"), True


def cloud_to_csv(cloud: EmbeddedCloud, path_or_file, header_lines: list[str] | None = None) -> None:
    """Write one row per point: year,x,y,z with round-trip float repr."""
    out, owned = _open_out(path_or_file)
    try:
        for line in header_lines or []:
            out.write(line + "\n")
        out.write("year,x,y,z\n")
        for t, (x, y, z) in zip(cloud.times, cloud.points):
            out.write(f"{t},{float(x)!r},{float(y)!r},{float(z)!r}\n")
    finally:
        if owned:
            out.close()


def distortion_to_csv(
    records: Sequence[DistortionRecord], path_or_file, header_lines: list[str] | None = None
) -> None:
    """Write one row per center: center,sup_ratio,ball_count."""
    out, owned = _open_out(path_or_file)
    try:
        for line in header_lines or []:
            out.write(line + "\n")
        out.write("center,sup_ratio,ball_count\n")
        for rec in records:
            out.write(f"{rec.center},{float(rec.sup_ratio)!r},{rec.ball_count}\n")
    finally:
        if owned:
            out.close()
