"""Higher-level numerics on simulated trajectories.

Bifurcation sweeps over a model parameter, periodicity and component
detection on annual samples, box-counting dimension of embedded clouds,
fixed points of the two-year window map with finite-difference
differentials and spectra, unstable manifold polylines, curvature and
fold tracking along pushed-forward filaments, and a pointwise
hyperbolicity survey.
"""

from __future__ import annotations

import concurrent.futures
import dataclasses
import math
from typing import IO, Callable, Sequence

import numpy as np

from .embedding import (
    EmbeddedCloud,
    StateWindow,
    WINDOW_GRID,
    WINDOW_LENGTH,
    normalized_distance,
    normalized_norm,
    state_window,
)
from .errors import InsufficientScaleError, NumericError
from .kernels import ModelParams
from .simulator import (
    BirthHistory,
    DiscreteModel,
    Trajectory,
    advance_window,
    annual_samples,
    initial_condition,
    run,
)

__all__ = [
    "BifurcationDiagram",
    "DimensionFit",
    "FixedPointResult",
    "SpectrumReport",
    "Polyline",
    "PolylineGeometry",
    "FoldTrack",
    "SurveyRecord",
    "bifurcation_sweep",
    "detect_period",
    "component_count",
    "box_count",
    "fractal_dimension",
    "locate_fixed_point",
    "refine_fixed_point",
    "jacobian_fd",
    "spectrum",
    "unstable_manifold",
    "polyline_geometry",
    "fold_track",
    "hyperbolicity_survey",
    "survey_points",
    "diagram_to_csv",
    "dimension_to_csv",
    "spectrum_to_csv",
    "manifold_to_csv",
]

MAX_PERIOD = 64
DIMENSION_GRID_STEPS = 24
EIGEN_RESIDUAL_TOL = 1e-8
DEFAULT_SAMPLING = (19001, 20000)

# Two-year map applications happen in 100-step years on the window grid.
_MAP_YEARS = 2


# ---------------------------------------------------------------------------
# result types


@dataclasses.dataclass(frozen=True, eq=False)
class BifurcationDiagram:
    """Annual samples per grid value of one swept parameter.

    samples[i] holds the recorded annual values for grid[i]; provenance
    records the initial-condition variant, seed, and whether each grid
    value restarted from the previous one's final state.
    """

    axis: str
    grid: np.ndarray
    samples: np.ndarray
    variant: str
    seed: int
    continuation: bool
    sampling: tuple[int, int]

    def __post_init__(self) -> None:
        grid = np.asarray(self.grid, dtype=float)
        samples = np.asarray(self.samples, dtype=float)
        diffs = np.diff(grid)
        if len(grid) > 1 and not (np.all(diffs > 0) or np.all(diffs < 0)):
            raise ValueError("grid must be strictly monotone")
        if samples.shape[0] != len(grid):
            raise ValueError("one sample row per grid value required")
        if not np.all(np.isfinite(samples)):
            raise ValueError("diagram samples must be finite")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "samples", samples)


@dataclasses.dataclass(frozen=True, eq=False)
class DimensionFit:
    """Box-counting dimension estimate with its fit window.

    slope is the least-squares slope of log10(count) against
    -log10(eps) restricted to fit_window; r2 its coefficient of
    determination; in_fit_window marks the grid entries used.
    """

    eps_grid: np.ndarray
    counts: np.ndarray
    fit_window: tuple[float, float]
    slope: float
    r2: float
    in_fit_window: np.ndarray

    def __post_init__(self) -> None:
        if self.slope < 0:
            raise ValueError("dimension estimate must be nonnegative")


@dataclasses.dataclass(frozen=True, eq=False)
class FixedPointResult:
    """A candidate fixed point of the two-year window map.

    For method "coarse" the residual is the unnormalized 3-D L1 distance
    between the sampled delay point and its two-year successor, as
    scanned over a trajectory; for method "refined" it is the normalized
    201-sample L1 distance between the window and its two-year image.
    """

    state: StateWindow
    residual_l1: float
    method: str
    year: int | None = None

    def __post_init__(self) -> None:
        if self.residual_l1 < 0:
            raise ValueError("residual must be nonnegative")
        if self.method not in ("coarse", "refined"):
            raise ValueError(f"method must be 'coarse' or 'refined', got {self.method!r}")


@dataclasses.dataclass(frozen=True, eq=False)
class SpectrumReport:
    """Top eigenvalues of a differential, sorted by modulus.

    leading_vectors holds eigenvectors for the real eigenvalues among
    the reported ones, normalized so the signed mean of entries is 1;
    leading_vector_ranks gives the rank (index into eigenvalues) of each
    vector.
    """

    eigenvalues: np.ndarray
    leading_vectors: np.ndarray
    leading_vector_ranks: tuple[int, ...]
    fd_epsilon: float | None = None


@dataclasses.dataclass(frozen=True, eq=False)
class Polyline:
    """Ordered 201-D states along a curve, with their curve parameters.

    source_params[i] is the parameter of vertex i on the generating
    curve; reading an earlier iterate of the same parameter recovers the
    vertex's preimage, so no map inversion is ever needed.
    """

    vertices: np.ndarray
    source_params: np.ndarray
    n_iterations: int = 0
    truncated: bool = False

    def __post_init__(self) -> None:
        vertices = np.asarray(self.vertices, dtype=float)
        params = np.asarray(self.source_params, dtype=float)
        if vertices.ndim != 2 or vertices.shape[1] != WINDOW_LENGTH:
            raise ValueError(f"vertices must be (n, {WINDOW_LENGTH}), got {vertices.shape}")
        if params.shape != (len(vertices),):
            raise ValueError("one source parameter per vertex required")
        if len(params) > 1 and not np.all(np.diff(params) > 0):
            raise ValueError("source parameters must be strictly increasing")
        if len(vertices) > 1 and np.any(np.all(vertices[1:] == vertices[:-1], axis=1)):
            raise ValueError("consecutive vertices must be distinct")
        object.__setattr__(self, "vertices", vertices)
        object.__setattr__(self, "source_params", params)

    @property
    def shadows3(self) -> np.ndarray:
        """3-D delay shadows of the vertices."""
        return self.vertices[:, [0, WINDOW_GRID, 2 * WINDOW_GRID]]

    def __len__(self) -> int:
        return len(self.vertices)


@dataclasses.dataclass(frozen=True, eq=False)
class PolylineGeometry:
    """Per-segment geometry of a polyline's 3-D shadow.

    Vertices whose 3-D shadow exactly coincides with their predecessor's
    are dropped before measuring; kept holds the surviving original
    vertex indices and skipped the dropped ones. ds[j] is the unnormalized
    3-D L2 length of segment kept[j] -> kept[j+1]; tangents[j] is the
    201-D difference along that segment scaled to mean absolute entry 1;
    curvature[j] is the turning rate at interior vertex kept[j+1].
    """

    ds: np.ndarray
    tangents: np.ndarray
    curvature: np.ndarray
    kept: np.ndarray
    skipped: tuple[int, ...]


@dataclasses.dataclass(frozen=True, eq=False)
class FoldTrack:
    """Curvature history of a pushed-forward filament.

    Row f of curvature holds the per-vertex curvature of the filament at
    times[f] (nan at endpoints and skipped vertices); max_curvature and
    argmax_vertex summarize each row. filament0 is the unfolded filament
    at time 0, one 201-sample window per vertex.
    """

    times: np.ndarray
    max_curvature: np.ndarray
    argmax_vertex: np.ndarray
    curvature: np.ndarray
    filament0: np.ndarray
    anchor_years: tuple[int, int]


@dataclasses.dataclass(frozen=True, eq=False)
class SurveyRecord:
    """Spectrum at one surveyed point with near-unit-modulus flags."""

    point_id: int
    report: SpectrumReport
    flags: tuple[bool, ...]

    @property
    def any_flagged(self) -> bool:
        return any(self.flags)


# ---------------------------------------------------------------------------
# bifurcation sweep

_SWEEP_AXES = ("gamma", "rho", "a0")


def _sweep_one(
    base: ModelParams,
    axis: str,
    value: float,
    p: int,
    refine: int,
    variant: str,
    seed: int,
    sampling: tuple[int, int],
    history: BirthHistory | None,
) -> tuple[np.ndarray, BirthHistory]:
    params = dataclasses.replace(base, **{axis: float(value)})
    model = DiscreteModel.build(params, p=p, refine=refine)
    if history is None:
        history = initial_condition(variant, seed, model)
    try:
        traj = run(model, history, sampling[1])
    except NumericError as err:
        raise NumericError(f"simulation failed at {axis}={value}: {err}") from err
    return annual_samples(traj, sampling), traj.final_history()


def _sweep_task(args) -> tuple[int, np.ndarray]:
    (idx, base, axis, value, p, refine, variant, seed, sampling) = args
    samples, _ = _sweep_one(base, axis, value, p, refine, variant, seed, sampling, None)
    return idx, samples


def bifurcation_sweep(
    base: ModelParams,
    axis: str,
    grid: Sequence[float],
    sampling: tuple[int, int] = DEFAULT_SAMPLING,
    continuation: bool = False,
    seed: int = 0,
    variant: str = "I",
    p: int = 100,
    refine: int = 100,
    jobs: int = 1,
) -> BifurcationDiagram:
    """Annual samples across a grid of one model parameter.

    For each grid value the model runs for sampling[1] years and records
    the annual samples over the sampling window. Without continuation
    every grid value starts from the same seeded initial condition and
    the grid may be processed by several worker processes; the result is
    ordered by grid index either way. With continuation each run starts
    from the previous grid value's final birth ring (branch following),
    which forces sequential execution.

    Args:
        base: parameters holding everything but the swept axis.
        axis: "gamma", "rho", or "a0".
        grid: strictly monotone parameter values.
        sampling: inclusive year window of recorded annual samples.
        continuation: restart each run from the previous final state.
        seed: initial-condition seed.
        variant: initial-condition variant, "I" or "II".
        p: steps per year.
        refine: survival-table refinement factor.
        jobs: worker processes for the independent (non-continuation) case.

    Returns:
        A BifurcationDiagram with one sample row per grid value.
    """
    if axis not in _SWEEP_AXES:
        raise ValueError(f"axis must be one of {_SWEEP_AXES}, got {axis!r}")
    grid_arr = np.asarray(list(grid), dtype=float)
    if len(grid_arr) == 0:
        raise ValueError("grid must be nonempty")
    lo, hi = sampling
    if not (1 <= lo <= hi):
        raise ValueError(f"invalid sampling window {sampling}")
    rows = np.empty((len(grid_arr), hi - lo + 1))
    if continuation:
        history: BirthHistory | None = None
        for i, value in enumerate(grid_arr):
            samples, final = _sweep_one(
                base, axis, value, p, refine, variant, seed, sampling, history
            )
            rows[i] = samples
            history = BirthHistory(births=final.births, step_index=0)
    elif jobs > 1:
        tasks = [
            (i, base, axis, float(v), p, refine, variant, seed, sampling)
            for i, v in enumerate(grid_arr)
        ]
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            for idx, samples in pool.map(_sweep_task, tasks, chunksize=1):
                rows[idx] = samples
    else:
        for i, value in enumerate(grid_arr):
            rows[i], _ = _sweep_one(
                base, axis, value, p, refine, variant, seed, sampling, None
            )
    return BifurcationDiagram(
        axis=axis,
        grid=grid_arr,
        samples=rows,
        variant=variant,
        seed=seed,
        continuation=continuation,
        sampling=(lo, hi),
    )


# ---------------------------------------------------------------------------
# periodicity and components


def detect_period(
    samples: Sequence[float], rel_tol: float = 1e-4, max_period: int = MAX_PERIOD
) -> int | None:
    """Smallest period q <= max_period of a settled sample tail, if any.

    A series whose spread is at most rel_tol times its magnitude counts
    as constant (period 1); otherwise q is the smallest lag for which
    every q-step difference stays within rel_tol times the spread. The
    samples passed in are the tail to classify; transients must be cut
    beforehand.

    Args:
        samples: at least 100 settled samples.
        rel_tol: relative tolerance on both the constancy floor and the
            lag differences.
        max_period: largest period considered.

    Returns:
        The period, or None if no lag qualifies.
    """
    x = np.asarray(samples, dtype=float)
    if x.ndim != 1 or len(x) < 100:
        raise ValueError(f"need at least 100 samples in one series, got shape {x.shape}")
    spread = float(x.max() - x.min())
    scale = float(np.abs(x).max())
    if scale == 0.0 or spread <= rel_tol * scale:
        return 1
    tol = rel_tol * spread
    for q in range(1, max_period + 1):
        if np.all(np.abs(x[q:] - x[:-q]) <= tol):
            return q
    return None


def component_count(cloud: EmbeddedCloud, max_n: int = 12, separation: float = 0.05) -> int:
    """Largest n whose time-residue classes are pairwise separated.

    Splits the cloud by year modulo n and accepts n when every class is
    nonempty and every pair of classes keeps a minimum point distance
    strictly above separation. The annual map cycles an n-component
    attractor through its components, so residue classes align with
    components.

    Args:
        cloud: embedded cloud with at least 10 * max_n points.
        max_n: largest component count considered.
        separation: inter-class distance threshold, in point units.

    Returns:
        The largest accepted n, or 1 if none is accepted.
    """
    if len(cloud) < 10 * max_n:
        raise ValueError(
            f"need at least {10 * max_n} points for max_n={max_n}, got {len(cloud)}"
        )
    pts = cloud.points
    diff = pts[:, None, :] - pts[None, :, :]
    d2 = np.einsum("ijk,ijk->ij", diff, diff)
    sep2 = separation * separation
    residues = cloud.times % np.arange(1, max_n + 1)[:, None]
    best = 1
    for n in range(2, max_n + 1):
        res = residues[n - 1]
        counts = np.bincount(res, minlength=n)
        if np.any(counts == 0):
            continue
        ok = True
        for i in range(n):
            mask_i = res == i
            for j in range(i + 1, n):
                if d2[np.ix_(mask_i, res == j)].min() <= sep2:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            best = n
    return best


# ---------------------------------------------------------------------------
# box-counting dimension


def box_count(points: np.ndarray, eps: float) -> int:
    """Number of eps-boxes of the grid latticework holding any point."""
    if eps <= 0:
        raise ValueError(f"box size must be positive, got {eps}")
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2:
        raise ValueError(f"points must be 2-D, got shape {pts.shape}")
    cells = np.floor(pts / eps).astype(np.int64)
    if len(cells) == 0:
        return 0
    mins = cells.min(axis=0)
    spans = cells.max(axis=0) - mins + 1
    if float(np.prod(spans, dtype=float)) < 2.0**62:
        keys = np.zeros(len(cells), dtype=np.int64)
        for j in range(cells.shape[1]):
            keys = keys * spans[j] + (cells[:, j] - mins[j])
        return len(np.unique(keys))
    return len(np.unique(cells, axis=0))


def fractal_dimension(points: np.ndarray) -> DimensionFit:
    """Box-counting dimension over the saturation-free scale window.

    Counts occupied boxes on a geometric grid of 24 sizes from half the
    cloud diameter down by a factor 2^13. Sizes where the count reaches
    a tenth of the point count are saturated by sampling; the fit keeps
    sizes with count below that and above the square root of the largest
    saturated size, and takes the slope of log10(count) against
    -log10(eps) there.

    Raises:
        InsufficientScaleError: if fewer than 4 grid sizes survive the
            window restriction.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or len(pts) < 2:
        raise ValueError("need a 2-D array of at least 2 points")
    extent = pts.max(axis=0) - pts.min(axis=0)
    diam = float(np.sqrt(np.sum(extent * extent)))
    if diam == 0.0:
        raise ValueError("degenerate cloud: all points coincide")
    n0 = len(pts)
    eps_grid = diam / 2 / (2 ** (np.arange(DIMENSION_GRID_STEPS) * 13 / 23))
    counts = np.array([box_count(pts, e) for e in eps_grid])
    reach = counts >= n0 / 10
    eps0 = float(eps_grid[reach].max()) if reach.any() else float(eps_grid[-1])
    mask = (counts < n0 / 10) & (eps_grid > np.sqrt(eps0))
    if mask.sum() < 4:
        raise InsufficientScaleError(
            f"only {int(mask.sum())} grid sizes between saturation and resolution"
        )
    xs = -np.log10(eps_grid[mask])
    ys = np.log10(counts[mask])
    slope, intercept = np.polyfit(xs, ys, 1)
    pred = slope * xs + intercept
    ss_res = float(np.sum((ys - pred) ** 2))
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return DimensionFit(
        eps_grid=eps_grid,
        counts=counts,
        fit_window=(float(eps_grid[mask].min()), float(eps_grid[mask].max())),
        slope=float(slope),
        r2=r2,
        in_fit_window=mask,
    )


# ---------------------------------------------------------------------------
# fixed points of the two-year map


def locate_fixed_point(traj: Trajectory, year_range: tuple[int, int]) -> FixedPointResult:
    """Sampled year whose delay point is closest to its two-year image.

    Scans annual samples over the inclusive year_range; candidate years
    run to hi - 4 since the comparison needs samples 4 years ahead. The
    reported residual is the unnormalized L1 distance in the 3-D delay
    coordinates, and the state is the full 201-sample window at the best
    year.

    Args:
        traj: trajectory on the standard grid.
        year_range: inclusive range of sampled years, spanning at least
            10^4 years.
    """
    lo, hi = year_range
    if hi - lo + 1 < 10_000:
        raise ValueError(
            f"need at least 10^4 sampled years for a reliable scan, got {hi - lo + 1}"
        )
    a = annual_samples(traj, (lo, hi))
    x, y, z = a[:-4], a[1:-3], a[2:-2]
    d = (
        np.abs(x - a[2:-2])
        + np.abs(y - a[3:-1])
        + np.abs(z - a[4:])
    )
    i_best = int(np.argmin(d))
    year = lo + i_best
    return FixedPointResult(
        state=state_window(traj, year),
        residual_l1=float(d[i_best]),
        method="coarse",
        year=year,
    )


def _resolve_map(model) -> Callable[[np.ndarray], np.ndarray]:
    """Two-year window map from a DiscreteModel or a bare callable."""
    if isinstance(model, DiscreteModel):
        steps = _MAP_YEARS * model.p
        return lambda w: advance_window(model, w, steps=steps, start_phase=0)
    if callable(model):
        return model
    raise TypeError(f"model must be a DiscreteModel or a callable, got {type(model)!r}")


def _as_window_array(state) -> np.ndarray:
    if isinstance(state, FixedPointResult):
        return state.state.values.copy()
    if isinstance(state, StateWindow):
        return state.values.copy()
    arr = np.asarray(state, dtype=float)
    if arr.shape != (WINDOW_LENGTH,):
        raise ValueError(f"expected a {WINDOW_LENGTH}-sample window, got shape {arr.shape}")
    return arr.copy()


def _shadow(w: np.ndarray) -> np.ndarray:
    return w[[0, WINDOW_GRID, 2 * WINDOW_GRID]]


def refine_fixed_point(
    model,
    coarse: FixedPointResult,
    bracket: tuple,
    iterations: int = 10,
    neighborhood_radius: float = 0.5,
    grid_points: int = 33,
    golden_iterations: int = 200,
) -> FixedPointResult:
    """Polish a coarse fixed point along a local unstable curve.

    Parameterizes the straight 201-D segment between the bracket states,
    applies the two-year map `iterations` times to a parameter grid, and
    discards parameters whose orbit leaves the neighborhood of the
    coarse shadow; surviving gaps are re-densified by recomputing
    midpoint parameters from the segment, so every point's provenance is
    its segment parameter and preimages are read, never inverted. The
    normalized L1 self-distance of the two-year map is then minimized
    over the surviving parameter interval by golden-section search. The
    coarse state competes as a candidate, so the result never regresses.

    Args:
        model: DiscreteModel or a two-year map callable on windows.
        coarse: scan result to improve; its year tag is carried over.
        bracket: two 201-sample states straddling the fixed point
            transversally to the stable direction.
        iterations: two-year map applications before minimizing.
        neighborhood_radius: 3-D L2 truncation radius around the coarse
            shadow.
        grid_points: parameters kept alive on the segment.
        golden_iterations: golden-section refinement steps.

    Returns:
        A FixedPointResult with method "refined" and the normalized
        201-sample L1 residual.

    Raises:
        NumericError: if every parameter leaves the neighborhood; the
            best candidate so far is attached as the `best` attribute.
    """
    t2 = _resolve_map(model)
    w0 = _as_window_array(bracket[0])
    w1 = _as_window_array(bracket[1])
    coarse_w = coarse.state.values
    center = _shadow(coarse_w)

    def segment(lam: float) -> np.ndarray:
        return (1.0 - lam) * w0 + lam * w1

    def orbit(lam: float, n_apply: int) -> np.ndarray | None:
        w = segment(lam)
        for _ in range(n_apply):
            try:
                w = t2(w)
            except NumericError:
                return None
            d = _shadow(w) - center
            if not np.all(np.isfinite(w)) or float(np.sqrt(d @ d)) > neighborhood_radius:
                return None
        return w

    def self_residual(w: np.ndarray) -> float:
        try:
            return normalized_distance(t2(w), w, "l1")
        except NumericError:
            return math.inf

    coarse_candidate = (self_residual(coarse_w), coarse_w)

    alive = [lam for lam in np.linspace(0.0, 1.0, grid_points)
             if orbit(lam, iterations) is not None]
    rounds = 0
    while 0 < len(alive) < grid_points and rounds < 12:
        rounds += 1
        inserted = False
        gaps = sorted(
            range(len(alive) - 1),
            key=lambda i: alive[i + 1] - alive[i],
            reverse=True,
        )
        for gi in gaps[: grid_points - len(alive)]:
            mid = 0.5 * (alive[gi] + alive[gi + 1])
            if orbit(mid, iterations) is not None:
                alive.append(mid)
                inserted = True
        if not inserted:
            break
        alive.sort()
    if not alive:
        err = NumericError("every bracket parameter leaves the neighborhood")
        err.best = FixedPointResult(
            state=coarse.state,
            residual_l1=coarse_candidate[0],
            method="refined",
            year=coarse.year,
        )
        raise err

    def residual_at(lam: float) -> float:
        w = orbit(lam, iterations)
        if w is None:
            return math.inf
        return self_residual(w)

    grid_res = [(residual_at(lam), lam) for lam in alive]
    best_res, best_lam = min(grid_res)
    pos = alive.index(best_lam)
    a = alive[pos - 1] if pos > 0 else best_lam
    b = alive[pos + 1] if pos + 1 < len(alive) else best_lam
    if b > a:
        lam_opt, res_opt = _golden_min(residual_at, a, b, golden_iterations)
        if res_opt < best_res:
            best_res, best_lam = res_opt, lam_opt
    best_w = orbit(best_lam, iterations)
    candidates = [(best_res, best_w)] if best_w is not None else []
    candidates.append(coarse_candidate)
    res, w = min(candidates, key=lambda c: c[0])
    return FixedPointResult(
        state=StateWindow(values=w.copy()),
        residual_l1=res,
        method="refined",
        year=coarse.year,
    )


def _golden_min(
    f: Callable[[float], float], a: float, b: float, iters: int
) -> tuple[float, float]:
    """Golden-section minimum of f on [a, b]; returns (argmin, min)."""
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if b - a <= 1e-17:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = f(d)
    return (c, fc) if fc <= fd else (d, fd)


# ---------------------------------------------------------------------------
# differentials and spectra


def jacobian_fd(model, x, fd_eps: float = 1e-6) -> np.ndarray:
    """Forward-difference differential of the two-year map at x.

    Column i is (T(x + fd_eps e_i) - T(x)) / fd_eps. Perturbations are
    one-sided forward only, which keeps perturbed states inside the
    nonnegative orthant for nonnegative x.

    Args:
        model: DiscreteModel or a map callable on 201-sample windows.
        x: base window.
        fd_eps: perturbation size.
    """
    if fd_eps <= 0:
        raise ValueError(f"fd_eps must be positive, got {fd_eps}")
    t2 = _resolve_map(model)
    base_x = _as_window_array(x)
    base = t2(base_x)
    n = len(base_x)
    jac = np.empty((n, n))
    for j in range(n):
        xp = base_x.copy()
        xp[j] += fd_eps
        jac[:, j] = (t2(xp) - base) / fd_eps
    return jac


def spectrum(matrix: np.ndarray, k: int = 5, fd_epsilon: float | None = None) -> SpectrumReport:
    """Top-k eigenvalues by modulus, with vectors for the real ones.

    Eigenpairs come from a dense solve and are verified against the
    residual bound |Av - lambda v| / (|lambda| |v|) < 1e-8; ties in
    modulus break deterministically by descending real then imaginary
    part, which keeps conjugate pairs adjacent. Vectors are reported for
    real eigenvalues among the top k, normalized to signed entry mean 1
    (maximum-entry normalization when the mean vanishes).

    Raises:
        NumericError: if a reported eigenpair misses the residual bound.
    """
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"matrix must be square, got shape {a.shape}")
    if not 1 <= k <= a.shape[0]:
        raise ValueError(f"k must be in [1, {a.shape[0]}], got {k}")
    values, vectors = np.linalg.eig(a)
    order = np.lexsort((-values.imag, -values.real, -np.abs(values)))
    values = values[order]
    vectors = vectors[:, order]
    top = values[:k]
    scale = float(np.abs(values[0]))
    for rank in range(k):
        lam = values[rank]
        if scale > 0 and abs(lam) < 1e-12 * scale:
            continue
        v = vectors[:, rank]
        denom = abs(lam) * float(np.linalg.norm(v))
        if denom == 0.0:
            continue
        res = float(np.linalg.norm(a @ v - lam * v)) / denom
        if res > EIGEN_RESIDUAL_TOL:
            raise NumericError(
                f"eigenpair {rank} residual {res:.3e} exceeds {EIGEN_RESIDUAL_TOL:.0e}"
            )
    real_ranks = []
    real_vectors = []
    for rank in range(k):
        lam = top[rank]
        if lam.imag != 0.0:
            continue
        v = vectors[:, rank]
        if np.any(v.imag != 0.0):
            v = v.real if np.max(np.abs(v.imag)) <= 1e-12 * np.max(np.abs(v.real)) else None
            if v is None:
                continue
        else:
            v = v.real
        mean = float(v.mean())
        if abs(mean) > 1e-12 * float(np.max(np.abs(v))):
            v = v / mean
        else:
            v = v / float(np.max(np.abs(v)))
        real_ranks.append(rank)
        real_vectors.append(v)
    lead = np.array(real_vectors) if real_vectors else np.empty((0, a.shape[0]))
    return SpectrumReport(
        eigenvalues=top,
        leading_vectors=lead,
        leading_vector_ranks=tuple(real_ranks),
        fd_epsilon=fd_epsilon,
    )


# ---------------------------------------------------------------------------
# unstable manifold and curvature


def unstable_manifold(
    model,
    fixpoint,
    direction: np.ndarray,
    n_iterations: int,
    eta: float = 1e-2,
    delta: float = 1e-4,
    budget: int = 1_000_000,
) -> Polyline:
    """Push a local unstable segment forward under the two-year map.

    Starts from the segment spanning fixpoint +- delta * direction,
    parameterized on [-1, 1], and applies the two-year map n_iterations
    times. After each application, wherever consecutive vertices drift
    farther than eta apart in their 3-D shadows, vertices at midpoint
    parameters are inserted by re-simulating from the initial segment,
    keeping the polyline resolved at scale eta throughout.

    Args:
        model: DiscreteModel or a two-year map callable.
        fixpoint: FixedPointResult, StateWindow, or 201-array.
        direction: unstable direction shape (leading eigenvector).
        n_iterations: two-year map applications.
        eta: 3-D refinement scale.
        delta: initial segment half-length along direction.
        budget: vertex cap; exceeding it stops refinement and flags the
            result truncated.

    Returns:
        A Polyline of the final iterate, vertices ordered by parameter.
    """
    if n_iterations < 0:
        raise ValueError(f"n_iterations must be nonnegative, got {n_iterations}")
    if eta <= 0 or delta <= 0:
        raise ValueError("eta and delta must be positive")
    t2 = _resolve_map(model)
    fix = _as_window_array(fixpoint)
    direction = np.asarray(direction, dtype=float)
    if direction.shape != fix.shape:
        raise ValueError("direction must match the window shape")

    def seed(lam: float) -> np.ndarray:
        return fix + (lam * delta) * direction

    def evolve(lam: float, n_apply: int) -> np.ndarray:
        w = seed(lam)
        for _ in range(n_apply):
            w = t2(w)
        return w

    params = [-1.0, 0.0, 1.0]
    verts = [seed(lam) for lam in params]
    truncated = False
    for it in range(1, n_iterations + 1):
        verts = [t2(w) for w in verts]
        rounds = 0
        resolved = False
        while not truncated and rounds < 60:
            rounds += 1
            shadows = np.array([_shadow(w) for w in verts])
            gaps = np.sqrt(np.sum(np.diff(shadows, axis=0) ** 2, axis=1))
            wide = np.flatnonzero(gaps > eta)
            if len(wide) == 0:
                resolved = True
                break
            if len(verts) + len(wide) > budget:
                truncated = True
                break
            for offset, gi in enumerate(wide):
                mid = 0.5 * (params[gi + offset] + params[gi + offset + 1])
                params.insert(gi + offset + 1, mid)
                verts.insert(gi + offset + 1, evolve(mid, it))
        if not resolved:
            truncated = True
    return Polyline(
        vertices=np.array(verts),
        source_params=np.array(params),
        n_iterations=n_iterations,
        truncated=truncated,
    )


def polyline_geometry(polyline: Polyline) -> PolylineGeometry:
    """Segment lengths, tangents, and turning curvature of a polyline.

    Measures the 3-D shadow chain with unnormalized L2: ds per segment,
    and at each interior vertex the norm of the change of unit tangent
    divided by the incoming segment length. Vertices coinciding exactly
    with their predecessor in 3-D are skipped and reported.
    """
    if len(polyline) < 3:
        raise ValueError(f"need at least 3 vertices, got {len(polyline)}")
    shadows = polyline.shadows3
    kept = [0]
    skipped = []
    for i in range(1, len(shadows)):
        if np.array_equal(shadows[i], shadows[kept[-1]]):
            skipped.append(i)
        else:
            kept.append(i)
    kept_arr = np.asarray(kept, dtype=np.int64)
    if len(kept_arr) < 3:
        raise ValueError("fewer than 3 distinct 3-D vertices")
    sh = shadows[kept_arr]
    seg3 = np.diff(sh, axis=0)
    ds = np.sqrt(np.sum(seg3 * seg3, axis=1))
    unit = seg3 / ds[:, None]
    turn = np.diff(unit, axis=0)
    curvature = np.sqrt(np.sum(turn * turn, axis=1)) / ds[:-1]
    seg201 = np.diff(polyline.vertices[kept_arr], axis=0)
    means = np.mean(np.abs(seg201), axis=1)
    tangents = seg201 / means[:, None]
    return PolylineGeometry(
        ds=ds,
        tangents=tangents,
        curvature=curvature,
        kept=kept_arr,
        skipped=tuple(skipped),
    )


def _resolve_advance(model) -> Callable[[np.ndarray, int, int], np.ndarray]:
    """Step-resolved window advance from a DiscreteModel or callable."""
    if isinstance(model, DiscreteModel):
        return lambda w, steps, phase: advance_window(
            model, w, steps=steps, start_phase=phase
        )
    if callable(model):
        return model
    raise TypeError(f"model must be a DiscreteModel or a callable, got {type(model)!r}")


def fold_track(
    model,
    traj: Trajectory,
    anchor_years: tuple[int, int],
    n_points: int = 1000,
    horizon_years: float = 4.0,
    eta: float = 1e-2,
    frame_step: int | None = None,
) -> FoldTrack:
    """Watch a straight filament fold as the dynamics push it forward.

    Reads the recorded windows 10 years before each anchor, joins them
    by a straight 201-D segment of n_points samples, and pushes every
    sample 10 years forward, yielding the unfolded filament at time 0.
    The filament then advances in sub-year frames up to horizon_years;
    each frame records the per-vertex curvature of the 3-D shadow, its
    maximum, and the vertex attaining it.

    Args:
        model: DiscreteModel or a callable (window, steps, phase) ->
            window.
        traj: recorded trajectory covering both anchors minus 10 years.
        anchor_years: the two anchor years (t_a, t_b).
        n_points: segment sample count.
        horizon_years: tracking horizon after time 0.
        eta: resolution scale; anchors closer than 10 * eta in 3-D are
            rejected as degenerate.
        frame_step: steps between frames, default p // 10.

    Raises:
        ValueError: on degenerate anchors.
        IndexError: if the preimage windows are not recorded.
    """
    if n_points < 3:
        raise ValueError(f"need at least 3 segment points, got {n_points}")
    t_a, t_b = anchor_years
    wa = state_window(traj, t_a).values
    wb = state_window(traj, t_b).values
    gap = _shadow(wa) - _shadow(wb)
    if float(np.sqrt(gap @ gap)) < 10.0 * eta:
        raise ValueError(
            f"anchors {anchor_years} are degenerate: 3-D distance below {10.0 * eta}"
        )
    pre_a = state_window(traj, t_a - 10).values
    pre_b = state_window(traj, t_b - 10).values
    advance = _resolve_advance(model)
    p = model.p if isinstance(model, DiscreteModel) else WINDOW_GRID
    if frame_step is None:
        frame_step = p // 10
    if frame_step < 1:
        raise ValueError(f"frame_step must be >= 1, got {frame_step}")

    lams = np.linspace(0.0, 1.0, n_points)
    filament = (1.0 - lams)[:, None] * pre_a + lams[:, None] * pre_b
    push = 10 * p
    filament = np.array([advance(w, push, 0) for w in filament])
    filament0 = filament.copy()

    n_frames = int(round(horizon_years * p / frame_step)) + 1
    times = np.empty(n_frames)
    max_curv = np.empty(n_frames)
    argmax_vertex = np.empty(n_frames, dtype=np.int64)
    curv_rows = np.full((n_frames, n_points), np.nan)
    phase = push % p
    for f in range(n_frames):
        if f > 0:
            filament = np.array(
                [advance(w, frame_step, phase) for w in filament]
            )
            phase = (phase + frame_step) % p
        times[f] = f * frame_step / p
        geom = polyline_geometry(
            Polyline(vertices=filament, source_params=lams)
        )
        curv_rows[f, geom.kept[1:-1]] = geom.curvature
        best = int(np.nanargmax(curv_rows[f]))
        max_curv[f] = curv_rows[f, best]
        argmax_vertex[f] = best
    return FoldTrack(
        times=times,
        max_curvature=max_curv,
        argmax_vertex=argmax_vertex,
        curvature=curv_rows,
        filament0=filament0,
        anchor_years=(int(t_a), int(t_b)),
    )


# ---------------------------------------------------------------------------
# hyperbolicity survey


def survey_points(cloud: EmbeddedCloud, count: int = 80) -> np.ndarray:
    """Indices of a farthest-point subsample of the cloud.

    Starts from the first point and greedily adds the point farthest (in
    3-D) from the chosen set, giving a deterministic well-spread cover.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    pts = cloud.points
    count = min(count, len(pts))
    chosen = [0]
    dmin = np.sum((pts - pts[0]) ** 2, axis=1)
    for _ in range(count - 1):
        nxt = int(np.argmax(dmin))
        chosen.append(nxt)
        dmin = np.minimum(dmin, np.sum((pts - pts[nxt]) ** 2, axis=1))
    return np.asarray(chosen, dtype=np.int64)


def hyperbolicity_survey(
    model,
    points: Sequence[StateWindow],
    fd_eps: float = 1e-3,
    threshold_log: float = math.log10(1.5),
    k: int = 5,
) -> list[SurveyRecord]:
    """Spectra at many attractor points, flagging near-unit moduli.

    For each point, the forward-difference differential of the two-year
    map is diagonalized and every reported eigenvalue lambda with
    |log10 |lambda|| below threshold_log is flagged: such moduli sit
    within a factor of 10^threshold_log of 1, so neither expansion nor
    contraction dominates there.
    """
    records = []
    for pid, point in enumerate(points):
        jac = jacobian_fd(model, point, fd_eps)
        report = spectrum(jac, k=k, fd_epsilon=fd_eps)
        moduli = np.abs(report.eigenvalues)
        with np.errstate(divide="ignore"):
            logs = np.abs(np.log10(moduli))
        flags = tuple(bool(v) for v in logs < threshold_log)
        records.append(SurveyRecord(point_id=pid, report=report, flags=flags))
    return records


# ---------------------------------------------------------------------------
# CSV export


def _open_out(path_or_file) -> tuple[IO[str], bool]:
    if hasattr(path_or_file, "write"):
        return path_or_file, False
    return open(path_or_file, "w", encoding="utf-8"), True


def diagram_to_csv(
    diagram: BifurcationDiagram, path_or_file, header_lines: list[str] | None = None
) -> None:
    """Write one row per (grid value, sampled year): param,year,N."""
    out, owned = _open_out(path_or_file)
    try:
        for line in header_lines or []:
            out.write(line + "\n")
        out.write("param,year,N\n")
        lo = diagram.sampling[0]
        for value, row in zip(diagram.grid, diagram.samples):
            chunk = [
                f"{float(value)!r},{lo + j},{float(n)!r}\n" for j, n in enumerate(row)
            ]
            out.write("".join(chunk))
    finally:
        if owned:
            out.close()


def dimension_to_csv(
    fit: DimensionFit, path_or_file, header_lines: list[str] | None = None
) -> None:
    """Write one row per box size: eps,count,in_fit_window."""
    out, owned = _open_out(path_or_file)
    try:
        for line in header_lines or []:
            out.write(line + "\n")
        out.write("eps,count,in_fit_window\n")
        for eps, count, used in zip(fit.eps_grid, fit.counts, fit.in_fit_window):
            out.write(f"{float(eps)!r},{int(count)},{int(used)}\n")
    finally:
        if owned:
            out.close()


def spectrum_to_csv(
    records: Sequence[SurveyRecord], path_or_file, header_lines: list[str] | None = None
) -> None:
    """Write one row per (point, eigenvalue): point_id,rank,re,im,modulus,flagged."""
    out, owned = _open_out(path_or_file)
    try:
        for line in header_lines or []:
            out.write(line + "\n")
        out.write("point_id,rank,re,im,modulus,flagged\n")
        for rec in records:
            for rank, lam in enumerate(rec.report.eigenvalues):
                out.write(
                    f"{rec.point_id},{rank},{float(lam.real)!r},{float(lam.imag)!r},"
                    f"{float(abs(lam))!r},{int(rec.flags[rank])}\n"
                )
    finally:
        if owned:
            out.close()


def manifold_to_csv(
    polyline: Polyline, path_or_file, header_lines: list[str] | None = None
) -> None:
    """Write one row per vertex: vertex,param,x,y,z,ds,curvature.

    ds is the outgoing segment length (empty on the last vertex);
    curvature is defined at interior vertices only (empty elsewhere),
    both skipping vertices with coincident 3-D shadows.
    """
    geom = polyline_geometry(polyline)
    ds_by_vertex = {int(geom.kept[j]): float(geom.ds[j]) for j in range(len(geom.ds))}
    curv_by_vertex = {
        int(geom.kept[j + 1]): float(geom.curvature[j]) for j in range(len(geom.curvature))
    }
    shadows = polyline.shadows3
    out, owned = _open_out(path_or_file)
    try:
        for line in header_lines or []:
            out.write(line + "\n")
        out.write("vertex,param,x,y,z,ds,curvature\n")
        for i in range(len(polyline)):
            x, y, z = shadows[i]
            ds = ds_by_vertex.get(i)
            curv = curv_by_vertex.get(i)
            out.write(
                f"{i},{float(polyline.source_params[i])!r},{float(x)!r},{float(y)!r},"
                f"{float(z)!r},{'' if ds is None else repr(ds)},"
                f"{'' if curv is None else repr(curv)}\n"
            )
    finally:
        if owned:
            out.close()
