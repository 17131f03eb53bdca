"""Command line front-end: every pipeline as a reproducible subcommand.

Configuration merges three layers: built-in defaults, a flat key=value
config file, then command line flags. Every output file starts with a
comment header recording the fully resolved configuration, seed, and
package version, so a result file identifies the run that made it. Same
configuration and seed produce byte-identical outputs.
"""

from __future__ import annotations

import argparse
import dataclasses
import math
import os
import sys
from typing import IO, Sequence

import numpy as np

from . import __version__, _backend
from .analysis import (
    bifurcation_sweep,
    component_count,
    diagram_to_csv,
    dimension_to_csv,
    fold_track,
    fractal_dimension,
    jacobian_fd,
    locate_fixed_point,
    manifold_to_csv,
    Polyline,
    refine_fixed_point,
    spectrum,
    spectrum_to_csv,
    survey_points,
    SurveyRecord,
    unstable_manifold,
)
from .embedding import (
    cloud_to_csv,
    distortion_to_csv,
    embed3,
    neighborhood_divergence,
    projection_distortion,
    state_window,
)
from .errors import NoEquilibriumError, NumericError
from .kernels import (
    ModelParams,
    equilibrium_density,
    gamma_thresholds,
    population_bounds,
)
from .simulator import (
    DiscreteModel,
    Trajectory,
    annual_samples,
    initial_condition,
    run,
    trajectory_to_csv,
)

__all__ = ["RunConfig", "run_command", "main"]

SEED_ENV_VAR = "VOLE_SEED"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_IO = 4


@dataclasses.dataclass
class RunConfig:
    """Fully resolved run configuration.

    Field defaults are the package-wide conventions: the standard grid
    of 100 steps per year, 20000 simulated years sampled over the final
    1000, and the chaotic reference parameter set.
    """

    a0: float = 0.15
    a1: float = 2.0
    m0: float = 50.0
    gamma: float = 8.25
    rho: float = 0.30
    eps_season: float = 0.1
    fecundity_smooth: bool = True
    season_smooth: bool = True
    p: int = 100
    refine: int = 100
    years: int = 20000
    init: str = "I"
    seed: int | None = None
    sample_from: int = 19001
    sample_to: int = 20000
    delta_t: float = 0.0

    def params(self) -> ModelParams:
        """Validated continuous-model parameters."""
        return ModelParams(
            a0=self.a0,
            a1=self.a1,
            m0=self.m0,
            gamma=self.gamma,
            rho=self.rho,
            eps_season=self.eps_season,
            fecundity_smooth=self.fecundity_smooth,
            season_smooth=self.season_smooth,
        )

    def model(self) -> DiscreteModel:
        return DiscreteModel.build(self.params(), p=self.p, refine=self.refine)

    @property
    def resolved_seed(self) -> int:
        return 0 if self.seed is None else int(self.seed)


_CONFIG_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}
_BOOL_TRUE = {"true", "1", "yes", "on"}
_BOOL_FALSE = {"false", "0", "no", "off"}


def _convert_config_value(key: str, raw: str) -> object:
    kind = _CONFIG_FIELDS[key].type
    if key in ("fecundity_smooth", "season_smooth"):
        low = raw.lower()
        if low in _BOOL_TRUE:
            return True
        if low in _BOOL_FALSE:
            return False
        raise ValueError(f"config key {key} expects a boolean, got {raw!r}")
    if key == "init":
        return raw
    if kind == "int" or key in ("p", "refine", "years", "seed", "sample_from", "sample_to"):
        return int(raw)
    return float(raw)


def _parse_config_file(path: str) -> dict:
    """Flat key=value file; blank lines and # comments ignored."""
    values: dict = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, val = line.partition("=")
            key = key.strip()
            if not sep or not key:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
            if key not in _CONFIG_FIELDS:
                raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
            values[key] = _convert_config_value(key, val.strip())
    return values


def _load_config(args: argparse.Namespace) -> RunConfig:
    """Defaults, then config file, then flags; resolve the seed last."""
    cfg = RunConfig()
    if getattr(args, "config", None):
        cfg = dataclasses.replace(cfg, **_parse_config_file(args.config))
    overrides = {
        name: getattr(args, name)
        for name in _CONFIG_FIELDS
        if getattr(args, name, None) is not None
    }
    cfg = dataclasses.replace(cfg, **overrides)
    if cfg.seed is None:
        env = os.environ.get(SEED_ENV_VAR)
        cfg.seed = int(env) if env else 0
    if cfg.init not in ("I", "II"):
        raise ValueError(f"init must be 'I' or 'II', got {cfg.init!r}")
    if not 1 <= cfg.sample_from <= cfg.sample_to:
        raise ValueError(
            f"invalid sampling window [{cfg.sample_from}, {cfg.sample_to}]"
        )
    return cfg


def _format_header_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _header_lines(cfg: RunConfig, command: str, extra: dict | None = None) -> list[str]:
    entries = dataclasses.asdict(cfg)
    entries["seed"] = cfg.resolved_seed
    entries["command"] = command
    entries["version"] = __version__
    entries["backend"] = _backend.BACKEND
    if extra:
        entries.update(extra)
    return [f"# {key}={_format_header_value(entries[key])}" for key in sorted(entries)]


def _simulate(cfg: RunConfig) -> tuple[DiscreteModel, Trajectory]:
    model = cfg.model()
    history = initial_condition(cfg.init, cfg.resolved_seed, model)
    return model, run(model, history, cfg.years)


def _require_window(cfg: RunConfig) -> None:
    if cfg.sample_to > cfg.years:
        raise ValueError(
            f"sampling window ends at {cfg.sample_to} beyond the {cfg.years}-year horizon"
        )


def _cloud_range(cfg: RunConfig) -> tuple[int, int]:
    if cfg.sample_to - 2 < cfg.sample_from:
        raise ValueError("sampling window too short to embed (needs 3 years)")
    return cfg.sample_from, cfg.sample_to - 2


# ---------------------------------------------------------------------------
# subcommand handlers


def _cmd_simulate(args) -> int:
    cfg = _load_config(args)
    _require_window(cfg)
    _, traj = _simulate(cfg)
    samples = annual_samples(traj, (cfg.sample_from, cfg.sample_to), cfg.delta_t)
    if args.out:
        trajectory_to_csv(traj, args.out, _header_lines(cfg, "simulate"))
    print(
        f"simulate: years={cfg.years} final={float(traj.mature[-1])!r} "
        f"window_min={float(samples.min())!r} window_max={float(samples.max())!r}"
    )
    return EXIT_OK


def _cmd_sweep(args) -> int:
    cfg = _load_config(args)
    _require_window(cfg)
    if args.step <= 0:
        raise ValueError(f"--step must be positive, got {args.step}")
    if args.to < args.from_:
        raise ValueError(f"empty sweep range [{args.from_}, {args.to}]")
    count = int(math.floor((args.to - args.from_) / args.step + 1e-9)) + 1
    grid = [float(np.round(args.from_ + i * args.step, 10)) for i in range(count)]
    diagram = bifurcation_sweep(
        cfg.params(),
        axis=args.param,
        grid=grid,
        sampling=(cfg.sample_from, cfg.sample_to),
        continuation=args.continuation,
        seed=cfg.resolved_seed,
        variant=cfg.init,
        p=cfg.p,
        refine=cfg.refine,
        jobs=args.jobs,
    )
    extra = {
        "sweep_param": args.param,
        "sweep_from": args.from_,
        "sweep_to": args.to,
        "sweep_step": args.step,
        "sweep_continuation": args.continuation,
    }
    if args.out:
        diagram_to_csv(diagram, args.out, _header_lines(cfg, "sweep", extra))
    print(
        f"sweep: param={args.param} points={len(grid)} "
        f"sample_min={float(diagram.samples.min())!r} "
        f"sample_max={float(diagram.samples.max())!r}"
    )
    return EXIT_OK


def _cmd_embed(args) -> int:
    cfg = _load_config(args)
    _require_window(cfg)
    _, traj = _simulate(cfg)
    cloud = embed3(traj, _cloud_range(cfg), cfg.delta_t, args.scale)
    if args.out:
        cloud_to_csv(cloud, args.out, _header_lines(cfg, "embed", {"scale": args.scale}))
    spans = cloud.points.max(axis=0) - cloud.points.min(axis=0)
    print(f"embed: points={len(cloud)} scale={args.scale} span_x={float(spans[0])!r}")
    return EXIT_OK


def _cmd_dimension(args) -> int:
    cfg = _load_config(args)
    _require_window(cfg)
    _, traj = _simulate(cfg)
    cloud = embed3(traj, _cloud_range(cfg), cfg.delta_t, args.scale)
    fit = fractal_dimension(cloud.points)
    if args.out:
        dimension_to_csv(fit, args.out, _header_lines(cfg, "dimension", {"scale": args.scale}))
    print(
        f"dimension: slope={float(fit.slope)!r} r2={float(fit.r2)!r} "
        f"window=[{float(fit.fit_window[0])!r},{float(fit.fit_window[1])!r}]"
    )
    return EXIT_OK


def _cmd_components(args) -> int:
    cfg = _load_config(args)
    _require_window(cfg)
    _, traj = _simulate(cfg)
    cloud = embed3(traj, _cloud_range(cfg), cfg.delta_t, "linear")
    n = component_count(cloud, max_n=args.max_n, separation=args.separation)
    if args.out:
        cloud_to_csv(
            cloud,
            args.out,
            _header_lines(cfg, "components", {"components": n, "separation": args.separation}),
        )
    print(f"components: count={n} points={len(cloud)} separation={args.separation!r}")
    return EXIT_OK


def _cmd_inject(args) -> int:
    cfg = _load_config(args)
    _require_window(cfg)
    _, traj = _simulate(cfg)
    lo, hi = _cloud_range(cfg)
    if args.centers:
        centers = sorted(int(tok) for tok in args.centers.split(","))
    else:
        cloud = embed3(traj, (lo, hi), cfg.delta_t, args.scale)
        picks = survey_points(cloud, count=args.center_count)
        centers = sorted(int(cloud.times[i]) for i in picks)
    records = projection_distortion(
        traj,
        centers,
        r=args.r,
        norm=args.norm,
        delta_t=cfg.delta_t,
        scale=args.scale,
        year_range=(lo, hi),
    )
    extra = {"r": args.r, "norm": args.norm, "scale": args.scale}
    if args.out:
        distortion_to_csv(records, args.out, _header_lines(cfg, "inject", extra))
    finite = [float(rec.sup_ratio) for rec in records if math.isfinite(rec.sup_ratio)]
    worst = max(finite) if finite else float("nan")
    print(
        f"inject: centers={len(records)} max_finite_ratio={worst!r} "
        f"infinite={sum(1 for rec in records if math.isinf(rec.sup_ratio))}"
    )
    return EXIT_OK


def _cmd_diverge(args) -> int:
    cfg = _load_config(args)
    _require_window(cfg)
    _, traj = _simulate(cfg)
    curves = neighborhood_divergence(
        traj, args.center, r=args.r, norm=args.norm, horizon=args.horizon
    )
    extra = {"center": args.center, "r": args.r, "norm": args.norm, "horizon": args.horizon}
    if args.out:
        out, owned = _open_text(args.out)
        try:
            for line in _header_lines(cfg, "diverge", extra):
                out.write(line + "\n")
            out.write("member_time,offset_years,delta\n")
            for row, member in enumerate(curves.member_times):
                chunk = [
                    f"{int(member)},{float(s)!r},{float(d)!r}\n"
                    for s, d in zip(curves.offsets, curves.curves[row])
                ]
                out.write("".join(chunk))
        finally:
            if owned:
                out.close()
    spread = float(np.max(np.abs(curves.curves))) if len(curves.curves) else 0.0
    print(f"diverge: center={args.center} members={len(curves.member_times)} max_abs={spread!r}")
    return EXIT_OK


def _fixpoint_pipeline(cfg: RunConfig, refine_iterations: int):
    model, traj = _simulate(cfg)
    coarse = locate_fixed_point(traj, (cfg.sample_from, cfg.sample_to))
    bracket = (coarse.state, state_window(traj, coarse.year + 2))
    refined = refine_fixed_point(model, coarse, bracket, iterations=refine_iterations)
    return model, traj, coarse, refined


def _cmd_fixpoint(args) -> int:
    cfg = _load_config(args)
    _require_window(cfg)
    _, _, coarse, refined = _fixpoint_pipeline(cfg, args.refine_iterations)
    if args.out:
        out, owned = _open_text(args.out)
        try:
            extra = {"fixpoint_year": coarse.year, "refine_iterations": args.refine_iterations}
            for line in _header_lines(cfg, "fixpoint", extra):
                out.write(line + "\n")
            out.write("k,value\n")
            for k, value in enumerate(refined.state.values):
                out.write(f"{k},{float(value)!r}\n")
        finally:
            if owned:
                out.close()
    print(
        f"fixpoint: year={coarse.year} coarse_residual={float(coarse.residual_l1)!r} "
        f"refined_residual={float(refined.residual_l1)!r}"
    )
    return EXIT_OK


def _cmd_jacobian(args) -> int:
    cfg = _load_config(args)
    _require_window(cfg)
    model, _, coarse, refined = _fixpoint_pipeline(cfg, args.refine_iterations)
    jac = jacobian_fd(model, refined.state, fd_eps=args.fd_eps)
    if args.out:
        out, owned = _open_text(args.out)
        try:
            extra = {"fixpoint_year": coarse.year, "fd_eps": args.fd_eps}
            for line in _header_lines(cfg, "jacobian", extra):
                out.write(line + "\n")
            for row in jac:
                out.write(",".join(repr(float(v)) for v in row) + "\n")
        finally:
            if owned:
                out.close()
    print(
        f"jacobian: year={coarse.year} fd_eps={args.fd_eps!r} "
        f"max_abs={float(np.max(np.abs(jac)))!r}"
    )
    return EXIT_OK


def _cmd_spectrum(args) -> int:
    cfg = _load_config(args)
    _require_window(cfg)
    model, _, coarse, refined = _fixpoint_pipeline(cfg, args.refine_iterations)
    jac = jacobian_fd(model, refined.state, fd_eps=args.fd_eps)
    report = spectrum(jac, k=args.k, fd_epsilon=args.fd_eps)
    moduli = np.abs(report.eigenvalues)
    with np.errstate(divide="ignore"):
        logs = np.abs(np.log10(moduli))
    flags = tuple(bool(v) for v in logs < args.threshold_log)
    record = SurveyRecord(point_id=0, report=report, flags=flags)
    if args.out:
        extra = {"fixpoint_year": coarse.year, "fd_eps": args.fd_eps, "k": args.k}
        spectrum_to_csv([record], args.out, _header_lines(cfg, "spectrum", extra))
    lam1 = report.eigenvalues[0]
    lam2 = float(abs(report.eigenvalues[1])) if args.k > 1 else float("nan")
    print(
        f"spectrum: year={coarse.year} lam1_re={float(lam1.real)!r} "
        f"lam1_im={float(lam1.imag)!r} lam2_mod={lam2!r}"
    )
    return EXIT_OK


def _cmd_manifold(args) -> int:
    cfg = _load_config(args)
    _require_window(cfg)
    model, _, coarse, refined = _fixpoint_pipeline(cfg, args.refine_iterations)
    jac = jacobian_fd(model, refined.state, fd_eps=args.fd_eps)
    report = spectrum(jac, k=2, fd_epsilon=args.fd_eps)
    if not report.leading_vector_ranks or report.leading_vector_ranks[0] != 0:
        raise NumericError("leading eigenvalue is not real; no single unstable direction")
    direction = report.leading_vectors[0]
    poly = unstable_manifold(
        model,
        refined,
        direction,
        n_iterations=args.iterations,
        eta=args.eta,
        delta=args.delta,
    )
    if args.out:
        extra = {
            "fixpoint_year": coarse.year,
            "manifold_iterations": args.iterations,
            "eta": args.eta,
            "delta": args.delta,
        }
        manifold_to_csv(poly, args.out, _header_lines(cfg, "manifold", extra))
    shadows = poly.shadows3
    arclen = float(np.sum(np.sqrt(np.sum(np.diff(shadows, axis=0) ** 2, axis=1))))
    print(
        f"manifold: vertices={len(poly)} iterations={args.iterations} "
        f"arclength={arclen!r} truncated={poly.truncated}"
    )
    return EXIT_OK


def _cmd_fold(args) -> int:
    cfg = _load_config(args)
    _require_window(cfg)
    model, traj = _simulate(cfg)
    track = fold_track(
        model,
        traj,
        (args.anchor_a, args.anchor_b),
        n_points=args.n_points,
        horizon_years=args.horizon,
        eta=args.eta,
        frame_step=args.frame_step,
    )
    extra = {
        "anchor_a": args.anchor_a,
        "anchor_b": args.anchor_b,
        "n_points": args.n_points,
        "horizon": args.horizon,
    }
    if args.out:
        out, owned = _open_text(args.out)
        try:
            for line in _header_lines(cfg, "fold", extra):
                out.write(line + "\n")
            out.write("t,max_curvature,argmax_vertex\n")
            for t, curv, vert in zip(track.times, track.max_curvature, track.argmax_vertex):
                out.write(f"{float(t)!r},{float(curv)!r},{int(vert)}\n")
        finally:
            if owned:
                out.close()
    if args.filament_out:
        lams = np.linspace(0.0, 1.0, args.n_points)
        manifold_to_csv(
            Polyline(vertices=track.filament0, source_params=lams),
            args.filament_out,
            _header_lines(cfg, "fold", extra),
        )
    peak = int(np.argmax(track.max_curvature))
    print(
        f"fold: frames={len(track.times)} peak_t={float(track.times[peak])!r} "
        f"peak_curvature={float(track.max_curvature[peak])!r} "
        f"peak_vertex={int(track.argmax_vertex[peak])}"
    )
    return EXIT_OK


def _cmd_theory(args) -> int:
    cfg = _load_config(args)
    params = cfg.params()
    bounds = population_bounds(params)
    try:
        n_eq = equilibrium_density(params)
        n_eq_text = repr(n_eq)
    except NoEquilibriumError:
        n_eq_text = "none"
    thresholds = gamma_thresholds(params.a0, params.a1, count=args.threshold_count)
    rows = [
        ("n_eq", n_eq_text),
        ("n_max", repr(bounds.n_max)),
        ("c0", repr(bounds.c0)),
        ("lower", repr(bounds.lower)),
        ("lipschitz", repr(bounds.lipschitz)),
    ]
    rows += [(f"gamma_threshold_{i}", repr(float(g))) for i, g in enumerate(thresholds)]
    if args.out:
        out, owned = _open_text(args.out)
        try:
            for line in _header_lines(cfg, "theory", {"threshold_count": args.threshold_count}):
                out.write(line + "\n")
            out.write("key,value\n")
            for key, value in rows:
                out.write(f"{key},{value}\n")
        finally:
            if owned:
                out.close()
    print("theory: " + " ".join(f"{key}={value}" for key, value in rows))
    return EXIT_OK


def _open_text(path: str) -> tuple[IO[str], bool]:
    return open(path, "w", encoding="utf-8"), True


# ---------------------------------------------------------------------------
# parser assembly


def _add_config_options(parser: argparse.ArgumentParser) -> None:
    g = parser.add_argument_group("configuration")
    g.add_argument("--config", metavar="FILE", help="flat key=value config file")
    g.add_argument("--a0", type=float, help="maturation age in years (default 0.15)")
    g.add_argument("--a1", type=float, help="maximal age in years (default 2.0)")
    g.add_argument("--m0", type=float, help="base fecundity (default 50.0)")
    g.add_argument("--gamma", type=float, help="density-dependence exponent (default 8.25)")
    g.add_argument("--rho", type=float, help="winter length in years (default 0.30)")
    g.add_argument(
        "--eps-season", dest="eps_season", type=float,
        help="seasonal ramp width in years (default 0.1)",
    )
    g.add_argument(
        "--fecundity-smooth", dest="fecundity_smooth",
        action=argparse.BooleanOptionalAction, default=None,
        help="smooth fecundity junction (default on)",
    )
    g.add_argument(
        "--season-smooth", dest="season_smooth",
        action=argparse.BooleanOptionalAction, default=None,
        help="smooth seasonal ramps (default on)",
    )
    g.add_argument("--p", type=int, help="steps per year (default 100)")
    g.add_argument("--refine", type=int, help="survival-table refinement (default 100)")
    g.add_argument("--years", type=int, help="simulated years (default 20000)")
    g.add_argument("--init", choices=("I", "II"), help="initial-condition variant (default I)")
    g.add_argument(
        "--seed", type=int,
        help=f"RNG seed (default: ${SEED_ENV_VAR} if set, else 0)",
    )
    g.add_argument(
        "--sample-from", dest="sample_from", type=int,
        help="first sampled year (default 19001)",
    )
    g.add_argument(
        "--sample-to", dest="sample_to", type=int,
        help="last sampled year (default 20000)",
    )
    g.add_argument(
        "--delta-t", dest="delta_t", type=float,
        help="sampling offset within the year (default 0.0)",
    )
    g.add_argument("--out", metavar="FILE", help="output CSV path")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="volesim",
        description="Seasonal delayed-renewal population model: simulation and chaos analysis.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True, metavar="SUBCOMMAND")

    def add(name: str, handler, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text, description=help_text)
        _add_config_options(p)
        p.set_defaults(func=handler)
        return p

    add("simulate", _cmd_simulate, "run one trajectory and export per-step births and matures")

    p = add("sweep", _cmd_sweep, "bifurcation diagram over a parameter grid")
    p.add_argument("--param", choices=("gamma", "rho", "a0"), default="gamma",
                   help="swept parameter (default gamma)")
    p.add_argument("--from", dest="from_", type=float, required=True, help="grid start")
    p.add_argument("--to", type=float, required=True, help="grid end (inclusive)")
    p.add_argument("--step", type=float, required=True, help="grid step")
    p.add_argument("--continuation", action="store_true",
                   help="restart each run from the previous final state")
    p.add_argument("--jobs", type=int, default=1, help="worker processes (default 1)")

    p = add("embed", _cmd_embed, "delay-embed annual samples into a 3-D cloud")
    p.add_argument("--scale", choices=("linear", "log"), default="linear",
                   help="coordinate scale (default linear)")

    p = add("dimension", _cmd_dimension, "box-counting dimension of the embedded cloud")
    p.add_argument("--scale", choices=("linear", "log"), default="linear",
                   help="coordinate scale (default linear)")

    p = add("components", _cmd_components, "count attractor components via time residues")
    p.add_argument("--max-n", dest="max_n", type=int, default=12,
                   help="largest component count tried (default 12)")
    p.add_argument("--separation", type=float, default=0.05,
                   help="inter-component distance threshold (default 0.05)")

    p = add("inject", _cmd_inject, "projection distortion of the 3-D embedding")
    p.add_argument("--r", type=float, default=0.1, help="window ball radius (default 0.1)")
    p.add_argument("--norm", choices=("l1", "l2", "linf"), default="linf",
                   help="normalized norm (default linf)")
    p.add_argument("--scale", choices=("linear", "log"), default="linear",
                   help="3-D coordinate scale (default linear)")
    p.add_argument("--center-count", dest="center_count", type=int, default=80,
                   help="farthest-point sample size (default 80)")
    p.add_argument("--centers", help="comma-separated center years (overrides sampling)")

    p = add("diverge", _cmd_diverge, "trajectory spread around near-coincident windows")
    p.add_argument("--center", type=int, required=True, help="center year")
    p.add_argument("--r", type=float, default=0.04, help="window ball radius (default 0.04)")
    p.add_argument("--norm", choices=("l1", "l2", "linf"), default="linf",
                   help="normalized norm (default linf)")
    p.add_argument("--horizon", type=int, default=20, help="offset span in years (default 20)")

    p = add("fixpoint", _cmd_fixpoint, "locate and refine a fixed point of the two-year map")
    p.add_argument("--refine-iterations", dest="refine_iterations", type=int, default=10,
                   help="map applications before minimizing (default 10)")

    p = add("jacobian", _cmd_jacobian, "finite-difference differential at the refined fixed point")
    p.add_argument("--refine-iterations", dest="refine_iterations", type=int, default=10,
                   help="map applications before minimizing (default 10)")
    p.add_argument("--fd-eps", dest="fd_eps", type=float, default=1e-6,
                   help="perturbation size (default 1e-6)")

    p = add("spectrum", _cmd_spectrum, "leading eigenvalues at the refined fixed point")
    p.add_argument("--refine-iterations", dest="refine_iterations", type=int, default=10,
                   help="map applications before minimizing (default 10)")
    p.add_argument("--fd-eps", dest="fd_eps", type=float, default=1e-6,
                   help="perturbation size (default 1e-6)")
    p.add_argument("--k", type=int, default=5, help="eigenvalues reported (default 5)")
    p.add_argument("--threshold-log", dest="threshold_log", type=float,
                   default=math.log10(1.5),
                   help="near-unit-modulus flag threshold (default log10(1.5))")

    p = add("manifold", _cmd_manifold, "unstable manifold polyline from the fixed point")
    p.add_argument("--refine-iterations", dest="refine_iterations", type=int, default=10,
                   help="map applications before minimizing (default 10)")
    p.add_argument("--fd-eps", dest="fd_eps", type=float, default=1e-6,
                   help="perturbation size (default 1e-6)")
    p.add_argument("--iterations", type=int, default=12,
                   help="two-year map applications (default 12)")
    p.add_argument("--eta", type=float, default=1e-2,
                   help="3-D refinement scale (default 0.01)")
    p.add_argument("--delta", type=float, default=1e-4,
                   help="initial segment half-length (default 1e-4)")

    p = add("fold", _cmd_fold, "curvature history of a pushed-forward filament")
    p.add_argument("--anchor-a", dest="anchor_a", type=int, required=True,
                   help="first anchor year")
    p.add_argument("--anchor-b", dest="anchor_b", type=int, required=True,
                   help="second anchor year")
    p.add_argument("--n-points", dest="n_points", type=int, default=1000,
                   help="filament sample count (default 1000)")
    p.add_argument("--horizon", type=float, default=4.0,
                   help="tracking horizon in years (default 4.0)")
    p.add_argument("--eta", type=float, default=1e-2,
                   help="degenerate-anchor scale (default 0.01)")
    p.add_argument("--frame-step", dest="frame_step", type=int, default=None,
                   help="steps between frames (default p/10)")
    p.add_argument("--filament-out", dest="filament_out", metavar="FILE",
                   help="CSV path for the unfolded filament at t=0")

    p = add("theory", _cmd_theory, "closed-form equilibrium, bounds, and stability thresholds")
    p.add_argument("--threshold-count", dest="threshold_count", type=int, default=2,
                   help="stability thresholds computed (default 2)")

    return parser


def run_command(argv: Sequence[str]) -> int:
    """Parse argv, run the chosen subcommand, and map errors to exit codes.

    Exit codes: 0 success, 2 configuration or argument error, 3 numeric
    failure, 4 I/O failure.
    """
    parser = _build_parser()
    try:
        args = parser.parse_args(list(argv))
    except SystemExit as exc:
        code = exc.code
        return int(code) if code else EXIT_OK
    try:
        return args.func(args)
    except NumericError as exc:
        print(f"error[numeric]: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, KeyError, IndexError, TypeError) as exc:
        print(f"error[config]: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error[io]: {exc}", file=sys.stderr)
        return EXIT_IO


def main() -> None:
    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()
