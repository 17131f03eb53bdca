"""Seasonal delayed-renewal population model: simulation and chaos analysis.

The package simulates a single-species population whose reproduction is
delayed by maturation, limited by a maximal age, damped by density
dependence, and gated by a seasonal profile. It provides the continuous
model's kernel functions and theory bounds, a discrete-time simulator
with a compiled core and a pure-Python fallback, delay embeddings of
annual samples, and analysis tools for bifurcation structure, fractal
dimension, fixed points of the two-year return map, spectra, unstable
manifolds, and fold tracking, all exposed through the `volesim` command
line tool.
"""

from .errors import (
    InsufficientScaleError,
    NoEquilibriumError,
    NumericError,
    UnsupportedParameterError,
    VolesimError,
)
from .kernels import (
    FecundityCurve,
    ModelParams,
    TheoryBounds,
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
from .simulator import (
    BirthHistory,
    DiscreteModel,
    Trajectory,
    advance_window,
    annual_samples,
    build_seasonal_weights,
    build_survival_weights,
    initial_condition,
    run,
    step,
    trajectory_to_csv,
)
from .embedding import (
    DistortionRecord,
    DivergenceCurves,
    EmbeddedCloud,
    StateWindow,
    cloud_to_csv,
    distortion_to_csv,
    embed3,
    neighborhood_divergence,
    normalized_distance,
    normalized_norm,
    projection_distortion,
    state_window,
)
from .analysis import (
    BifurcationDiagram,
    DimensionFit,
    FixedPointResult,
    FoldTrack,
    Polyline,
    PolylineGeometry,
    SpectrumReport,
    SurveyRecord,
    bifurcation_sweep,
    box_count,
    component_count,
    detect_period,
    diagram_to_csv,
    dimension_to_csv,
    fold_track,
    fractal_dimension,
    hyperbolicity_survey,
    jacobian_fd,
    locate_fixed_point,
    manifold_to_csv,
    polyline_geometry,
    refine_fixed_point,
    spectrum,
    spectrum_to_csv,
    survey_points,
    unstable_manifold,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "VolesimError",
    "UnsupportedParameterError",
    "NoEquilibriumError",
    "NumericError",
    "InsufficientScaleError",
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
