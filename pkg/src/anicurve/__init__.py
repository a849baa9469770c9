"""Anisotropic expanding curvature flows of convex bodies.

Simulator, elliptic soliton solver, and numerical verification suite for
support-function flows with speed f * u^alpha * sigma_k^beta on axisymmetric
bodies in R^3.
"""

from .sphere import (
    Grid,
    ScalarField,
    make_grid,
    make_field,
    differentiate,
    integrate,
    extrema,
)
from .body import (
    SPHERE_AREA,
    CurvatureMatrix,
    BodyGeometry,
    round_body,
    translated_ball,
    spheroid_support,
    curvature_matrix,
    sigma_k,
    convexity_margin,
    body_geometry,
    mixed_volume,
    normalize_body,
    radial_from_support,
    support_from_radial,
    polar_dual,
    profile_curve,
    write_profile_csv,
)
from .functionals import (
    Anisotropy,
    FlowParams,
    DiagnosticsRecord,
    constant_anisotropy,
    power_of_linear_anisotropy,
    tabulated_anisotropy,
    require_convergent_regime,
    speed_factor,
    speed_moment,
    mean_speed_factor,
    lyapunov_functional,
    anisotropy_condition_margin,
    alexandrov_fenchel_margin,
    moment_powers,
    diagnostics,
)
from .flow import (
    MODES,
    ConvexityLostError,
    StoppingConfig,
    Trajectory,
    speed,
    adaptive_dt,
    step,
    run,
    scale_factor,
    normalized_time,
    barrier,
)
from .soliton import (
    SolitonProblem,
    SolitonResult,
    NewtonStagnationError,
    soliton_residual,
    solve_soliton,
    uniqueness_spread,
    round_soliton_radius,
)
from .counterexample import (
    SubsolutionParams,
    BlowupReport,
    subsolution_profile,
    subsolution_profile_dt,
    profile_branch_values,
    profile_branch_slopes,
    profile_radii,
    verify_case_bounds,
    pinched_spheroid,
    capped_profile_body,
    blowup_experiment,
)
from .config import ConfigError, ExperimentConfig, parse_config, load_config
from .cli import run_experiment

__version__ = "0.1.0"
