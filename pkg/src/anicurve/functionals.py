"""Scalar diagnostics for the anisotropic flows.

The central quantity is the speed factor

    rho = f * u^(alpha-1) * sigma_k^beta,

the pointwise ratio of the flow speed to the support value.  It is constant
exactly on self-similar solutions, and its weighted moments drive the
monotone functionals used to certify convergence.
"""

from dataclasses import dataclass
from math import comb

import numpy as np

from .sphere import Grid, ScalarField, make_field
from .body import SPHERE_AREA, _curvature_entries, _sigma_values

__all__ = [
    "Anisotropy",
    "FlowParams",
    "DiagnosticsRecord",
    "constant_anisotropy",
    "power_of_linear_anisotropy",
    "tabulated_anisotropy",
    "require_convergent_regime",
    "speed_factor",
    "speed_moment",
    "mean_speed_factor",
    "lyapunov_functional",
    "anisotropy_condition_margin",
    "alexandrov_fenchel_margin",
    "moment_powers",
    "diagnostics",
    "diagnostics_csv_header",
    "diagnostics_csv_row",
]


@dataclass(frozen=True, eq=False)
class Anisotropy:
    """Positive directional weight multiplying the flow speed."""

    field: ScalarField
    kind: str  # "constant" | "power-of-linear" | "tabulated"


def constant_anisotropy(grid: Grid, value: float = 1.0) -> Anisotropy:
    if value <= 0:
        raise ValueError("anisotropy must be positive")
    return Anisotropy(make_field(grid, value), "constant")


def power_of_linear_anisotropy(grid: Grid, eps: float, s: float) -> Anisotropy:
    """f = (1 + eps*cos(theta))^s, the canonical admissible anisotropy family."""
    base = 1.0 + eps * grid.cos
    if base.min() <= 0:
        raise ValueError("1 + eps*cos(theta) must stay positive")
    return Anisotropy(make_field(grid, base**s), "power-of-linear")


def tabulated_anisotropy(grid: Grid, values) -> Anisotropy:
    f = make_field(grid, values)
    if f.values.min() <= 0:
        raise ValueError("anisotropy must be positive")
    return Anisotropy(f, "tabulated")


@dataclass(frozen=True, eq=False)
class FlowParams:
    """Flow exponents (k, beta, alpha) and the anisotropy f (None means f = 1).

    beta > 0 is required at construction.  The convergence theory of the
    normalized flows additionally needs beta > 1/k; that stricter condition
    is enforced by require_convergent_regime at the call sites that rely on
    it, so that raw-flow and blowup experiments keep the full beta > 0 range.
    """

    k: int
    beta: float
    alpha: float
    f: Anisotropy | None = None

    def __post_init__(self):
        if self.k not in (1, 2):
            raise ValueError(f"k must be 1 or 2, got {self.k}")
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if self.f is not None and self.f.field.values.min() <= 0:
            raise ValueError("anisotropy must be positive")

    @property
    def gamma(self) -> float:
        """sigma_k^beta of the unit sphere: C(2,k)^beta."""
        return float(comb(2, self.k)) ** self.beta

    @property
    def q(self) -> float:
        return self.alpha + self.k * self.beta - 1.0

    @property
    def regime(self) -> str:
        if self.q < 0:
            return "subcritical"
        if self.q == 0:
            return "critical"
        return "supercritical"

    def f_values(self, grid: Grid) -> np.ndarray:
        if self.f is None:
            return np.ones(grid.n)
        if self.f.field.grid.n != grid.n:
            raise ValueError("anisotropy lives on a different grid")
        return self.f.field.values


def require_convergent_regime(p: FlowParams) -> None:
    """Guard for operations whose contracts assume beta > 1/k."""
    if p.beta * p.k <= 1.0:
        raise ValueError(f"beta must exceed 1/k (beta={p.beta}, k={p.k})")


def _speed_factor_values(values: np.ndarray, grid: Grid, p: FlowParams) -> np.ndarray:
    b11, b22, _ = _curvature_entries(values, grid)
    sig = _sigma_values(b11, b22, p.k)
    if sig.min() <= 0:
        raise ValueError("sigma_k must be positive (body not admissible)")
    f = p.f_values(grid)
    return f * values ** (p.alpha - 1.0) * sig**p.beta


def speed_factor(u: ScalarField, p: FlowParams) -> ScalarField:
    """Node-wise f * u^(alpha-1) * sigma_k^beta."""
    if u.values.min() <= 0:
        raise ValueError("support function must be positive")
    return ScalarField(u.grid, _speed_factor_values(u.values, u.grid, p))


def speed_moment(u: ScalarField, p: FlowParams, power: float) -> float:
    """Weighted moment of the speed factor: integral of u * sigma_k * rho^power."""
    g = u.grid
    b11, b22, _ = _curvature_entries(u.values, g)
    sig = _sigma_values(b11, b22, p.k)
    if sig.min() <= 0:
        raise ValueError("sigma_k must be positive (body not admissible)")
    rho = p.f_values(g) * u.values ** (p.alpha - 1.0) * sig**p.beta
    return float(g.weights @ (u.values * sig * rho**power))


def mean_speed_factor(u: ScalarField, p: FlowParams) -> float:
    """First moment over the sphere area; the drift coefficient of the
    volume-normalized flow."""
    return speed_moment(u, p, 1.0) / SPHERE_AREA


def lyapunov_functional(u: ScalarField, p: FlowParams) -> float:
    """Moment with power -1/beta.

    Non-increasing along the volume-normalized flow and stationary exactly
    when the speed factor is constant, i.e. on self-similar solutions.
    """
    return speed_moment(u, p, -1.0 / p.beta)


def anisotropy_condition_margin(f: Anisotropy, p: FlowParams) -> float:
    """Admissibility margin of the anisotropy for soliton convergence.

    With g = f^(1/(1+k*beta-alpha)), returns the minimum entry of the
    curvature matrix of g; positive means Hess(g) + g*I is positive definite,
    the hypothesis under which the normalized anisotropic flow converges for
    k < n.
    """
    expo = 1.0 + p.k * p.beta - p.alpha
    if expo <= 0:
        raise ValueError("1 + k*beta - alpha must be positive")
    grid = f.field.grid
    g = f.field.values ** (1.0 / expo)
    b11, b22, _ = _curvature_entries(g, grid)
    return float(min(b11.min(), b22.min()))


def alexandrov_fenchel_margin(v: ScalarField, u: ScalarField, k: int) -> float:
    """Quadratic mixed-volume margin, nonnegative for uniformly convex pairs.

    k = 1: V2(v,u)^2 - V2(v,v) * V2(u,u)
    k = 2: V3(v,u,u)^2 - V3(v,v,u) * V3(u,u,u)
    """
    from .body import mixed_volume

    if k == 1:
        vu = mixed_volume(v, [u], 1)
        return vu * vu - mixed_volume(v, [v], 1) * mixed_volume(u, [u], 1)
    if k == 2:
        vuu = mixed_volume(v, [u, u], 2)
        return vuu * vuu - mixed_volume(v, [v, u], 2) * mixed_volume(u, [u, u], 2)
    raise ValueError(f"k must be 1 or 2, got {k}")


def moment_powers(beta: float) -> tuple[float, ...]:
    """Default moment exponents tracked in diagnostics."""
    return (-1.0 / beta, 1.0 - 1.0 / beta, 1.0, 2.0)


@dataclass(eq=False)
class DiagnosticsRecord:
    """Per-record scalars of a flow trajectory."""

    t: float
    tau: float
    R: float
    eta: float
    J: float
    Z: dict[float, float]
    umin: float
    umax: float
    gradmax: float
    lambda_min: float
    lambda_max: float
    Q_min: float
    Q_max: float


def diagnostics(
    u: ScalarField,
    p: FlowParams,
    t: float,
    tau: float,
    powers: tuple[float, ...] | None = None,
) -> DiagnosticsRecord:
    """Evaluate the full diagnostics vector at one state."""
    g = u.grid
    vals = u.values
    if powers is None:
        powers = moment_powers(p.beta)
    b11, b22, d1 = _curvature_entries(vals, g)
    sig = _sigma_values(b11, b22, p.k)
    if sig.min() <= 0 or vals.min() <= 0:
        raise ValueError("diagnostics need a uniformly convex positive body")
    rho = p.f_values(g) * vals ** (p.alpha - 1.0) * sig**p.beta
    # near-degenerate bodies can push high moments past the float range;
    # record them as inf rather than warn
    with np.errstate(over="ignore", invalid="ignore"):
        base = g.weights @ np.column_stack([vals * sig * rho**pw for pw in powers])
    Z = {pw: float(val) for pw, val in zip(powers, base)}
    z1 = Z[1.0] if 1.0 in Z else float(g.weights @ (vals * sig * rho))
    return DiagnosticsRecord(
        t=t,
        tau=tau,
        R=float(vals.max() / vals.min()),
        eta=z1 / SPHERE_AREA,
        J=float(g.weights @ (vals * sig * rho ** (-1.0 / p.beta))),
        Z=Z,
        umin=float(vals.min()),
        umax=float(vals.max()),
        gradmax=float(np.max(np.abs(d1) / vals)),
        lambda_min=float(min(b11.min(), b22.min())),
        lambda_max=float(max(b11.max(), b22.max())),
        Q_min=float(rho.min()),
        Q_max=float(rho.max()),
    )


def diagnostics_csv_header(powers: tuple[float, ...]) -> str:
    zcols = ",".join(f"Z_{pw:g}" for pw in powers)
    return f"t,tau,R,eta,J,{zcols},umin,umax,gradmax,lambda_min,lambda_max,Q_min,Q_max"


def diagnostics_csv_row(rec: DiagnosticsRecord) -> str:
    cells = [rec.t, rec.tau, rec.R, rec.eta, rec.J]
    cells.extend(rec.Z[pw] for pw in rec.Z)
    cells.extend(
        [rec.umin, rec.umax, rec.gradmax, rec.lambda_min, rec.lambda_max, rec.Q_min, rec.Q_max]
    )
    return ",".join(f"{c:.17g}" for c in cells)
