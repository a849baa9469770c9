"""Ratio-blowup experiments and the supporting sub-solution machinery.

In the supercritical regime alpha > 1 - k*beta the normalized flows need
not round out arbitrary bodies: a body whose boundary passes close to the
origin through a sharply curved cap expands so slowly there, relative to
the rest, that the ratio R = max u / min u grows.  The cap profile used in
the comparison argument is the piecewise function

    psi(rho, t) = -|t|^theta + |t|^(theta(mu-1)) * rho^2          rho <  |t|^theta
    psi(rho, t) = -|t|^theta - (1-mu)/(1+mu) * |t|^(theta(1+mu))
                  + 2/(1+mu) * rho^(1+mu)                         rho >= |t|^theta

with mu = (q*theta - 1)/(k*beta*theta), q = k*beta + 1 - (2 - alpha), and
theta > 1/q; it is C^1 across the branch junction and strictly convex.
"""

from dataclasses import dataclass

import numpy as np

from .sphere import Grid, ScalarField
from .body import convexity_margin, normalize_body, spheroid_support
from .functionals import FlowParams
from .flow import StoppingConfig, Trajectory, run

__all__ = [
    "SubsolutionParams",
    "subsolution_profile",
    "subsolution_profile_dt",
    "profile_radii",
    "verify_case_bounds",
    "pinched_spheroid",
    "capped_profile_body",
    "BlowupReport",
    "blowup_experiment",
]


@dataclass(frozen=True)
class SubsolutionParams:
    """Exponent bookkeeping for the cap profile."""

    alpha_hat: float
    q: float
    theta: float
    mu: float
    a: float = 1.0

    def __post_init__(self):
        if self.q <= 0:
            raise ValueError("q = k*beta + 1 - alpha_hat must be positive")
        if self.theta * self.q <= 1:
            raise ValueError("theta must exceed 1/q")
        if not (0 < self.mu < 1):
            raise ValueError("mu must lie in (0, 1)")
        if self.a <= 0:
            raise ValueError("speed multiplier a must be positive")

    @classmethod
    def from_exponents(cls, alpha: float, k: int, beta: float, theta: float, a: float = 1.0):
        alpha_hat = 2.0 - alpha
        q = k * beta + 1.0 - alpha_hat
        if q <= 0:
            raise ValueError("q = k*beta + 1 - alpha_hat must be positive")
        mu = (q * theta - 1.0) / (k * beta * theta)
        return cls(alpha_hat=alpha_hat, q=q, theta=theta, mu=mu, a=a)

    @property
    def k_beta(self) -> float:
        return self.q - 1.0 + self.alpha_hat


def _check_domain(rho: float, t: float) -> None:
    if not -1.0 < t < 0.0:
        raise ValueError("t must lie in (-1, 0)")
    if not 0.0 <= rho <= 1.0:
        raise ValueError("rho must lie in [0, 1]")


def subsolution_profile(rho: float, t: float, sp: SubsolutionParams) -> float:
    """Cap height psi(rho, t); C^1 across rho = |t|^theta by construction."""
    _check_domain(rho, t)
    s = -t
    split = s**sp.theta
    if rho < split:
        return float(-(s**sp.theta) + s ** (sp.theta * (sp.mu - 1.0)) * rho * rho)
    return float(
        -(s**sp.theta)
        - (1.0 - sp.mu) / (1.0 + sp.mu) * s ** (sp.theta * (1.0 + sp.mu))
        + 2.0 / (1.0 + sp.mu) * rho ** (1.0 + sp.mu)
    )


def profile_branch_values(rho: float, t: float, sp: SubsolutionParams) -> tuple[float, float]:
    """(inner, outer) closed-form branch values at one point.

    Used to check the C0 matching at the junction rho = |t|^theta, where the
    two formulas must agree identically.
    """
    _check_domain(rho, t)
    s = -t
    inner = -(s**sp.theta) + s ** (sp.theta * (sp.mu - 1.0)) * rho * rho
    outer = (
        -(s**sp.theta)
        - (1.0 - sp.mu) / (1.0 + sp.mu) * s ** (sp.theta * (1.0 + sp.mu))
        + 2.0 / (1.0 + sp.mu) * rho ** (1.0 + sp.mu)
    )
    return float(inner), float(outer)


def profile_branch_slopes(rho: float, t: float, sp: SubsolutionParams) -> tuple[float, float]:
    """(inner, outer) closed-form branch slopes in rho at one point."""
    _check_domain(rho, t)
    s = -t
    return (
        float(2.0 * s ** (sp.theta * (sp.mu - 1.0)) * rho),
        float(2.0 * rho**sp.mu),
    )


def subsolution_profile_dt(rho: float, t: float, sp: SubsolutionParams) -> float:
    """Time derivative of the cap height at fixed rho (positive: the cap rises)."""
    _check_domain(rho, t)
    s = -t
    th, mu = sp.theta, sp.mu
    if rho < s**th:
        return float(th * s ** (th - 1.0) + th * (1.0 - mu) * s ** (th * (mu - 1.0) - 1.0) * rho * rho)
    return float(th * s ** (th - 1.0) * (1.0 + (1.0 - mu) * s ** (th * mu)))


def _profile_derivatives(rho: float, t: float, sp: SubsolutionParams):
    s = -t
    if rho < s**sp.theta:
        d1 = 2.0 * s ** (sp.theta * (sp.mu - 1.0)) * rho
        d2 = 2.0 * s ** (sp.theta * (sp.mu - 1.0))
    else:
        d1 = 2.0 * rho**sp.mu
        d2 = 2.0 * sp.mu * rho ** (sp.mu - 1.0)
    return d1, d2


def profile_radii(sp: SubsolutionParams, rho: float, t: float) -> tuple[float, float]:
    """Principal curvature radii of the rotation surface z = psi(rho).

    Returns (meridian, parallel) radii
    ((1+psi'^2)^(3/2)/psi'', rho*(1+psi'^2)^(1/2)/psi').
    """
    _check_domain(rho, t)
    if rho == 0.0:
        raise ValueError("rho must lie in (0, 1]")
    d1, d2 = _profile_derivatives(rho, t, sp)
    if d1 <= 0 or d2 <= 0:
        raise ValueError("profile is not strictly convex at this point")
    w = 1.0 + d1 * d1
    return float(w**1.5 / d2), float(rho * np.sqrt(w) / d1)


def verify_case_bounds(
    sp: SubsolutionParams,
    p: FlowParams,
    samples: int = 1000,
    seed: int = 0,
    t_range: tuple[float, float] = (1e-3, 0.5),
) -> dict:
    """Sample the two case inequalities of the comparison argument.

    Draws (rho, t) log-uniformly in |t| and within each branch, and reports

      L = r^alpha_hat * sigma_k(radii)^beta with r the distance of the graph
          point from the origin, normalized by |t|^(theta-1): its minimum is
          the empirical lower constant c0 (must be positive), and
      T = |d psi / dt|, normalized the same way: its maximum is compared
          against theta.

    Note the exact pointwise ratio of T is theta*(1 + (1-mu)|t|^(theta*mu))
    on the outer branch, so T_ratio_max approaches theta only as t -> 0-;
    the report carries whatever the samples give.
    """
    if samples < 2:
        raise ValueError("need at least two samples")
    rng = np.random.default_rng(seed)
    lo, hi = t_range
    if not (0 < lo < hi < 1):
        raise ValueError("t_range must satisfy 0 < lo < hi < 1")

    stats = {"inner": [], "outer": []}
    for i in range(samples):
        s = float(np.exp(rng.uniform(np.log(lo), np.log(hi))))
        split = s**sp.theta
        if i % 2 == 0:
            rho = float(np.exp(rng.uniform(np.log(1e-3 * split), np.log(split))))
            branch = "inner"
        else:
            rho = float(np.exp(rng.uniform(np.log(split), 0.0)))
            branch = "outer"
        rho = min(rho, 1.0)
        t = -s
        lam_r, lam_t = profile_radii(sp, rho, t)
        if p.k == 1:
            sig = lam_r + lam_t
        else:
            sig = lam_r * lam_t
        z = subsolution_profile(rho, t, sp)
        r = float(np.hypot(rho, z))
        base = s ** (sp.theta - 1.0)
        L = r**sp.alpha_hat * sig**p.beta / base
        T = subsolution_profile_dt(rho, t, sp) / base
        stats[branch].append((L, T))

    def _summary(pairs):
        Ls = np.array([x[0] for x in pairs])
        Ts = np.array([x[1] for x in pairs])
        return {
            "count": len(pairs),
            "L_ratio_min": float(Ls.min()),
            "L_ratio_max": float(Ls.max()),
            "T_ratio_min": float(Ts.min()),
            "T_ratio_max": float(Ts.max()),
        }

    branch_stats = {b: _summary(v) for b, v in stats.items()}
    all_L = [x[0] for v in stats.values() for x in v]
    all_T = [x[1] for v in stats.values() for x in v]
    return {
        "c0_empirical": float(min(all_L)),
        "T_ratio_max": float(max(all_T)),
        "samples": samples,
        "theta": sp.theta,
        "mu": sp.mu,
        "branch_stats": branch_stats,
    }


def pinched_spheroid(grid: Grid, a: float, b: float) -> ScalarField:
    """Prolate spheroid support with pinch ratio b/a; requires 0 < a < b."""
    if not 0 < a < b:
        raise ValueError("need 0 < a < b")
    return spheroid_support(grid, a, b)


def capped_profile_body(grid: Grid, sp: SubsolutionParams, t: float, n_samples: int = 24_000) -> ScalarField:
    """Support function of the convex body bounded below by the cap profile.

    The lower boundary is the rotation graph of psi(., t) over rho in [0, 1];
    a sphere tangent at the rim (the profile slope there is 2 for every
    admissible parameter set) closes the body on top.  The support function
    is evaluated as a discrete maximum over a dense sampling of the meridian,
    which yields the support of the convex hull of the samples.

    The result is the canonical supercritical blowup seed: its lowest point
    sits at distance |t|^theta below the origin under a cap whose curvature
    radii shrink like |t|^(theta(1-mu)), so the expansion speed there
    vanishes as t -> 0- while the bulk expands at unit rate.
    """
    _check_domain(0.0, t)
    s = -t
    # graph part, log-spaced toward the tip to resolve the cap
    rho = np.concatenate(([0.0], np.geomspace(1e-6, 1.0, n_samples // 2)))
    z = np.array([subsolution_profile(r, t, sp) for r in rho])
    # closing sphere, tangent at (1, psi(1)) with slope 2: radius sqrt(5)/2,
    # center on the axis half a unit above the rim
    z_rim = z[-1]
    radius = np.sqrt(5.0) / 2.0
    z_center = z_rim + 0.5
    a_rim = np.arctan2(1.0, z_rim - z_center)
    arc = np.linspace(0.0, a_rim, n_samples // 2)
    rho_cap = radius * np.sin(arc)
    z_cap = z_center + radius * np.cos(arc)

    pr = np.concatenate([rho, rho_cap])
    pz = np.concatenate([z, z_cap])
    u = np.empty(grid.n)
    # support of an axisymmetric set: maximize over the meridian samples
    for i in range(grid.n):
        u[i] = np.max(np.sin(grid.theta[i]) * pr + np.cos(grid.theta[i]) * pz)
    body = ScalarField(grid, u)
    if u.min() <= 0 or convexity_margin(body) <= 0:
        raise ValueError("cap parameters give an unresolvable body on this grid")
    return body


@dataclass(eq=False)
class BlowupReport:
    verdict: str
    r_initial: float
    r_final: float
    r_increasing: bool
    stop_reason: str
    trajectory: Trajectory
    control_r_decreasing: bool
    control_trajectory: Trajectory


def _monotone(seq, direction: int, slack: float = 1e-9) -> bool:
    arr = np.asarray(seq)
    diffs = direction * np.diff(arr)
    return bool(np.all(diffs >= -slack * np.abs(arr[:-1])))


def blowup_experiment(
    p: FlowParams,
    u0: ScalarField,
    horizon: float,
    stop: StoppingConfig | None = None,
) -> BlowupReport:
    """A/B ratio experiment for the supercritical regime.

    Runs the volume-normalized flow from the size-normalized u0 and declares
    "supports blowup" when the ratio R = max u / min u grows monotonically to
    at least twice its initial value, or when the run dies by ratio blowup or
    convexity loss with R having increased.  A control run at the critical
    exponent alpha' = 1 - k*beta from the same body is reported alongside;
    there R must decrease.
    """
    if p.alpha <= 1.0 - p.k * p.beta:
        raise ValueError("blowup experiment requires alpha > 1 - k*beta")
    if stop is None:
        stop = StoppingConfig()
    stop.t_max = horizon

    u_start = normalize_body(u0, p.k)
    traj = run(u_start, p, "volume_normalized", stop)
    rs = [rec.R for rec in traj.diagnostics]
    increasing = _monotone(rs, +1) and rs[-1] > rs[0]
    doubled = rs[-1] >= 2.0 * rs[0]
    died = traj.stop_reason in ("ratio_blowup", "convexity_lost")
    if (increasing and doubled) or (died and increasing):
        verdict = "supports blowup"
    else:
        verdict = "no blowup"

    p_control = FlowParams(k=p.k, beta=p.beta, alpha=1.0 - p.k * p.beta, f=p.f)
    control = run(u_start, p_control, "volume_normalized", stop)
    crs = [rec.R for rec in control.diagnostics]
    control_decreasing = _monotone(crs, -1) and crs[-1] < crs[0]

    return BlowupReport(
        verdict=verdict,
        r_initial=rs[0],
        r_final=rs[-1],
        r_increasing=increasing,
        stop_reason=traj.stop_reason,
        trajectory=traj,
        control_r_decreasing=control_decreasing,
        control_trajectory=control,
    )
