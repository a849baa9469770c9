"""Direct elliptic solver for self-similar bodies.

A self-similar solution of the anisotropic flow satisfies

    f * u^(alpha-1) * sigma_k(W_u)^beta = c

for a positive constant c.  The solver runs a damped Newton iteration on
the nodal vector of u with a forward-difference Jacobian; at the grid sizes
used here (N <= 400) the dense assembly and solve are cheap and avoid
hand-deriving the sigma_k linearization.
"""

from dataclasses import dataclass

import numpy as np

from .sphere import Grid, ScalarField
from .body import _curvature_entries, _sigma_values
from .functionals import Anisotropy, FlowParams, anisotropy_condition_margin

__all__ = [
    "SolitonProblem",
    "SolitonResult",
    "NewtonStagnationError",
    "soliton_residual",
    "solve_soliton",
    "uniqueness_spread",
    "round_soliton_radius",
]


class NewtonStagnationError(RuntimeError):
    """Newton iteration stopped making progress; carries the last iterate."""

    def __init__(self, message: str, last_iterate: ScalarField, residual_sup: float):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.residual_sup = residual_sup


@dataclass(frozen=True, eq=False)
class SolitonProblem:
    """Parameters, speed constant, and optional starting guess.

    The supported regime is alpha <= 1 - k*beta, matching the range in which
    the normalized flow converges to the self-similar body.
    """

    params: FlowParams
    c: float = 1.0
    init: ScalarField | None = None

    def __post_init__(self):
        if self.c <= 0:
            raise ValueError("speed constant c must be positive")
        if self.params.alpha > 1.0 - self.params.k * self.params.beta:
            raise ValueError("soliton solver supports alpha <= 1 - k*beta only")


@dataclass(eq=False)
class SolitonResult:
    u: ScalarField
    iterations: int
    residual_sup: float


def _residual_values(vals: np.ndarray, grid: Grid, p: FlowParams, c: float) -> np.ndarray:
    if vals.min() <= 0:
        raise ValueError("support values must be positive")
    b11, b22, _ = _curvature_entries(vals, grid)
    sig = _sigma_values(b11, b22, p.k)
    if sig.min() <= 0:
        raise ValueError("sigma_k must stay positive")
    return p.f_values(grid) * vals ** (p.alpha - 1.0) * sig**p.beta - c


def soliton_residual(u: ScalarField, prob: SolitonProblem) -> ScalarField:
    """Node-wise defect f * u^(alpha-1) * sigma_k^beta - c."""
    return ScalarField(u.grid, _residual_values(u.values, u.grid, prob.params, prob.c))


def round_soliton_radius(prob: SolitonProblem, grid: Grid) -> float:
    """Radius of the round solution for the mean anisotropy value."""
    p = prob.params
    fbar = float(np.mean(p.f_values(grid)))
    expo = p.alpha - 1.0 + p.k * p.beta
    return float((prob.c / (fbar * p.gamma)) ** (1.0 / expo))


def _margin(vals: np.ndarray, grid: Grid) -> float:
    b11, b22, _ = _curvature_entries(vals, grid)
    return float(min(b11.min(), b22.min()))


def solve_soliton(
    prob: SolitonProblem,
    grid: Grid | None = None,
    tol_factor: float = 1e-10,
    max_iter: int = 60,
) -> SolitonResult:
    """Damped Newton iteration for the self-similar body.

    The Jacobian is assembled column by column from forward differences of
    the residual.  A step is accepted only if the iterate stays uniformly
    convex and the sup norm of the residual decreases; otherwise the step is
    halved.  Convergence is declared at |residual|_inf < tol_factor * c.

    For k = 1 the anisotropy must satisfy the admissibility condition
    (positive anisotropy_condition_margin); for k = 2 (the top symmetric
    function in R^3) any positive smooth f is accepted.
    """
    p = prob.params
    if prob.init is not None:
        grid = prob.init.grid
    if grid is None:
        raise ValueError("pass a grid or an initial guess")
    if p.f is not None and p.k == 1:
        if anisotropy_condition_margin(p.f, p) <= 0:
            raise ValueError(
                "anisotropy fails the admissibility condition: the curvature "
                "matrix of f^(1/(1+k*beta-alpha)) must be positive definite for k < 2"
            )

    if prob.init is not None:
        vals = prob.init.values.copy()
    else:
        vals = np.full(grid.n, round_soliton_radius(prob, grid))
    if _margin(vals, grid) <= 0:
        raise ValueError("initial guess must be uniformly convex")

    tol = tol_factor * prob.c
    res = _residual_values(vals, grid, p, prob.c)
    sup = float(np.max(np.abs(res)))
    # central differences: forward ones leave enough Jacobian error near the
    # poles to degrade Newton to a damped linear crawl
    fd_step = 6.0e-8
    for it in range(1, max_iter + 1):
        if sup < tol:
            return SolitonResult(ScalarField(grid, vals), it - 1, sup)
        jac = np.empty((grid.n, grid.n))
        for j in range(grid.n):
            step = fd_step * max(1.0, abs(vals[j]))
            up = vals.copy()
            dn = vals.copy()
            up[j] += step
            dn[j] -= step
            jac[:, j] = (
                _residual_values(up, grid, p, prob.c) - _residual_values(dn, grid, p, prob.c)
            ) / (2.0 * step)
        delta = np.linalg.solve(jac, -res)

        lam = 1.0
        while True:
            trial = vals + lam * delta
            if trial.min() > 0 and _margin(trial, grid) > 0:
                trial_res = _residual_values(trial, grid, p, prob.c)
                trial_sup = float(np.max(np.abs(trial_res)))
                if trial_sup < sup:
                    vals, res, sup = trial, trial_res, trial_sup
                    break
            lam *= 0.5
            if lam < 1e-8:
                raise NewtonStagnationError(
                    f"Newton stagnated at |residual|_inf = {sup:.3e}",
                    ScalarField(grid, vals),
                    sup,
                )
    if sup < tol:
        return SolitonResult(ScalarField(grid, vals), max_iter, sup)
    raise NewtonStagnationError(
        f"no convergence in {max_iter} iterations; |residual|_inf = {sup:.3e}",
        ScalarField(grid, vals),
        sup,
    )


def uniqueness_spread(
    prob: SolitonProblem, grid: Grid, trials: int = 3, seed: int = 0
) -> float:
    """Max pairwise sup distance between solves from randomized starts.

    Only meaningful strictly below the critical line (alpha < 1 - k*beta);
    at equality the solutions form a dilation family and the spread is not
    defined, so that case is rejected.
    """
    p = prob.params
    if p.alpha >= 1.0 - p.k * p.beta:
        raise ValueError("uniqueness check requires alpha < 1 - k*beta")
    if trials < 2:
        raise ValueError("need at least two trials")
    rng = np.random.default_rng(seed)
    r0 = round_soliton_radius(prob, grid)
    solutions = []
    for _ in range(trials):
        for _attempt in range(50):
            vals = r0 * float(np.exp(rng.uniform(-0.4, 0.4))) * np.ones(grid.n)
            for m in range(1, 4):
                vals += r0 * rng.uniform(-0.05, 0.05) * np.cos(m * grid.theta)
            if vals.min() > 0 and _margin(vals, grid) > 0:
                break
        else:
            raise RuntimeError("failed to draw an admissible start")
        start = SolitonProblem(p, prob.c, ScalarField(grid, vals))
        solutions.append(solve_soliton(start).u.values)
    worst = 0.0
    for i in range(len(solutions)):
        for j in range(i + 1, len(solutions)):
            worst = max(worst, float(np.max(np.abs(solutions[i] - solutions[j]))))
    return worst
