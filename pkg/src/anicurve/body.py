"""Support-function geometry of axisymmetric convex bodies.

A convex body is represented by its support function u(theta) > 0.  In the
axisymmetric orthonormal frame the curvature matrix W_u = Hess(u) + u*I is
diagonal with entries

    b11 = u'' + u,        b22 = u' * cot(theta) + u,

whose values are the principal curvature radii of the boundary.
"""

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .sphere import Grid, ScalarField, make_field, _differentiate_values, _POLE_WEIGHTS

__all__ = [
    "CurvatureMatrix",
    "BodyGeometry",
    "round_body",
    "translated_ball",
    "spheroid_support",
    "curvature_matrix",
    "sigma_k",
    "convexity_margin",
    "body_geometry",
    "mixed_volume",
    "normalize_body",
    "radial_from_support",
    "support_from_radial",
    "polar_dual",
    "profile_curve",
    "write_profile_csv",
]

SPHERE_AREA = 4.0 * np.pi

_log = logging.getLogger(__name__)


@dataclass(eq=False)
class CurvatureMatrix:
    """Diagonal entries of W_u in the axisymmetric frame."""

    b11: ScalarField
    b22: ScalarField


@dataclass(eq=False)
class BodyGeometry:
    """Per-node curvature data plus the global convexity margin."""

    W: CurvatureMatrix
    lambda1: ScalarField  # smaller principal radius
    lambda2: ScalarField  # larger principal radius
    sigma1: ScalarField
    sigma2: ScalarField
    convexity_margin: float


def round_body(grid: Grid, radius: float) -> ScalarField:
    if radius <= 0:
        raise ValueError("radius must be positive")
    return make_field(grid, radius)


def translated_ball(grid: Grid, offset: float, radius: float = 1.0) -> ScalarField:
    """Unit-type ball of given radius translated by `offset` along the axis."""
    if abs(offset) >= radius:
        raise ValueError("offset must keep the origin inside the ball")
    return make_field(grid, radius + offset * grid.cos)


def spheroid_support(grid: Grid, a: float, b: float) -> ScalarField:
    """Support function of the spheroid with semiaxes (a, a, b)."""
    if a <= 0 or b <= 0:
        raise ValueError("semiaxes must be positive")
    return make_field(grid, np.sqrt(a * a * grid.sin**2 + b * b * grid.cos**2))


def _curvature_entries(values: np.ndarray, grid: Grid):
    d1 = _differentiate_values(values, grid.h, 1, "even")
    b11 = _differentiate_values(values, grid.h, 2, "even") + values
    b22 = d1 * grid.cot + values
    return b11, b22, d1


def curvature_matrix(u: ScalarField) -> CurvatureMatrix:
    b11, b22, _ = _curvature_entries(u.values, u.grid)
    return CurvatureMatrix(ScalarField(u.grid, b11), ScalarField(u.grid, b22))


def _sigma_values(b11: np.ndarray, b22: np.ndarray, k: int) -> np.ndarray:
    if k == 1:
        return b11 + b22
    if k == 2:
        return b11 * b22
    raise ValueError(f"k must be 1 or 2, got {k}")


def sigma_k(W: CurvatureMatrix, k: int) -> ScalarField:
    """Elementary symmetric function of the principal radii (diagonal frame)."""
    return ScalarField(W.b11.grid, _sigma_values(W.b11.values, W.b22.values, k))


def convexity_margin(u: ScalarField) -> float:
    """Smallest eigenvalue of W_u over the grid; positive iff uniformly convex."""
    b11, b22, _ = _curvature_entries(u.values, u.grid)
    return float(min(b11.min(), b22.min()))


def body_geometry(u: ScalarField) -> BodyGeometry:
    g = u.grid
    b11, b22, _ = _curvature_entries(u.values, g)
    lam1 = np.minimum(b11, b22)
    lam2 = np.maximum(b11, b22)
    return BodyGeometry(
        W=CurvatureMatrix(ScalarField(g, b11), ScalarField(g, b22)),
        lambda1=ScalarField(g, lam1),
        lambda2=ScalarField(g, lam2),
        sigma1=ScalarField(g, b11 + b22),
        sigma2=ScalarField(g, b11 * b22),
        convexity_margin=float(lam1.min()),
    )


def mixed_volume(v: ScalarField, us: Sequence[ScalarField], k: int) -> float:
    """Mixed volume V_{k+1}(v, u1, ..., uk) = integral of v * sigma_k[W_{u1},...].

    For k = 2 the polarized form on diagonal matrices is
    sigma_2[A, B] = (a11*b22 + a22*b11) / 2, the unique symmetric bilinear
    form restricting to sigma_2 on the diagonal.
    """
    if len(us) != k:
        raise ValueError(f"expected {k} support functions, got {len(us)}")
    g = v.grid
    if k == 1:
        b11, b22, _ = _curvature_entries(us[0].values, g)
        s = b11 + b22
    else:
        a11, a22, _ = _curvature_entries(us[0].values, g)
        c11, c22, _ = _curvature_entries(us[1].values, g)
        s = 0.5 * (a11 * c22 + a22 * c11)
    return float(g.weights @ (v.values * s))


def normalize_body(u: ScalarField, k: int) -> ScalarField:
    """Rescale u so that the weighted volume integral of u*sigma_k equals 4*pi.

    The scale factor is (4*pi / V_{k+1})^(1/(k+1)); degree-(k+1) homogeneity
    of the integral makes the normalization exact.
    """
    if convexity_margin(u) <= 0:
        raise ValueError("cannot normalize a body that is not uniformly convex")
    vol = mixed_volume(u, [u] * k, k)
    scale = (SPHERE_AREA / vol) ** (1.0 / (k + 1))
    return ScalarField(u.grid, scale * u.values)


def _with_pole_values(values: np.ndarray, grid: Grid):
    """Nodal profile augmented by even-extrapolated pole values."""
    p0 = float(_POLE_WEIGHTS @ values[:3])
    ppi = float(_POLE_WEIGHTS @ values[-1:-4:-1])
    angles = np.concatenate(([0.0], grid.theta, [np.pi]))
    vals = np.concatenate(([p0], values, [ppi]))
    return angles, vals


def radial_from_support(u: ScalarField) -> ScalarField:
    """Radial function of the body with support u, by discrete extremization.

    r(z) = min over directions x with <x, z> > 0 of u(x) / <x, z>.  For an
    axisymmetric body the minimizing direction lies on the meridian of z, so
    <x, z> reduces to cos(theta_x - theta_z).
    """
    if u.values.min() <= 0:
        raise ValueError("support function must be positive (origin enclosed)")
    g = u.grid
    ang, vals = _with_pole_values(u.values, g)
    c = np.cos(ang[:, None] - g.theta[None, :])
    ratio = np.where(c > 1e-12, vals[:, None] / np.where(c > 1e-12, c, 1.0), np.inf)
    return ScalarField(g, ratio.min(axis=0))


def support_from_radial(r: ScalarField) -> ScalarField:
    """Support function of the convex body with radial function r.

    u(x) = max over directions z of r(z) * <x, z>.  A non-convex radial
    profile yields the support function of the convex hull; this is logged
    rather than raised.
    """
    if r.values.min() <= 0:
        raise ValueError("radial function must be positive")
    g = r.grid
    ang, vals = _with_pole_values(r.values, g)
    c = np.cos(ang[:, None] - g.theta[None, :])
    u = ScalarField(g, (vals[:, None] * c).max(axis=0))
    if convexity_margin(u) <= 0:
        _log.warning("support_from_radial: input not convex; returning hull support")
    return u


def polar_dual(u: ScalarField) -> ScalarField:
    """Radial function of the polar dual body: r* = 1/u."""
    if u.values.min() <= 0:
        raise ValueError("support function must be positive")
    return ScalarField(u.grid, 1.0 / u.values)


def profile_curve(u: ScalarField) -> np.ndarray:
    """Meridian profile (rho, z) of the boundary via the inverse normal map."""
    g = u.grid
    d1 = _differentiate_values(u.values, g.h, 1, "even")
    rho = u.values * g.sin + d1 * g.cos
    z = u.values * g.cos - d1 * g.sin
    return np.column_stack([rho, z])


def write_profile_csv(path, curve: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("rho,z\n")
        for rho, z in curve:
            fh.write(f"{rho:.17g},{z:.17g}\n")
