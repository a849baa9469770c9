import numpy as np
import pytest

from anicurve import ScalarField, convexity_margin, make_grid


@pytest.fixture(scope="session")
def grid200():
    return make_grid(200)


@pytest.fixture(scope="session")
def grid64():
    return make_grid(64)


def random_convex_body(grid, rng, scale=1.0, modes=4):
    """Seeded random uniformly convex axisymmetric body.

    Perturbs a round body with low cos(m*theta) modes and rejects draws whose
    convexity margin is not comfortably positive.
    """
    for _ in range(100):
        r0 = scale * float(np.exp(rng.uniform(-0.5, 0.5)))
        vals = np.full(grid.n, r0)
        for m in range(1, modes + 1):
            vals += r0 * rng.uniform(-0.06, 0.06) * np.cos(m * grid.theta)
        u = ScalarField(grid, vals)
        if vals.min() > 0 and convexity_margin(u) > 0.05 * r0:
            return u
    raise RuntimeError("failed to draw a convex body")
