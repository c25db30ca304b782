import numpy as np
import pytest

from nobench.fields import Grid2D, ScalarField


def trig_polynomial(rng, max_mode=3):
    """A random band-limited function callable on any grid.

    Low-order trig polynomials are exactly representable at every
    resolution, so coarse-grid quadrature can be checked against a refined
    evaluation of the same function.
    """
    ps, qs = np.meshgrid(np.arange(max_mode + 1), np.arange(max_mode + 1), indexing="ij")
    coeff = rng.normal(size=ps.shape)
    phase_x = rng.uniform(0, 2 * np.pi, size=ps.shape)
    phase_y = rng.uniform(0, 2 * np.pi, size=ps.shape)

    def fn(X, Y):
        out = np.zeros_like(X, dtype=float)
        for p in range(max_mode + 1):
            for q in range(max_mode + 1):
                out += coeff[p, q] * np.cos(
                    2 * np.pi * p * X + phase_x[p, q]
                ) * np.cos(2 * np.pi * q * Y + phase_y[p, q])
        return out

    return fn


@pytest.fixture
def unit_grid():
    return Grid2D(33, 33)


def sample_field(grid, fn):
    return ScalarField.from_function(grid, fn)
