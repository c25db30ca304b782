"""Scalar fields sampled on regular 2-D grids.

The grid is node-centered and includes both boundary rows, so Dirichlet
conditions and boundary line integrals fall directly on stored samples.
Integration uses the trapezoid rule; its weights play the role of the
measure against which every functional and inner product is evaluated.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import StructureError


@dataclass(frozen=True)
class Grid2D:
    """Uniform grid on [x0, x1] x [y0, y1] with nx * ny nodes."""

    nx: int
    ny: int
    x0: float = 0.0
    x1: float = 1.0
    y0: float = 0.0
    y1: float = 1.0

    def __post_init__(self):
        if self.nx < 2 or self.ny < 2:
            raise StructureError(f"grid needs at least 2 nodes per axis, got {self.nx}x{self.ny}")
        if self.x1 <= self.x0 or self.y1 <= self.y0:
            raise StructureError("grid bounds must satisfy x0 < x1 and y0 < y1")

    @property
    def hx(self) -> float:
        return (self.x1 - self.x0) / (self.nx - 1)

    @property
    def hy(self) -> float:
        return (self.y1 - self.y0) / (self.ny - 1)

    @property
    def shape(self) -> tuple:
        return (self.nx, self.ny)

    @property
    def n_nodes(self) -> int:
        return self.nx * self.ny

    def xs(self) -> np.ndarray:
        return np.linspace(self.x0, self.x1, self.nx)

    def ys(self) -> np.ndarray:
        return np.linspace(self.y0, self.y1, self.ny)

    def meshgrid(self):
        """Node coordinates as (X, Y), each of shape (nx, ny)."""
        return np.meshgrid(self.xs(), self.ys(), indexing="ij")

    def quad_weights(self) -> np.ndarray:
        """Trapezoid weights, shape (nx, ny). Sums exactly to the domain area."""
        wx = np.full(self.nx, self.hx)
        wx[0] = wx[-1] = 0.5 * self.hx
        wy = np.full(self.ny, self.hy)
        wy[0] = wy[-1] = 0.5 * self.hy
        return np.outer(wx, wy)

    def area(self) -> float:
        return (self.x1 - self.x0) * (self.y1 - self.y0)


@dataclass(frozen=True)
class ScalarField:
    """Real samples over a Grid2D, stored as an (nx, ny) array.

    values[i, j] is the sample at node (x_i, y_j); row-major flattening is
    therefore x-major, matching the on-disk dataset layout.
    """

    grid: Grid2D
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.size != self.grid.n_nodes:
            raise StructureError(
                f"field has {v.size} samples, grid has {self.grid.n_nodes} nodes"
            )
        v = v.reshape(self.grid.shape)
        if not np.all(np.isfinite(v)):
            raise StructureError("field contains non-finite samples")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: Grid2D, fn) -> "ScalarField":
        X, Y = grid.meshgrid()
        return cls(grid, fn(X, Y))

    @classmethod
    def constant(cls, grid: Grid2D, c: float) -> "ScalarField":
        return cls(grid, np.full(grid.shape, float(c)))

    def __add__(self, other):
        _check_same_grid(self, other)
        return ScalarField(self.grid, self.values + other.values)

    def __sub__(self, other):
        _check_same_grid(self, other)
        return ScalarField(self.grid, self.values - other.values)

    def __mul__(self, scalar):
        return ScalarField(self.grid, self.values * float(scalar))

    __rmul__ = __mul__


@dataclass(frozen=True)
class VectorField2D:
    """Two scalar components (d/dx and d/dy channels) on one grid."""

    dx: ScalarField
    dy: ScalarField

    def __post_init__(self):
        if self.dx.grid != self.dy.grid:
            raise StructureError("vector field components live on different grids")

    @property
    def grid(self) -> Grid2D:
        return self.dx.grid

    def magnitude(self) -> np.ndarray:
        return np.hypot(self.dx.values, self.dy.values)


def _check_same_grid(f, g):
    if f.grid != g.grid:
        raise StructureError(f"grid mismatch: {f.grid} vs {g.grid}")


def integrate(f: ScalarField) -> float:
    """Trapezoid-rule integral over the grid's domain; linear in f."""
    return float(np.sum(f.grid.quad_weights() * f.values))


def l2_inner(f: ScalarField, g: ScalarField) -> float:
    """Quadrature-weighted inner product; symmetric, PSD on the diagonal."""
    _check_same_grid(f, g)
    return float(np.sum(f.grid.quad_weights() * f.values * g.values))


def l2_norm_sq(f: ScalarField) -> float:
    return l2_inner(f, f)


def _diff_axis(v: np.ndarray, h: float, axis: int) -> np.ndarray:
    """Central differences inside, one-sided second-order at the two edges."""
    v = np.moveaxis(v, axis, 0)
    out = np.empty_like(v)
    out[1:-1] = (v[2:] - v[:-2]) / (2.0 * h)
    out[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h)
    out[-1] = (3.0 * v[-1] - 4.0 * v[-2] + v[-3]) / (2.0 * h)
    return np.moveaxis(out, 0, axis)


def gradient(f: ScalarField) -> VectorField2D:
    """Second-order finite-difference gradient; exact for affine fields."""
    grid = f.grid
    if grid.nx < 3 or grid.ny < 3:
        raise StructureError("gradient needs at least 3 nodes per axis")
    gx = _diff_axis(f.values, grid.hx, axis=0)
    gy = _diff_axis(f.values, grid.hy, axis=1)
    return VectorField2D(ScalarField(grid, gx), ScalarField(grid, gy))
