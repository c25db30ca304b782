"""Finite-volume Darcy flow solver: -div(a grad u) = g on the unit square.

Pressure u is pinned to zero on all boundary nodes. Faces between nodes
carry the harmonic mean of the two adjacent permeabilities, which keeps
fluxes continuous across the material interfaces of binary media. The SPD
system is solved by Jacobi-preconditioned conjugate gradients implemented
in :mod:`nobench.accel` (numba by default, numpy fallback).
"""

from dataclasses import dataclass

import numpy as np

from . import accel
from .errors import SolverError, StructureError
from .fields import Grid2D, ScalarField

CG_TOL = 1e-10


@dataclass(frozen=True)
class PermeabilityField:
    """A two-valued positive permeability map."""

    field: ScalarField
    a_low: float
    a_high: float

    def __post_init__(self):
        if self.a_low <= 0 or self.a_high <= 0:
            raise StructureError("permeabilities must be positive")
        distinct = np.unique(self.field.values)
        allowed = {float(self.a_low), float(self.a_high)}
        if not set(distinct.tolist()) <= allowed:
            raise StructureError(
                f"permeability samples {distinct[:4]}... outside {{a_low, a_high}}"
            )

    @property
    def grid(self) -> Grid2D:
        return self.field.grid

    @property
    def values(self) -> np.ndarray:
        return self.field.values


@dataclass(frozen=True)
class DarcyInstance:
    """One input-output pair: permeability, pressure, constant forcing."""

    a: PermeabilityField
    u: ScalarField
    g: float = 1.0


def solve_darcy(a: PermeabilityField, g: float = 1.0, max_iter: int = 50_000) -> ScalarField:
    """Pressure field for constant forcing g; exact zeros on the boundary."""
    grid = a.grid
    if grid.nx < 3 or grid.ny < 3:
        raise StructureError("solver needs at least 3 nodes per axis")
    g_arr = np.full(grid.shape, float(g))
    u, rel, iters, ok = accel.darcy_pcg(
        np.ascontiguousarray(a.values), g_arr, grid.hx, grid.hy, CG_TOL, max_iter
    )
    if not ok:
        raise SolverError(
            f"CG stalled at relative residual {rel:.3e} after {iters} iterations",
            residual=rel,
            iterations=iters,
        )
    return ScalarField(grid, u)
