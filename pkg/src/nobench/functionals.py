"""Scalar objective functionals evaluated on operator outputs.

Six objectives are provided, addressable by name in the harness config:
``mean``, ``neg_flow_rate``, ``high_gradient``, ``neg_total_pressure``,
``neg_potential_power``, ``inverse``. Two of them (flow rate, potential
power) also read the candidate's input permeability, which the bandit loop
passes alongside the predicted output.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import StructureError
from .fields import (
    Grid2D,
    ScalarField,
    _check_same_grid,
    gradient,
    integrate,
    l2_norm_sq,
)


def f_mean(u: ScalarField) -> float:
    """Average of the output over the domain (total, unnormalized measure)."""
    return integrate(u)


def _edge_normal_flux(v3: np.ndarray, a3: np.ndarray, h: float) -> np.ndarray:
    """a * du/dn on an edge from the three node layers nearest to it.

    Works on the flux through the first two faces (harmonic-mean
    permeability, consistent with the solver) and extrapolates it to the
    boundary with a second-order one-sided rule. For uniform a this is
    exactly the classic stencil (-3 v0 + 4 v1 - v2) / (2h); for two-valued
    media it stays accurate because the flux, unlike the bare derivative,
    is continuous across material interfaces.

    v3/a3 hold the edge layer and the two layers inward, shape (3, m); the
    derivative is taken along the inward axis.
    """
    a_half = 2.0 * a3[0] * a3[1] / (a3[0] + a3[1])
    a_3half = 2.0 * a3[1] * a3[2] / (a3[1] + a3[2])
    q_half = a_half * (v3[1] - v3[0]) / h
    q_3half = a_3half * (v3[2] - v3[1]) / h
    return 1.5 * q_half - 0.5 * q_3half


def boundary_flux(u: ScalarField, a: ScalarField) -> float:
    """Line integral of a * (grad u . n) along the four edges.

    Split into four 1-D trapezoid integrals (corners count toward both
    adjacent edges); see :func:`_edge_normal_flux` for the one-sided
    second-order normal derivative.
    """
    _check_same_grid(u, a)
    grid = u.grid
    if grid.nx < 3 or grid.ny < 3:
        raise StructureError("boundary flux needs at least 3 nodes per axis")
    v, av = u.values, a.values
    hx, hy = grid.hx, grid.hy

    # a * u_x on the x-edges (inward derivative flipped to +x direction).
    aux_left = _edge_normal_flux(v[:3, :], av[:3, :], hx)
    aux_right = -_edge_normal_flux(v[-1:-4:-1, :], av[-1:-4:-1, :], hx)
    auy_bottom = _edge_normal_flux(v[:, :3].T, av[:, :3].T, hy)
    auy_top = -_edge_normal_flux(v[:, -1:-4:-1].T, av[:, -1:-4:-1].T, hy)

    wy = np.full(grid.ny, hy)
    wy[0] = wy[-1] = 0.5 * hy
    wx = np.full(grid.nx, hx)
    wx[0] = wx[-1] = 0.5 * hx

    along_y = np.sum(wy * (-aux_left + aux_right))
    along_x = np.sum(wx * (-auy_bottom + auy_top))
    return float(along_y + along_x)


def f_neg_flow_rate(u: ScalarField, a: ScalarField) -> float:
    """Signed boundary flux; equals minus the total outflow of -a grad u."""
    return boundary_flux(u, a)


def f_high_gradient(u: ScalarField, k: int) -> float:
    """Mean of the k largest gradient magnitudes over the nodes."""
    n = u.grid.n_nodes
    if not 1 <= k <= n:
        raise StructureError(f"k must be in [1, {n}], got {k}")
    mag = gradient(u).magnitude().ravel()
    # Stable sort on the negated magnitudes: ties resolve to lower node index.
    order = np.argsort(-mag, kind="stable")
    return float(np.mean(mag[order[:k]]))


def f_neg_total_pressure(u: ScalarField) -> float:
    """-1/2 the integral of |u|."""
    return -0.5 * integrate(ScalarField(u.grid, np.abs(u.values)))


def f_neg_potential_power(u: ScalarField, a: ScalarField, g: float = 1.0) -> float:
    """-1/2 a(u,u) - 1/2 b(u,u) + <g, u> for constant forcing g.

    a(u,u) integrates u^2 normalized by the integral of the permeability;
    b(u,u) = 2 * integral of grad u . grad u (the symmetrized-gradient form
    collapses to the plain gradient for scalar u).
    """
    _check_same_grid(u, a)
    a_total = integrate(a)
    if a_total <= 0:
        raise StructureError(f"integral of permeability must be positive, got {a_total}")
    alpha_term = l2_norm_sq(u) / a_total
    grad_u = gradient(u)
    beta_term = 2.0 * (l2_norm_sq(grad_u.dx) + l2_norm_sq(grad_u.dy))
    return -0.5 * alpha_term - 0.5 * beta_term + float(g) * integrate(u)


def f_inverse(u: ScalarField, target: ScalarField) -> float:
    """-1/2 the squared distance to the target output; max 0 at u == target."""
    _check_same_grid(u, target)
    return -0.5 * l2_norm_sq(u - target)


@dataclass(frozen=True)
class Functional:
    """Named objective with a uniform call signature f(u, a)."""

    name: str
    fn: Callable
    needs_input: bool

    def __call__(self, u: ScalarField, a: Optional[ScalarField] = None) -> float:
        if self.needs_input:
            if a is None:
                raise StructureError(f"functional '{self.name}' needs the input field")
            return self.fn(u, a)
        return self.fn(u)


FUNCTIONAL_NAMES = (
    "mean",
    "neg_flow_rate",
    "high_gradient",
    "neg_total_pressure",
    "neg_potential_power",
    "inverse",
)


def make_functional(
    name: str,
    k: int = 10,
    g: float = 1.0,
    target: Optional[ScalarField] = None,
) -> Functional:
    """Build a functional by config name, binding its parameters."""
    if name == "mean":
        return Functional("mean", f_mean, needs_input=False)
    if name == "neg_flow_rate":
        return Functional("neg_flow_rate", f_neg_flow_rate, needs_input=True)
    if name == "high_gradient":
        return Functional("high_gradient", lambda u: f_high_gradient(u, k), needs_input=False)
    if name == "neg_total_pressure":
        return Functional("neg_total_pressure", f_neg_total_pressure, needs_input=False)
    if name == "neg_potential_power":
        return Functional(
            "neg_potential_power",
            lambda u, a: f_neg_potential_power(u, a, g),
            needs_input=True,
        )
    if name == "inverse":
        if target is None:
            raise StructureError("inverse functional needs a target field")
        return Functional("inverse", lambda u: f_inverse(u, target), needs_input=False)
    raise StructureError(f"unknown functional '{name}'; know {FUNCTIONAL_NAMES}")


def mean_functional_weights(grid: Grid2D) -> np.ndarray:
    """Node weights w with f(u) = sum_i w_i nu_i u_i for the mean functional."""
    return np.ones(grid.n_nodes)
