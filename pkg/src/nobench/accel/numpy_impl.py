"""Pure-numpy fallback for the Darcy pressure solve.

Same discretization and iteration as the numba path: five-point
finite-volume stencil with harmonic-mean face permeabilities, zero
Dirichlet boundary, Jacobi-preconditioned conjugate gradients.
"""

import numpy as np


def _face_coefficients(a, hx, hy):
    ax = 2.0 * a[:-1, :] * a[1:, :] / (a[:-1, :] + a[1:, :]) / hx**2
    ay = 2.0 * a[:, :-1] * a[:, 1:] / (a[:, :-1] + a[:, 1:]) / hy**2
    return ax, ay


def _apply(ax, ay, u, out):
    """out <- A u on interior nodes; u must be zero on the boundary."""
    out[1:-1, 1:-1] = (
        ax[1:, 1:-1] * (u[1:-1, 1:-1] - u[2:, 1:-1])
        + ax[:-1, 1:-1] * (u[1:-1, 1:-1] - u[:-2, 1:-1])
        + ay[1:-1, 1:] * (u[1:-1, 1:-1] - u[1:-1, 2:])
        + ay[1:-1, :-1] * (u[1:-1, 1:-1] - u[1:-1, :-2])
    )


def darcy_pcg(a, g, hx, hy, tol, max_iter):
    """Solve -div(a grad u) = g with u = 0 on the boundary.

    Parameters mirror the numba kernel: ``a`` and ``g`` are (nx, ny) node
    arrays, ``tol`` is the relative residual target. Returns
    (u, rel_residual, iterations, converged).
    """
    nx, ny = a.shape
    ax, ay = _face_coefficients(a, hx, hy)

    diag = np.zeros((nx, ny))
    diag[1:-1, 1:-1] = (
        ax[1:, 1:-1] + ax[:-1, 1:-1] + ay[1:-1, 1:] + ay[1:-1, :-1]
    )

    interior = np.zeros((nx, ny), dtype=bool)
    interior[1:-1, 1:-1] = True

    b = np.where(interior, g, 0.0)
    b_norm = np.sqrt(np.sum(b * b))
    u = np.zeros((nx, ny))
    if b_norm == 0.0:
        return u, 0.0, 0, True

    r = b.copy()
    z = np.where(interior, r / np.where(interior, diag, 1.0), 0.0)
    p = z.copy()
    rz = np.sum(r * z)
    Ap = np.zeros((nx, ny))

    rel = 1.0
    for it in range(1, max_iter + 1):
        _apply(ax, ay, p, Ap)
        alpha = rz / np.sum(p * Ap)
        u += alpha * p
        r -= alpha * Ap
        rel = np.sqrt(np.sum(r * r)) / b_norm
        if rel <= tol:
            return u, rel, it, True
        z = np.where(interior, r / np.where(interior, diag, 1.0), 0.0)
        rz_new = np.sum(r * z)
        p = z + (rz_new / rz) * p
        rz = rz_new

    return u, rel, max_iter, False
