"""Numba-compiled Darcy pressure solve (the default hot path).

Identical algorithm to ``numpy_impl``: five-point finite-volume stencil,
harmonic-mean face permeabilities, zero Dirichlet boundary, Jacobi
preconditioned conjugate gradients. The whole iteration lives inside one
``@njit`` function so no Python overhead remains in the loop.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def darcy_pcg(a, g, hx, hy, tol, max_iter):
    """Solve -div(a grad u) = g, u = 0 on the boundary.

    Returns (u, rel_residual, iterations, converged).
    """
    nx, ny = a.shape

    # Face conductances divided by the cell size of the flux divergence.
    ax = np.empty((nx - 1, ny))
    for i in range(nx - 1):
        for j in range(ny):
            ax[i, j] = 2.0 * a[i, j] * a[i + 1, j] / (a[i, j] + a[i + 1, j]) / (hx * hx)
    ay = np.empty((nx, ny - 1))
    for i in range(nx):
        for j in range(ny - 1):
            ay[i, j] = 2.0 * a[i, j] * a[i, j + 1] / (a[i, j] + a[i, j + 1]) / (hy * hy)

    diag = np.zeros((nx, ny))
    b = np.zeros((nx, ny))
    b_sq = 0.0
    for i in range(1, nx - 1):
        for j in range(1, ny - 1):
            diag[i, j] = ax[i, j] + ax[i - 1, j] + ay[i, j] + ay[i, j - 1]
            b[i, j] = g[i, j]
            b_sq += b[i, j] * b[i, j]

    u = np.zeros((nx, ny))
    if b_sq == 0.0:
        return u, 0.0, 0, True
    b_norm = np.sqrt(b_sq)

    r = b.copy()
    z = np.zeros((nx, ny))
    p = np.zeros((nx, ny))
    Ap = np.zeros((nx, ny))
    rz = 0.0
    for i in range(1, nx - 1):
        for j in range(1, ny - 1):
            z[i, j] = r[i, j] / diag[i, j]
            p[i, j] = z[i, j]
            rz += r[i, j] * z[i, j]

    rel = 1.0
    for it in range(1, max_iter + 1):
        pAp = 0.0
        for i in range(1, nx - 1):
            for j in range(1, ny - 1):
                Ap[i, j] = (
                    ax[i, j] * (p[i, j] - p[i + 1, j])
                    + ax[i - 1, j] * (p[i, j] - p[i - 1, j])
                    + ay[i, j] * (p[i, j] - p[i, j + 1])
                    + ay[i, j - 1] * (p[i, j] - p[i, j - 1])
                )
                pAp += p[i, j] * Ap[i, j]

        alpha = rz / pAp
        r_sq = 0.0
        for i in range(1, nx - 1):
            for j in range(1, ny - 1):
                u[i, j] += alpha * p[i, j]
                r[i, j] -= alpha * Ap[i, j]
                r_sq += r[i, j] * r[i, j]

        rel = np.sqrt(r_sq) / b_norm
        if rel <= tol:
            return u, rel, it, True

        rz_new = 0.0
        for i in range(1, nx - 1):
            for j in range(1, ny - 1):
                z[i, j] = r[i, j] / diag[i, j]
                rz_new += r[i, j] * z[i, j]
        beta = rz_new / rz
        rz = rz_new
        for i in range(1, nx - 1):
            for j in range(1, ny - 1):
                p[i, j] = z[i, j] + beta * p[i, j]

    return u, rel, max_iter, False
