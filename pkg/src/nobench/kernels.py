"""Closed-form infinite-width kernels and the function-space kernel for BFO.

The ReLU moment map underlying everything here is the first-order
arc-cosine identity: for (u, v) jointly Gaussian, zero mean, with
variances kxx, kyy and correlation cos(theta),

    E[relu(u) relu(v)] = sqrt(kxx * kyy) / (2 pi) * (sin t + (pi - t) cos t).

Applied once to raw inputs it gives the single-hidden-layer kernel;
iterated on 2x2 covariances it gives the deep network kernel; applied to
the neural-operator feature map it gives the operator kernel and its
functional composites.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import NumericalJitterWarning, NumericsError, StructureError
from .fields import Grid2D, ScalarField
from .neuralop.features import FeatureMapConfig, feature_matrix


@dataclass(frozen=True)
class ArcCosParams:
    """Weight/bias variance scales: c_w / fan_in per weight, c_b per bias."""

    c_w: float = 2.0
    c_b: float = 0.0

    def __post_init__(self):
        if self.c_w <= 0:
            raise StructureError("c_w must be positive")
        if self.c_b < 0:
            raise StructureError("c_b must be non-negative")


def _j1(theta):
    return np.sin(theta) + (np.pi - theta) * np.cos(theta)


def relu_moment(kxx, kxy, kyy):
    """E[relu(u) relu(v)] for zero-mean Gaussians with the given 2x2 moments.

    Accepts scalars or broadcastable arrays; clamps tiny negative variances
    and out-of-range correlations (warning once per call when clamping, as
    these indicate a numerically non-PSD intermediate covariance).
    """
    kxx = np.asarray(kxx, dtype=float)
    kyy = np.asarray(kyy, dtype=float)
    kxy = np.asarray(kxy, dtype=float)
    if np.any(kxx < -1e-12) or np.any(kyy < -1e-12):
        warnings.warn("negative variance clamped in ReLU moment", NumericalJitterWarning)
    vx = np.maximum(kxx, 0.0)
    vy = np.maximum(kyy, 0.0)
    scale = np.sqrt(vx * vy)
    with np.errstate(divide="ignore", invalid="ignore"):
        cos_t = np.where(scale > 0.0, kxy / np.where(scale > 0.0, scale, 1.0), 0.0)
    if np.any(np.abs(cos_t) > 1.0 + 1e-8):
        warnings.warn(
            "correlation above 1 clamped in ReLU moment", NumericalJitterWarning
        )
    theta = np.arccos(np.clip(cos_t, -1.0, 1.0))
    return scale / (2.0 * np.pi) * _j1(theta)


def nngp_relu(x: np.ndarray, y: np.ndarray, p: ArcCosParams = ArcCosParams()) -> float:
    """Single-hidden-layer ReLU network kernel (closed form)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1 or x.size < 1:
        raise StructureError(f"inputs must be equal-length vectors, got {x.shape}, {y.shape}")
    d = x.size
    return float(p.c_b + p.c_w * relu_moment(x @ x / d, x @ y / d, y @ y / d))


def nngp_relu_cross(X: np.ndarray, Y: np.ndarray, p: ArcCosParams = ArcCosParams()) -> np.ndarray:
    """nngp_relu for every row pair: X (n,d) vs Y (m,d) -> (n,m)."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.shape[1] != Y.shape[1]:
        raise StructureError("feature dimensions differ")
    d = X.shape[1]
    sx = np.einsum("ij,ij->i", X, X) / d
    sy = np.einsum("ij,ij->i", Y, Y) / d
    cross = (X @ Y.T) / d
    return p.c_b + p.c_w * relu_moment(sx[:, None], cross, sy[None, :])


def nngp_deep(x: np.ndarray, y: np.ndarray, depth: int, p: ArcCosParams = ArcCosParams()) -> float:
    """Kernel of a depth-`depth` ReLU network (depth = hidden layers >= 1).

    The layer-1 preactivation covariance is <x,y>/d; every subsequent layer
    applies the ReLU moment map, scales by c_w, and adds c_b. depth == 1
    reduces exactly to :func:`nngp_relu`.
    """
    if depth < 1:
        raise StructureError("depth must be at least 1")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise StructureError("inputs must be equal-length vectors")
    d = x.size
    kxx, kxy, kyy = x @ x / d, x @ y / d, y @ y / d
    for _ in range(depth):
        kxy = p.c_b + p.c_w * relu_moment(kxx, kxy, kyy)
        kxx = p.c_b + p.c_w * (kxx / 2.0 if kxx > 0 else 0.0)
        kyy = p.c_b + p.c_w * (kyy / 2.0 if kyy > 0 else 0.0)
    return float(kxy)


def nngp_deep_gram(X: np.ndarray, depth: int, p: ArcCosParams = ArcCosParams()) -> np.ndarray:
    """Deep-kernel Gram matrix over the rows of X, shape (n, n)."""
    if depth < 1:
        raise StructureError("depth must be at least 1")
    X = np.asarray(X, dtype=float)
    d = X.shape[1]
    K = X @ X.T / d
    K = 0.5 * (K + K.T)
    for _ in range(depth):
        diag = np.diag(K).copy()
        K = p.c_b + p.c_w * relu_moment(diag[:, None], K, diag[None, :])
    return 0.5 * (K + K.T)


@dataclass(frozen=True)
class OperatorKernelMatrix:
    """Discretized operator-valued kernel block between two input functions.

    matrix[i, j] holds the scalar kernel at node pair (z_i, z_j); acting on
    an output-space vector means weighting by the quadrature first:
    (K u)(z_i) = sum_j matrix[i, j] * nu_j * u_j.
    """

    matrix: np.ndarray
    weights: np.ndarray

    def apply(self, u_values: np.ndarray) -> np.ndarray:
        return self.matrix @ (self.weights * u_values.ravel())

    def weighted_trace(self) -> float:
        """Trace against the quadrature measure: sum_i nu_i k(z_i, z_i)."""
        return float(np.sum(self.weights * np.diag(self.matrix)))


def neural_op_kernel(
    a: ScalarField,
    z_index: int,
    a2: ScalarField,
    z2_index: int,
    cfg: FeatureMapConfig,
    p: ArcCosParams = ArcCosParams(),
) -> float:
    """Conjugate kernel of the single-hidden-layer operator at two points."""
    va = feature_matrix(a, cfg)[z_index]
    vb = feature_matrix(a2, cfg)[z2_index]
    return nngp_relu(va, vb, p)


def operator_kernel_matrix(
    a: ScalarField,
    a2: ScalarField,
    cfg: FeatureMapConfig,
    p: ArcCosParams = ArcCosParams(),
) -> OperatorKernelMatrix:
    """All node pairs of the conjugate kernel between two input functions."""
    if a.grid != a2.grid:
        raise StructureError("operator kernel needs a shared grid")
    Va = feature_matrix(a, cfg)
    Vb = feature_matrix(a2, cfg)
    return OperatorKernelMatrix(
        nngp_relu_cross(Va, Vb, p), a.grid.quad_weights().ravel()
    )


def functional_kernel(
    a: ScalarField,
    a2: ScalarField,
    weights: np.ndarray,
    cfg: FeatureMapConfig,
    p: ArcCosParams = ArcCosParams(),
) -> float:
    """Scalar kernel of f composed with the operator GP: (w nu)^T K (nu w).

    `weights` represents the bounded linear functional f(u) = sum_i w_i
    nu_i u_i over grid nodes.
    """
    weights = np.asarray(weights, dtype=float).ravel()
    if weights.size != a.grid.n_nodes:
        raise StructureError(
            f"functional weights length {weights.size} != {a.grid.n_nodes} nodes"
        )
    block = operator_kernel_matrix(a, a2, cfg, p)
    wnu = weights * block.weights
    return float(wnu @ block.matrix @ wnu)


class BFOEmbedding:
    """Minimum-norm-interpolant geometry for function-valued inputs.

    Input fields are embedded in the RKHS of a squared-exponential kernel
    over the grid coordinates; squared distances are Mahalanobis forms
    d^T Q^{-1} d of node-value differences, computed through one Cholesky
    factorization of the base Gram Q.
    """

    def __init__(self, grid: Grid2D, base_lengthscale: float = 0.2, jitter: float = 1e-8):
        if base_lengthscale <= 0:
            raise StructureError("base lengthscale must be positive")
        X, Y = grid.meshgrid()
        pts = np.column_stack([X.ravel(), Y.ravel()])
        d2 = np.sum((pts[:, None, :] - pts[None, :, :]) ** 2, axis=-1)
        Q = np.exp(-d2 / (2.0 * base_lengthscale**2))
        self.grid = grid
        self._chol = None
        level = jitter
        for _ in range(4):
            try:
                self._chol = np.linalg.cholesky(Q + level * np.eye(Q.shape[0]))
                break
            except np.linalg.LinAlgError:
                level *= 100.0
        if self._chol is None:
            raise NumericsError("base kernel Gram not factorizable even with jitter")

    def coordinates(self, fields: np.ndarray) -> np.ndarray:
        """Whitened coordinates so that RKHS distances are Euclidean.

        fields: (n, n_nodes) or (n, nx, ny) stacked node values.
        """
        flat = np.asarray(fields, dtype=float).reshape(len(fields), -1)
        import scipy.linalg

        return scipy.linalg.solve_triangular(self._chol, flat.T, lower=True).T

    def distance_sq(self, a_values: np.ndarray, b_values: np.ndarray) -> float:
        z = self.coordinates(np.stack([a_values.ravel(), b_values.ravel()]))
        return float(np.sum((z[0] - z[1]) ** 2))


def bfo_kernel(
    a: ScalarField, a2: ScalarField, lengthscale: float, emb: BFOEmbedding
) -> float:
    """Squared-exponential kernel on the RKHS embedding of the inputs."""
    if lengthscale <= 0:
        raise StructureError("lengthscale must be positive")
    if a.grid != a2.grid or a.grid != emb.grid:
        raise StructureError("bfo kernel needs a shared grid")
    d2 = emb.distance_sq(a.values, a2.values)
    return float(np.exp(-d2 / (2.0 * lengthscale**2)))


def bfo_gram(fields: np.ndarray, lengthscale: float, emb: BFOEmbedding) -> np.ndarray:
    """BFO Gram over a stack of input fields, shape (n, n)."""
    if lengthscale <= 0:
        raise StructureError("lengthscale must be positive")
    z = emb.coordinates(fields)
    sq = np.sum(z**2, axis=1)
    d2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * z @ z.T, 0.0)
    np.fill_diagonal(d2, 0.0)
    return np.exp(-d2 / (2.0 * lengthscale**2))
