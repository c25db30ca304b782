"""Scalar-output MLP surrogate trained sample-then-optimize style.

Two ReLU hidden layers of width 256 over the flattened input field.
Each fit draws a fresh initialization and runs a fixed budget of
full-batch gradient descent on squared error regularized toward the
initialization; with no data the model is returned at its random
initialization (a prior sample). Inputs and targets are standardized
from the fitted data so the fixed learning rate behaves across scales;
the affine maps are part of the model record.
"""

from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from ..errors import NumericsError, StructureError


@dataclass(frozen=True)
class MLPConfig:
    in_dim: int
    width: int = 256
    steps: int = 2000
    lr: float = 1e-3

    def __post_init__(self):
        if self.in_dim < 1 or self.width < 1:
            raise StructureError("in_dim and width must be positive")


@dataclass(frozen=True)
class ScalarMLP:
    cfg: MLPConfig
    params: Dict[str, np.ndarray] = field(repr=False)
    x_shift: np.ndarray = field(repr=False)
    x_scale: float = 1.0
    y_shift: float = 0.0
    y_scale: float = 1.0

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Scalar outputs for a stack of flattened fields (n, in_dim)."""
        Xn = (np.asarray(X, dtype=float) - self.x_shift) / self.x_scale
        out, _ = mlp_forward(self.params, Xn)
        return self.y_shift + self.y_scale * out


def init_mlp(cfg: MLPConfig, rng: np.random.Generator) -> Dict[str, np.ndarray]:
    """Kaiming weights, zero biases."""
    H = cfg.width
    return {
        "W1": rng.standard_normal((H, cfg.in_dim)) * np.sqrt(2.0 / cfg.in_dim),
        "b1": np.zeros(H),
        "W2": rng.standard_normal((H, H)) * np.sqrt(2.0 / H),
        "b2": np.zeros(H),
        "w3": rng.standard_normal(H) * np.sqrt(2.0 / H),
        "b3": np.zeros(1),
    }


def mlp_forward(params, X):
    h1 = np.maximum(X @ params["W1"].T + params["b1"], 0.0)
    h2 = np.maximum(h1 @ params["W2"].T + params["b2"], 0.0)
    out = h2 @ params["w3"] + params["b3"][0]
    return out, (X, h1, h2)


def mlp_loss_and_grads(params, X, y, lam, ref_params):
    """Sum of squared errors plus ridge to ref_params, with gradients."""
    out, (Xc, h1, h2) = mlp_forward(params, X)
    resid = out - y
    loss = float(np.sum(resid**2))
    g_out = 2.0 * resid

    grads = {}
    grads["w3"] = h2.T @ g_out
    grads["b3"] = np.array([g_out.sum()])
    g_h2 = np.outer(g_out, params["w3"]) * (h2 > 0)
    grads["W2"] = g_h2.T @ h1
    grads["b2"] = g_h2.sum(axis=0)
    g_h1 = (g_h2 @ params["W2"]) * (h1 > 0)
    grads["W1"] = g_h1.T @ Xc
    grads["b1"] = g_h1.sum(axis=0)

    for k, v in params.items():
        dv = v - ref_params[k]
        loss += lam * float(np.sum(dv * dv))
        grads[k] = grads[k] + 2.0 * lam * dv
    return loss, grads


def mlp_fit_sto(
    data: Sequence[Tuple[np.ndarray, float]],
    cfg: MLPConfig,
    lam: float = 1e-4,
    rng: Optional[np.random.Generator] = None,
) -> ScalarMLP:
    """Fresh initialization plus fixed-budget full-batch gradient descent."""
    rng = rng if rng is not None else np.random.default_rng()
    params = init_mlp(cfg, rng)
    if not data:
        return ScalarMLP(cfg, params, np.zeros(cfg.in_dim), 1.0, 0.0, 1.0)

    X = np.stack([np.asarray(x, dtype=float).ravel() for x, _ in data])
    y = np.array([v for _, v in data], dtype=float)
    if X.shape[1] != cfg.in_dim:
        raise StructureError(f"input dim {X.shape[1]} != config {cfg.in_dim}")

    x_shift = X.mean(axis=0)
    x_scale = float(X.std()) or 1.0
    y_shift = float(y.mean()) if y.size >= 2 else 0.0
    y_scale = (float(y.std()) or 1.0) if y.size >= 2 else 1.0
    Xn = (X - x_shift) / x_scale
    yn = (y - y_shift) / y_scale

    ref = {k: v.copy() for k, v in params.items()}
    initial_loss = None
    for _ in range(cfg.steps):
        loss, grads = mlp_loss_and_grads(params, Xn, yn, lam, ref)
        if initial_loss is None:
            initial_loss = loss
        if not np.isfinite(loss) or loss > 1e6 * max(initial_loss, 1e-30):
            raise NumericsError(f"MLP training diverged: loss {loss:.3e}")
        params = {k: v - cfg.lr * grads[k] for k, v in params.items()}
    return ScalarMLP(cfg, params, x_shift, x_scale, y_shift, y_scale)
