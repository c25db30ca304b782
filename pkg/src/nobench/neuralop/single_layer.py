"""Single-hidden-layer neural operator with closed-form last-layer training.

Hidden weights are drawn fresh on every fit and frozen; only the output
weights are trained, ridge-regularized toward their random initialization.
Together with a fresh Gaussian perturbation of the targets this makes each
trained model an exact sample from the Gaussian-process posterior whose
prior kernel is the finite-width feature inner product
k_M(p, q) = sigma_out^2 phi(p) . phi(q) -- see
``tests/test_single_layer.py`` for the closed form being matched.
"""

from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from ..errors import NumericsError, StructureError
from ..fields import ScalarField
from .features import FeatureMapConfig, feature_matrix

INITIALIZERS = ("kaiming", "lecun")


@dataclass(frozen=True)
class SingleLayerConfig:
    features: FeatureMapConfig
    width: int = 512
    init: str = "kaiming"

    def __post_init__(self):
        if self.width < 1:
            raise StructureError("width must be at least 1")
        if self.init not in INITIALIZERS:
            raise StructureError(f"init must be one of {INITIALIZERS}")

    @property
    def hidden_std(self) -> float:
        fan_in = self.features.dim
        gain = 2.0 if self.init == "kaiming" else 1.0
        return float(np.sqrt(gain / fan_in))

    @property
    def output_var(self) -> float:
        return 1.0 / self.width


@dataclass(frozen=True)
class SingleLayerNO:
    """Frozen hidden weights plus (initial, trained) output weights."""

    cfg: SingleLayerConfig
    hidden_weights: np.ndarray = field(repr=False)
    w_init: np.ndarray = field(repr=False)
    w_out: np.ndarray = field(repr=False)

    def hidden(self, V: np.ndarray) -> np.ndarray:
        """ReLU features for rows of the feature matrix V."""
        return np.maximum(V @ self.hidden_weights.T, 0.0)

    def predict_values(self, V: np.ndarray) -> np.ndarray:
        """Output samples at the nodes whose feature rows form V."""
        return self.hidden(V) @ self.w_out

    def predict_field(self, a: ScalarField) -> ScalarField:
        V = feature_matrix(a, self.cfg.features)
        return ScalarField(a.grid, self.predict_values(V).reshape(a.grid.shape))


def init_single_layer(cfg: SingleLayerConfig, rng: np.random.Generator) -> SingleLayerNO:
    """Fresh random model; the output weights are a prior draw."""
    W = rng.standard_normal((cfg.width, cfg.features.dim)) * cfg.hidden_std
    w0 = rng.standard_normal(cfg.width) * np.sqrt(cfg.output_var)
    return SingleLayerNO(cfg, W, w0, w0)


def fit_output_weights(
    model: SingleLayerNO,
    data: Sequence[Tuple[ScalarField, ScalarField]],
    lam: float,
    rng: Optional[np.random.Generator] = None,
) -> SingleLayerNO:
    """Ridge-solve the output weights toward their initialization.

    Residuals are weighted by the quadrature, so the data term is the
    squared output-space norm summed over observations. When ``rng`` is
    given, targets receive the fresh Gaussian perturbation (variance
    lam * sigma_out^2 / nu_i per node) that upgrades the ridge solution to
    an exact posterior sample; without it the fit is the plain regularized
    least-squares solution.
    """
    if lam <= 0:
        raise StructureError("lam must be positive")
    if not data:
        return model
    cfg = model.cfg
    grid = cfg.features.grid
    nu = grid.quad_weights().ravel()
    sqrt_nu = np.sqrt(nu)

    rows = []
    targets = []
    for a_field, y_field in data:
        if a_field.grid != grid or y_field.grid != grid:
            raise StructureError("observation grids must match the feature map grid")
        phi = model.hidden(feature_matrix(a_field, cfg.features))
        y = y_field.values.ravel().astype(float)
        if rng is not None:
            y = y + rng.standard_normal(y.size) * np.sqrt(lam * cfg.output_var / nu)
        rows.append(phi * sqrt_nu[:, None])
        targets.append(y * sqrt_nu)
    Psi = np.vstack(rows)
    resid = np.concatenate(targets) - Psi @ model.w_init

    n_rows, width = Psi.shape
    if width <= n_rows:
        A = Psi.T @ Psi + lam * np.eye(width)
        delta = _solve_spd(A, Psi.T @ resid)
    else:
        A = Psi @ Psi.T + lam * np.eye(n_rows)
        delta = Psi.T @ _solve_spd(A, resid)
    return SingleLayerNO(cfg, model.hidden_weights, model.w_init, model.w_init + delta)


def _solve_spd(A, b):
    for level in (0.0, 1e-10, 1e-8, 1e-6):
        try:
            c, low = scipy.linalg.cho_factor(
                A + level * np.eye(A.shape[0]), lower=True, check_finite=False
            )
            return scipy.linalg.cho_solve((c, low), b, check_finite=False)
        except np.linalg.LinAlgError:
            continue
    raise NumericsError("normal-equation factorization failed after jitter ladder")


def snots_fit(
    data: Sequence[Tuple[ScalarField, ScalarField]],
    cfg: SingleLayerConfig,
    lam: float,
    rng: np.random.Generator,
) -> SingleLayerNO:
    """Sample-then-optimize: fresh initialization, then last-layer ridge fit.

    With no data the returned model is a prior draw.
    """
    model = init_single_layer(cfg, rng)
    return fit_output_weights(model, data, lam, rng)
