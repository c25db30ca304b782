"""Neural-operator surrogates.

Three model families share the truncated-Fourier feature map in
:mod:`features`:

* :mod:`single_layer` -- one hidden layer over the feature map, only the
  output weights trained, in closed form (the variant whose posterior
  samples are exact).
* :mod:`fno` -- a compact multi-layer Fourier neural operator trained by
  minibatch SGD with hand-written reverse-mode gradients.
* :mod:`mlp` -- a scalar-output fully connected network for the
  sample-then-optimize baseline.
"""

from .features import FeatureMapConfig, feature_map, feature_matrix
from .single_layer import SingleLayerNO, snots_fit
from .fno import FNOConfig, SmallFNO, fno_forward, fno_train_sgd
from .mlp import MLPConfig, ScalarMLP, mlp_fit_sto

__all__ = [
    "FeatureMapConfig",
    "feature_map",
    "feature_matrix",
    "SingleLayerNO",
    "snots_fit",
    "FNOConfig",
    "SmallFNO",
    "fno_forward",
    "fno_train_sgd",
    "MLPConfig",
    "ScalarMLP",
    "mlp_fit_sto",
]
