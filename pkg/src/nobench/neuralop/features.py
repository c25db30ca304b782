"""Per-node feature vectors for the single-hidden-layer operator.

Evaluated at a node z, the input function a is represented by three
channels: its truncated Fourier expansion re-modulated at z (real and
imaginary parts split), its pointwise value a(z), and a constant bias
channel. Stacking the channels gives v_z(a); the whole surrogate is then
an ordinary finite-dimensional network applied to v_z(a).
"""

from dataclasses import dataclass

import numpy as np

from ..errors import StructureError
from ..fields import Grid2D, ScalarField


@dataclass(frozen=True)
class FeatureMapConfig:
    """Channel switches and the number of retained frequencies per axis."""

    grid: Grid2D
    n_modes: int = 8
    use_fourier: bool = True
    use_pointwise: bool = True
    use_bias: bool = True

    def __post_init__(self):
        if self.use_fourier:
            if self.n_modes < 1:
                raise StructureError("n_modes must be at least 1")
            if 2 * self.n_modes > self.grid.nx or 2 * self.n_modes > self.grid.ny:
                raise StructureError(
                    f"n_modes={self.n_modes} overflows grid {self.grid.shape}"
                )
        if not (self.use_fourier or self.use_pointwise or self.use_bias):
            raise StructureError("at least one feature channel must be enabled")

    @property
    def dim(self) -> int:
        d = 0
        if self.use_fourier:
            d += 2 * self.n_modes**2
        if self.use_pointwise:
            d += 1
        if self.use_bias:
            d += 1
        return d


def retained_modes(cfg: FeatureMapConfig):
    """Integer frequencies of the kept modes: (row frequencies, col frequencies).

    Rows take a window balanced around zero so mixed-sign structure is
    represented; columns take the non-negative half (their negatives are
    redundant for the real fields being mapped). n_modes frequencies per
    axis, n_modes^2 complex modes overall.
    """
    m = cfg.n_modes
    k_rows = np.arange(m - m // 2)
    k_rows = np.concatenate([k_rows, np.arange(-(m // 2), 0)])
    return k_rows, np.arange(m)


def feature_matrix(a: ScalarField, cfg: FeatureMapConfig) -> np.ndarray:
    """v_z(a) for every node, shape (n_nodes, dim), node-major (x-major)."""
    if a.grid != cfg.grid:
        raise StructureError("field grid does not match feature-map config")
    nx, ny = cfg.grid.shape
    blocks = []
    if cfg.use_fourier:
        m = cfg.n_modes
        coeff = np.fft.fft2(a.values) / (nx * ny)
        k_rows, k_cols = retained_modes(cfg)
        block = coeff[np.ix_(k_rows % nx, k_cols % ny)]
        # modulation e^{2 pi i <s, z>} on torus coordinates i/nx, j/ny
        px = np.exp(2j * np.pi * np.outer(np.arange(nx) / nx, k_rows))
        py = np.exp(2j * np.pi * np.outer(np.arange(ny) / ny, k_cols))
        mod = np.einsum("pq,ip,jq->ijpq", block, px, py).reshape(nx * ny, m * m)
        blocks.append(np.column_stack([mod.real, mod.imag]))
    if cfg.use_pointwise:
        blocks.append(a.values.reshape(-1, 1))
    if cfg.use_bias:
        blocks.append(np.ones((nx * ny, 1)))
    return np.ascontiguousarray(np.hstack(blocks))


def feature_map(a: ScalarField, node_index: int, cfg: FeatureMapConfig) -> np.ndarray:
    """v_z(a) at a single node (row-major node index)."""
    if not 0 <= node_index < cfg.grid.n_nodes:
        raise StructureError(f"node index {node_index} out of range")
    return feature_matrix(a, cfg)[node_index]


def pool_feature_tensor(inputs: np.ndarray, grid: Grid2D, cfg: FeatureMapConfig) -> np.ndarray:
    """Features for a stack of input fields, shape (n, n_nodes, dim)."""
    out = np.empty((inputs.shape[0], grid.n_nodes, cfg.dim))
    for i in range(inputs.shape[0]):
        out[i] = feature_matrix(ScalarField(grid, inputs[i]), cfg)
    return out
