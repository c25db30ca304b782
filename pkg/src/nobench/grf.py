"""Gaussian random fields with power-law spectra, and binarization.

Fields are sampled spectrally: independent complex standard normals per
Fourier mode are scaled by the square root of the spectral density
(4 pi^2 |k|^2 + tau^2)^(-alpha) and inverse-transformed. The overall
amplitude follows the usual normalization sigma = tau^(alpha - d/2) for
d = 2, so the marginal variance stays O(1) across tau.
"""

from dataclasses import dataclass

import numpy as np

from .errors import StructureError
from .fields import Grid2D, ScalarField


@dataclass(frozen=True)
class GRFConfig:
    """Spectrum parameters: inverse length scale tau, smoothness alpha."""

    grid: Grid2D
    tau: float = 3.0
    alpha: float = 2.0

    def __post_init__(self):
        if self.tau <= 0:
            raise StructureError(f"tau must be positive, got {self.tau}")
        if self.alpha <= 1:
            raise StructureError(f"alpha must exceed 1, got {self.alpha}")


def _sqrt_spectrum(cfg: GRFConfig) -> np.ndarray:
    """Per-mode amplitude for an (nx, ny) FFT grid, zero-mean (k=0 removed)."""
    nx, ny = cfg.grid.shape
    kx = np.fft.fftfreq(nx, d=1.0 / nx)
    ky = np.fft.fftfreq(ny, d=1.0 / ny)
    k2 = kx[:, None] ** 2 + ky[None, :] ** 2
    sigma = cfg.tau ** (cfg.alpha - 1.0)
    amp = (nx * ny) * np.sqrt(2.0) * sigma * (4.0 * np.pi**2 * k2 + cfg.tau**2) ** (
        -cfg.alpha / 2.0
    )
    amp[0, 0] = 0.0
    return amp


def grf_node_variance(cfg: GRFConfig) -> float:
    """Exact marginal variance at any node, by direct spectral sum."""
    amp = _sqrt_spectrum(cfg)
    nx, ny = cfg.grid.shape
    # Var(Re(ifft2(amp * xi))) with xi complex standard normal.
    return float(np.sum(amp**2)) / (nx * ny) ** 2


def sample_grf(cfg: GRFConfig, rng: np.random.Generator) -> ScalarField:
    """One zero-mean draw; deterministic given the generator state."""
    nx, ny = cfg.grid.shape
    xi = rng.standard_normal((nx, ny)) + 1j * rng.standard_normal((nx, ny))
    values = np.real(np.fft.ifft2(_sqrt_spectrum(cfg) * xi))
    return ScalarField(cfg.grid, values)


def binarize(grf: ScalarField, a_low: float, a_high: float) -> ScalarField:
    """Threshold at zero: samples >= 0 become a_high, < 0 become a_low."""
    if a_low <= 0 or a_high <= 0:
        raise StructureError("permeability values must be positive for ellipticity")
    values = np.where(grf.values >= 0.0, float(a_high), float(a_low))
    return ScalarField(grf.grid, values)
