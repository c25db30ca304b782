"""Scalar GP posteriors over finite candidate sets, sampling, acquisition.

Everything operates on the pool's Gram matrix directly: conditioning,
rank-one recursive updates, multivariate-normal sampling, numerically
stable log expected improvement, and greedy estimation of the maximum
information gain.
"""

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .errors import NumericsError, StructureError

JITTER_LADDER = (0.0, 1e-10, 1e-8, 1e-6)


@dataclass(frozen=True)
class NoiseModel:
    """IID Gaussian observation noise per observed scalar (or per node)."""

    sigma_xi: float

    def __post_init__(self):
        if self.sigma_xi <= 0:
            raise StructureError("sigma_xi must be positive")

    @property
    def variance(self) -> float:
        return self.sigma_xi**2


@dataclass(frozen=True)
class GPPosterior:
    """Mean and covariance restricted to the candidate pool."""

    mu: np.ndarray = field(repr=False)
    cov: np.ndarray = field(repr=False)
    t: int = 0

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float)
        cov = np.asarray(self.cov, dtype=float)
        if cov.shape != (mu.size, mu.size):
            raise StructureError("posterior covariance shape mismatch")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "cov", cov)

    @property
    def n(self) -> int:
        return self.mu.size


def chol_with_jitter(mat: np.ndarray):
    """Cholesky with an escalating jitter ladder, scaled to the diagonal."""
    scale = max(1.0, float(np.mean(np.diag(mat))))
    for level in JITTER_LADDER:
        try:
            return np.linalg.cholesky(mat + (level * scale) * np.eye(mat.shape[0]))
        except np.linalg.LinAlgError:
            continue
    raise NumericsError(
        f"factorization failed after jitter ladder {JITTER_LADDER}; "
        f"condition estimate {np.linalg.cond(mat):.3e}"
    )


def posterior_batch(K: np.ndarray, observed, lam: float) -> GPPosterior:
    """Condition the prior GP(0, K) on (index, value) pairs with noise lam.

    Repeated indices are legitimate repeated noisy observations.
    """
    K = np.asarray(K, dtype=float)
    n = K.shape[0]
    if lam <= 0:
        raise StructureError("lam must be positive")
    if not observed:
        return GPPosterior(np.zeros(n), K.copy(), 0)
    idx = np.array([i for i, _ in observed], dtype=int)
    if np.any(idx < 0) or np.any(idx >= n):
        raise StructureError("observation index out of candidate range")
    y = np.array([v for _, v in observed], dtype=float)
    B = K[np.ix_(idx, idx)] + lam * np.eye(idx.size)
    L = chol_with_jitter(B)
    Kxo = K[:, idx]
    alpha = _chol_solve(L, y)
    mu = Kxo @ alpha
    cov = K - Kxo @ _chol_solve(L, Kxo.T)
    cov = 0.5 * (cov + cov.T)
    return GPPosterior(mu, cov, len(observed))


def _chol_solve(L, b):
    import scipy.linalg

    z = scipy.linalg.solve_triangular(L, b, lower=True)
    return scipy.linalg.solve_triangular(L.T, z, lower=False)


def posterior_recursive_step(prev: GPPosterior, observation, lam: float) -> GPPosterior:
    """One rank-one conditioning step on a fresh (index, value) pair."""
    i, y = observation
    if not 0 <= i < prev.n:
        raise StructureError(f"index {i} outside candidate set of size {prev.n}")
    if lam <= 0:
        raise StructureError("lam must be positive")
    denom = prev.cov[i, i] + lam
    col = prev.cov[:, i]
    mu = prev.mu + col * ((y - prev.mu[i]) / denom)
    cov = prev.cov - np.outer(col, col) / denom
    cov = 0.5 * (cov + cov.T)
    return GPPosterior(mu, cov, prev.t + 1)


def sample_mvn(post: GPPosterior, rng: np.random.Generator) -> np.ndarray:
    """One joint sample over all candidates; exact mean when cov is zero."""
    if not np.any(post.cov):
        return post.mu.copy()
    L = chol_with_jitter(post.cov)
    return post.mu + L @ rng.standard_normal(post.n)


_LOG_EI_TAIL_Z = -6.0


def log_ei(mu: float, var: float, best: float) -> float:
    """log E[max(0, X - best)] for X ~ N(mu, var).

    For strongly non-improving candidates (z < -6) the direct formula
    cancels catastrophically, so an asymptotic expansion of
    z Phi(z) + phi(z) = phi(z) (z^-2 - 3 z^-4 + 15 z^-6 - 105 z^-8 + ...)
    takes over. Returns -inf for impossible improvement.
    """
    if var < 0:
        raise StructureError("variance must be non-negative")
    sigma = math.sqrt(var)
    if sigma == 0.0:
        return math.log(mu - best) if mu > best else -math.inf
    z = (mu - best) / sigma
    if z > _LOG_EI_TAIL_Z:
        val = z * special.ndtr(z) + math.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)
        return math.log(sigma) + math.log(val)
    log_phi = -0.5 * z * z - 0.5 * math.log(2 * math.pi)
    series = -3.0 / z**2 + 15.0 / z**4 - 105.0 / z**6
    return math.log(sigma) + log_phi - 2.0 * math.log(-z) + math.log1p(series)


def max_info_gain_greedy(K: np.ndarray, lam: float, T: int) -> float:
    """Greedy submodular estimate of max_{|S|<=T} 0.5 logdet(I + K_S / lam).

    Each step adds the candidate with the largest marginal gain
    0.5 log(1 + var/lam), where var is its current noisy posterior
    variance; submodularity makes the result a (1 - 1/e) approximation.
    """
    K = np.asarray(K, dtype=float)
    n = K.shape[0]
    if not 0 <= T <= n:
        raise StructureError(f"T must be in [0, {n}], got {T}")
    if lam <= 0:
        raise StructureError("lam must be positive")
    cov = K.copy()
    total = 0.0
    chosen = []
    for _ in range(T):
        var = np.maximum(np.diag(cov), 0.0)
        j = int(np.argmax(var))
        total += 0.5 * math.log1p(var[j] / lam)
        denom = cov[j, j] + lam
        col = cov[:, j].copy()
        cov -= np.outer(col, col) / denom
        chosen.append(j)
    return total


def max_info_gain_exhaustive(K: np.ndarray, lam: float, T: int) -> float:
    """Exact maximum over all T-subsets; only viable for small pools."""
    K = np.asarray(K, dtype=float)
    n = K.shape[0]
    if n > 20:
        raise StructureError("exhaustive information gain is limited to 20 candidates")
    if not 0 <= T <= n:
        raise StructureError(f"T must be in [0, {n}], got {T}")
    if T == 0:
        return 0.0
    best = -math.inf
    for subset in itertools.combinations(range(n), T):
        sub = K[np.ix_(subset, subset)]
        sign, logdet = np.linalg.slogdet(np.eye(T) + sub / lam)
        if sign > 0:
            best = max(best, 0.5 * logdet)
    return best
