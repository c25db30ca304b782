"""The Thompson-sampling loop, baseline optimizers, oracle, and regret curves.

Algorithms (config kind strings):

* ``snots``     -- single-hidden-layer operator surrogate, closed-form
                   last-layer posterior sample each round
* ``nots-fno``  -- multi-layer FNO surrogate retrained from a fresh random
                   initialization each round
* ``sto-nts``   -- scalar MLP on flattened inputs, sample-then-optimize
* ``gp-ts``     -- GP with the 3-layer infinite-width ReLU kernel over
                   flattened inputs, Thompson sampling
* ``bo-logei``  -- same GP, log-expected-improvement acquisition
* ``bfo``       -- GP with the RKHS-embedding kernel over input functions
* ``rs``        -- uniform random search (without replacement, then with)

Every round queries the oracle once; regret is measured against the exact
pool optimum of the true functional values. Surrogate-based methods break
argmax ties toward the lowest candidate index.
"""

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import StructureError
from .fields import ScalarField
from .functionals import Functional
from .gp import log_ei, posterior_batch, sample_mvn
from .kernels import ArcCosParams, BFOEmbedding, nngp_deep_gram
from .neuralop.features import FeatureMapConfig, pool_feature_tensor
from .neuralop.fno import FNOConfig, fno_apply_batch, fno_train_sgd
from .neuralop.mlp import MLPConfig, mlp_fit_sto
from .neuralop.single_layer import SingleLayerConfig, snots_fit
from .pool import CandidatePool

ALGORITHM_KINDS = ("snots", "nots-fno", "sto-nts", "gp-ts", "bo-logei", "bfo", "rs")
NOTS_KINDS = ("snots", "nots-fno")


class Oracle:
    """Noisy access to the true operator outputs over a finite pool."""

    def __init__(self, pool: CandidatePool, functional: Functional, sigma_xi: float = 0.0):
        if sigma_xi < 0:
            raise StructureError("sigma_xi must be non-negative")
        self.pool = pool
        self.functional = functional
        self.sigma_xi = float(sigma_xi)
        self.true_values = np.array(
            [
                functional(pool.output_field(i), pool.input_field(i))
                for i in range(pool.n)
            ]
        )
        self.best_index = int(np.argmax(self.true_values))
        self.f_star = float(self.true_values[self.best_index])

    @property
    def n(self) -> int:
        return self.pool.n

    def query(self, index: int, rng: np.random.Generator) -> ScalarField:
        """True output plus fresh iid node noise; fresh even at repeats."""
        if not 0 <= index < self.pool.n:
            raise StructureError(f"candidate index {index} out of range")
        values = self.pool.outputs[index]
        if self.sigma_xi > 0:
            # one fixed-size draw per query: the t-th noise field is the same
            # across algorithms sharing an identically seeded noise stream
            values = values + self.sigma_xi * rng.standard_normal(values.shape)
        return ScalarField(self.pool.grid, values)

    def instant_regret(self, index: int) -> float:
        return self.f_star - float(self.true_values[index])


@dataclass(frozen=True)
class AlgorithmConfig:
    """Kind plus surrogate/kernel settings; unset options take defaults."""

    kind: str
    budget: int
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ALGORITHM_KINDS:
            raise StructureError(f"unknown algorithm kind '{self.kind}'")
        if self.budget < 1:
            raise StructureError("budget must be at least 1")

    def opt(self, key, default):
        return self.options.get(key, default)


@dataclass(frozen=True)
class TrialResult:
    algorithm: str
    chosen: np.ndarray
    instant: np.ndarray
    cumulative: np.ndarray
    seconds: np.ndarray

    def __post_init__(self):
        if not (len(self.chosen) == len(self.instant) == len(self.cumulative)):
            raise StructureError("ragged trial arrays")


class _Recorder:
    def __init__(self, oracle, algorithm):
        self.oracle = oracle
        self.algorithm = algorithm
        self.chosen, self.instant, self.seconds = [], [], []
        self._t0 = time.perf_counter()

    def record(self, index: int):
        self.chosen.append(index)
        self.instant.append(self.oracle.instant_regret(index))
        now = time.perf_counter()
        self.seconds.append(now - self._t0)
        self._t0 = now

    def result(self) -> TrialResult:
        inst = np.array(self.instant)
        return TrialResult(
            self.algorithm,
            np.array(self.chosen, dtype=int),
            inst,
            np.cumsum(inst),
            np.array(self.seconds),
        )


def _argmax_lowest_index(scores) -> int:
    return int(np.argmax(scores))


def _score_predictions(oracle, preds: np.ndarray) -> np.ndarray:
    """Apply the objective to each predicted output field."""
    pool = oracle.pool
    return np.array(
        [
            oracle.functional(ScalarField(pool.grid, preds[i]), pool.input_field(i))
            for i in range(pool.n)
        ]
    )


def prepare_algorithm(cfg: AlgorithmConfig, pool: CandidatePool) -> dict:
    """Per-pool precomputation shared by all trials of one algorithm."""
    ctx = {}
    flat_inputs = pool.inputs.reshape(pool.n, -1)
    default_modes = max(1, min(8, pool.grid.nx // 2, pool.grid.ny // 2))
    if cfg.kind == "snots":
        fmap = FeatureMapConfig(pool.grid, n_modes=cfg.opt("n_modes", default_modes))
        ctx["surrogate_cfg"] = SingleLayerConfig(
            fmap, width=cfg.opt("width", 512), init=cfg.opt("init", "kaiming")
        )
        # center/scale the inputs before the feature map so the kernel is not
        # dominated by the constant component of the permeability masks
        shift = float(pool.inputs.mean())
        scale = float(pool.inputs.std()) or 1.0
        ctx["input_shift"], ctx["input_scale"] = shift, scale
        normalized = (pool.inputs - shift) / scale
        feats = pool_feature_tensor(normalized, pool.grid, fmap).reshape(
            pool.n * pool.grid.n_nodes, fmap.dim
        )
        ctx["pool_features"] = feats
        # marginal prior std of the surrogate output at a node, used to match
        # the prior amplitude to the scale of the observed fields
        scfg = ctx["surrogate_cfg"]
        prior_var = 0.5 * scfg.hidden_std**2 * float(np.mean(np.sum(feats**2, axis=1)))
        ctx["prior_std"] = float(np.sqrt(prior_var)) or 1.0
    elif cfg.kind == "nots-fno":
        ctx["surrogate_cfg"] = FNOConfig(
            pool.grid,
            n_layers=cfg.opt("n_layers", 2),
            channels=cfg.opt("channels", 16),
            modes=cfg.opt("modes", default_modes),
            input_shift=float(pool.inputs.mean()),
            input_scale=float(pool.inputs.std()) or 1.0,
        )
    elif cfg.kind == "sto-nts":
        ctx["surrogate_cfg"] = MLPConfig(
            in_dim=flat_inputs.shape[1],
            width=cfg.opt("width", 256),
            steps=cfg.opt("steps", 2000),
            lr=cfg.opt("lr", 1e-3),
        )
    elif cfg.kind in ("gp-ts", "bo-logei"):
        p = ArcCosParams(cfg.opt("c_w", 2.0), cfg.opt("c_b", 0.0))
        ctx["gram"] = nngp_deep_gram(flat_inputs, cfg.opt("depth", 3), p)
    elif cfg.kind == "bfo":
        emb = BFOEmbedding(
            pool.grid,
            base_lengthscale=cfg.opt("base_lengthscale", 0.2),
            jitter=cfg.opt("base_jitter", 1e-8),
        )
        z = emb.coordinates(flat_inputs)
        sq = np.sum(z**2, axis=1)
        d2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * z @ z.T, 0.0)
        np.fill_diagonal(d2, 0.0)
        ls = cfg.opt("lengthscale", None)
        if ls is None:
            # median heuristic keeps the kernel responsive at this pool's scale
            off_diag = d2[np.triu_indices_from(d2, k=1)]
            ls = float(np.sqrt(np.median(off_diag))) or 1.0
        ctx["gram"] = np.exp(-d2 / (2.0 * ls**2))
        ctx["lengthscale"] = ls
    return ctx


def _gp_lam(cfg: AlgorithmConfig, oracle: Oracle) -> float:
    return cfg.opt("lam", max(oracle.sigma_xi**2, 1e-8))


def run_nots(
    oracle: Oracle,
    cfg: AlgorithmConfig,
    rng: np.random.Generator,
    noise_rng: Optional[np.random.Generator] = None,
    ctx: Optional[dict] = None,
) -> TrialResult:
    """Thompson sampling with a neural-operator surrogate (Algorithm 1 shape):
    fresh random initialization, train on past observations, pick the pool
    argmax of the objective on predicted outputs, query, repeat."""
    if cfg.kind not in NOTS_KINDS:
        raise StructureError(f"run_nots expects kinds {NOTS_KINDS}, got '{cfg.kind}'")
    noise_rng = noise_rng if noise_rng is not None else rng
    ctx = ctx if ctx is not None else prepare_algorithm(cfg, oracle.pool)
    pool = oracle.pool
    rec = _Recorder(oracle, cfg.kind)
    if cfg.kind == "snots":
        # noise-matched ridge: the implied per-node GP noise lam*sigma_out^2/nu
        # equals the oracle's sigma_xi^2 (floored for noiseless oracles)
        scfg = ctx["surrogate_cfg"]
        nu_mean = float(pool.grid.quad_weights().mean())
        lam_default = max(oracle.sigma_xi**2 * nu_mean * scfg.width, 1e-10)
    else:
        lam_default = 1e-4
    lam = cfg.opt("lam", lam_default)
    data = []  # (normalized input field, raw observed output field)
    for _ in range(cfg.budget):
        # online target standardization (center on the mean observed field,
        # scale by the deviation RMS): keeps the surrogate's operating range
        # on the data and, for the single-layer surrogate, matches the
        # computable marginal prior std so exploration stays calibrated
        if data:
            y_stack = np.stack([y.values for _, y in data])
            y_center = y_stack.mean(axis=0) if cfg.opt("center_targets", True) else 0.0
            y_rms = float(np.sqrt(np.mean((y_stack - y_center) ** 2))) or 1.0
        else:
            y_center, y_rms = 0.0, 1.0
        y_scale = y_rms / ctx["prior_std"] if cfg.kind == "snots" else y_rms
        scaled = [
            (a, ScalarField(pool.grid, (y.values - y_center) / y_scale))
            for a, y in data
        ]
        if cfg.kind == "snots":
            model = snots_fit(scaled, ctx["surrogate_cfg"], lam, rng)
            flat = model.predict_values(ctx["pool_features"])
            preds = y_center + (y_scale * flat).reshape(pool.n, *pool.grid.shape)
        else:
            if scaled:
                model = fno_train_sgd(
                    scaled,
                    ctx["surrogate_cfg"],
                    lam=lam,
                    rng=rng,
                    epochs=cfg.opt("epochs", 10),
                    lr=cfg.opt("lr", 1e-3),
                    batch_size=cfg.opt("batch_size", 2),
                    regularize_to=cfg.opt("regularize_to", "init"),
                )
            else:
                from .neuralop.fno import init_fno

                model = init_fno(ctx["surrogate_cfg"], rng)
            preds = y_center + y_scale * fno_apply_batch(model, pool.inputs)
        scores = _score_predictions(oracle, preds)
        idx = _argmax_lowest_index(scores)
        y = oracle.query(idx, noise_rng)
        a_norm = (pool.inputs[idx] - ctx.get("input_shift", 0.0)) / ctx.get(
            "input_scale", 1.0
        )
        data.append((ScalarField(pool.grid, a_norm), y))
        rec.record(idx)
    return rec.result()


def run_baseline(
    oracle: Oracle,
    cfg: AlgorithmConfig,
    rng: np.random.Generator,
    noise_rng: Optional[np.random.Generator] = None,
    ctx: Optional[dict] = None,
) -> TrialResult:
    """Scalar-surrogate baselines; observations are the objective applied to
    the noisy output field (noise enters through the functional)."""
    if cfg.kind in NOTS_KINDS:
        raise StructureError("use run_nots for neural-operator kinds")
    noise_rng = noise_rng if noise_rng is not None else rng
    ctx = ctx if ctx is not None else prepare_algorithm(cfg, oracle.pool)
    pool = oracle.pool
    rec = _Recorder(oracle, cfg.kind)

    if cfg.kind == "rs":
        order = rng.permutation(pool.n)
        for t in range(cfg.budget):
            idx = int(order[t]) if t < pool.n else int(rng.integers(pool.n))
            oracle.query(idx, noise_rng)
            rec.record(idx)
        return rec.result()

    flat_inputs = pool.inputs.reshape(pool.n, -1)
    observed = []  # (index, scalar) pairs

    def observe(idx):
        u_noisy = oracle.query(idx, noise_rng)
        observed.append((idx, oracle.functional(u_noisy, pool.input_field(idx))))

    if cfg.kind == "sto-nts":
        mcfg = ctx["surrogate_cfg"]
        lam = cfg.opt("lam", 1e-4)
        for _ in range(cfg.budget):
            model = mlp_fit_sto(
                [(flat_inputs[i], v) for i, v in observed], mcfg, lam, rng
            )
            idx = _argmax_lowest_index(model.predict(flat_inputs))
            observe(idx)
            rec.record(idx)
        return rec.result()

    K = ctx["gram"]
    lam = _gp_lam(cfg, oracle)
    for t in range(cfg.budget):
        post = posterior_batch(K, observed, lam)
        if cfg.kind in ("gp-ts", "bfo"):
            scores = sample_mvn(post, rng)
        else:  # bo-logei
            if not observed:
                idx = int(rng.integers(pool.n))
                observe(idx)
                rec.record(idx)
                continue
            best = max(v for _, v in observed)
            var = np.maximum(np.diag(post.cov), 0.0)
            scores = np.array(
                [log_ei(post.mu[i], var[i], best) for i in range(pool.n)]
            )
        idx = _argmax_lowest_index(scores)
        observe(idx)
        rec.record(idx)
    return rec.result()


def run_algorithm(
    oracle: Oracle,
    cfg: AlgorithmConfig,
    rng: np.random.Generator,
    noise_rng: Optional[np.random.Generator] = None,
    ctx: Optional[dict] = None,
) -> TrialResult:
    runner = run_nots if cfg.kind in NOTS_KINDS else run_baseline
    return runner(oracle, cfg, rng, noise_rng, ctx)


@dataclass(frozen=True)
class RegretCurve:
    """Across-trial summary of cumulative and average regret."""

    budget: int
    n_trials: int
    mean_cumulative: np.ndarray
    std_cumulative: np.ndarray
    mean_average: np.ndarray
    std_average: np.ndarray


def regret_curves(trials) -> RegretCurve:
    """Per-iteration mean and population std of R_t and R_t / t."""
    if not trials:
        raise StructureError("need at least one trial")
    lengths = {len(tr.cumulative) for tr in trials}
    if len(lengths) != 1:
        raise StructureError(f"ragged trials: budgets {sorted(lengths)}")
    (T,) = lengths
    cum = np.stack([tr.cumulative for tr in trials])
    # canonical row order makes the floating-point reductions, and hence the
    # summary, bit-identical under permutations of the trial list
    cum = cum[np.lexsort(cum.T[::-1])]
    steps = np.arange(1, T + 1)
    avg = cum / steps
    return RegretCurve(
        budget=T,
        n_trials=len(trials),
        mean_cumulative=cum.mean(axis=0),
        std_cumulative=cum.std(axis=0),
        mean_average=avg.mean(axis=0),
        std_average=avg.std(axis=0),
    )
