"""Experiment configuration: TOML files with command-line overrides.

Sections:

* ``[pool]``       -- ``path`` to a NOBENCH1 file, or generator settings
                      (n, nx, ny, tau, alpha, a_low, a_high, forcing, seed)
* ``[experiment]`` -- functional name/params, algorithm list, budget,
                      trials, base seed, noise ("auto" or a float), output
                      directory, worker count
* ``[algo.<kind>]`` -- per-algorithm option overrides (width, modes, ...)

Command-line flags always win over file values.
"""

import dataclasses
from dataclasses import dataclass, field
from typing import Optional

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .bandit import ALGORITHM_KINDS
from .errors import StructureError
from .functionals import FUNCTIONAL_NAMES


@dataclass
class PoolSpec:
    path: Optional[str] = None
    n: int = 1000
    nx: int = 16
    ny: int = 16
    tau: float = 3.0
    alpha: float = 2.0
    a_low: float = 3.0
    a_high: float = 12.0
    forcing: float = 1.0
    seed: int = 1234


@dataclass
class ExperimentConfig:
    pool: PoolSpec = field(default_factory=PoolSpec)
    functional: str = "neg_flow_rate"
    functional_k: int = 10
    target_index: int = 0
    algorithms: list = field(default_factory=lambda: list(ALGORITHM_KINDS))
    budget: int = 50
    trials: int = 10
    seed: int = 0
    noise: object = "auto"  # "auto" -> 0.01 * std of pool outputs
    out: str = "results"
    workers: int = 1
    algo_options: dict = field(default_factory=dict)

    def validate(self):
        if self.functional not in FUNCTIONAL_NAMES:
            raise StructureError(
                f"unknown functional '{self.functional}'; know {FUNCTIONAL_NAMES}"
            )
        for kind in self.algorithms:
            if kind not in ALGORITHM_KINDS:
                raise StructureError(
                    f"unknown algorithm '{kind}'; know {ALGORITHM_KINDS}"
                )
        if self.trials < 1 or self.budget < 1:
            raise StructureError("trials and budget must be at least 1")
        if not (isinstance(self.noise, (int, float)) or self.noise == "auto"):
            raise StructureError("noise must be a number or 'auto'")
        return self


def load_config(path: Optional[str] = None) -> ExperimentConfig:
    cfg = ExperimentConfig()
    if path is None:
        return cfg
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    pool_raw = raw.get("pool", {})
    known_pool = {f.name for f in dataclasses.fields(PoolSpec)}
    bad = set(pool_raw) - known_pool
    if bad:
        raise StructureError(f"unknown [pool] keys: {sorted(bad)}")
    cfg.pool = PoolSpec(**pool_raw)

    exp = raw.get("experiment", {})
    known = {
        "functional",
        "functional_k",
        "target_index",
        "algorithms",
        "budget",
        "trials",
        "seed",
        "noise",
        "out",
        "workers",
    }
    bad = set(exp) - known
    if bad:
        raise StructureError(f"unknown [experiment] keys: {sorted(bad)}")
    for key in known & set(exp):
        setattr(cfg, key, exp[key])
    cfg.algorithms = list(cfg.algorithms)

    cfg.algo_options = {k: dict(v) for k, v in raw.get("algo", {}).items()}
    return cfg


def apply_overrides(
    cfg: ExperimentConfig,
    seed: Optional[int] = None,
    out: Optional[str] = None,
    algorithms: Optional[list] = None,
    trials: Optional[int] = None,
    budget: Optional[int] = None,
    noise: Optional[float] = None,
    pool_path: Optional[str] = None,
    workers: Optional[int] = None,
) -> ExperimentConfig:
    if seed is not None:
        cfg.seed = seed
    if out is not None:
        cfg.out = out
    if algorithms:
        cfg.algorithms = list(algorithms)
    if trials is not None:
        cfg.trials = trials
    if budget is not None:
        cfg.budget = budget
    if noise is not None:
        cfg.noise = noise
    if pool_path is not None:
        cfg.pool.path = pool_path
    if workers is not None:
        cfg.workers = workers
    return cfg
