"""Experiment configuration, default grids and JSON (de)serialisation."""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from ..agents import AC_CRITICS, CONTROL_VARIANTS, PREDICTION_UPDATES
from ..environments import CONTROL_ENVS, PREDICTION_ENVS
from ..optimizers import KINDS, OptimizerConfig

PROTOCOLS = ("online", "batch", "reward-scale", "control", "actor-critic")
ALGORITHMS = tuple(PREDICTION_UPDATES) + CONTROL_VARIANTS + tuple(AC_CRITICS)


def pow2(lo: int, hi: int, scale: float = 1.0) -> list[float]:
    return [scale * 2.0**k for k in range(lo, hi + 1)]


ALPHA_PREDICTION = pow2(-7, 0)
ALPHA_BATCH = pow2(-5, 0)
ALPHA_REWARD_SCALE = pow2(-5, 0)
ALPHA_CONTROL = pow2(-8, -1)
ETA_GTD2 = pow2(-6, 6)
ETA_TWO_TIMESCALE = pow2(0, 6)  # TDC and HTD keep η ≥ 1
ETA_SENSITIVITY = pow2(-6, 6)
BETA_SENSITIVITY = pow2(0, 6, 0.1)
BETA_REWARD_SCALE = pow2(-5, 4)
REWARD_SCALES = [1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3]
BATCH_BUDGETS = [2**k for k in range(14)]

# conventions that the outputs carry for provenance
DESIGN_FLAGS = {
    "auc": "mean per-step RMSPBE, step 0 included",
    "baird_init": "ones with component 7 (1-based) = 10, h = 0",
    "episodic_distribution": "restart-chain stationary distribution",
    "eta_placement": "h optimizer stepsize eta*alpha, applied after the accumulator",
    "divergence_cap": "weights frozen once any |w|,|h| > 1e10; RMSPBE clipped at 1e10",
    "htd": "hybrid TD, lambda = 0",
    "tile_offsets": "odd-number asymmetric displacement, cell width range/(tiles-1)",
    "mountain_car": "classic dynamics, gamma 0.99, epsilon 0.1, episode cap 5000",
    "rng": "Philox stream per (seed_base, run)",
    "batch": "constant stepsize, eta 1, budget AUC is the prefix mean, draws shared across alphas",
    "reward_scale": "adagrad, alpha 2^-5..2^0, w0 = 0, trajectories shared across scales",
}


DEFAULT_OPTIMIZER = {
    "online": "adagrad", "batch": "constant", "reward-scale": "adagrad",
    "control": "constant", "actor-critic": "adam",
}


def default_etas(algorithm: str) -> list[float]:
    if algorithm == "gtd2":
        return list(ETA_GTD2)
    if algorithm in ("tdc", "htd"):
        return list(ETA_TWO_TIMESCALE)
    return [1.0]


def default_betas(algorithm: str) -> list[float]:
    return [1.0] if algorithm in ("tdrc", "tdcpp", "qrc", "ac-tdrc") else [0.0]


def default_alphas(protocol: str) -> list[float]:
    return {
        "online": ALPHA_PREDICTION, "batch": ALPHA_BATCH, "reward-scale": ALPHA_REWARD_SCALE,
        "control": ALPHA_CONTROL, "actor-critic": ALPHA_CONTROL,
    }[protocol][:]


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    environment: str = "randomwalk-tabular"
    algorithm: str = "tdrc"
    protocol: str = "online"
    optimizer: str | None = None
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    alphas: list | None = None
    etas: list | None = None
    betas: list | None = None
    clip: float = 1.0
    n_runs: int = 25
    n_steps: int = 3000
    n_env_steps: int = 100_000
    seed_base: int = 0
    # batch protocol
    dataset_size: int = 100_000
    minibatch_size: int = 8
    update_budgets: list = field(default_factory=lambda: list(BATCH_BUDGETS))
    # reward-scale protocol
    reward_scales: list = field(default_factory=lambda: list(REWARD_SCALES))
    # control
    n_tilings: int | None = None
    tiles_per_dim: list = field(default_factory=lambda: [4, 4])
    epsilon: float = 0.1
    gamma: float = 0.99
    episode_cap: int = 5000
    initial_weights: list | None = None
    output: str = "results"

    def __post_init__(self):
        if self.alphas is None:
            self.alphas = default_alphas(self.protocol) if self.protocol in PROTOCOLS else []
        if self.etas is None:
            # the batch protocol fixes the second stepsize rather than sweeping it
            self.etas = [1.0] if self.protocol == "batch" else default_etas(self.algorithm)
        if self.betas is None:
            self.betas = (list(BETA_REWARD_SCALE) if self.protocol == "reward-scale"
                          else default_betas(self.algorithm))
        if self.n_tilings is None:
            self.n_tilings = 5 if self.protocol == "actor-critic" else 16
        if self.optimizer is None:
            self.optimizer = DEFAULT_OPTIMIZER.get(self.protocol, "adagrad")
        self.validate()

    def validate(self) -> None:
        if self.protocol not in PROTOCOLS:
            raise ConfigError(f"unknown protocol {self.protocol!r}; expected one of {PROTOCOLS}")
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}; expected one of {ALGORITHMS}")
        if self.optimizer not in KINDS:
            raise ConfigError(f"unknown optimizer {self.optimizer!r}")
        for name in ("alphas", "etas", "betas"):
            vals = getattr(self, name)
            if not vals:
                raise ConfigError(f"{name} must be non-empty")
        if any(a <= 0 for a in self.alphas):
            raise ConfigError("alphas must be positive")
        if any(e < 0 for e in self.etas) or any(b < 0 for b in self.betas):
            raise ConfigError("etas and betas must be non-negative")
        if self.n_runs < 1:
            raise ConfigError("n_runs must be >= 1")
        control = self.protocol in ("control", "actor-critic")
        if control:
            if self.environment not in CONTROL_ENVS:
                raise ConfigError(f"protocol {self.protocol} needs a control environment")
            wanted = CONTROL_VARIANTS if self.protocol == "control" else tuple(AC_CRITICS)
            if self.algorithm not in wanted:
                raise ConfigError(f"protocol {self.protocol} supports {wanted}")
            if self.n_env_steps < 1:
                raise ConfigError("n_env_steps must be >= 1")
        else:
            if self.environment not in PREDICTION_ENVS:
                raise ConfigError(f"protocol {self.protocol} needs a prediction environment")
            if self.algorithm not in PREDICTION_UPDATES:
                raise ConfigError(f"{self.algorithm!r} is not a prediction algorithm")
            if self.n_steps < 1:
                raise ConfigError("n_steps must be >= 1")
        if self.protocol == "batch":
            if self.dataset_size < 1 or self.minibatch_size < 1:
                raise ConfigError("dataset_size and minibatch_size must be >= 1")
            if not self.update_budgets or any(n < 0 for n in self.update_budgets):
                raise ConfigError("update_budgets must be non-empty and non-negative")
        if self.protocol == "reward-scale":
            if not self.environment.startswith("randomwalk-"):
                raise ConfigError("the reward-scale study runs on the random walks")
            if not self.reward_scales or any(s <= 0 for s in self.reward_scales):
                raise ConfigError("reward_scales must be positive")

    def optimizer_config(self, alpha: float = 1.0) -> OptimizerConfig:
        return OptimizerConfig(self.optimizer, alpha, self.adam_beta1, self.adam_beta2)

    def to_dict(self) -> dict:
        return asdict(self)

    def config_hash(self) -> str:
        payload = {k: v for k, v in self.to_dict().items() if k != "output"}
        blob = json.dumps(payload, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def with_(self, **changes) -> "ExperimentConfig":
        return replace(self, **changes)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True))
