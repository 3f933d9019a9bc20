from dataclasses import asdict, dataclass
from typing import Any, Dict, Optional

from seqsel.config.config_loader import DEFAULTS_FILE, load_profile, load_yaml
from seqsel.config.param_meta import PARAM_ALIASES, PARAM_META, coerce_param


# share of the episode budget over which epsilon decays to its floor
EPS_DECAY_HORIZON = 0.8


@dataclass
class TrainConfig:
    episodes: int
    feature_cost: float
    gamma: float
    tau: float
    eps_start: float
    eps_min: float
    eps_decay_rate: float
    batch_size: int
    buffer_capacity: int
    updates_per_episode: int
    max_steps: int
    warmup_transitions: int
    arch: str
    seed: int
    eval_interval: int

    hidden_units: int
    learning_rate: float
    lr_decay_factor: float
    lr_decay_every: int
    lr_min: float
    weight_decay: float
    max_grad_norm: float

    def validate(self) -> None:
        if self.episodes < 0:
            raise ValueError("episodes must be non-negative")
        if self.feature_cost < 0:
            raise ValueError("feature_cost must be non-negative")
        if not (0 <= self.gamma <= 1):
            raise ValueError("gamma must be between 0 and 1")
        if not (0 <= self.tau <= 1):
            raise ValueError("tau must be between 0 and 1")
        if not (0 <= self.eps_min <= self.eps_start <= 1):
            raise ValueError("epsilon bounds must satisfy 0 <= eps_min <= eps_start <= 1")
        if self.eps_decay_rate < 0:
            raise ValueError("eps_decay_rate must be non-negative")
        if self.batch_size <= 0:
            raise ValueError("batch_size must be positive")
        if self.buffer_capacity < self.batch_size:
            raise ValueError("buffer_capacity must hold at least one batch")
        if self.updates_per_episode <= 0:
            raise ValueError("updates_per_episode must be positive")
        if self.max_steps < 0:
            raise ValueError("max_steps must be non-negative")
        if self.arch not in {"d3qn", "ddqn"}:
            raise ValueError("arch must be 'd3qn' or 'ddqn'")
        if self.hidden_units <= 0:
            raise ValueError("hidden_units must be positive")
        if self.max_grad_norm <= 0:
            raise ValueError("max_grad_norm must be positive")
        if self.lr_min > self.learning_rate:
            raise ValueError("lr_min must not exceed learning_rate")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def default_decay_rate(eps_start: float, eps_min: float, episodes: int) -> float:
    """Slope that brings epsilon to its floor after 80% of the episodes."""
    if episodes <= 0:
        return 0.0
    return (eps_start - eps_min) / (EPS_DECAY_HORIZON * episodes)


def build_train_config(
    n_features: int,
    profile: Optional[str] = None,
    overrides: Optional[Dict[str, Any]] = None,
) -> TrainConfig:
    params: Dict[str, Any] = dict(load_yaml(DEFAULTS_FILE))
    if profile is not None:
        params.update(load_profile(profile))

    if overrides:
        for key, value in overrides.items():
            key = PARAM_ALIASES.get(key, key)
            if key not in PARAM_META:
                raise ValueError(f"unknown training parameter '{key}'")
            params[key] = value

    params = {key: coerce_param(key, value) for key, value in params.items()}

    if params["max_steps"] is None:
        params["max_steps"] = int(n_features)
    if params["eps_decay_rate"] is None:
        params["eps_decay_rate"] = default_decay_rate(
            params["eps_start"], params["eps_min"], params["episodes"]
        )

    cfg = TrainConfig(**params)
    cfg.validate()
    return cfg
