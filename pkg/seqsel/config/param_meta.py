# Kinds and bounds of every training parameter accepted from defaults.yaml,
# profiles and run-config overrides.
PARAM_META = {
    # --------------------------------------------------
    # Episode & Reward
    # --------------------------------------------------
    "episodes": {"kind": "int", "min": 0},
    "feature_cost": {"kind": "float", "min": 0.0},
    "gamma": {"kind": "probability"},
    # 0 allows classification-only episodes; None means n
    "max_steps": {"kind": "optional_int", "min": 0},

    # --------------------------------------------------
    # Exploration
    # --------------------------------------------------
    "eps_start": {"kind": "probability"},
    "eps_min": {"kind": "probability"},
    "eps_decay_rate": {"kind": "optional_float", "min": 0.0},

    # --------------------------------------------------
    # Replay & Targets
    # --------------------------------------------------
    "batch_size": {"kind": "int", "min": 1},
    "buffer_capacity": {"kind": "int", "min": 1},
    "warmup_transitions": {"kind": "int", "min": 0},
    "updates_per_episode": {"kind": "int", "min": 1},
    "tau": {"kind": "probability"},

    # --------------------------------------------------
    # Network & Optimizer
    # --------------------------------------------------
    "arch": {"kind": "choice", "choices": ["d3qn", "ddqn"]},
    "hidden_units": {"kind": "int", "min": 1},
    "learning_rate": {"kind": "float", "min": 0.0},
    "lr_decay_factor": {"kind": "probability"},
    "lr_decay_every": {"kind": "int", "min": 1},
    "lr_min": {"kind": "float", "min": 0.0},
    "weight_decay": {"kind": "float", "min": 0.0},
    "max_grad_norm": {"kind": "float", "min": 0.0},

    # --------------------------------------------------
    # Run
    # --------------------------------------------------
    "seed": {"kind": "int"},
    "eval_interval": {"kind": "int", "min": 1},
}


PARAM_ALIASES = {
    "lambda": "feature_cost",
}


def coerce_param(key: str, value):
    """Coerce a raw config value according to its PARAM_META kind."""
    meta = PARAM_META[key]
    kind = meta["kind"]

    if kind.startswith("optional_"):
        if value is None:
            return None
        kind = kind[len("optional_"):]

    if kind == "int":
        if isinstance(value, bool) or float(value) != int(float(value)):
            raise ValueError(f"{key} must be an integer, got {value!r}")
        value = int(float(value))
    elif kind in {"float", "probability"}:
        value = float(value)
        if kind == "probability" and not (0.0 <= value <= 1.0):
            raise ValueError(f"{key} must be between 0 and 1")
    elif kind == "choice":
        value = str(value).lower()
        if value not in meta["choices"]:
            raise ValueError(f"{key} must be one of {meta['choices']}")
        return value
    else:
        raise ValueError(f"Unsupported parameter type: {kind}")

    if "min" in meta and value < meta["min"]:
        raise ValueError(f"{key} must be >= {meta['min']}")
    return value
