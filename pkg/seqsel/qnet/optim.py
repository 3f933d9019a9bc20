from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Tuple

import numpy as np

from seqsel.errors import ContractError
from seqsel.qnet.params import QNetParams


ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

LR_INITIAL = 1e-3
LR_DECAY_FACTOR = 0.7
LR_DECAY_EVERY = 3000
LR_MIN = 3e-8


@dataclass
class OptState:
    m: Dict[str, np.ndarray] = field(default_factory=dict)   # first moments
    v: Dict[str, np.ndarray] = field(default_factory=dict)   # second moments
    t: int = 0
    lr: float = LR_INITIAL

    def copy(self) -> "OptState":
        return OptState(
            m={name: a.copy() for name, a in self.m.items()},
            v={name: a.copy() for name, a in self.v.items()},
            t=self.t,
            lr=self.lr,
        )


def init_opt_state(params: QNetParams, lr: float = LR_INITIAL) -> OptState:
    return OptState(
        m={name: np.zeros_like(t) for name, t in params.items()},
        v={name: np.zeros_like(t) for name, t in params.items()},
        t=0,
        lr=lr,
    )


def global_norm(grads: Dict[str, np.ndarray]) -> float:
    return math.sqrt(sum(float(np.sum(np.square(g, dtype=np.float64))) for g in grads.values()))


def clip_global_norm(grads: Dict[str, np.ndarray], max_norm: float) -> Dict[str, np.ndarray]:
    if max_norm <= 0:
        raise ValueError("max_norm must be positive")
    norm = global_norm(grads)
    if norm <= max_norm:
        return dict(grads)
    scale = max_norm / norm
    return {name: (g * scale).astype(g.dtype, copy=False) for name, g in grads.items()}


def adam_step(
    params: QNetParams,
    grads: Dict[str, np.ndarray],
    opt: OptState,
    weight_decay: float = 0.0,
) -> Tuple[QNetParams, OptState]:
    """One bias-corrected Adam step with coupled L2 weight decay; inputs are not mutated."""
    if set(grads) != set(params.tensors) or set(opt.m) != set(params.tensors):
        raise ContractError("gradients, moments and parameters must cover the same tensors")

    t = opt.t + 1
    bias1 = 1.0 - ADAM_BETA1 ** t
    bias2 = 1.0 - ADAM_BETA2 ** t

    new_tensors, new_m, new_v = {}, {}, {}
    for name, theta in params.items():
        g = grads[name]
        if g.shape != theta.shape:
            raise ContractError(f"gradient {name} has shape {g.shape}, expected {theta.shape}")
        g = g + weight_decay * theta
        m = ADAM_BETA1 * opt.m[name] + (1.0 - ADAM_BETA1) * g
        v = ADAM_BETA2 * opt.v[name] + (1.0 - ADAM_BETA2) * g * g
        step = opt.lr * (m / bias1) / (np.sqrt(v / bias2) + ADAM_EPS)
        new_tensors[name] = (theta - step).astype(theta.dtype, copy=False)
        new_m[name] = m.astype(theta.dtype, copy=False)
        new_v[name] = v.astype(theta.dtype, copy=False)

    return params.with_tensors(new_tensors), OptState(m=new_m, v=new_v, t=t, lr=opt.lr)


def lr_at(
    epoch: int,
    initial: float = LR_INITIAL,
    decay_factor: float = LR_DECAY_FACTOR,
    decay_every: int = LR_DECAY_EVERY,
    minimum: float = LR_MIN,
) -> float:
    """Step decay: initial * factor ** floor(epoch / decay_every), floored at minimum."""
    if epoch < 0:
        raise ValueError("epoch must be non-negative")
    # past ~2000 decays the power underflows to 0, which the floor absorbs
    return max(minimum, initial * decay_factor ** (epoch // decay_every))
