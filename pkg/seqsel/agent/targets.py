from __future__ import annotations

from typing import Dict, Optional

import numpy as np

from seqsel.env.mdp import batch_validity_penalty, split_network_input
from seqsel.errors import ContractError
from seqsel.qnet.network import forward
from seqsel.qnet.params import QNetParams


def double_q_targets(
    batch: Dict[str, np.ndarray],
    online: QNetParams,
    target: QNetParams,
    gamma: float,
    max_steps: Optional[int] = None,
) -> np.ndarray:
    """
    Y = r for terminal transitions, else r + gamma * Q_target(s', a*) where a*
    is the masked argmax of the online network at s'. The bootstrap reads the
    raw target value; the penalty only steers the argmax.
    """
    rewards = np.asarray(batch["rewards"], dtype=np.float64)
    dones = np.asarray(batch["dones"], dtype=bool)
    if rewards.shape[0] == 0:
        raise ContractError("double_q_targets needs a non-empty batch")
    if not online.same_layout(target):
        raise ContractError("online and target networks must share one architecture")

    y = rewards.copy()
    live = np.flatnonzero(~dones)
    if live.size == 0:
        return y

    next_states = np.asarray(batch["next_states"])[live]
    _, masks = split_network_input(next_states, online.n_features)

    q_online = forward(online, next_states)
    best = np.argmax(batch_validity_penalty(q_online, masks, max_steps), axis=1)
    q_target = forward(target, next_states)
    y[live] += gamma * q_target[np.arange(live.size), best].astype(np.float64)
    return y


def soft_update(target: QNetParams, online: QNetParams, tau: float) -> QNetParams:
    """Polyak average: tau * online + (1 - tau) * target for every scalar."""
    if not target.same_layout(online):
        raise ContractError("soft_update needs matching architectures")
    if not (0.0 <= tau <= 1.0):
        raise ValueError("tau must be in [0, 1]")
    if tau == 1.0:
        return online.copy()
    if tau == 0.0:
        return target.copy()
    return target.with_tensors(
        {
            name: (tau * online.tensors[name] + (1.0 - tau) * theta).astype(theta.dtype, copy=False)
            for name, theta in target.items()
        }
    )
