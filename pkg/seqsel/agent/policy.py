from __future__ import annotations

from typing import Optional

import numpy as np

from seqsel.agent.train_config import TrainConfig
from seqsel.env.mdp import (
    ActionId,
    EpisodeState,
    batch_invalid_features,
    batch_validity_penalty,
    validity_penalty,
)
from seqsel.qnet.network import forward
from seqsel.qnet.params import QNetParams


def epsilon_at(t: int, cfg: TrainConfig) -> float:
    """Linear exploration decay: max(eps_min, eps_start - alpha * t)."""
    if t < 0:
        raise ValueError("t must be non-negative")
    return max(cfg.eps_min, cfg.eps_start - cfg.eps_decay_rate * t)


def greedy_action(params: QNetParams, state: EpisodeState) -> ActionId:
    q = forward(params, state.network_input())[0]
    return int(np.argmax(validity_penalty(q, state)))


def random_valid_action(state: EpisodeState, n_classes: int, rng: np.random.Generator) -> ActionId:
    valid = state.valid_actions(n_classes)
    return int(valid[rng.integers(0, valid.shape[0])])


def select_action(
    params: QNetParams,
    state: EpisodeState,
    epsilon: float,
    rng: np.random.Generator,
    n_classes: Optional[int] = None,
) -> ActionId:
    if not (0.0 <= epsilon <= 1.0):
        raise ValueError("epsilon must be in [0, 1]")
    k = params.n_classes if n_classes is None else n_classes
    # the draw is always consumed so the rng stream does not depend on epsilon
    explore = rng.random() < epsilon
    if explore:
        return random_valid_action(state, k, rng)
    return greedy_action(params, state)


class ActionPolicy:
    """Chooses actions for a batch of in-flight episodes during evaluation."""

    def act(self, x_masked: np.ndarray, masks: np.ndarray, max_steps: Optional[int]) -> np.ndarray:
        raise NotImplementedError


class GreedyQPolicy(ActionPolicy):
    def __init__(self, params: QNetParams):
        self.params = params

    def act(self, x_masked: np.ndarray, masks: np.ndarray, max_steps: Optional[int]) -> np.ndarray:
        states = np.concatenate([x_masked, masks], axis=1)
        q = forward(self.params, states)
        return np.argmax(batch_validity_penalty(q, masks, max_steps), axis=1)


class UniformRandomPolicy(ActionPolicy):
    """Uniform over valid actions; the baseline for category preference."""

    def __init__(self, n_classes: int, seed: int = 0):
        self.n_classes = n_classes
        self.rng = np.random.default_rng(seed)

    def act(self, x_masked: np.ndarray, masks: np.ndarray, max_steps: Optional[int]) -> np.ndarray:
        invalid = batch_invalid_features(masks, max_steps)
        actions = np.empty(masks.shape[0], dtype=np.int64)
        for row in range(masks.shape[0]):
            valid = np.concatenate(
                [np.flatnonzero(~invalid[row]), masks.shape[1] + np.arange(self.n_classes)]
            )
            actions[row] = valid[self.rng.integers(0, valid.shape[0])]
        return actions
