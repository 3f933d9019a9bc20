"""Episodic feature-acquisition MDP.

Actions ``0..n-1`` reveal feature ``i``; actions ``n..n+k-1`` predict class
``a - n`` and end the episode. The network sees ``[x * m; m]``, so hidden
feature values are zero and the mask half tells a revealed zero from a
hidden one.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from seqsel.errors import ContractError


INVALID_PENALTY = 1e6

ActionId = int


@dataclass(frozen=True)
class EpisodeState:
    x: np.ndarray                     # full normalized sample, length n
    mask: np.ndarray                  # 0/1 reveal flags, length n
    max_steps: Optional[int] = None   # feature actions allowed before classification is forced

    @property
    def n_features(self) -> int:
        return int(self.x.shape[0])

    @property
    def n_revealed(self) -> int:
        return int(self.mask.sum())

    @property
    def at_step_cap(self) -> bool:
        return self.max_steps is not None and self.n_revealed >= self.max_steps

    @property
    def x_masked(self) -> np.ndarray:
        return self.x * self.mask

    def network_input(self) -> np.ndarray:
        return np.concatenate([self.x_masked, self.mask])

    def invalid_features(self) -> np.ndarray:
        """Boolean flags over feature actions that may not be taken from this state."""
        if self.at_step_cap:
            return np.ones(self.n_features, dtype=bool)
        return self.mask > 0

    def valid_actions(self, n_classes: int) -> np.ndarray:
        feature_actions = np.flatnonzero(~self.invalid_features())
        class_actions = self.n_features + np.arange(n_classes)
        return np.concatenate([feature_actions, class_actions])


@dataclass(frozen=True)
class StepResult:
    next_state: Optional[EpisodeState]   # None once the episode is terminal
    reward: float
    done: bool
    predicted_class: Optional[int] = None


def is_feature_action(action: ActionId, n_features: int) -> bool:
    return 0 <= action < n_features


def reset(sample_features, n_features: Optional[int] = None, max_steps: Optional[int] = None) -> EpisodeState:
    x = np.asarray(sample_features, dtype=float)
    if x.ndim != 1:
        raise ContractError("sample features must be a 1-D vector")
    if n_features is not None and x.shape[0] != n_features:
        raise ContractError(f"sample has {x.shape[0]} features, expected {n_features}")
    if max_steps is not None and max_steps < 0:
        raise ContractError("max_steps must be non-negative")
    return EpisodeState(x=x, mask=np.zeros_like(x), max_steps=max_steps)


def step(
    state: EpisodeState,
    action: ActionId,
    true_label: int,
    feature_cost: float,
    n_classes: int,
) -> StepResult:
    n = state.n_features
    action = int(action)
    if action < 0 or action >= n + n_classes:
        raise ContractError(f"action {action} outside [0, {n + n_classes})")

    if is_feature_action(action, n):
        if state.mask[action] > 0:
            raise ContractError(f"feature {action} is already revealed")
        if state.at_step_cap:
            raise ContractError(f"feature budget of {state.max_steps} steps is exhausted")
        mask = state.mask.copy()
        mask[action] = 1.0
        return StepResult(
            next_state=EpisodeState(x=state.x, mask=mask, max_steps=state.max_steps),
            reward=-float(feature_cost),
            done=False,
        )

    predicted = action - n
    return StepResult(
        next_state=None,
        reward=0.0 if predicted == int(true_label) else -1.0,
        done=True,
        predicted_class=predicted,
    )


def validity_penalty(q_values, state: EpisodeState) -> np.ndarray:
    q = np.asarray(q_values)
    n = state.n_features
    if q.ndim != 1 or q.shape[0] <= n:
        raise ContractError(f"expected {n} feature Q-values plus at least one class Q-value")
    penalty = np.zeros(q.shape[0], dtype=q.dtype)
    penalty[:n] = state.invalid_features() * INVALID_PENALTY
    return q - penalty


def batch_invalid_features(masks: np.ndarray, max_steps: Optional[int] = None) -> np.ndarray:
    """Row-wise invalid feature flags reconstructed from mask halves."""
    invalid = masks > 0
    if max_steps is not None:
        capped = masks.sum(axis=1) >= max_steps
        invalid = invalid | capped[:, None]
    return invalid


def batch_validity_penalty(q_values: np.ndarray, masks: np.ndarray, max_steps: Optional[int] = None) -> np.ndarray:
    n = masks.shape[1]
    penalized = np.array(q_values, copy=True)
    penalized[:, :n] -= batch_invalid_features(masks, max_steps) * INVALID_PENALTY
    return penalized


def split_network_input(states: np.ndarray, n_features: int) -> tuple[np.ndarray, np.ndarray]:
    """Split a batch of ``[x_masked; m]`` rows into its value and mask halves."""
    states = np.asarray(states)
    if states.shape[-1] != 2 * n_features:
        raise ContractError(f"state width {states.shape[-1]} != 2n = {2 * n_features}")
    return states[..., :n_features], states[..., n_features:]
