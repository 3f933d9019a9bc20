from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List

import numpy as np

from seqsel.errors import ContractError


@dataclass(frozen=True)
class Transition:
    state: np.ndarray        # 2n network input
    action: int
    reward: float
    next_state: np.ndarray   # zeros when done
    done: bool


class ReplayBuffer:
    """
    Fixed-capacity ring buffer of transitions with uniform sampling.
    Storage is preallocated; once full, the oldest slot is overwritten first.
    """

    def __init__(self, state_dim: int, capacity: int):
        if capacity <= 0:
            raise ContractError("replay capacity must be positive")
        self.state_dim = state_dim
        self.capacity = capacity

        self.states = np.zeros((capacity, state_dim), dtype=np.float32)
        self.next_states = np.zeros((capacity, state_dim), dtype=np.float32)
        self.actions = np.zeros(capacity, dtype=np.int64)
        self.rewards = np.zeros(capacity, dtype=np.float64)
        self.dones = np.zeros(capacity, dtype=bool)

        self.ptr = 0
        self.size = 0
        self.inserted = 0

    def __len__(self) -> int:
        return self.size

    def add(self, transition: Transition) -> None:
        if transition.done != (transition.action >= self.state_dim // 2):
            raise ContractError("done must be set exactly for classification actions")
        self.states[self.ptr] = transition.state
        self.next_states[self.ptr] = transition.next_state
        self.actions[self.ptr] = transition.action
        self.rewards[self.ptr] = transition.reward
        self.dones[self.ptr] = transition.done

        self.ptr = (self.ptr + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)
        self.inserted += 1

    def sample(self, batch_size: int, rng: np.random.Generator) -> Dict[str, np.ndarray]:
        if self.size == 0:
            raise ContractError("cannot sample from an empty replay buffer")
        idx = rng.integers(0, self.size, size=batch_size)
        return {
            "states": self.states[idx],
            "actions": self.actions[idx],
            "rewards": self.rewards[idx],
            "next_states": self.next_states[idx],
            "dones": self.dones[idx],
        }

    def transitions(self) -> List[Transition]:
        """Stored transitions, oldest first."""
        start = self.ptr if self.size == self.capacity else 0
        order = [(start + i) % self.capacity for i in range(self.size)]
        return [
            Transition(
                state=self.states[i].copy(),
                action=int(self.actions[i]),
                reward=float(self.rewards[i]),
                next_state=self.next_states[i].copy(),
                done=bool(self.dones[i]),
            )
            for i in order
        ]
