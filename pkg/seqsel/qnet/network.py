"""Forward pass and exact backpropagation for the three-layer PReLU Q-network.

Shapes follow the manifest convention: weights are (out, in) and a batch of
states is (B, 2n), so each layer computes ``z = h @ W.T + b``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, List, Tuple

import numpy as np

from seqsel.errors import ContractError
from seqsel.qnet.params import HIDDEN_LAYERS, QNetParams


Grads = Dict[str, np.ndarray]


@dataclass
class ForwardCache:
    inputs: List[np.ndarray]        # input to each hidden layer
    pre_acts: List[np.ndarray]      # z of each hidden layer
    h_out: np.ndarray               # last hidden activation
    q: np.ndarray
    value: np.ndarray | None = None
    advantage: np.ndarray | None = None


def prelu(z: np.ndarray, slope: np.ndarray) -> np.ndarray:
    return np.where(z >= 0, z, slope * z)


def _as_batch(params: QNetParams, states) -> np.ndarray:
    s = np.asarray(states, dtype=params.dtype)
    if s.ndim == 1:
        s = s[None, :]
    if s.ndim != 2 or s.shape[1] != params.input_dim:
        raise ContractError(f"states must have width {params.input_dim}, got shape {s.shape}")
    return s


def _forward(params: QNetParams, states) -> ForwardCache:
    t = params.tensors
    h = _as_batch(params, states)
    inputs, pre_acts = [], []
    for i in range(1, HIDDEN_LAYERS + 1):
        inputs.append(h)
        z = h @ t[f"w{i}"].T + t[f"b{i}"]
        pre_acts.append(z)
        h = prelu(z, t[f"p{i}"])

    if params.arch == "d3qn":
        value = h @ t["wv"].T + t["bv"]                 # (B, 1)
        advantage = h @ t["wa"].T + t["ba"]             # (B, A)
        q = value + (advantage - advantage.mean(axis=1, keepdims=True))
        return ForwardCache(inputs, pre_acts, h, q, value, advantage)

    q = h @ t["wo"].T + t["bo"]
    return ForwardCache(inputs, pre_acts, h, q)


def forward(params: QNetParams, states) -> np.ndarray:
    """Q-values, shape (B, n + k); a single 2n-vector is treated as a batch of one."""
    return _forward(params, states).q


def value_and_advantage(params: QNetParams, states) -> Tuple[np.ndarray, np.ndarray]:
    if params.arch != "d3qn":
        raise ContractError("value/advantage streams exist only for the dueling architecture")
    cache = _forward(params, states)
    return cache.value[:, 0], cache.advantage


def _backward(params: QNetParams, cache: ForwardCache, dq: np.ndarray) -> Grads:
    t = params.tensors
    grads: Grads = {}

    if params.arch == "d3qn":
        n_actions = dq.shape[1]
        dv = dq.sum(axis=1, keepdims=True)                           # dQ/dV = 1 per action
        da = dq - dq.sum(axis=1, keepdims=True) / n_actions          # mean subtraction
        grads["wv"] = dv.T @ cache.h_out
        grads["bv"] = dv.sum(axis=0)
        grads["wa"] = da.T @ cache.h_out
        grads["ba"] = da.sum(axis=0)
        dh = dv @ t["wv"] + da @ t["wa"]
    else:
        grads["wo"] = dq.T @ cache.h_out
        grads["bo"] = dq.sum(axis=0)
        dh = dq @ t["wo"]

    for i in range(HIDDEN_LAYERS, 0, -1):
        z = cache.pre_acts[i - 1]
        slope = t[f"p{i}"]
        positive = z >= 0
        grads[f"p{i}"] = (dh * np.where(positive, 0.0, z)).sum(axis=0)
        dz = dh * np.where(positive, 1.0, slope)
        grads[f"w{i}"] = dz.T @ cache.inputs[i - 1]
        grads[f"b{i}"] = dz.sum(axis=0)
        dh = dz @ t[f"w{i}"]

    return {name: grads[name].astype(params.dtype, copy=False) for name in params.tensors}


def td_loss(params: QNetParams, states, action_indices, targets) -> float:
    q = forward(params, states)
    actions, y = _check_batch(q, action_indices, targets)
    diff = q[np.arange(q.shape[0]), actions].astype(np.float64) - y
    return float(np.mean(diff * diff))


def td_loss_and_grads(params: QNetParams, states, action_indices, targets) -> Tuple[float, Grads]:
    """Mean squared TD error over the batch and its exact gradient for every tensor."""
    cache = _forward(params, states)
    actions, y = _check_batch(cache.q, action_indices, targets)
    batch = cache.q.shape[0]
    rows = np.arange(batch)

    diff = cache.q[rows, actions].astype(np.float64) - y
    loss = float(np.mean(diff * diff))

    dq = np.zeros(cache.q.shape, dtype=np.float64)
    dq[rows, actions] = 2.0 * diff / batch
    return loss, _backward(params, cache, dq.astype(params.dtype))


def _check_batch(q: np.ndarray, action_indices, targets) -> Tuple[np.ndarray, np.ndarray]:
    actions = np.asarray(action_indices, dtype=np.int64).reshape(-1)
    y = np.asarray(targets, dtype=np.float64).reshape(-1)
    if actions.shape[0] != q.shape[0] or y.shape[0] != q.shape[0]:
        raise ContractError(
            f"batch of {q.shape[0]} states got {actions.shape[0]} actions and {y.shape[0]} targets"
        )
    if actions.size and (actions.min() < 0 or actions.max() >= q.shape[1]):
        raise ContractError(f"action indices must lie in [0, {q.shape[1]})")
    return actions, y


def central_difference(fn: Callable[[np.ndarray], float], theta, h: float) -> np.ndarray:
    """(f(theta + h e_i) - f(theta - h e_i)) / 2h for every scalar of theta."""
    if h <= 0:
        raise ValueError("h must be positive")
    theta = np.array(theta, dtype=np.float64, copy=True)
    grad = np.zeros_like(theta)
    flat = theta.reshape(-1)
    out = grad.reshape(-1)
    for i in range(flat.size):
        original = flat[i]
        flat[i] = original + h
        plus = fn(theta)
        flat[i] = original - h
        minus = fn(theta)
        flat[i] = original
        out[i] = (plus - minus) / (2.0 * h)
    return grad


def finite_difference_grad(params: QNetParams, states, action_indices, targets, h: float = 1e-4) -> Grads:
    """Numerical gradient of td_loss, one tensor at a time. Meant for small nets."""
    grads: Grads = {}
    for name, tensor in params.items():
        def loss_at(values, name=name):
            shifted = dict(params.tensors)
            shifted[name] = values.astype(params.dtype)
            return td_loss(params.with_tensors(shifted), states, action_indices, targets)

        grads[name] = central_difference(loss_at, tensor, h)
    return grads
