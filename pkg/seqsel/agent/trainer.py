from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import List, Optional

import numpy as np
import pandas as pd
from tqdm import tqdm

from seqsel.agent.evaluate import evaluate
from seqsel.agent.policy import epsilon_at, select_action
from seqsel.agent.replay import ReplayBuffer, Transition
from seqsel.agent.selection_log import SelectionLog
from seqsel.agent.targets import double_q_targets, soft_update
from seqsel.agent.train_config import TrainConfig
from seqsel.data.models import Dataset
from seqsel.env.mdp import reset, step
from seqsel.errors import DatasetError
from seqsel.qnet.network import td_loss_and_grads
from seqsel.qnet.optim import OptState, adam_step, clip_global_norm, global_norm, init_opt_state, lr_at
from seqsel.qnet.params import QNetParams, init_params


logger = logging.getLogger(__name__)

TRACE_COLUMNS = ["episode", "epsilon", "lr", "mean_episode_length", "accuracy", "source"]


@dataclass
class TrainResult:
    params: QNetParams
    target: QNetParams
    opt: OptState
    log: SelectionLog
    trace: pd.DataFrame
    config: TrainConfig
    updates: int = 0


def _current_lr(episode: int, cfg: TrainConfig) -> float:
    return lr_at(
        episode,
        initial=cfg.learning_rate,
        decay_factor=cfg.lr_decay_factor,
        decay_every=cfg.lr_decay_every,
        minimum=cfg.lr_min,
    )


def _run_episode(
    params: QNetParams,
    x: np.ndarray,
    label: int,
    cfg: TrainConfig,
    n_classes: int,
    epsilon: float,
    rng: np.random.Generator,
    buffer: ReplayBuffer,
):
    state = reset(x, max_steps=cfg.max_steps)
    zeros = np.zeros(2 * state.n_features, dtype=np.float32)
    revealed: List[int] = []
    while True:
        action = select_action(params, state, epsilon, rng, n_classes)
        result = step(state, action, label, cfg.feature_cost, n_classes)
        next_input = zeros if result.done else result.next_state.network_input()
        buffer.add(Transition(state.network_input(), action, result.reward, next_input, result.done))
        if result.done:
            return revealed, result.predicted_class
        revealed.append(action)
        state = result.next_state


def _update(online, target, opt, buffer, cfg, rng):
    batch = buffer.sample(cfg.batch_size, rng)
    y = double_q_targets(batch, online, target, cfg.gamma, cfg.max_steps)
    loss, grads = td_loss_and_grads(online, batch["states"], batch["actions"], y)
    norm = global_norm(grads)
    grads = clip_global_norm(grads, cfg.max_grad_norm)
    online, opt = adam_step(online, grads, opt, cfg.weight_decay)
    target = soft_update(target, online, cfg.tau)
    return online, target, opt, loss, norm


def train(
    dataset: Dataset,
    cfg: TrainConfig,
    validation: Optional[Dataset] = None,
    progress: bool = False,
) -> TrainResult:
    """
    Episodic double-Q training. Each episode draws one training sample,
    acts epsilon-greedily until it classifies, stores every transition,
    then (past warmup) takes ``updates_per_episode`` clipped Adam steps
    followed by a soft target update. One seeded generator drives every
    random draw, so a fixed seed reproduces the run bit for bit.
    """
    cfg.validate()
    if dataset.n_rows == 0:
        raise DatasetError("cannot train on an empty dataset")
    n, k = dataset.n_features, dataset.n_classes
    if validation is not None and (validation.n_features != n or validation.n_classes != k):
        raise DatasetError("validation set shape does not match the training set")

    rng = np.random.default_rng(cfg.seed)
    online = init_params(n, k, arch=cfg.arch, seed=cfg.seed, hidden=cfg.hidden_units)
    target = online.copy()
    opt = init_opt_state(online, lr=cfg.learning_rate)
    buffer = ReplayBuffer(2 * n, cfg.buffer_capacity)
    min_fill = max(cfg.warmup_transitions, cfg.batch_size)

    log = SelectionLog()
    trace: List[dict] = []
    updates = 0
    window_start = 0

    logger.info(
        "Training %s on %d samples (n=%d, k=%d) for %d episodes",
        cfg.arch, dataset.n_rows, n, k, cfg.episodes,
    )

    for episode in tqdm(range(cfg.episodes), desc="train", unit="ep", disable=not progress):
        epsilon = epsilon_at(episode, cfg)
        row = int(rng.integers(0, dataset.n_rows))
        label = int(dataset.labels[row])
        revealed, predicted = _run_episode(online, dataset.features[row], label, cfg, k, epsilon, rng, buffer)
        log.append(label, predicted, revealed)

        if len(buffer) >= min_fill:
            opt = replace(opt, lr=_current_lr(episode, cfg))
            for _ in range(cfg.updates_per_episode):
                online, target, opt, loss, norm = _update(online, target, opt, buffer, cfg, rng)
                updates += 1
                logger.debug("episode %d loss %.6g grad_norm %.4g", episode, loss, norm)

        last = episode + 1 == cfg.episodes
        if cfg.eval_interval and ((episode + 1) % cfg.eval_interval == 0 or last):
            record = {"episode": episode + 1, "epsilon": epsilon, "lr": opt.lr}
            if validation is not None and validation.n_rows:
                val_log, preds = evaluate(online, validation, cfg.max_steps)
                record.update(
                    mean_episode_length=float(val_log.lengths().mean()),
                    accuracy=float(np.mean(preds == validation.labels)),
                    source="validation",
                )
            else:
                window = log.episodes[window_start:]
                record.update(
                    mean_episode_length=float(np.mean([e.length for e in window])),
                    accuracy=float(np.mean([e.predicted_label == e.true_label for e in window])),
                    source="training",
                )
            window_start = len(log)
            trace.append(record)
            logger.info(
                "episode %d  eps %.3f  lr %.2e  acc %.4f  mean_len %.2f (%s)",
                record["episode"], epsilon, opt.lr, record["accuracy"],
                record["mean_episode_length"], record["source"],
            )

    logger.info("Training finished after %d gradient updates", updates)
    return TrainResult(
        params=online,
        target=target,
        opt=opt,
        log=log,
        trace=pd.DataFrame(trace, columns=TRACE_COLUMNS),
        config=cfg,
        updates=updates,
    )
