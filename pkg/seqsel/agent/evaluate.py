from __future__ import annotations

import logging
from typing import List, Optional, Tuple

import numpy as np

from seqsel.agent.policy import ActionPolicy, GreedyQPolicy
from seqsel.agent.selection_log import SelectionLog
from seqsel.data.models import Dataset
from seqsel.env.mdp import batch_invalid_features
from seqsel.errors import ContractError
from seqsel.qnet.params import QNetParams


logger = logging.getLogger(__name__)


def evaluate(
    params: QNetParams,
    dataset: Dataset,
    max_steps: Optional[int] = None,
    policy: Optional[ActionPolicy] = None,
) -> Tuple[SelectionLog, np.ndarray]:
    """
    Roll out every sample without learning, all episodes advancing in
    lock-step so each step costs one batched forward pass. Defaults to the
    greedy policy of ``params``.
    """
    n, k = dataset.n_features, dataset.n_classes
    if params.n_features != n or params.n_classes != k:
        raise ContractError(
            f"network expects n={params.n_features}, k={params.n_classes}; "
            f"dataset has n={n}, k={k}"
        )
    if max_steps is None:
        max_steps = n
    policy = policy or GreedyQPolicy(params)

    rows = dataset.n_rows
    x = dataset.features
    masks = np.zeros((rows, n), dtype=x.dtype)
    revealed: List[List[int]] = [[] for _ in range(rows)]
    predictions = np.full(rows, -1, dtype=np.int64)
    active = np.arange(rows)

    while active.size:
        m = masks[active]
        actions = np.asarray(policy.act(x[active] * m, m, max_steps), dtype=np.int64)
        if actions.min() < 0 or actions.max() >= n + k:
            raise ContractError("policy returned an action outside the action space")

        is_feature = actions < n
        if is_feature.any():
            invalid = batch_invalid_features(m, max_steps)
            picked = active[is_feature]
            feats = actions[is_feature]
            if invalid[np.flatnonzero(is_feature), feats].any():
                raise ContractError("policy selected a revealed feature or exceeded max_steps")
            masks[picked, feats] = 1.0
            for row, feat in zip(picked, feats):
                revealed[row].append(int(feat))

        done = active[~is_feature]
        predictions[done] = actions[~is_feature] - n
        active = active[is_feature]

    log = SelectionLog()
    for row in range(rows):
        log.append(dataset.labels[row], int(predictions[row]), revealed[row])

    logger.debug("Evaluated %d samples, mean episode length %.2f", rows, log.lengths().mean() if rows else 0.0)
    return log, predictions
