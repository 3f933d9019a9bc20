from __future__ import annotations

import logging
from dataclasses import replace
from typing import Tuple

import numpy as np

from seqsel.data.models import STD_FLOOR, Dataset, NormStats
from seqsel.errors import DatasetError


logger = logging.getLogger(__name__)


def zscore_fit(dataset: Dataset) -> NormStats:
    if dataset.n_rows == 0:
        raise DatasetError("cannot fit normalization statistics on an empty dataset")

    mean = dataset.features.mean(axis=0)
    std = dataset.features.std(axis=0, ddof=0)
    # constant columns stay inert after normalization
    std = np.where(std < STD_FLOOR, 1.0, std)
    return NormStats(mean=mean, std=std)


def zscore_apply(dataset: Dataset, stats: NormStats) -> Dataset:
    if len(stats) != dataset.n_features:
        raise DatasetError(
            f"normalization stats cover {len(stats)} features, dataset has {dataset.n_features}"
        )
    normalized = (dataset.features - stats.mean) / stats.std
    return replace(dataset, features=normalized, norm_stats=stats)


def split(
    dataset: Dataset,
    test_fraction: float,
    seed: int,
    stratified: bool = True,
) -> Tuple[Dataset, Dataset]:
    """Deterministic train/test partition; both halves keep the original row order."""
    if not (0.0 < test_fraction < 1.0):
        raise ValueError("test_fraction must lie strictly between 0 and 1")
    if dataset.n_rows < 2:
        raise DatasetError("need at least two rows to split")

    rng = np.random.default_rng(seed)

    if stratified:
        test_rows = []
        for cls, count in enumerate(dataset.class_counts()):
            if count == 0:
                continue
            if count < 2:
                raise DatasetError(f"class {cls} has {count} sample(s); stratified split needs at least 2")
            members = np.flatnonzero(dataset.labels == cls)
            n_test = min(_round_half_up(count * test_fraction), count - 1)
            test_rows.append(rng.permutation(members)[:n_test])
        test_idx = np.sort(np.concatenate(test_rows)) if test_rows else np.array([], dtype=np.int64)
    else:
        n_test = min(max(_round_half_up(dataset.n_rows * test_fraction), 1), dataset.n_rows - 1)
        test_idx = np.sort(rng.permutation(dataset.n_rows)[:n_test])

    train_mask = np.ones(dataset.n_rows, dtype=bool)
    train_mask[test_idx] = False
    train_idx = np.flatnonzero(train_mask)

    logger.info("Split %d rows into %d train / %d test (stratified=%s)",
                dataset.n_rows, train_idx.size, test_idx.size, stratified)
    return dataset.subset(train_idx), dataset.subset(test_idx)


def _round_half_up(value: float) -> int:
    return int(np.floor(value + 0.5))
