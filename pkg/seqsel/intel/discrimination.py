from __future__ import annotations

from typing import Iterable

import numpy as np

from seqsel.data.models import Dataset
from seqsel.errors import ContractError


SPEC_THRESHOLD = 0.05
VARIANCE_FLOOR = 1e-24


def _group_rows(dataset: Dataset, classes: Iterable[int]) -> np.ndarray:
    keep = np.isin(dataset.labels, np.asarray(list(classes), dtype=np.int64))
    if not keep.any():
        raise ContractError("discrimination needs both class groups to be non-empty")
    return dataset.features[keep]


def discrimination_profile(
    dataset: Dataset,
    class_a: Iterable[int],
    class_b: Iterable[int],
    signed: bool = False,
) -> np.ndarray:
    """
    Standardized mean difference |mu_a - mu_b| / sqrt((var_a + var_b) / 2)
    for every feature, with population variances. Features whose groups
    are both constant give 0 when the means agree and +inf otherwise.
    With ``signed`` the result carries the sign of mu_a - mu_b, so positive
    values mark features that run higher in group a.
    """
    a = _group_rows(dataset, class_a)
    b = _group_rows(dataset, class_b)
    diff = a.mean(axis=0) - b.mean(axis=0)
    gap = np.abs(diff)
    var_a = a.var(axis=0, ddof=0)
    var_b = b.var(axis=0, ddof=0)

    d = np.zeros(dataset.n_features, dtype=float)
    degenerate = (var_a < VARIANCE_FLOOR) & (var_b < VARIANCE_FLOOR)
    live = ~degenerate
    d[live] = gap[live] / np.sqrt((var_a[live] + var_b[live]) / 2.0)
    d[degenerate & (gap > 0)] = np.inf
    return np.sign(diff) * d if signed else d


def discrimination_strength(dataset: Dataset, feature: int, class_a: Iterable[int], class_b: Iterable[int]) -> float:
    if not 0 <= feature < dataset.n_features:
        raise ContractError(f"feature {feature} outside [0, {dataset.n_features})")
    a = _group_rows(dataset, class_a)[:, feature]
    b = _group_rows(dataset, class_b)[:, feature]
    gap = abs(float(a.mean()) - float(b.mean()))
    var_a, var_b = float(a.var()), float(b.var())
    if var_a < VARIANCE_FLOOR and var_b < VARIANCE_FLOOR:
        return 0.0 if gap == 0 else float("inf")
    return gap / float(np.sqrt((var_a + var_b) / 2.0))


def specialization_score(d_values, tau: float = SPEC_THRESHOLD) -> float:
    """Share of analyzed features with |D| above tau."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    d = np.asarray(list(d_values), dtype=float)
    if d.size == 0:
        raise ContractError("specialization needs at least one analyzed feature")
    return float(np.mean(np.abs(d) > tau))
