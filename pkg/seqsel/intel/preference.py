from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, List, Optional

import numpy as np
import pandas as pd

from seqsel.agent.selection_log import SelectionLog
from seqsel.calculations import l1_distance
from seqsel.data.models import CategoryMap
from seqsel.errors import ContractError


SIG_THRESHOLD = 0.2
STRONG_PREFERENCE = 2.0

TIERS = ("strongly_preferred", "moderately_preferred", "random_like", "avoided")


@dataclass(frozen=True)
class CategoryUsage:
    category: str
    size: int
    selections: int
    observed: float     # U_c, share of all selection events
    expected: float     # E_c = |F_c| / n
    ratio: float        # P_c = U_c / E_c
    tier: str


def preference_tier(ratio: float, threshold: float = SIG_THRESHOLD) -> str:
    if ratio >= STRONG_PREFERENCE:
        return "strongly_preferred"
    if ratio > 1.0 + threshold:
        return "moderately_preferred"
    if ratio < 1.0 - threshold:
        return "avoided"
    return "random_like"


def _selection_events(log: SelectionLog, labels: Optional[Iterable[int]] = None) -> np.ndarray:
    keep = None if labels is None else set(int(c) for c in labels)
    feats = [
        f
        for episode in log
        if keep is None or episode.true_label in keep
        for f in episode.features
    ]
    return np.asarray(feats, dtype=np.int64)


def category_counts(log: SelectionLog, cats: CategoryMap, n: int, labels=None) -> np.ndarray:
    """Selection events per category, counted with multiplicity across episodes."""
    lookup = cats.feature_lookup(n)
    events = _selection_events(log, labels)
    if events.size and (events.min() < 0 or events.max() >= n):
        raise ContractError(f"selection log holds feature indices outside [0, {n})")
    cat_of = lookup[events]
    return np.bincount(cat_of[cat_of >= 0], minlength=len(cats))


def preference_ratios(
    log: SelectionLog,
    cats: CategoryMap,
    n: int,
    threshold: float = SIG_THRESHOLD,
) -> List[CategoryUsage]:
    if len(log) == 0:
        raise ContractError("preference ratios need a non-empty selection log")
    cats.validate(n)
    sizes = cats.sizes

    counts = category_counts(log, cats, n)
    total = log.n_selections()
    if total == 0:
        raise ContractError("preference ratios are undefined for a log with no selection events")
    usage = []
    for name, size, count in zip(cats.names, sizes, counts):
        observed = count / total
        expected = size / n
        ratio = observed / expected
        usage.append(
            CategoryUsage(
                category=name,
                size=int(size),
                selections=int(count),
                observed=float(observed),
                expected=float(expected),
                ratio=float(ratio),
                tier=preference_tier(ratio, threshold),
            )
        )
    return usage


def learning_score(ratios: List[CategoryUsage], threshold: float = SIG_THRESHOLD) -> float:
    """Share of categories whose preference ratio departs from 1 by more than threshold."""
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    if not ratios:
        raise ContractError("learning score needs at least one category")
    p = np.array([r.ratio for r in ratios], dtype=float)
    return float(np.mean(np.abs(p - 1.0) > threshold))


def category_usage_distribution(log: SelectionLog, cats: CategoryMap, n: int, labels=None) -> pd.Series:
    """Category shares of the categorized selections made on episodes whose true label is in ``labels``."""
    counts = category_counts(log, cats, n, labels).astype(float)
    total = counts.sum()
    if total == 0:
        raise ContractError("usage distribution is undefined for a group with no categorized selections")
    return pd.Series(counts / total, index=pd.Index(cats.names, name="category"), name="usage")


def group_has_usage(log: SelectionLog, cats: CategoryMap, n: int, labels) -> bool:
    return bool(category_counts(log, cats, n, labels).sum() > 0)


def sample_type_adaptation(usage_a: pd.Series, usage_b: pd.Series) -> float:
    """L1 distance between two category-usage distributions; symmetric, in [0, 2]."""
    if set(usage_a.index) != set(usage_b.index) or len(usage_a) != len(usage_b):
        raise ContractError("usage distributions must cover the same categories")
    aligned = usage_b.reindex(usage_a.index)
    return l1_distance(usage_a.to_numpy(dtype=float), aligned.to_numpy(dtype=float))
