from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np
import pandas as pd

from seqsel.agent.selection_log import SelectionLog
from seqsel.data.models import CategoryMap
from seqsel.errors import ContractError


TEMPORAL_STEPS = 15


@dataclass(frozen=True)
class TemporalUsageMatrix:
    group: str
    usage: pd.DataFrame        # categories x steps, columns normalized per step
    step_counts: np.ndarray    # categorized selections seen at each step

    @property
    def populated_steps(self) -> int:
        return int((self.step_counts > 0).sum())

    def write_csv(self, path) -> None:
        self.usage.to_csv(path, lineterminator="\n", float_format="%.17g")


def temporal_usage(
    log: SelectionLog,
    cats: CategoryMap,
    n: int,
    labels: Optional[Iterable[int]] = None,
    group: str = "all",
    steps: int = TEMPORAL_STEPS,
) -> TemporalUsageMatrix:
    """Category usage at each of the first ``steps`` decision steps, for episodes with a true label in ``labels``."""
    lookup = cats.feature_lookup(n)
    keep = None if labels is None else set(int(c) for c in labels)
    counts = np.zeros((len(cats), steps), dtype=float)
    for episode in log:
        if keep is not None and episode.true_label not in keep:
            continue
        for t, feature in episode.steps():
            if t > steps:
                break
            c = lookup[feature]
            if c >= 0:
                counts[c, t - 1] += 1

    totals = counts.sum(axis=0)
    usage = np.divide(counts, totals, out=np.zeros_like(counts), where=totals > 0)
    frame = pd.DataFrame(
        usage,
        index=pd.Index(cats.names, name="category"),
        columns=pd.RangeIndex(1, steps + 1, name="step"),
    )
    return TemporalUsageMatrix(group=group, usage=frame, step_counts=totals.astype(np.int64))


def temporal_intelligence(matrix: TemporalUsageMatrix) -> float:
    """Mean over categories of the population variance of usage across steps."""
    if matrix.populated_steps < 2:
        raise ContractError("temporal intelligence needs at least two populated steps")
    return float(matrix.usage.to_numpy(dtype=float).var(axis=1, ddof=0).mean())
