"""Classification quality and episode-efficiency reporting."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from sklearn.metrics import confusion_matrix

from seqsel.calculations import harmonic_mean, population_std, safe_ratio
from seqsel.errors import ContractError


@dataclass(frozen=True)
class ConfusionMatrix:
    counts: np.ndarray      # rows = true class, columns = predicted class

    @property
    def n_classes(self) -> int:
        return int(self.counts.shape[0])

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def to_frame(self, class_names: Optional[Sequence[str]] = None) -> pd.DataFrame:
        names = list(class_names) if class_names is not None else [str(c) for c in range(self.n_classes)]
        return pd.DataFrame(self.counts, index=pd.Index(names, name="true"), columns=names)

    def write_csv(self, path: Path | str, class_names: Optional[Sequence[str]] = None) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame(class_names).to_csv(path, lineterminator="\n")
        return path


def confusion(preds, labels, k: int) -> ConfusionMatrix:
    preds = np.asarray(preds, dtype=np.int64).reshape(-1)
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    if preds.shape != labels.shape:
        raise ContractError(f"{preds.size} predictions for {labels.size} labels")
    if k < 1:
        raise ContractError("k must be positive")
    for name, arr in (("prediction", preds), ("label", labels)):
        if arr.size and (arr.min() < 0 or arr.max() >= k):
            raise ContractError(f"{name} outside class range [0, {k})")
    if preds.size == 0:
        return ConfusionMatrix(np.zeros((k, k), dtype=np.int64))
    counts = confusion_matrix(labels, preds, labels=np.arange(k))
    return ConfusionMatrix(counts.astype(np.int64))


@dataclass
class MetricsReport:
    n_samples: int
    n_features: int
    accuracy: float
    precision: List[float]
    recall: List[float]
    f1: List[float]
    support: List[int]
    macro: Dict[str, float]
    weighted: Dict[str, float]
    mean_episode_length: float
    std_episode_length: float
    min_episode_length: int
    max_episode_length: int
    length_histogram: Dict[int, int]
    efficiency_ratio: Optional[float]
    feature_reduction: float
    mean_length_by_class: Dict[str, Optional[float]] = field(default_factory=dict)
    class_names: Optional[List[str]] = None


def length_histogram(lengths) -> pd.Series:
    """Episode counts per integer length, every length from 0 to the max present."""
    lengths = pd.Series(np.asarray(lengths, dtype=np.int64))
    if lengths.empty:
        return pd.Series(dtype=np.int64, name="count").rename_axis("length")
    counts = lengths.value_counts().reindex(range(int(lengths.max()) + 1), fill_value=0)
    return counts.sort_index().rename("count").rename_axis("length")


def summarize(
    conf: ConfusionMatrix,
    lengths,
    n: int,
    labels=None,
    class_names: Optional[Sequence[str]] = None,
) -> MetricsReport:
    counts = conf.counts.astype(float)
    lengths = np.asarray(lengths, dtype=np.int64)
    total = conf.total
    if lengths.size and lengths.size != total:
        raise ContractError(f"{lengths.size} episode lengths for {total} classified samples")

    tp = np.diag(counts)
    predicted = counts.sum(axis=0)
    support = counts.sum(axis=1)
    precision = safe_ratio(tp, predicted)
    recall = safe_ratio(tp, support)
    f1 = harmonic_mean(precision, recall)

    weights = safe_ratio(support, support.sum())
    macro = {"precision": float(precision.mean()), "recall": float(recall.mean()), "f1": float(f1.mean())}
    weighted = {
        "precision": float((precision * weights).sum()),
        "recall": float((recall * weights).sum()),
        "f1": float((f1 * weights).sum()),
    }

    if lengths.size:
        mean_len = float(lengths.mean())
        stats = dict(
            std_episode_length=population_std(lengths),
            min_episode_length=int(lengths.min()),
            max_episode_length=int(lengths.max()),
        )
    else:
        mean_len = 0.0
        stats = dict(std_episode_length=0.0, min_episode_length=0, max_episode_length=0)

    names = list(class_names) if class_names is not None else [str(c) for c in range(conf.n_classes)]
    by_class: Dict[str, Optional[float]] = {}
    if labels is not None and lengths.size:
        frame = pd.DataFrame({"label": np.asarray(labels, dtype=np.int64), "length": lengths})
        means = frame.groupby("label")["length"].mean()
        by_class = {names[c]: (float(means[c]) if c in means.index else None) for c in range(conf.n_classes)}

    return MetricsReport(
        n_samples=total,
        n_features=int(n),
        accuracy=float(safe_ratio(tp.sum(), total)),
        precision=precision.tolist(),
        recall=recall.tolist(),
        f1=f1.tolist(),
        support=support.astype(int).tolist(),
        macro=macro,
        weighted=weighted,
        mean_episode_length=mean_len,
        length_histogram={int(k): int(v) for k, v in length_histogram(lengths).items()},
        efficiency_ratio=(n / mean_len) if mean_len > 0 else None,
        feature_reduction=(1.0 - mean_len / n) if n > 0 else 0.0,
        mean_length_by_class=by_class,
        class_names=names,
        **stats,
    )


def write_histogram_csv(lengths, path: Path | str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    length_histogram(lengths).to_frame().to_csv(path, lineterminator="\n")
    return path
