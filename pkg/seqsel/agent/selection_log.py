from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, List, Optional

import numpy as np
import pandas as pd

from seqsel.errors import ContractError
from seqsel.serialization import read_jsonl, write_jsonl


@dataclass(frozen=True)
class EpisodeRecord:
    true_label: int
    predicted_label: Optional[int]
    features: tuple   # revealed feature indices in order; step t is position t - 1

    def __post_init__(self):
        feats = tuple(int(f) for f in self.features)
        if len(set(feats)) != len(feats):
            raise ContractError("an episode cannot reveal the same feature twice")
        object.__setattr__(self, "features", feats)

    @property
    def length(self) -> int:
        return len(self.features)

    def steps(self) -> List[tuple]:
        """(step, feature) pairs with steps numbered from 1."""
        return [(t, f) for t, f in enumerate(self.features, start=1)]

    def to_record(self) -> dict:
        return {
            "true_label": self.true_label,
            "predicted_label": self.predicted_label,
            "features": list(self.features),
        }


@dataclass
class SelectionLog:
    episodes: List[EpisodeRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.episodes)

    def __iter__(self):
        return iter(self.episodes)

    def append(self, true_label: int, predicted_label: Optional[int], features: Iterable[int]) -> None:
        self.episodes.append(EpisodeRecord(int(true_label), predicted_label, tuple(features)))

    def extend(self, other: "SelectionLog") -> None:
        self.episodes.extend(other.episodes)

    def lengths(self) -> np.ndarray:
        return np.array([e.length for e in self.episodes], dtype=np.int64)

    def true_labels(self) -> np.ndarray:
        return np.array([e.true_label for e in self.episodes], dtype=np.int64)

    def predictions(self) -> np.ndarray:
        return np.array(
            [-1 if e.predicted_label is None else e.predicted_label for e in self.episodes],
            dtype=np.int64,
        )

    def n_selections(self) -> int:
        return int(sum(e.length for e in self.episodes))

    def to_frame(self) -> pd.DataFrame:
        """Long format: one row per selection event."""
        rows = [
            {"episode": i, "true_label": e.true_label, "step": t, "feature": f}
            for i, e in enumerate(self.episodes)
            for t, f in e.steps()
        ]
        return pd.DataFrame(rows, columns=["episode", "true_label", "step", "feature"])

    def write_jsonl(self, path: Path | str) -> Path:
        return write_jsonl(path, (e.to_record() for e in self.episodes))

    @classmethod
    def read_jsonl(cls, path: Path | str) -> "SelectionLog":
        log = cls()
        for record in read_jsonl(path):
            log.append(record["true_label"], record.get("predicted_label"), record["features"])
        return log
