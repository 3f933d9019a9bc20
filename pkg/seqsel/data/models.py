# seqsel/data/models.py

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from seqsel.errors import DatasetError


STD_FLOOR = 1e-12

SYNTH_RULES = {"SIGN": 1, "XOR_SIGN": 2}


@dataclass(frozen=True)
class NormStats:
    mean: np.ndarray      # per-feature arithmetic mean
    std: np.ndarray       # per-feature population std, constant columns stored as 1.0

    def __post_init__(self):
        if self.mean.shape != self.std.shape:
            raise DatasetError("norm stats mean/std shapes differ")
        if np.any(self.std <= 0):
            raise DatasetError("norm stats std must be strictly positive")

    def __len__(self) -> int:
        return int(self.mean.shape[0])

    def to_dict(self) -> Dict[str, List[float]]:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, data: Dict[str, Sequence[float]]) -> "NormStats":
        return cls(
            mean=np.asarray(data["mean"], dtype=float),
            std=np.asarray(data["std"], dtype=float),
        )


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray                  # (rows, n)
    labels: np.ndarray                    # (rows,) int class indices
    n_classes: int
    feature_names: Optional[List[str]] = None
    class_names: Optional[List[str]] = None
    norm_stats: Optional[NormStats] = None

    def __post_init__(self):
        features = np.asarray(self.features, dtype=float)
        labels = np.asarray(self.labels, dtype=np.int64)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)

        if features.ndim != 2:
            raise DatasetError("features must be a 2-D matrix")
        if features.shape[1] < 1:
            raise DatasetError("dataset needs at least one feature column")
        if labels.ndim != 1 or labels.shape[0] != features.shape[0]:
            raise DatasetError(
                f"labels length {labels.shape[0]} does not match {features.shape[0]} feature rows"
            )
        if self.n_classes < 1:
            raise DatasetError("n_classes must be positive")
        if labels.size and (labels.min() < 0 or labels.max() >= self.n_classes):
            raise DatasetError(f"labels must lie in [0, {self.n_classes})")
        if self.feature_names is not None and len(self.feature_names) != features.shape[1]:
            raise DatasetError("feature_names length does not match feature count")
        if self.class_names is not None and len(self.class_names) != self.n_classes:
            raise DatasetError("class_names length does not match n_classes")
        if self.norm_stats is not None and len(self.norm_stats) != features.shape[1]:
            raise DatasetError("norm_stats length does not match feature count")

    @property
    def n_features(self) -> int:
        return int(self.features.shape[1])

    @property
    def n_rows(self) -> int:
        return int(self.features.shape[0])

    def __len__(self) -> int:
        return self.n_rows

    def subset(self, rows: Iterable[int]) -> "Dataset":
        idx = np.asarray(list(rows), dtype=np.int64)
        return replace(self, features=self.features[idx], labels=self.labels[idx])

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.n_classes)


def _feature_index(name: str, value) -> int:
    """Integer feature index; integral floats such as 2.0 are accepted, 2.5 or "2" are not."""
    if isinstance(value, (bool, np.bool_)) or not isinstance(value, (int, float, np.integer, np.floating)):
        raise ValueError(f"category '{name}' has a non-integer feature index {value!r}")
    if isinstance(value, (float, np.floating)) and not float(value).is_integer():
        raise ValueError(f"category '{name}' has a non-integer feature index {value!r}")
    return int(value)


@dataclass(frozen=True)
class CategoryMap:
    categories: Tuple[Tuple[str, frozenset], ...]

    def __post_init__(self):
        normalized = tuple(
            (str(name), frozenset(_feature_index(str(name), i) for i in idx)) for name, idx in self.categories
        )
        object.__setattr__(self, "categories", normalized)

        seen: set = set()
        for name, idx in normalized:
            overlap = seen & idx
            if overlap:
                raise ValueError(f"category '{name}' overlaps earlier categories at {sorted(overlap)[:5]}")
            seen |= idx

    @property
    def names(self) -> List[str]:
        return [name for name, _ in self.categories]

    @property
    def sizes(self) -> np.ndarray:
        return np.array([len(idx) for _, idx in self.categories], dtype=np.int64)

    @property
    def coverage(self) -> frozenset:
        out: set = set()
        for _, idx in self.categories:
            out |= idx
        return frozenset(out)

    def __len__(self) -> int:
        return len(self.categories)

    def validate(self, n_features: int) -> None:
        if not self.categories:
            raise ValueError("category map is empty")
        for name, idx in self.categories:
            if not idx:
                raise ValueError(f"category '{name}' covers zero features")
            bad = [i for i in idx if i < 0 or i >= n_features]
            if bad:
                raise ValueError(f"category '{name}' has indices outside [0, {n_features}): {sorted(bad)[:5]}")

    def feature_lookup(self, n_features: int) -> np.ndarray:
        """Array mapping feature index -> category position, -1 when uncategorized."""
        lookup = np.full(n_features, -1, dtype=np.int64)
        for pos, (_, idx) in enumerate(self.categories):
            lookup[sorted(idx)] = pos
        return lookup

    def to_dict(self) -> Dict[str, List[int]]:
        return {name: sorted(idx) for name, idx in self.categories}

    @classmethod
    def from_dict(cls, data: Dict[str, Sequence[int]]) -> "CategoryMap":
        return cls(categories=tuple((name, frozenset(idx)) for name, idx in data.items()))


@dataclass(frozen=True)
class SynthSpec:
    n_features: int
    n_classes: int
    informative_indices: List[int]
    rule: str
    n_samples: int
    noise_std: float = 0.0
    n_categories: int = 4
    feature_names: Optional[List[str]] = field(default=None)

    def validate(self) -> None:
        if self.n_features <= 0:
            raise ValueError("n_features must be positive")
        if self.n_samples <= 0:
            raise ValueError("n_samples must be positive")
        if self.noise_std < 0:
            raise ValueError("noise_std must be non-negative")
        if self.rule not in SYNTH_RULES:
            raise ValueError(f"rule must be one of {sorted(SYNTH_RULES)}")
        if len(self.informative_indices) != SYNTH_RULES[self.rule]:
            raise ValueError(
                f"rule {self.rule} needs {SYNTH_RULES[self.rule]} informative indices, "
                f"got {len(self.informative_indices)}"
            )
        if len(set(self.informative_indices)) != len(self.informative_indices):
            raise ValueError("informative_indices must be distinct")
        if any(i < 0 or i >= self.n_features for i in self.informative_indices):
            raise ValueError(f"informative_indices must lie in [0, {self.n_features})")
        if self.n_classes not in {2, 3}:
            raise ValueError("n_classes must be 2 or 3")
        if self.rule == "SIGN" and self.n_classes != 2:
            raise ValueError("SIGN rule produces exactly 2 classes")
        if self.n_categories < 1:
            raise ValueError("n_categories must be positive")
